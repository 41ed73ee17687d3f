import math

import numpy as np
import pytest

from pqlimit.asymptotics import (
    MissingReference,
    SweepSpec,
    check_mutual_consistency,
    predicted_limits,
    richardson,
    run_sweep,
)
from pqlimit.eigen import lambda_inf_pinned
from pqlimit.errors import ConfigError

SMALL = dict(p_list=(8, 12), r_schedule=(16, 32, 64, 128))


def test_predicted_equality_case():
    pl = predicted_limits(0.5, 2.0, 1.0)
    assert pl.kind == "equality"
    assert pl.grad_sup == pytest.approx(0.25) and pl.u_sup == pytest.approx(0.25)
    assert pl.envelope_coefficient == pytest.approx(0.25)


def test_predicted_bounds_case():
    pl = predicted_limits(2.0, 2.0, 1.0)
    assert pl.kind == "bounds" and pl.u_sup is None
    assert pl.grad_sup == pytest.approx(2.0) and pl.u_sup_lower == pytest.approx(1.0)


@pytest.mark.parametrize("Q", [0.3, 0.5, 2.0, 5.0])
def test_predicted_at_cap(Q):
    pl = predicted_limits(Q, 1.5, 1.5)
    assert pl.kind == "equality"
    assert (pl.u_sup, pl.grad_sup, pl.envelope_coefficient) == pytest.approx((1 / 1.5, 1.0, 1.0))


def test_predicted_rejects():
    with pytest.raises(ValueError):
        predicted_limits(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        predicted_limits(0.5, 0.5, 1.0)


def test_richardson_exact_on_model():
    ps = [8.0, 16.0, 32.0]
    ys = [0.25 * math.exp(0.7 / p) for p in ps]
    assert richardson(ps, ys, 1) == pytest.approx(0.25, rel=1e-13)
    ys2 = [0.25 * math.exp(0.7 / p - 3 / p**2) for p in ps]
    assert richardson(ps, ys2, 2) == pytest.approx(0.25, rel=1e-12)
    assert richardson(ps, ys, 0) == ys[-1]


@pytest.mark.parametrize("kw", [
    dict(Q=1.0, Lambda=2.0), dict(Q=-1.0, Lambda=2.0), dict(Q=0.5), dict(Q=0.5, Lambda=2.0, p_list=(8, 8)),
    dict(Q=0.2, Lambda=2.0, p_list=(8,)), dict(Q=0.5, lambda_rule="renorm", c=1.0),
    dict(Q=0.5, Lambda=2.0, lambda_rule="cube"),
])
def test_spec_validation(kw):
    with pytest.raises(ConfigError):
        SweepSpec(**kw)


def test_spec_lambda_rules(get_domain):
    d = get_domain("disk:1", 1 / 8)
    with pytest.raises(ConfigError):
        SweepSpec(0.5, 0.5).validate(d)
    power = SweepSpec(0.5, 2.0)
    for p in power.p_list:
        assert math.exp(power.log_lam(p, d) / p) == pytest.approx(2.0, rel=1e-14)
    renorm = SweepSpec(0.5, lambda_rule="renorm")
    cap = 1 / d.rho.max()
    for p in renorm.p_list:
        root = math.exp(renorm.log_lam(p, d) / p)
        assert root / cap == pytest.approx((2 * d.area) ** (1 / p), rel=1e-13)


def test_gate_margin_grows_with_p(get_domain):
    d = get_domain("disk:1", 1 / 16)
    spec = SweepSpec(0.5, 2.0)
    ratios = [math.exp(spec.log_lam(p, d)) / lambda_inf_pinned(p, d).value for p in (8, 16, 32)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


@pytest.fixture(scope="module")
def disk_sweeps(get_domain):
    d = get_domain("disk:1", 1 / 8)
    main = run_sweep(SweepSpec(0.5, 2.0, **SMALL), d)
    ref = run_sweep(SweepSpec(0.5, lambda_rule="renorm", **SMALL), d)
    return d, main, ref


def test_small_sweep_report(disk_sweeps):
    d, main, _ = disk_sweeps
    assert main.ps == [8.0, 12.0] and not main.skipped
    assert main.predicted.kind == "equality"
    for row, rep in zip(main.rows, main.reports):
        assert row["q"] == 0.5 * row["p"]
        assert row["lambda_root"] == pytest.approx(2.0, rel=1e-14)
        assert rep.nehari_residual <= 1e-8
        assert rep.field.values.min() >= 0
    assert main.envelope["min_on_half_inradius"] > 0
    assert set(main.relative_errors) == {"u_sup", "grad_sup"}
    assert main.to_dict()["extrapolation"].startswith("log-Richardson")


def test_mutual_consistency_disk(disk_sweeps):
    d, main, ref = disk_sweeps
    with pytest.raises(MissingReference):
        check_mutual_consistency(main, d)
    out = check_mutual_consistency(main, d, ref)
    assert out["mode"] == "full" and out["maximizer_on_rho_max"]
    assert np.isfinite(out["proportionality"]["discrepancy"])


def test_rectangle_is_envelope_only(get_domain):
    d = get_domain("rect:0,0,2,1", 1 / 8)
    rep = run_sweep(SweepSpec(0.5, 2.5, **SMALL), d)
    out = check_mutual_consistency(rep, d)
    assert out["mode"] == "envelope-only" and not out["unique_incenter"]
    assert "proportionality" not in out


def test_bounds_kind_has_no_relative_errors(get_domain):
    d = get_domain("disk:1", 1 / 8)
    rep = run_sweep(SweepSpec(2.0, 2.0, p_list=(8,), r_schedule=(16, 32, 64, 128)), d)
    assert rep.predicted.kind == "bounds" and rep.relative_errors == {}
    assert set(rep.bounds) == {"u_sup_over_lower", "grad_sup_over_upper"}
