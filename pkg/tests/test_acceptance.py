"""The twelve acceptance criteria, at their stated tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts the same verdict.
"""

import json
import math
import time

import numpy as np
import pytest

from pqlimit import SUP, ProblemParams, build_domain, lambda_inf_cap, parse_shape
from pqlimit.asymptotics import SweepSpec, check_mutual_consistency, run_sweep
from pqlimit.cli import main
from pqlimit.eigen import lambda_inf_estimate, rayleigh_min
from pqlimit.infinity import InfHarmonicProblem, cone_field, infharm_defect, infharm_solve, node_ball
from pqlimit.solver import continue_in_r
from checks import grad_check_error, nehari_case, sup_gateaux_fd_error
from conftest import domain, record

pytestmark = pytest.mark.slow

BESSEL = 5.783185962946783
H64 = 1 / 64


def _timed(f, *a, **kw):
    t0 = time.perf_counter()
    out = f(*a, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def disk64():
    return domain("disk:1", H64)


@pytest.fixture(scope="session")
def sweep_main(disk64):
    return _timed(run_sweep, SweepSpec(0.5, 2.0, p_list=(8, 16, 32)), disk64)


@pytest.fixture(scope="session")
def sweep_renorm(disk64):
    return _timed(run_sweep, SweepSpec(0.5, lambda_rule="renorm", p_list=(8, 16, 32)), disk64)


@pytest.fixture(scope="session")
def sweep_q2(disk64):
    return _timed(run_sweep, SweepSpec(2.0, 2.0, p_list=(8, 16, 32)), disk64)


def test_criterion_01_eigen():
    parts, ok = [], True
    for shape, exact in (("disk:1", BESSEL), ("square:1", 2 * math.pi**2)):
        d = build_domain(parse_shape(shape), 1 / 128)
        er, dt = _timed(rayleigh_min, 2, 2, d)
        rel = abs(er.lambda_value - exact) / exact
        ok &= rel <= 0.02 and dt < 60
        parts.append(f"{shape} lambda={er.lambda_value:.5f} rel={rel:.2e} t={dt:.1f}s")
    assert record(1, ok, "; ".join(parts))


def test_criterion_02_lambda_inf_monotone(disk64):
    parts, ok = [], True
    for shape in ("disk:1", "square:1"):
        d = domain(shape, H64)
        roots = [lambda_inf_estimate(m, d).normalized_root for m in (8, 16, 32)]
        cap = lambda_inf_cap(d)
        mono = all(b >= a for a, b in zip(roots, roots[1:]))
        near = abs(roots[-1] - cap) / cap <= 0.15
        ok &= mono and near
        parts.append(f"{shape} roots={[round(x, 4) for x in roots]} cap={cap:.4f}")
    assert record(2, ok, "; ".join(parts))


def test_criterion_03_nehari_suite():
    d = domain("disk:1", 1 / 8)
    t0 = time.perf_counter()
    cases = [nehari_case(d, seed) for seed in range(200)]
    dt = time.perf_counter() - t0
    res = max(c[0] for c in cases)
    idem = max(c[1] for c in cases)
    scal = max(c[2] for c in cases)
    ident = max(c[3] for c in cases)
    ok = res <= 1e-10 and idem <= 1e-12 and scal <= 1e-12 and ident <= 1e-8 and dt < 10
    assert record(3, ok, f"residual={res:.1e} idempotence={idem:.1e} scaling={scal:.1e} "
                         f"identity={ident:.1e} t={dt:.2f}s")


def test_criterion_04_gradients():
    d = domain("disk:1", 1 / 8)
    g = max(grad_check_error(d, seed)[0] for seed in range(50))
    s = max(sup_gateaux_fd_error(d, seed) for seed in range(50))
    assert record(4, g <= 1e-5 and s <= 1e-4, f"grad_energy_I={g:.1e} sup_gateaux={s:.1e}")


def test_criterion_05_gate(tmp_path):
    base = ["--domain", "disk:1", "--h", str(H64), "--r", "4"]
    parts, ok = [], True
    for p, q in ((4, 3), (3, 4)):
        pq = ["--p", str(p), "--q", str(q)]
        refused = main(["solve", *base, *pq, "--lambda-mult", "0.9", "--out", str(tmp_path / f"no{p}{q}")])
        code, dt = _timed(main, ["solve", *base, *pq, "--lambda-mult", "2", "--out", str(tmp_path / f"ok{p}{q}")])
        wr = json.loads((tmp_path / f"ok{p}{q}" / "solve.json").read_text())["report"]["weak_residual"]["value"] \
            if code == 0 else math.nan
        ok &= refused == 3 and code == 0 and wr <= 1e-3 and dt < 120
        parts.append(f"(p,q)=({p},{q}) refuse_exit={refused} exit={code} weak={wr:.1e} t={dt:.1f}s")
    assert record(5, ok, "; ".join(parts))


def test_criterion_06_r_limit(disk64):
    lam_inf = lambda_inf_estimate(4, disk64).estimate
    rep = continue_in_r(ProblemParams(4, 3, SUP, 2 * lam_inf), disk64)
    cauchy = rep.extra["cauchy_gap"]
    gap = rep.extra["lr_sup_gap"]
    res = rep.nehari_residual
    ok = cauchy <= 0.02 and gap <= 0.03 and res <= 1e-3
    assert record(6, ok, f"cauchy={cauchy:.4f} lr/sup gap={gap:.4f} sup nehari={res:.1e} "
                         f"final_r={rep.extra['final_r']:g}")


def test_criterion_07_equality_case(disk64, sweep_main):
    rep, dt = sweep_main
    h = disk64.h
    u_ext, g_ext = rep.extrapolated["u_sup"], rep.extrapolated["grad_sup"]
    last = rep.rows[-1]
    drift = last["maximizer_drift"]
    env, gapm = rep.envelope["max_violation"], rep.envelope["gap_at_maximizer"]
    checks = {
        "u_sup": abs(u_ext - 0.25) / 0.25 <= 0.10,
        "grad_sup": abs(g_ext - 0.25) / 0.25 <= 0.10,
        "maximizer": drift <= 2 * h,
        "envelope": env <= 0.0125,
        "gap_at_max": gapm <= 0.0125,
        "runtime": dt < 1200,
    }
    failed = [k for k, v in checks.items() if not v]
    assert record(7, not failed, f"u_ext={u_ext:.4f} grad_ext={g_ext:.4f} drift={drift:.4f} "
                                 f"envelope={env:.4f} gap_at_max={gapm:.4f} t={dt:.0f}s"
                                 + (f" failed={failed}" if failed else ""))


def test_criterion_08_cap_case(disk64, sweep_renorm):
    rep, _ = sweep_renorm
    u_ext, g_ext = rep.extrapolated["u_sup"], rep.extrapolated["grad_sup"]
    env = rep.envelope["max_violation"]
    ok = abs(u_ext - 1) <= 0.10 and abs(g_ext - 1) <= 0.10 and env <= 0.05 and rep.rows[-1]["p"] == 32
    assert record(8, ok, f"u_ext={u_ext:.4f} grad_ext={g_ext:.4f} envelope={env:.4f}")


def test_criterion_09_bounds_case(sweep_q2):
    rep, _ = sweep_q2
    last = rep.rows[-1]
    ok = last["p"] == 32 and last["u_sup"] >= 0.9 * 1.0 and last["grad_sup"] <= 1.1 * 2.0
    assert record(9, ok, f"p={last['p']:g} u_sup={last['u_sup']:.4f} grad_sup={last['grad_sup']:.4f}")


def test_criterion_10_inf_harmonic(disk64, sweep_main):
    rep, _ = sweep_main
    d = disk64
    u = rep.field_at(32.0)
    k = rep.last.maxset.primary
    peak = float(u.values[k])
    defect = infharm_defect(u, exclude=node_ball(d, k, 2 * d.h), peak=peak)
    v = infharm_solve(InfHarmonicProblem(d, k, peak))
    match = float(np.max(np.abs(u.values - v.values))) / peak
    c = d.node_of((0.0, 0.0))
    w = infharm_solve(InfHarmonicProblem(d, c, 0.25))
    cone = float(np.max(np.abs(w.values - cone_field(d, c, 0.25).values)[d.interior])) / 0.25
    ok = defect <= 5e-2 and match <= 0.07 and cone <= 5 * d.h
    assert record(10, ok, f"defect={defect:.4f} match={match:.4f} cone={cone:.4f} (5h={5 * d.h:.4f})")


def test_criterion_11_proportionality(disk64, sweep_main, sweep_renorm):
    out = check_mutual_consistency(sweep_main[0], disk64, sweep_renorm[0])
    disc = out["proportionality"]["discrepancy"]
    assert record(11, disc <= 0.07, f"discrepancy={disc:.4f} at p={out['proportionality']['p']:g}")


DETERMINISM = [
    ["eigen", "--m", "4", "--r", "8"],
    ["eigen", "--m", "8", "--r-sweep"],
    ["solve", "--p", "4", "--q", "3", "--r", "4", "--lambda-mult", "2"],
    ["solve", "--p", "3", "--q", "4", "--r", "4", "--lambda-mult", "2"],
    ["limit-r", "--p", "4", "--q", "3", "--lambda-mult", "2"],
    ["sweep-p", "--Q", "0.5", "--Lambda", "2", "--p-list", "8,16"],
    ["sweep-p", "--Q", "0.5", "--Lambda-inf", "--p-list", "8,16", "--jobs", "2"],
    ["infharm", "--peak", "0.25"],
]


def test_criterion_12_determinism(tmp_path):
    bad = []
    for i, cmd in enumerate(DETERMINISM):
        outs = []
        for run in "ab":
            out = tmp_path / f"{i}{run}"
            code = main([cmd[0], "--domain", "disk:1", "--h", str(1 / 16), "--out", str(out), *cmd[1:]])
            outs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())
                                if p.suffix in (".json", ".csv")}))
        if outs[0] != outs[1] or outs[0][0] != 0:
            bad.append(" ".join(cmd))
    assert record(12, not bad, f"{len(DETERMINISM)} commands re-run" + (f"; differing: {bad}" if bad else ""))
