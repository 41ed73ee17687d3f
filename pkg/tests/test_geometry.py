import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pqlimit import GeometryError, Shape, build_domain, lambda_inf_cap, parse_shape, rho_maximizers
from pqlimit.geometry import rle_decode


def test_disk_centre_distance(get_domain):
    d = get_domain("disk:1", 1 / 32)
    k = d.node_of((0.0, 0.0))
    assert d.point_of(k) == (0.0, 0.0)
    assert d.rho[k] == pytest.approx(1.0, abs=1e-14)


def test_square_centre_distance(get_domain):
    d = get_domain("square:1", 1 / 32)
    assert d.rho[d.node_of((0.5, 0.5))] == pytest.approx(0.5, abs=1e-14)


def test_rectangle_ridge(get_domain):
    d = get_domain("rect:0,0,2,1", 1 / 32)
    assert d.rho.max() == pytest.approx(0.5, abs=1e-14)
    top = np.flatnonzero(np.isclose(d.rho, 0.5, atol=1e-12))
    xy = d.coords[top]
    assert np.allclose(xy[:, 1], 0.5)
    assert xy[:, 0].min() == pytest.approx(0.5) and xy[:, 0].max() == pytest.approx(1.5)
    ms = rho_maximizers(d)
    assert not ms.unique
    assert set(top) <= set(ms.nodes)


@pytest.mark.parametrize("shape, cap", [("disk:1", 1.0), ("square:1", 2.0), ("disk:2", 0.5)])
def test_lambda_inf_cap(get_domain, shape, cap):
    assert lambda_inf_cap(get_domain(shape, 1 / 32)) == pytest.approx(cap, rel=1e-12)


@pytest.mark.parametrize("shape, point", [("disk:1", (0.0, 0.0)), ("square:1", (0.5, 0.5))])
def test_unique_maximizer(get_domain, shape, point):
    d = get_domain(shape, 1 / 32)
    ms = rho_maximizers(d)
    assert ms.unique
    assert ms.primary == d.node_of(point)


@pytest.mark.parametrize("shape", ["disk:1", "square:1", "rect:0,0,2,1", "lshape:2", "polygon:0 0;1 0;0.3 0.8"])
def test_domain_invariants(get_domain, shape):
    d = get_domain(shape, 1 / 16)
    assert not np.any(d.interior & d.boundary)
    assert np.all(d.rho[d.boundary] == 0) and np.all(d.rho[d.interior] > 0)
    # every interior node has its 4 lattice neighbours in the closure
    I = d.interior.reshape(d.ny, d.nx)
    C = d.closure.reshape(d.ny, d.nx)
    j, i = np.nonzero(I)
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        assert C[j + dj, i + di].all()
    # discrete Lipschitz-1
    R = d.rho.reshape(d.ny, d.nx)
    assert np.all(np.abs(np.diff(R, axis=0)) <= d.h + 1e-12)
    assert np.all(np.abs(np.diff(R, axis=1)) <= d.h + 1e-12)
    ms = rho_maximizers(d)
    assert ms.nodes and all(d.interior[k] for k in ms.nodes)


def test_area_exact_for_aligned_rectangle(get_domain):
    assert get_domain("square:1", 1 / 16).area == pytest.approx(1.0, rel=1e-12)
    assert get_domain("rect:0,0,2,1", 1 / 16).area == pytest.approx(2.0, rel=1e-12)
    assert get_domain("lshape:2", 1 / 16).area == pytest.approx(3.0, rel=1e-12)


def test_disk_area_converges():
    errs = [abs(build_domain(Shape.disk(), h).area - math.pi) for h in (1 / 16, 1 / 32, 1 / 64)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 8 * (1 / 64)


@pytest.mark.parametrize("text", ["blob:1", "disk", "disk:-1", "rect:0,0,0,1", "disk:a", "polygon:0 0;1 0",
                                  "polygon:0 0;1 1;1 0;0 1", "polygon:0 0;0 1;1 0"])
def test_bad_shapes(text):
    with pytest.raises(GeometryError):
        parse_shape(text)


def test_grid_too_coarse():
    with pytest.raises(GeometryError):
        build_domain(Shape.disk(), 0.8)
    with pytest.raises(GeometryError):
        build_domain(Shape.disk(), 0.0)


def test_json_export_roundtrip(get_domain):
    d = get_domain("lshape:2", 1 / 8)
    js = json.loads(json.dumps(d.to_json()))
    assert np.array_equal(rle_decode(js["interior_rle"], d.n), d.interior)
    assert np.array_equal(rle_decode(js["boundary_rle"], d.n), d.boundary)
    assert np.array_equal(np.array(js["rho"]), d.rho)
    assert js["digest"] == d.digest


@given(st.sampled_from([0.5, 2.0, 4.0, 0.25]), st.sampled_from(["disk:1", "square:1", "rect:0,0,2,1"]))
def test_cap_scales_inversely(s, shape):
    base = parse_shape(shape)
    d1 = build_domain(base, 1 / 16)
    d2 = build_domain(base.scaled(s), s / 16)
    assert lambda_inf_cap(d2) == pytest.approx(lambda_inf_cap(d1) / s, rel=1e-12)


@given(st.floats(0.3, 3.0), st.floats(-1, 1), st.floats(-1, 1))
def test_signed_distance_is_one_lipschitz(R, cx, cy):
    d = build_domain(Shape.disk((cx, cy), R), R / 12)
    R2 = d.rho.reshape(d.ny, d.nx)
    diag = np.abs(R2[1:, 1:] - R2[:-1, :-1])
    assert np.all(diag <= math.sqrt(2) * d.h + 1e-12)
    assert lambda_inf_cap(d) == pytest.approx(1 / R, rel=d.h / R + 1e-12)
