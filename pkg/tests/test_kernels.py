import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pqlimit import kernels
from pqlimit import _kernels_py as py


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@given(st.integers(0, 10**6), st.floats(2.0, 40.0), st.floats(2.0, 40.0))
def test_ratio_powers_parity(seed, e1, e2):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 200)
    x[:5] = 0.0
    w = rng.uniform(0.5, 1.5, 200)
    scale = float(x.max())
    a = kernels.ratio_powers(x, w, scale, e1, e2)
    b = py.ratio_powers(x, w, scale, e1, e2)
    assert a[0] == pytest.approx(b[0], rel=1e-12) and a[1] == pytest.approx(b[1], rel=1e-12)
    np.testing.assert_allclose(a[2], b[2], rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(a[3], b[3], rtol=1e-12, atol=1e-300)


@given(st.integers(0, 10**6))
def test_midrange_parity(seed):
    rng = np.random.default_rng(seed)
    nx, ny = 13, 11
    u = rng.normal(size=nx * ny)
    free = (rng.uniform(size=nx * ny) < 0.7).astype(np.uint8)
    for fast, ref in ((kernels.midrange_sweep, py.midrange_sweep),
                      (kernels.midrange_sweep_weighted, py.midrange_sweep_weighted)):
        ua, ca = fast(u, free, nx, ny)
        ub, cb = ref(u, free, nx, ny)
        np.testing.assert_allclose(ua, ub, rtol=0, atol=1e-15)
        assert ca == pytest.approx(cb, abs=1e-15)
        keep = ~free.reshape(ny, nx).astype(bool)
        keep[[0, -1], :] = True
        keep[:, [0, -1]] = True
        assert np.array_equal(ua.reshape(ny, nx)[keep], u.reshape(ny, nx)[keep])


def test_equal_distance_weighted_midrange_is_midrange():
    # on a linear field both updates return the centre value
    U = np.add.outer(np.arange(5.0), 2 * np.arange(6.0))
    np.testing.assert_allclose(py.weighted_midrange(U), U[1:-1, 1:-1], atol=1e-14)


def test_env_var_selects_python_backend():
    env = dict(os.environ, PQLIMIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pqlimit import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
