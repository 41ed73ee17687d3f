"""Pure numpy implementations of the hot loops.

These are the reference versions; ``_kernels.pyx`` mirrors them one to one.
"""

import numpy as np

BACKEND = "python"


def ratio_powers(x, w, scale, e1, e2):
    """Scaled power sums and flux coefficients.

    With ``t = x / scale`` returns ``(sum(w * t**e1), sum(w * t**e2),
    t**(e1 - 2), t**(e2 - 2))``.  ``w=None`` means unit weights.  The
    coefficient arrays are ``None`` for exponents below 2.
    """
    t = x / scale
    p1 = t ** e1
    p2 = t ** e2
    if w is not None:
        s1 = float(np.sum(w * p1))
        s2 = float(np.sum(w * p2))
    else:
        s1 = float(np.sum(p1))
        s2 = float(np.sum(p2))
    c1 = t ** (e1 - 2.0) if e1 >= 2.0 else None
    c2 = t ** (e2 - 2.0) if e2 >= 2.0 else None
    return s1, s2, c1, c2


def midrange_sweep(u, free, nx, ny):
    """One Jacobi sweep of ``u <- (max + min of 8 neighbours) / 2`` on ``free``.

    Returns the updated copy and the largest absolute change.
    """
    U = u.reshape(ny, nx)
    c = U[1:-1, 1:-1]
    nb = [
        U[:-2, :-2], U[:-2, 1:-1], U[:-2, 2:],
        U[1:-1, :-2], U[1:-1, 2:],
        U[2:, :-2], U[2:, 1:-1], U[2:, 2:],
    ]
    hi = nb[0].copy()
    lo = nb[0].copy()
    for a in nb[1:]:
        np.maximum(hi, a, out=hi)
        np.minimum(lo, a, out=lo)
    mid = 0.5 * (hi + lo)
    F = free.reshape(ny, nx)[1:-1, 1:-1].astype(bool)
    out = u.copy()
    O = out.reshape(ny, nx)
    O[1:-1, 1:-1] = np.where(F, mid, c)
    change = float(np.max(np.abs(O[1:-1, 1:-1] - c), initial=0.0))
    return out, change


_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_DIST = np.array([np.hypot(dj, di) for dj, di in _OFFSETS])


def weighted_midrange(U):
    """Distance-weighted midrange on the inner block of the 2D array ``U``.

    The value ``v`` balancing the steepest ascent and descent slopes,
    ``max_i (u_i - v)/d_i = max_j (v - u_j)/d_j``, which is
    ``min_j max_i (d_j u_i + d_i u_j) / (d_i + d_j)``.  With equal
    distances this is ``(max + min) / 2``.
    """
    ny, nx = U.shape
    nb = [U[1 + dj:ny - 1 + dj, 1 + di:nx - 1 + di] for dj, di in _OFFSETS]
    best = None
    for j in range(8):
        dj = _DIST[j]
        m = None
        for i in range(8):
            di = _DIST[i]
            v = (dj * nb[i] + di * nb[j]) / (di + dj)
            m = v if m is None else np.maximum(m, v)
        best = m if best is None else np.minimum(best, m)
    return best


def midrange_sweep_weighted(u, free, nx, ny):
    """Jacobi sweep of the distance-weighted midrange on ``free``."""
    U = u.reshape(ny, nx)
    c = U[1:-1, 1:-1]
    mid = weighted_midrange(U)
    F = free.reshape(ny, nx)[1:-1, 1:-1].astype(bool)
    out = u.copy()
    O = out.reshape(ny, nx)
    O[1:-1, 1:-1] = np.where(F, mid, c)
    change = float(np.max(np.abs(O[1:-1, 1:-1] - c), initial=0.0))
    return out, change
