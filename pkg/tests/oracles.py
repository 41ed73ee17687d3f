"""Independent reference computations used to freeze derived constants.

Nothing here imports the package under test; each function rebuilds what it
needs from scratch with a different discretisation.
"""

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import jn_zeros


def bessel_disk_eigenvalue():
    """First Dirichlet eigenvalue of -Laplace on the unit disk: j_{0,1}^2."""
    return float(jn_zeros(0, 1)[0] ** 2)


def fd_laplace_eigenvalue(inside, h, lo, hi):
    """Smallest eigenvalue of the 5-point Laplacian on the lattice nodes where ``inside`` holds."""
    xs = np.arange(lo, hi + h / 2, h)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    mask = inside(X, Y)
    idx = -np.ones(mask.shape, dtype=int)
    idx[mask] = np.arange(mask.sum())
    rows, cols, vals = [], [], []
    for i, j in zip(*np.nonzero(mask)):
        k = idx[i, j]
        rows.append(k)
        cols.append(k)
        vals.append(4.0 / h**2)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < mask.shape[0] and 0 <= b < mask.shape[1] and mask[a, b]:
                rows.append(k)
                cols.append(idx[a, b])
                vals.append(-1.0 / h**2)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(mask.sum(),) * 2)
    return float(spla.eigsh(A, k=1, sigma=0, which="LM")[0][0])


def fd_disk_eigenvalue(h=1 / 256):
    return fd_laplace_eigenvalue(lambda x, y: x**2 + y**2 < 1 - 1e-12, h, -1.0, 1.0)


def fd_square_eigenvalue(h=1 / 256):
    return fd_laplace_eigenvalue(lambda x, y: (x > 1e-12) & (x < 1 - 1e-12) & (y > 1e-12) & (y < 1 - 1e-12),
                                 h, 0.0, 1.0)


def disk_distance_lr_norm(r):
    """||1 - |x| ||_r on the unit disk, by the closed-form radial integral."""
    return (2 * math.pi / ((r + 1) * (r + 2))) ** (1.0 / r)


def disk_distance_lr_norm_quadrature(r, n=4000):
    """Same quantity by a midpoint rule in the radius (check on the closed form)."""
    s = (np.arange(n) + 0.5) / n
    return float((2 * math.pi * np.sum((1 - s) ** r * s) / n) ** (1.0 / r))


def midrange_cone_defect(h, R=1.0, weighted=True):
    """Max midrange defect of the cone 1 - |x| on the punctured disk, via direct stencil evaluation."""
    xs = np.arange(-R - 2 * h, R + 2 * h + h / 2, h)
    X, Y = np.meshgrid(xs, xs)
    C = np.maximum(0.0, 1 - np.hypot(X, Y))
    offs = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    worst = 0.0
    for i in range(2, len(xs) - 2):
        for j in range(2, len(xs) - 2):
            d0 = math.hypot(X[i, j], Y[i, j])
            if d0 >= R - 1e-12 or d0 < 1e-12:
                continue
            nb = [(C[i + a, j + b], math.hypot(a, b)) for a, b in offs]
            if weighted:
                v = min(max((dj * ui + di * uj) / (di + dj) for ui, di in nb) for uj, dj in nb)
            else:
                vals = [u for u, _ in nb]
                v = 0.5 * (max(vals) + min(vals))
            worst = max(worst, abs(C[i, j] - v))
    return worst


if __name__ == "__main__":
    print("bessel", bessel_disk_eigenvalue())
    print("fd disk 1/256", fd_disk_eigenvalue())
    print("fd square 1/256", fd_square_eigenvalue(), 2 * math.pi**2)
    print("rho L256 disk", disk_distance_lr_norm(256), disk_distance_lr_norm_quadrature(256))
    for h in (1 / 16, 1 / 32, 1 / 64):
        print("cone defect", h, midrange_cone_defect(h) / h, midrange_cone_defect(h, weighted=False) / h)
