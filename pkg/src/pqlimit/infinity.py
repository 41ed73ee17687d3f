"""Discrete infinity-harmonic functions on punctured domains.

The scheme is the 8-neighbour midrange fixed point, iterated Jacobi-style
(every node is updated from the previous sweep, so the result does not
depend on ordering).  By default neighbour differences are divided by the
neighbour distance (``h`` or ``h sqrt 2``): the update is the value that
balances the steepest ascent and descent slopes.  The plain
``(max + min) / 2`` over the 8 neighbours (``weighted=False``) measures
slopes in the chessboard metric and its cones are octagonal, which leaves
an O(1) error against Euclidean cones that does not shrink with ``h``.
The puncture is treated as a Dirichlet node holding the peak value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels_py import weighted_midrange
from .errors import ConvergenceError
from .fields import ScalarField

__all__ = [
    "InfHarmonicProblem",
    "InfHarmResult",
    "infharm_solve",
    "infharm_run",
    "cone_field",
    "cone_radius",
    "midrange",
    "infharm_defect",
    "node_ball",
]


@dataclass(frozen=True)
class InfHarmonicProblem:
    domain: object
    puncture: int
    peak: float

    def __post_init__(self):
        dom = self.domain
        k = int(self.puncture)
        object.__setattr__(self, "puncture", k)
        if not (0 <= k < dom.n) or not dom.interior[k]:
            raise ValueError(f"puncture node {k} is not interior")
        if not dom.rho[k] > 2 * dom.h:
            raise ValueError("puncture must lie more than 2h from the boundary")
        if not self.peak > 0:
            raise ValueError("peak must be positive")


@dataclass
class InfHarmResult:
    field: ScalarField
    sweeps: int
    last_change: float

    def to_dict(self):
        return {"sweeps": self.sweeps, "last_change": self.last_change}


def _start(problem):
    dom = problem.domain
    c = dom.coords
    k = problem.puncture
    d = np.hypot(c[:, 0] - c[k, 0], c[:, 1] - c[k, 1])
    with np.errstate(invalid="ignore"):
        w = np.where(dom.interior, dom.rho / (dom.rho + d), 0.0)
    return problem.peak * w


def infharm_run(problem, tol=1e-10, max_sweeps=2_000_000, init=None, weighted=True):
    """Iterate the midrange scheme until the largest nodal change is ``<= tol * peak``."""
    dom = problem.domain
    free = dom.interior.copy()
    free[problem.puncture] = False
    free_u8 = free.astype(np.uint8)
    u = _start(problem) if init is None else np.array(getattr(init, "values", init), dtype=float)
    u[~dom.interior] = 0.0
    u[problem.puncture] = problem.peak
    thresh = tol * problem.peak
    sweep = kernels.midrange_sweep_weighted if weighted else kernels.midrange_sweep
    change = math.inf
    for it in range(1, max_sweeps + 1):
        u, change = sweep(u, free_u8, dom.nx, dom.ny)
        if change <= thresh:
            return InfHarmResult(ScalarField(dom, u), it, change)
    raise ConvergenceError(
        f"midrange iteration did not reach {tol:g} in {max_sweeps} sweeps",
        {"sweeps": max_sweeps, "last_change": change},
    )


def infharm_solve(problem, tol=1e-10, max_sweeps=2_000_000, init=None, weighted=True):
    return infharm_run(problem, tol, max_sweeps, init, weighted).field


def cone_radius(domain, center):
    """Largest distance from the node ``center`` to the boundary of the shape."""
    return domain.shape.max_distance(domain.point_of(center))


def cone_field(domain, center, coefficient, beta=None):
    """``coefficient * (1 - |x - x_c| / beta)`` at every interior node."""
    if not domain.interior[center]:
        raise ValueError("cone center must be an interior node")
    beta = cone_radius(domain, center) if beta is None else beta
    c = domain.coords
    x0, y0 = domain.point_of(center)
    d = np.hypot(c[:, 0] - x0, c[:, 1] - y0)
    return ScalarField(domain, coefficient * (1.0 - d / beta))


def midrange(u_values, domain, weighted=True):
    """The scheme's update at every node not on the lattice edge (``nan`` there)."""
    nx, ny = domain.nx, domain.ny
    U = np.asarray(u_values, dtype=float).reshape(ny, nx)
    out = np.full((ny, nx), np.nan)
    if weighted:
        out[1:-1, 1:-1] = weighted_midrange(U)
    else:
        stack = np.stack([
            U[:-2, :-2], U[:-2, 1:-1], U[:-2, 2:],
            U[1:-1, :-2], U[1:-1, 2:],
            U[2:, :-2], U[2:, 1:-1], U[2:, 2:],
        ])
        out[1:-1, 1:-1] = 0.5 * (stack.max(axis=0) + stack.min(axis=0))
    return out.ravel()


def node_ball(domain, center, radius):
    """Nodes within ``radius`` of node ``center``."""
    c = domain.coords
    x0, y0 = domain.point_of(center)
    return np.flatnonzero(np.hypot(c[:, 0] - x0, c[:, 1] - y0) <= radius + 1e-12)


def infharm_defect(u, exclude=(), peak=None, weighted=True):
    """``max |u - midrange(u)| / peak`` over interior nodes not in ``exclude``."""
    dom = u.domain
    mask = dom.interior.copy()
    ex = np.asarray(list(exclude), dtype=int)
    if ex.size:
        mask[ex] = False
    if not mask.any():
        return 0.0
    scale = float(np.max(np.abs(u.values))) if peak is None else float(peak)
    if scale == 0.0:
        return 0.0
    d = np.abs(u.values - midrange(u.values, dom, weighted))[mask]
    return float(np.max(d)) / scale
