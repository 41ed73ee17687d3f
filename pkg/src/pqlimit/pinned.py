"""Sup-norm problems solved with the peak node pinned.

If the maximum of ``|u|`` sits at node ``k`` with value ``M``, write
``u = M w`` with ``w_k = 1``.  Truncating ``w`` at 1 never increases a P1
gradient component, so the minimizers below automatically satisfy
``0 <= w <= 1`` and ``||u||_inf = M``.

* ``lambda_inf(m)``: ``min_k min_{w_k=1} ||grad w||_m^m`` (the sup-norm
  Rayleigh quotient).
* ``J_lam`` critical points: for fixed ``mu = M^(q-p)`` let ``w_mu`` minimize
  the convex ``A_p(w)/p + mu A_q(w)/q``; the Nehari condition reads
  ``mu = (lam - A_p(w_mu)) / A_q(w_mu)``, a scalar equation in ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, ProjectionInfeasible
from .optim import newton


class PinnedProblem:
    """Free-node bookkeeping for a fixed peak node ``k``."""

    def __init__(self, domain, k):
        if not domain.interior[k]:
            raise ValueError(f"peak node {k} is not interior")
        self.domain = domain
        self.k = int(k)
        self.mesh = domain.mesh
        free = domain.interior.copy()
        free[k] = False
        self.free = np.flatnonzero(free)

    def full(self, x):
        w = np.zeros(self.domain.n)
        w[self.free] = x
        w[self.k] = 1.0
        return w

    def start(self):
        """``rho / (rho + |x - x_k|)``: positive, 1 at the peak, 0 on the boundary."""
        dom = self.domain
        c = dom.coords
        d = np.hypot(c[:, 0] - c[self.k, 0], c[:, 1] - c[self.k, 1])
        with np.errstate(invalid="ignore"):
            w = np.where(dom.interior, dom.rho / (d + dom.rho), 0.0)
        return w[self.free]

    def _parts(self, x, p, q, mu):
        w = self.full(x)
        gx, gy = self.mesh.grad(w)
        gn = np.hypot(gx, gy)
        a = gn ** (p - 2)
        if mu:
            aq = gn ** (q - 2)
            coef = a + mu * aq
            F = self.mesh.area * float(np.sum(a * gn * gn) / p + mu * np.sum(aq * gn * gn) / q)
        else:
            aq = None
            coef = a
            F = self.mesh.area * float(np.sum(a * gn * gn)) / p
        return w, gx, gy, gn, a, aq, coef, F

    def objective(self, p, q, mu):
        area = self.mesh.area

        def fun(x):
            _, gx, gy, _, _, _, coef, F = self._parts(x, p, q, mu)
            g = area * self.mesh.div_t(coef * gx, coef * gy)
            return F, g[self.free]

        def hess(x):
            _, gx, gy, gn, a, aq, coef, _ = self._parts(x, p, q, mu)
            b = (p - 2) * a
            if mu:
                b = b + mu * (q - 2) * aq
            with np.errstate(invalid="ignore", divide="ignore"):
                nx = np.where(gn > 0, gx / gn, 0.0)
                ny = np.where(gn > 0, gy / gn, 0.0)
            K = self.mesh.weighted_stiffness(coef + b * nx * nx, b * nx * ny, coef + b * ny * ny)
            return K[self.free][:, self.free]

        return fun, hess

    def minimize(self, p, q, mu, x0=None, max_iters=200):
        """``argmin A_p/p + mu A_q/q`` with the peak pinned; returns free values."""
        fun, hess = self.objective(p, q, mu)
        res = newton(fun, hess, self.start() if x0 is None else x0, max_iters=max_iters)
        if not res.converged:
            raise ConvergenceError(
                f"pinned Newton did not converge at node {self.k} (p={p}, q={q}, mu={mu:.3g})",
                {"reason": res.reason, "iterations": res.iterations},
            )
        return res

    def powers(self, x, p, q):
        w = self.full(x)
        gx, gy = self.mesh.grad(w)
        gn = np.hypot(gx, gy)
        return self.mesh.area * float(np.sum(gn**p)), self.mesh.area * float(np.sum(gn**q))


@dataclass
class PinnedEigen:
    node: int
    value: float
    w: np.ndarray
    newton_iterations: int


def pinned_eigen(domain, m, k, x0=None):
    pb = PinnedProblem(domain, k)
    res = pb.minimize(m, m, 0.0, x0)
    return PinnedEigen(pb.k, m * res.f, pb.full(res.x), res.iterations), res.x


@dataclass
class PinnedSolution:
    node: int
    mu: float
    M: float
    w: np.ndarray
    Ap: float
    Aq: float
    energy: float
    evaluations: int

    @property
    def u(self):
        return self.M * self.w


def pinned_critical(domain, p, q, lam, k, mu0=None, x0=None, rtol=1e-13):
    """Solve ``mu = (lam - A_p(w_mu)) / A_q(w_mu)`` at peak node ``k``."""
    pb = PinnedProblem(domain, k)
    cache = {"x": x0 if x0 is not None else pb.start(), "n": 0}

    def G(lmu):
        mu = math.exp(lmu)
        res = pb.minimize(p, q, mu, cache["x"])
        cache["x"] = res.x
        cache["n"] += 1
        Ap, Aq = pb.powers(res.x, p, q)
        if Ap >= lam:
            return -50.0
        return math.log((lam - Ap) / Aq) - lmu

    if mu0 is None:
        Ap, Aq = pb.powers(cache["x"], p, q)
        mu0 = max(lam - Ap, 1e-3 * lam) / Aq
    a = math.log(mu0)
    ga = G(a)
    step = math.log(4.0) * (1 if ga > 0 else -1)
    b, gb = a, ga
    for _ in range(80):
        b = a + step
        gb = G(b)
        if (gb > 0) != (ga > 0):
            break
        a, ga = b, gb
    else:
        raise ProjectionInfeasible(f"no Nehari point found along the peak-{k} family")
    lo, hi = (a, b) if a < b else (b, a)
    lmu = brentq(G, lo, hi, xtol=1e-14, rtol=rtol)
    res = pb.minimize(p, q, math.exp(lmu), cache["x"])
    mu = math.exp(lmu)
    Ap, Aq = pb.powers(res.x, p, q)
    M = mu ** (1.0 / (q - p))
    energy = (1.0 / q - 1.0 / p) * M**q * Aq
    return PinnedSolution(pb.k, mu, M, pb.full(res.x), Ap, Aq, energy, cache["n"] + 1), res.x


def neighbours(domain, k):
    nx = domain.nx
    i, j = k % nx, k // nx
    out = []
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            if di or dj:
                kk = (j + dj) * nx + (i + di)
                if 0 <= kk < domain.n and domain.interior[kk] and domain.rho[kk] > 0:
                    out.append(kk)
    return out


def descend_nodes(domain, k0, score, max_moves=8):
    """Greedy descent of ``score(node)`` over 8-neighbour moves; returns ``(k, value, table)``."""
    table = {}

    def val(k):
        if k not in table:
            table[k] = score(k)
        return table[k]

    k = k0
    best = val(k)
    for _ in range(max_moves):
        cand = min(neighbours(domain, k), key=lambda kk: (val(kk), kk), default=None)
        if cand is None or val(cand) >= best:
            break
        k, best = cand, val(cand)
    return k, best, table
