"""First eigenvalues of ``-Delta_m`` with an ``L^r`` (or sup-norm) constraint.

``lambda_r(m) = min ||grad u||_m^m / ||u||_r^m`` over Dirichlet fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .errors import ConvergenceError
from .fields import ScalarField
from .functionals import evaluate_terms
from .geometry import rho_maximizers
from .optim import lbfgs
from .pinned import descend_nodes, pinned_eigen
from .reduced import Interior, rayleigh_objective

__all__ = [
    "EigenResult",
    "rayleigh_min",
    "rayleigh_restarts",
    "LambdaInfEstimate",
    "lambda_inf_estimate",
    "lambda_inf_pinned",
    "DEFAULT_R_TREND",
]

DEFAULT_R_TREND = (8, 16, 32, 64, 128)


@dataclass
class EigenResult:
    m: float
    r: float
    lambda_value: float
    log_lambda: float
    eigenfield: ScalarField
    iterations: int
    residual: float
    reason: str = ""
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "m": self.m,
            "r": self.r,
            "lambda": self.lambda_value,
            "log_lambda": self.log_lambda,
            "root": math.exp(self.log_lambda / self.m),
            "iterations": self.iterations,
            "residual": self.residual,
            "stop_reason": self.reason,
        }


def rayleigh_min(m, r, domain, cfg=None, init=None):
    """Minimize the ``(m, r)`` Rayleigh quotient, starting from ``rho`` by default."""
    cfg = cfg or SolverConfig()
    if not m > 2 and not (m == 2 and r == 2):
        # m = r = 2 is the linear case; allowed for calibration
        if m < 2:
            raise ValueError(f"need m >= 2, got {m}")
    if math.isinf(r) or r < 2:
        raise ValueError("rayleigh_min needs finite r >= 2; use lambda_inf_pinned for the sup norm")
    space = Interior(domain)
    fun = rayleigh_objective(space, m, r)
    x0 = space.restrict(domain.rho if init is None else getattr(init, "values", init))
    res = lbfgs(fun, x0, precond=space.precond, rescale=space.rescale, **cfg.lbfgs_kwargs())
    if not res.converged:
        raise ConvergenceError(
            f"Rayleigh descent (m={m}, r={r}) stopped: {res.reason}",
            {"iterations": res.iterations, "value": math.exp(res.f)},
        )
    v = np.abs(space.full(res.x))
    t = evaluate_terms(v, domain, m, m, r, with_grad=True)
    e = v / math.exp(t.log_norm)
    log_lam = t.log_Ap - m * t.log_norm
    # nodal gradient of the quotient at e: R * (dlog A - m dlog ||.||_r), rescaled to ||e||_r = 1
    scale = math.exp(t.log_norm)
    grad = math.exp(log_lam) * (t.dlog_Ap - m * t.dlog_norm) * scale
    return EigenResult(
        m, r, math.exp(log_lam), log_lam, ScalarField(domain, e), res.iterations,
        float(np.max(np.abs(grad))), res.reason, res.trace,
    )


def rayleigh_restarts(m, r, domain, cfg=None, count=5):
    """Re-run from ``count`` random positive starts; returns ``(values, relative spread)``."""
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(cfg.seed)
    c = domain.coords
    vals = []
    for _ in range(count):
        a, b = rng.uniform(1, 4, size=2)
        ph = rng.uniform(0, 2 * np.pi, size=2)
        bump = 1.0 + 0.5 * np.sin(a * c[:, 0] + ph[0]) * np.cos(b * c[:, 1] + ph[1])
        vals.append(rayleigh_min(m, r, domain, cfg, init=domain.rho * bump).lambda_value)
    vals = np.array(vals)
    return vals, float((vals.max() - vals.min()) / vals.min())


def lambda_inf_pinned(m, domain, start=None, max_moves=8):
    """Sup-norm Rayleigh minimum ``min_k min_{w_k=1} ||grad w||_m^m``.

    The peak node is found by greedy neighbour descent from ``start``
    (default: the primary maximizer of ``rho``).
    """
    k0 = rho_maximizers(domain).primary if start is None else start
    warm = {}

    def score(k):
        pe, x = pinned_eigen(domain, m, k, None)
        warm[k] = pe
        return pe.value

    k, val, _ = descend_nodes(domain, k0, score, max_moves)
    return warm[k]


@dataclass
class LambdaInfEstimate:
    m: float
    estimate: float
    trend: list
    proxy_gap: float
    pinned: float
    pinned_node: int
    source: str
    area: float

    @property
    def root(self):
        return self.estimate ** (1.0 / self.m)

    @property
    def normalized_root(self):
        return (self.estimate / self.area) ** (1.0 / self.m)

    def to_dict(self):
        return {
            "m": self.m,
            "estimate": self.estimate,
            "root": self.root,
            "normalized_root": self.normalized_root,
            "source": self.source,
            "trend": [{"r": r, "lambda": v} for r, v in self.trend],
            "proxy_gap": self.proxy_gap,
            "pinned": self.pinned,
            "pinned_node": self.pinned_node,
        }


def lambda_inf_estimate(m, domain, cfg=None, rs=DEFAULT_R_TREND, source="pinned"):
    """Estimate ``lambda_inf(m)``.

    Runs the finite-``r`` proxy for each ``r`` in ``rs`` (warm-started) and
    the pinned-peak sup-norm minimum.  ``source`` picks which one is returned
    as ``estimate``: ``"pinned"`` (default) or ``"proxy"`` (largest ``r``).
    """
    cfg = cfg or SolverConfig()
    trend = []
    init = None
    for r in rs:
        er = rayleigh_min(m, r, domain, cfg, init=init)
        trend.append((r, er.lambda_value))
        init = er.eigenfield
    gap = abs(trend[-1][1] - trend[-2][1]) / trend[-1][1] if len(trend) > 1 else float("nan")
    pe = lambda_inf_pinned(m, domain)
    if source == "pinned":
        est = pe.value
    elif source == "proxy":
        est = trend[-1][1]
    else:
        raise ValueError(f"unknown source {source!r}")
    return LambdaInfEstimate(m, est, trend, gap, pe.value, pe.node, source, domain.area)
