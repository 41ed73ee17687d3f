"""Discrete energies of the (p,q)-Laplacian problems and their residuals.

``I(u) = ||grad u||_p^p / p + ||grad u||_q^q / q - lam/p * ||u||_r^p`` and its
sup-norm counterpart ``J`` (``r = SUP``).  Internally every quantity is
carried as a logarithm, so ``p`` of order 100 with ``lam = Lambda**p`` does
not overflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import ZeroFieldError
from .fields import ScalarField, sup_norm

__all__ = [
    "SUP",
    "ProblemParams",
    "EnergyBreakdown",
    "Terms",
    "evaluate_terms",
    "energy",
    "grad_energy_I",
    "nehari_residual",
    "weak_residual",
    "WeakResidual",
    "default_tests",
]

SUP = math.inf
P_LT_Q = "P_LT_Q"
Q_LT_P = "Q_LT_P"


@dataclass(frozen=True)
class ProblemParams:
    """Exponents ``p, q``, load exponent ``r`` (or ``SUP``) and multiplier ``lam``.

    ``q_weight`` scales the q-gradient term; it is 1 for the actual problem
    and 0 only when checking the pure eigenvalue equation.
    """

    p: float
    q: float
    r: float
    lam: float
    q_weight: float = 1.0

    def __post_init__(self):
        if not (self.p > 2 and self.q > 2):
            raise ValueError(f"need p, q > 2, got p={self.p}, q={self.q}")
        if self.p == self.q:
            raise ValueError("p and q must differ")
        if not (self.r >= 1):
            raise ValueError(f"need r >= 1 or SUP, got {self.r}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")

    @property
    def regime(self):
        return P_LT_Q if self.p < self.q else Q_LT_P

    @property
    def is_sup(self):
        return math.isinf(self.r)

    @property
    def log_lam(self):
        return math.log(self.lam)

    def with_r(self, r):
        return ProblemParams(self.p, self.q, r, self.lam, self.q_weight)

    def with_lam(self, lam):
        return ProblemParams(self.p, self.q, self.r, lam, self.q_weight)

    def to_dict(self):
        d = asdict(self)
        d["r"] = "SUP" if self.is_sup else self.r
        d["regime"] = self.regime
        return d


@dataclass
class Terms:
    """Logarithms of ``A_p = ||grad u||_p^p``, ``A_q`` and ``||u||_r`` plus their gradients.

    ``dlog_*`` are nodal gradients of the logarithms (degree -1 homogeneous),
    filled only when requested.  The scale-free parts ``log_Ap - p log_gmax``,
    ``log_Aq - q log_gmax`` and ``log_norm - log_gmax`` are kept separately so
    that quantities where the common scale cancels can avoid the rounding of
    large logarithms.
    """

    log_Ap: float
    log_Aq: float
    log_norm: float
    log_gmax: float = 0.0
    log_sp: float = 0.0
    log_sq: float = 0.0
    log_rel_norm: float = 0.0
    dlog_Ap: np.ndarray | None = None
    dlog_Aq: np.ndarray | None = None
    dlog_norm: np.ndarray | None = None
    argmax: int | None = None

    def log_load(self, params):
        """``log(lam * ||u||_r^p)``."""
        return params.log_lam + params.p * self.log_norm


def evaluate_terms(u_values, domain, p, q, r, with_grad=False):
    """Norm logarithms (and their gradients) for a raw nodal vector."""
    mesh = domain.mesh
    gx, gy = mesh.grad(u_values)
    gn = np.hypot(gx, gy)
    gmax = float(gn.max(initial=0.0))
    if gmax == 0.0:
        raise ZeroFieldError("field is identically zero")
    sp_, sq_, cp, cq = kernels.ratio_powers(gn, None, gmax, p, q)
    lg = math.log(gmax)
    la = math.log(mesh.area)
    lsp, lsq = math.log(sp_) + la, math.log(sq_) + la
    t = Terms(p * lg + lsp, q * lg + lsq, 0.0, lg, lsp, lsq)
    a = np.abs(u_values)
    if math.isinf(r):
        k = int(np.argmax(a))
        t.log_norm = math.log(a[k])
        t.log_rel_norm = math.log(a[k] / gmax)
        t.argmax = k
    else:
        amax = float(a.max())
        w = domain.weights
        sr, _, cr, _ = kernels.ratio_powers(a, w, amax, r, r)
        t.log_norm = math.log(amax) + math.log(sr) / r
        t.log_rel_norm = math.log(amax / gmax) + math.log(sr) / r
    if with_grad:
        inv = 1.0 / gmax
        gxs, gys = gx * inv, gy * inv
        t.dlog_Ap = mesh.div_t(cp * gxs, cp * gys) * (p / (gmax * sp_))
        t.dlog_Aq = mesh.div_t(cq * gxs, cq * gys) * (q / (gmax * sq_))
        if math.isinf(r):
            d = np.zeros_like(u_values)
            d[t.argmax] = 1.0 / u_values[t.argmax]
            t.dlog_norm = d
        else:
            t.dlog_norm = w * cr * (u_values / amax) / (amax * sr)
        mask = ~domain.interior
        for arr in (t.dlog_Ap, t.dlog_Aq, t.dlog_norm):
            arr[mask] = 0.0
    return t


def _exp(x):
    if x < -745.0:
        return 0.0
    if x > 709.0:
        return math.inf
    return math.exp(x)


@dataclass(frozen=True)
class EnergyBreakdown:
    term_p: float
    term_q: float
    term_load: float
    total: float
    log_term_p: float
    log_term_q: float
    log_term_load: float
    functional: str = field(default="I")

    def to_dict(self):
        return asdict(self)


def _terms_or_zero(u, params):
    try:
        return evaluate_terms(u.values, u.domain, params.p, params.q, params.r)
    except ZeroFieldError:
        return None


def energy(u, params):
    """Discrete ``I_{lam,r}`` (finite ``r``) or ``J_lam`` (``r = SUP``)."""
    name = "J" if params.is_sup else "I"
    t = _terms_or_zero(u, params)
    if t is None:
        ninf = -math.inf
        return EnergyBreakdown(0.0, 0.0, 0.0, 0.0, ninf, ninf, ninf, name)
    lp = t.log_Ap - math.log(params.p)
    lq = (t.log_Aq - math.log(params.q) + math.log(params.q_weight)) if params.q_weight > 0 else -math.inf
    ll = params.log_lam + params.p * t.log_norm - math.log(params.p)
    tp, tq, tl = _exp(lp), _exp(lq), _exp(ll)
    # total from the scaled terms so that it stays signed when they overflow
    m = max(lp, lq, ll)
    scaled = _exp(lp - m) + _exp(lq - m) - _exp(ll - m)
    total = scaled * _exp(m) if scaled != 0.0 else 0.0
    return EnergyBreakdown(tp, tq, tl, total, lp, lq, ll, name)


def grad_energy_I(u, params):
    """Nodal gradient of the discrete ``I_{lam,r}``; zero on non-interior nodes."""
    if params.is_sup:
        raise ValueError("the sup-norm energy is not differentiable; use sup_gateaux")
    if params.r < 2:
        raise ValueError("gradient of the load term is singular for r < 2")
    t = evaluate_terms(u.values, u.domain, params.p, params.q, params.r, with_grad=True)
    g = _exp(t.log_Ap) / params.p * t.dlog_Ap
    if params.q_weight > 0:
        g = g + params.q_weight * _exp(t.log_Aq) / params.q * t.dlog_Aq
    g = g - _exp(t.log_load(params)) * t.dlog_norm
    return ScalarField(u.domain, g)


def nehari_residual(u, params):
    """``|A_p + A_q - lam ||u||^p| / (lam ||u||^p)`` with the problem's load norm."""
    t = evaluate_terms(u.values, u.domain, params.p, params.q, params.r)
    ll = t.log_load(params)
    qpart = params.q_weight * _exp(t.log_Aq - ll) if params.q_weight > 0 else 0.0
    return abs(_exp(t.log_Ap - ll) + qpart - 1.0)


@dataclass(frozen=True)
class WeakResidual:
    value: float
    per_test: tuple
    labels: tuple
    flagged: bool

    def to_dict(self):
        return {"value": self.value, "per_test": list(self.per_test), "labels": list(self.labels),
                "flagged": self.flagged}


def _hat(domain, k):
    v = np.zeros(domain.n)
    v[k] = 1.0
    return v


def default_tests(u, count=20):
    """Nodal hats at quasi-random interior nodes, the hat at the maximizer, ``u`` and ``rho``."""
    from scipy.stats import qmc

    dom = u.domain
    pts = qmc.Halton(d=2, scramble=False).random(count + 1)[1:]
    xmin, ymin, xmax, ymax = dom.shape.bbox()
    interior = dom.interior_index
    coords = dom.coords[interior]
    tests, labels = [], []
    chosen = set()
    for px, py in pts:
        target = np.array([xmin + px * (xmax - xmin), ymin + py * (ymax - ymin)])
        k = int(interior[np.argmin(((coords - target) ** 2).sum(1))])
        if k in chosen:
            continue
        chosen.add(k)
        tests.append(_hat(dom, k))
        labels.append(f"hat:{k}")
    ms = sup_norm(u)
    if ms.nodes:
        tests.append(_hat(dom, ms.primary))
        labels.append(f"hat@max:{ms.primary}")
    tests.append(np.array(u.values))
    labels.append("u")
    tests.append(np.array(dom.rho))
    labels.append("rho")
    return tests, labels


def weak_residual(u, params, tests=None, labels=None):
    """Largest normalised weak-form defect over a set of test fields.

    For each ``v``: ``<flux(u), grad v> - rhs(v)`` divided by
    ``lam ||u||^(p-1) ||v||_inf``, where ``||u||`` is the load norm.
    """
    if tests is None:
        tests, labels = default_tests(u)
    tests = [np.asarray(getattr(v, "values", v), dtype=float) for v in tests]
    if labels is None:
        labels = [f"test{i}" for i in range(len(tests))]
    dom = u.domain
    r_grad = params.r if not params.is_sup else params.p
    t = evaluate_terms(u.values, dom, params.p, params.q, max(r_grad, 2.0), with_grad=True)
    flagged = False
    p = params.p
    if params.is_sup:
        ms = sup_norm(u)
        flagged = not ms.unique
        k = ms.primary
        log_norm = math.log(ms.max_value)
    else:
        log_norm = t.log_norm
    # everything divided by lam * ||u||^(p-1)
    log_scale = params.log_lam + (p - 1) * log_norm
    flux = _exp(t.log_Ap - log_scale) / p * t.dlog_Ap
    if params.q_weight > 0:
        flux = flux + params.q_weight * _exp(t.log_Aq - log_scale) / params.q * t.dlog_Aq
    if params.is_sup:
        uk = u.values[k]
        # |u_k|^(p-2) u_k / ||u||^(p-1) = sign(u_k)
        rhs_vec = np.zeros(dom.n)
        rhs_vec[k] = math.copysign(1.0, uk)
    else:
        # lam ||u||_r^(p-r) |u|^(r-2) u w / (lam ||u||_r^(p-1)) = ||u||_r * dlog_norm
        rhs_vec = math.exp(log_norm) * t.dlog_norm
    res = []
    for v in tests:
        vmax = float(np.max(np.abs(v[dom.interior]), initial=0.0))
        if vmax == 0.0:
            res.append(0.0)
            continue
        res.append(abs(float(flux @ v) - float(rhs_vec @ v)) / vmax)
    return WeakResidual(max(res) if res else 0.0, tuple(res), tuple(labels), flagged)
