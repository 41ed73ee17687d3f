"""The p -> infinity harness: sweeps with ``q = Q p`` and the closed-form limits.

Richardson extrapolation is done on logarithms, ``log y(p) = a + b/p (+ c/p^2)``,
because the finite-p errors we observe are multiplicative (factors such as
``h^(-1/(q-1))`` near the peak).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .eigen import lambda_inf_pinned
from .errors import ConfigError, PqlimitError
from .functionals import SUP, ProblemParams
from .geometry import lambda_inf_cap, rho_maximizers
from .solver import DEFAULT_R_SCHEDULE, GateRefused, continue_in_r, existence_gate

__all__ = [
    "SweepSpec",
    "PredictedLimits",
    "ConvergenceReport",
    "predicted_limits",
    "richardson",
    "run_sweep",
    "check_mutual_consistency",
    "MissingReference",
    "DEFAULT_P_LIST",
    "CSV_COLUMNS",
]

DEFAULT_P_LIST = (8, 12, 16, 24, 32)
CSV_COLUMNS = (
    "p", "q", "lambda_root", "u_sup", "grad_sup", "max_node", "max_x", "max_y",
    "envelope_max", "nehari_residual", "weak_residual",
)


class MissingReference(PqlimitError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """``lambda_rule``: ``"power"`` (``lam_p = Lambda^p``) or ``"renorm"``
    (``lam_p = c |Omega| Lambda_inf^p``; ``Lambda`` is then ``Lambda_inf``)."""

    Q: float
    Lambda: float | None = None
    lambda_rule: str = "power"
    c: float = 2.0
    p_list: tuple = DEFAULT_P_LIST
    r_schedule: tuple = DEFAULT_R_SCHEDULE
    richardson_order: int = 1

    def __post_init__(self):
        if not self.Q > 0 or self.Q == 1:
            raise ConfigError("Q must be positive and different from 1")
        if self.lambda_rule not in ("power", "renorm"):
            raise ConfigError(f"unknown lambda rule {self.lambda_rule!r}")
        if self.lambda_rule == "power" and self.Lambda is None:
            raise ConfigError("the power rule needs Lambda")
        if self.lambda_rule == "renorm" and not self.c > 1:
            raise ConfigError("the renorm rule needs c > 1")
        ps = tuple(float(p) for p in self.p_list)
        if not ps or any(b <= a for a, b in zip(ps, ps[1:])):
            raise ConfigError("p_list must be nonempty and increasing")
        for p in ps:
            if p <= 2 or self.Q * p <= 2:
                raise ConfigError(f"need p > 2 and Q p > 2 (p={p})")
        if self.richardson_order not in (0, 1, 2):
            raise ConfigError("richardson_order must be 0, 1 or 2")
        object.__setattr__(self, "p_list", ps)

    def validate(self, domain):
        cap = lambda_inf_cap(domain)
        if self.lambda_rule == "power" and self.Lambda < cap - 1e-9:
            raise ConfigError(f"Lambda={self.Lambda} is below Lambda_inf={cap}")
        return cap

    def effective_Lambda(self, domain):
        return lambda_inf_cap(domain) if self.lambda_rule == "renorm" else float(self.Lambda)

    def log_lam(self, p, domain):
        if self.lambda_rule == "power":
            return p * math.log(self.Lambda)
        return math.log(self.c * domain.area) + p * math.log(lambda_inf_cap(domain))

    def to_dict(self):
        return {
            "Q": self.Q, "Lambda": self.Lambda, "lambda_rule": self.lambda_rule, "c": self.c,
            "p_list": list(self.p_list), "r_schedule": list(self.r_schedule),
            "richardson_order": self.richardson_order,
        }


@dataclass(frozen=True)
class PredictedLimits:
    Q: float
    Lambda: float
    Lambda_inf: float
    grad_sup: float
    u_sup: float | None
    u_sup_lower: float
    envelope_coefficient: float | None
    kind: str

    def to_dict(self):
        return dict(self.__dict__)


def predicted_limits(Q, Lambda, Lambda_inf):
    """Limits of ``||u_p||_inf``, ``||grad u_p||_inf`` and the ``rho`` envelope.

    ``kind == "equality"`` when ``Q < 1`` or ``Lambda == Lambda_inf``; otherwise
    only the bounds ``||grad u|| <= grad_sup`` and ``||u|| >= u_sup_lower`` hold.
    """
    if Q == 1 or not Q > 0:
        raise ValueError("Q must be positive and different from 1")
    if Lambda < Lambda_inf * (1 - 1e-12):
        raise ValueError("Lambda must be >= Lambda_inf")
    at_cap = abs(Lambda - Lambda_inf) <= 1e-12 * Lambda_inf
    a = 1.0 if at_cap else (Lambda_inf / Lambda) ** (1.0 / (1.0 - Q))
    if Q < 1 or at_cap:
        return PredictedLimits(Q, Lambda, Lambda_inf, a, a / Lambda_inf, a / Lambda_inf, a, "equality")
    return PredictedLimits(Q, Lambda, Lambda_inf, a, None, 1.0 / Lambda_inf, None, "bounds")


def richardson(ps, values, order=1):
    """Extrapolate ``values(p)`` to ``1/p = 0`` by fitting ``log y`` in powers of ``1/p``.

    Uses the ``order + 1`` largest ``p``.  ``order = 0`` returns the last value.
    """
    ps = np.asarray(ps, dtype=float)
    ys = np.asarray(values, dtype=float)
    if order == 0 or len(ps) < 2:
        return float(ys[-1])
    k = min(order + 1, len(ps))
    x = 1.0 / ps[-k:]
    V = np.vander(x, k, increasing=True)
    coef = np.linalg.solve(V, np.log(ys[-k:]))
    return float(math.exp(coef[0]))


@dataclass
class ConvergenceReport:
    spec: SweepSpec
    predicted: PredictedLimits
    rows: list
    reports: list = field(repr=False)
    extrapolated: dict = field(default_factory=dict)
    relative_errors: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    envelope: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)
    domain_info: dict = field(default_factory=dict)

    @property
    def ps(self):
        return [row["p"] for row in self.rows]

    def field_at(self, p):
        for row, rep in zip(self.rows, self.reports):
            if row["p"] == p:
                return rep.field
        raise KeyError(p)

    @property
    def last(self):
        return self.reports[-1]

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "predicted": self.predicted.to_dict(),
            "rows": self.rows,
            "extrapolated": self.extrapolated,
            "relative_errors": self.relative_errors,
            "bounds": self.bounds,
            "envelope": self.envelope,
            "skipped": self.skipped,
            "domain": self.domain_info,
            "extrapolation": f"log-Richardson in 1/p, order {self.spec.richardson_order}, largest p values",
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in self.rows:
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _solve_one(args):
    spec, domain, cfg, p = args
    q = spec.Q * p
    lam = math.exp(spec.log_lam(p, domain))
    params = ProblemParams(p, q, SUP, lam)
    thr = lambda_inf_pinned(p, domain).value
    gate = existence_gate(params, domain, cfg, threshold=thr)
    if not gate.proceed:
        return p, None, gate
    try:
        rep = continue_in_r(params, domain, cfg, spec.r_schedule, gate=gate)
    except GateRefused as exc:
        return p, None, exc.decision
    return p, rep, gate


def run_sweep(spec, domain, cfg=None, jobs=None):
    """Solve the sup-norm problem for every ``p`` in the sweep and compare with the limits."""
    cfg = cfg or SolverConfig()
    cap = spec.validate(domain)
    Lam = spec.effective_Lambda(domain)
    pred = predicted_limits(spec.Q, Lam, cap)
    jobs = jobs or cfg.jobs
    tasks = [(spec, domain, cfg, p) for p in spec.p_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_solve_one, tasks))
    else:
        results = [_solve_one(t) for t in tasks]
    rows, reports, skipped = [], [], []
    rho = domain.rho
    rm = rho_maximizers(domain)
    coef = pred.envelope_coefficient
    h = domain.h
    for p, rep, gate in results:
        if rep is None:
            skipped.append({"p": p, "reason": gate.reason, "threshold": gate.threshold})
            continue
        u = rep.field.values
        k = rep.maxset.primary
        x, y = domain.point_of(k)
        drift = min(math.dist(domain.point_of(k), domain.point_of(j)) for j in rm.nodes)
        row = {
            "p": p,
            "q": spec.Q * p,
            "lambda_root": math.exp(spec.log_lam(p, domain) / p),
            "u_sup": rep.norms["sup"],
            "grad_sup": rep.norms["grad_sup"],
            "max_node": k,
            "max_x": x,
            "max_y": y,
            "maximizer_drift": drift,
            "envelope_max": float(np.max(u - coef * rho)) if coef is not None else float("nan"),
            "envelope_gap_at_max": float(abs(u[k] - coef * rho[k])) if coef is not None else float("nan"),
            "nehari_residual": rep.nehari_residual,
            "weak_residual": rep.weak_residual.value,
            "gate_ratio": rep.gate.ratio if rep.gate else float("nan"),
            "energy": rep.energy.total,
        }
        rows.append(row)
        reports.append(rep)
    if not rows:
        raise PqlimitError("every p in the sweep was refused or failed")
    ps = [r["p"] for r in rows]
    order = spec.richardson_order
    ext = {
        "u_sup": richardson(ps, [r["u_sup"] for r in rows], order),
        "grad_sup": richardson(ps, [r["grad_sup"] for r in rows], order),
        "order": order,
        "p_used": ps[-(order + 1):] if order else ps[-1:],
    }
    rel, bounds = {}, {}
    if pred.kind == "equality":
        rel["u_sup"] = abs(ext["u_sup"] - pred.u_sup) / pred.u_sup
        rel["grad_sup"] = abs(ext["grad_sup"] - pred.grad_sup) / pred.grad_sup
    last = rows[-1]
    bounds["u_sup_over_lower"] = last["u_sup"] / pred.u_sup_lower
    bounds["grad_sup_over_upper"] = last["grad_sup"] / pred.grad_sup
    env = {}
    if coef is not None:
        env = {
            "coefficient": coef,
            "max_violation": last["envelope_max"],
            "gap_at_maximizer": last["envelope_gap_at_max"],
        }
    # interior positivity on the half-inradius disk around the incenter
    c0 = np.asarray(domain.point_of(rm.primary))
    xy = domain.coords
    near = domain.interior & (np.hypot(xy[:, 0] - c0[0], xy[:, 1] - c0[1]) <= 0.5 * rho.max())
    env["min_on_half_inradius"] = float(np.min(reports[-1].field.values[near]))
    info = {"h": h, "area": domain.area, "Lambda_inf": cap, "digest": domain.digest,
            "shape": domain.shape.describe(), "rho_max_unique": rm.unique}
    return ConvergenceReport(spec, pred, rows, reports, ext, rel, bounds, env, skipped, info)


def check_mutual_consistency(report, domain, reference=None):
    """Cross-checks of the largest-p field against ``rho`` and the ``Lambda_inf`` run.

    * the maximizer is (within ``2h``) a maximum point of ``rho``;
    * for ``Q < 1`` on a domain with a unique incenter, the field should be
      ``(Lambda_inf/Lambda)^(1/(1-Q))`` times the reference (``Lambda = Lambda_inf``)
      field at the same ``p``; the sup-norm discrepancy relative to the peak
      is reported.
    On domains whose ``rho`` maximizers form a ridge the check is reduced to
    the envelope.
    """
    h = domain.h
    rho = domain.rho
    rm = rho_maximizers(domain)
    last = report.last
    k = last.maxset.primary
    out = {
        "rho_at_maximizer": float(rho[k]),
        "rho_max": float(rho.max()),
        "maximizer_on_rho_max": bool(rho[k] >= rho.max() - 2 * h),
        "unique_incenter": rm.unique,
        "envelope": report.envelope,
    }
    if not rm.unique:
        out["mode"] = "envelope-only"
        return out
    out["mode"] = "full"
    pred = report.predicted
    if report.spec.Q < 1 and pred.Lambda > pred.Lambda_inf * (1 + 1e-12):
        if reference is None:
            raise MissingReference("proportionality check needs the Lambda = Lambda_inf reference sweep")
        p = report.rows[-1]["p"]
        ref = reference.field_at(p).values
        u = last.field.values
        a = pred.grad_sup
        peak = float(np.max(u))
        disc = float(np.max(np.abs(u - a * ref))) / peak
        out["proportionality"] = {"p": p, "coefficient": a, "discrepancy": disc}
    return out
