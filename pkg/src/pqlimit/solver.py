"""Least-energy solutions of the (p,q)-Laplacian problem with an L^r or sup-norm load.

Both regimes are handled by one scale-free objective: for a direction ``v``
the Nehari point ``t(v) v`` is explicit, and for ``q < p`` it is the fibre
maximum (so the least energy is ``min_v I(t(v) v)``) while for ``p < q`` it
is the fibre minimum of ``I`` (so the global minimum is again
``min_v I(t(v) v)``).  We minimise ``+-log |I(t(v) v)|`` with L-BFGS.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig
from .eigen import lambda_inf_pinned, rayleigh_min
from .errors import ConvergenceError, PqlimitError, ProjectionInfeasible, ZeroFieldError
from .fields import ScalarField, grad_norm_p, grad_sup, lp_norm, sup_norm
from .functionals import (
    ProblemParams,
    energy,
    evaluate_terms,
    nehari_residual,
    weak_residual,
)
from .geometry import rho_maximizers
from .optim import lbfgs
from .pinned import descend_nodes, pinned_critical
from .reduced import Interior, fibre_log_energy, nehari_objective

__all__ = [
    "SolverConfig",
    "SolveReport",
    "GateDecision",
    "GateRefused",
    "existence_gate",
    "nehari_project",
    "solve_least_energy",
    "continue_in_r",
    "refine_sup",
    "DEFAULT_R_SCHEDULE",
    "GATE_MARGIN",
]

DEFAULT_R_SCHEDULE = (2, 4, 8, 16, 32, 64, 128)
GATE_MARGIN = 1e-3


@dataclass(frozen=True)
class GateDecision:
    proceed: bool
    threshold: float
    ratio: float
    reason: str
    source: str

    def to_dict(self):
        return {"proceed": self.proceed, "threshold": self.threshold, "ratio": self.ratio,
                "reason": self.reason, "source": self.source}


class GateRefused(PqlimitError):
    def __init__(self, decision):
        super().__init__(decision.reason)
        self.decision = decision


def existence_gate(params, domain, cfg=None, threshold=None):
    """Refuse when ``lam <= (1 + 1e-3) * lambda_r(p)`` (``lambda_inf(p)`` for SUP)."""
    if threshold is None:
        if params.is_sup:
            threshold = lambda_inf_pinned(params.p, domain).value
        else:
            threshold = rayleigh_min(params.p, params.r, domain, cfg).lambda_value
    src = "lambda_inf(p)" if params.is_sup else "lambda_r(p)"
    ratio = params.lam / threshold
    if params.lam <= (1.0 + GATE_MARGIN) * threshold:
        return GateDecision(False, threshold, ratio, f"lambda below {src}", src)
    return GateDecision(True, threshold, ratio, "", src)


def nehari_project(v, params):
    """Scale ``v`` onto the Nehari set; returns ``(t, t v)``.

    ``t = (A_q / (lam ||v||^p - A_p))^(1/(p-q))`` evaluated with logarithms.
    """
    if not params.q_weight > 0:
        raise ProjectionInfeasible("no Nehari point without the q-term")
    try:
        t = evaluate_terms(v.values, v.domain, params.p, params.q, params.r)
    except ZeroFieldError:
        raise ProjectionInfeasible("cannot project the zero field") from None
    fe = fibre_log_energy(t, params.p, params.q, params.log_lam, math.log(params.q_weight))
    if fe is None:
        raise ProjectionInfeasible("lam ||v||^p <= ||grad v||_p^p: no Nehari point on this ray")
    log_t = fe[1]
    s = math.exp(log_t)
    return s, v.with_values(v.values * s)


@dataclass
class SolveReport:
    params: ProblemParams
    field: ScalarField
    energy: object
    norms: dict
    maxset: object
    nehari_residual: float
    weak_residual: object
    iterations: int
    scale_log: float
    flags: dict
    trace: list = field(default_factory=list, repr=False)
    restarts: list = field(default_factory=list)
    gate: GateDecision | None = None
    extra: dict = field(default_factory=dict)
    stages: list = field(default_factory=list, repr=False)

    def to_dict(self):
        ms = self.maxset
        dom = self.field.domain
        return {
            "params": self.params.to_dict(),
            "energy": self.energy.to_dict(),
            "norms": dict(self.norms),
            "maxset": {
                "max_value": ms.max_value,
                "nodes": list(ms.nodes[:64]),
                "count": len(ms.nodes),
                "primary": ms.primary,
                "primary_xy": list(dom.point_of(ms.primary)) if ms.primary is not None else None,
                "diameter": ms.diameter,
                "unique": ms.unique,
            },
            "nehari_residual": self.nehari_residual,
            "weak_residual": self.weak_residual.to_dict() if self.weak_residual is not None else None,
            "iterations": self.iterations,
            "scale_log": self.scale_log,
            "flags": dict(self.flags),
            "restarts": list(self.restarts),
            "gate": self.gate.to_dict() if self.gate else None,
            "extra": self.extra,
        }

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "energy", "nehari_residual", "step"])
            for row in self.trace:
                w.writerow([row[0]] + [format(x, ".17g") for x in row[1:]])


def _norms(u, params):
    gp = grad_norm_p(u, params.p)[0]
    gq = grad_norm_p(u, params.q)[0]
    out = {"grad_p": gp, "grad_q": gq, "grad_sup": grad_sup(u), "sup": sup_norm(u).max_value}
    if not params.is_sup:
        out["lr"] = lp_norm(u, params.r)
    return out


def build_report(u, params, iterations=0, scale_log=0.0, trace=None, restarts=None, gate=None,
                 extra=None, tests=None):
    ms = sup_norm(u)
    wr = weak_residual(u, params, tests)
    return SolveReport(
        params=params,
        field=u,
        energy=energy(u, params),
        norms=_norms(u, params),
        maxset=ms,
        nehari_residual=nehari_residual(u, params),
        weak_residual=wr,
        iterations=iterations,
        scale_log=scale_log,
        flags={"multi_maximizer": not ms.unique, "gate_refused": False},
        trace=trace or [],
        restarts=restarts or [],
        gate=gate,
        extra=extra or {},
    )


def _bump_start(domain, seed):
    rng = np.random.default_rng(seed)
    c = domain.coords
    a, b = rng.uniform(1.0, 4.0, size=2)
    ph = rng.uniform(0.0, 2 * np.pi, size=2)
    return domain.rho * (1.0 + 0.5 * np.sin(a * c[:, 0] + ph[0]) * np.cos(b * c[:, 1] + ph[1]))


def _projected_row(space, params, x, f, it, step):
    # the energy is read off the objective so the column inherits its strict decrease
    e = math.exp(f) if params.q < params.p else -math.exp(-f)
    v = ScalarField(space.domain, np.abs(space.full(x)))
    try:
        _, u = nehari_project(v, params)
    except ProjectionInfeasible:
        return (it, e, float("nan"), step)
    return (it, e, nehari_residual(u, params), step)


def _run_descent(space, params, x0, cfg):
    fun = nehari_objective(space, params)
    f0, _ = fun(x0)
    if not math.isfinite(f0):
        raise ProjectionInfeasible("starting field has no Nehari point")
    rows = [_projected_row(space, params, x0, f0, 0, float("nan"))]

    def cb(it, x, f, step):
        rows.append(_projected_row(space, params, x, f, it, step))

    res = lbfgs(fun, x0, precond=space.precond, rescale=space.rescale, callback=cb, **cfg.lbfgs_kwargs())
    return res, rows


def solve_least_energy(params, domain, cfg=None, init=None, gate=None, restarts=None, check_gate=True):
    """Least-energy solution for finite ``r >= 2``.

    Starts: ``init`` if given, else ``rho``, the first ``(p, r)`` eigenfield
    and a random positive bump, up to ``cfg.restarts``.  The lowest energy
    wins; the spread of the others is reported.
    """
    cfg = cfg or SolverConfig()
    if params.is_sup:
        raise ValueError("use continue_in_r for the sup-norm problem")
    if params.r < 2:
        raise ValueError("gradient-based solving needs r >= 2")
    eig = None
    if gate is None and check_gate:
        eig = rayleigh_min(params.p, params.r, domain, cfg)
        gate = existence_gate(params, domain, cfg, threshold=eig.lambda_value)
    if gate is not None and not gate.proceed:
        raise GateRefused(gate)
    space = Interior(domain)
    n_starts = cfg.restarts if restarts is None else restarts
    starts = []
    if init is not None:
        starts.append(("init", np.asarray(getattr(init, "values", init), dtype=float)))
    else:
        starts.append(("rho", domain.rho))
        if n_starts > 1:
            if eig is None:
                eig = rayleigh_min(params.p, params.r, domain, cfg)
            starts.append(("eigen", eig.eigenfield.values))
        if n_starts > 2:
            starts.append(("bump", _bump_start(domain, cfg.seed)))
    starts = starts[:max(n_starts, 1)]
    best = None
    spread = []
    for name, v0 in starts:
        x0 = space.restrict(v0)
        try:
            res, rows = _run_descent(space, params, x0, cfg)
        except ProjectionInfeasible:
            spread.append({"start": name, "energy": None, "status": "infeasible"})
            continue
        e = rows[-1][1]
        spread.append({"start": name, "energy": e, "iterations": res.iterations, "status": res.reason})
        if best is None or (e < best[2]):
            best = (res, rows, e, name)
    if best is None:
        raise ProjectionInfeasible("no start admitted a Nehari point")
    res, rows, _, name = best
    if not res.converged:
        raise ConvergenceError(
            f"descent did not converge ({res.reason}) after {res.iterations} iterations",
            {"iterations": res.iterations, "energy": rows[-1][1], "start": name},
        )
    v = ScalarField(domain, np.abs(space.full(res.x)))
    t, u = nehari_project(v, params)
    energies = [s["energy"] for s in spread if s["energy"] is not None]
    extra = {"best_start": name, "restart_spread": (max(energies) - min(energies)) / abs(min(energies))
             if len(energies) > 1 else 0.0, "stop_reason": res.reason}
    return build_report(u, params, res.iterations, math.log(t), rows, spread, gate, extra)


def refine_sup(params, domain, start_node, x0=None, mu0=None, peak_search=True, max_moves=8):
    """Pinned-peak sup-norm solution near ``start_node`` (see :mod:`pqlimit.pinned`)."""
    sols = {}

    def score(k):
        try:
            sol, _ = pinned_critical(domain, params.p, params.q, params.lam, k, mu0=mu0,
                                     x0=x0 if k == start_node else None)
        except ProjectionInfeasible:
            # no Nehari point with the peak here: not a candidate, unless it is the start
            if k == start_node:
                raise
            return math.inf
        sols[k] = sol
        return sol.energy

    if peak_search:
        k, _, _ = descend_nodes(domain, start_node, score, max_moves)
    else:
        k = start_node
        score(k)
    return sols[k], sols


def _sup_from_rho(params, domain, cfg, gate, steps):
    # every finite r is infeasible (lambda_r(p) > lam) while the sup-norm gate passed:
    # go straight to the pinned-peak solver from the incenter
    start = rho_maximizers(domain).primary
    sol, table = refine_sup(params, domain, start, peak_search=cfg.peak_search)
    u = ScalarField(domain, sol.u)
    extra = {
        "schedule": steps,
        "final_r": None,
        "cauchy_gap": float("nan"),
        "lr_sup_gap": float("nan"),
        "refine": {
            "start_node": start,
            "node": sol.node,
            "mu": sol.mu,
            "peak": sol.M,
            "candidates": {str(k): v.energy for k, v in sorted(table.items())},
            "moved": sol.node != start,
            "seed": "rho",
        },
    }
    return build_report(u, params, 0, math.log(sol.M), [], [], gate, extra)


def continue_in_r(params, domain, cfg=None, r_schedule=DEFAULT_R_SCHEDULE, gate=None, refine=True):
    """Follow the least-energy solutions along ``r_schedule`` and pass to the sup norm.

    Each finite-``r`` solve is warm-started from the previous one; values of
    ``r`` whose ``lambda_r(p)`` exceeds ``lam`` are skipped.  The last field
    is projected onto the sup-norm Nehari set; with ``refine`` it then seeds
    the pinned-peak solver, whose output is the reported field.  If no ``r``
    in the schedule is feasible, ``refine`` starts the pinned-peak solver at
    the incenter instead.
    """
    cfg = cfg or SolverConfig()
    if not params.is_sup:
        raise ValueError("continue_in_r targets the sup-norm problem (r = SUP)")
    if gate is None:
        gate = existence_gate(params, domain, cfg)
    if not gate.proceed:
        raise GateRefused(gate)
    steps = []
    prev = None
    prev_report = None
    reports = []
    trace = []
    for r in r_schedule:
        pr = params.with_r(float(r))
        eig = rayleigh_min(pr.p, pr.r, domain, cfg, init=prev)
        g = existence_gate(pr, domain, cfg, threshold=eig.lambda_value)
        if not g.proceed:
            steps.append({"r": r, "skipped": True, "threshold": g.threshold})
            continue
        rep = solve_least_energy(pr, domain, cfg, init=prev if prev is not None else None, gate=g,
                                 restarts=1 if prev is not None else None)
        for row in rep.trace:
            trace.append((len(trace),) + tuple(row[1:]))
        sup = rep.norms["sup"]
        steps.append({
            "r": r, "skipped": False, "energy": rep.energy.total, "lr": rep.norms["lr"], "sup": sup,
            "lr_sup_gap": 1.0 - rep.norms["lr"] / sup, "grad_q": rep.norms["grad_q"],
            "iterations": rep.iterations, "nehari_residual": rep.nehari_residual,
            "weak_residual": rep.weak_residual.value, "primary": rep.maxset.primary,
        })
        if prev_report is not None:
            diff = rep.field - prev_report.field
            gd = grad_norm_p(diff, params.q)[0] if not diff.is_zero() else 0.0
            steps[-1]["cauchy_gap"] = gd / rep.norms["grad_q"]
        prev = rep.field
        prev_report = rep
        reports.append(rep)
    if prev_report is None:
        if not refine:
            raise GateRefused(GateDecision(False, float("nan"), float("nan"),
                                           "lambda below lambda_r(p) for every r in the schedule", "lambda_r(p)"))
        return _sup_from_rho(params, domain, cfg, gate, steps)
    last = prev_report
    extra = {
        "schedule": steps,
        "final_r": last.params.r,
        "cauchy_gap": steps[-1].get("cauchy_gap", float("nan")),
        "lr_sup_gap": 1.0 - last.norms["lr"] / last.norms["sup"],
        "finite_r": last.to_dict(),
    }
    # sup-norm Nehari projection of the continuation field
    tp, uc = nehari_project(last.field, params)
    extra["continuation_sup_nehari_residual"] = nehari_residual(uc, params)
    extra["continuation_sup_energy"] = energy(uc, params).total
    extra["continuation_sup"] = sup_norm(uc).max_value
    if refine:
        ms = sup_norm(uc)
        sol, table = refine_sup(params, domain, ms.primary, peak_search=cfg.peak_search,
                                mu0=ms.max_value ** (params.q - params.p))
        u = ScalarField(domain, sol.u)
        extra["refine"] = {
            "start_node": ms.primary,
            "node": sol.node,
            "mu": sol.mu,
            "peak": sol.M,
            "candidates": {str(k): v.energy for k, v in sorted(table.items())},
            "moved": sol.node != ms.primary,
        }
        scale_log = math.log(sol.M)
    else:
        u = uc
        scale_log = math.log(tp)
    rep = build_report(u, params, sum(r_.iterations for r_ in reports), scale_log, trace, [], gate, extra)
    rep.stages = reports
    return rep
