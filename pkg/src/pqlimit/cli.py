"""Command line front end: ``pqlimit {eigen,solve,limit-r,sweep-p,infharm}``.

Parameters come from an optional flat ``key = value`` file (``--config``)
and are overridden by flags.  Keys are the flag names with dashes replaced
by underscores, e.g. ``lambda_mult = 2`` or ``r_schedule = 2,4,8``.  Lines
starting with ``#`` are comments.  Unknown keys are an error.

Exit codes: 0 success, 1 configuration error, 2 non-convergence,
3 existence gate refused.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SolverConfig
from .errors import ConfigError, ConvergenceError, GeometryError, PqlimitError, ProjectionInfeasible
from .fields import save_field
from .functionals import SUP, ProblemParams

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_GATE = 0, 1, 2, 3
FORMATS = ("json", "csv", "svg")
CONTOUR_LEVELS = 16


# ----------------------------------------------------------------------------
# config schema


def _bool(s):
    t = str(s).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    vals = [float(x) for x in str(s).replace(";", ",").split(",") if x.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _exponent(s):
    t = str(s).strip().lower()
    return SUP if t in ("inf", "sup", "infinity") else float(t)


def _formats(s):
    vals = [x.strip().lower() for x in str(s).split(",") if x.strip()]
    bad = [v for v in vals if v not in FORMATS]
    if bad or not vals:
        raise ValueError(f"formats must be a subset of {','.join(FORMATS)}")
    return sorted(set(vals), key=FORMATS.index)


COMMON = {
    "domain": (str, "disk:1"),
    "h": (float, 1.0 / 64),
    "out": (str, "pqlimit-out"),
    "formats": (_formats, list(FORMATS)),
    "seed": (int, 0),
    "max_iters": (int, 4000),
    "tol_grad": (float, 1e-8),
    "tol_energy": (float, 1e-9),
    "restarts": (int, 3),
    "jobs": (int, 1),
}

SCHEMA = {
    "eigen": {
        "m": (float, 2.0),
        "r": (_exponent, 2.0),
        "r_sweep": (_bool, False),
        "r_list": (_floats, [8, 16, 32, 64, 128]),
    },
    "solve": {
        "p": (float, 4.0),
        "q": (float, 3.0),
        "r": (float, 4.0),
        "lambda": (float, None),
        "lambda_mult": (float, None),
    },
    "limit-r": {
        "p": (float, 4.0),
        "q": (float, 3.0),
        "lambda": (float, None),
        "lambda_mult": (float, None),
        "r_schedule": (_floats, [2, 4, 8, 16, 32, 64, 128]),
        "refine": (_bool, True),
    },
    "sweep-p": {
        "Q": (float, 0.5),
        "Lambda": (float, None),
        "Lambda_inf": (_bool, False),
        "c": (float, 2.0),
        "p_list": (_floats, [8, 16, 32]),
        "r_schedule": (_floats, [2, 4, 8, 16, 32, 64, 128]),
        "richardson_order": (int, 1),
    },
    "infharm": {
        "peak": (float, 1.0),
        "puncture": (str, "auto"),
        "tol": (float, 1e-10),
        "max_sweeps": (int, 2_000_000),
    },
}

# keys that do not change any computed number
_NOT_HASHED = ("out", "formats", "jobs")


def read_config_file(path):
    """Parse a flat ``key = value`` file into a dict of strings."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            key, sep, val = line.partition(":")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def resolve(command, file_values, flag_values):
    """Merge file and flag values over the defaults and convert types."""
    schema = {**COMMON, **SCHEMA[command]}
    raw = dict(file_values)
    raw.update({k: v for k, v in flag_values.items() if v is not None})
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        else:
            cfg[key] = list(default) if isinstance(default, list) else default
    return cfg


def config_hash(command, cfg):
    body = {k: v for k, v in cfg.items() if k not in _NOT_HASHED}
    body["command"] = command
    text = json.dumps(body, sort_keys=True, default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def solver_config(cfg):
    return SolverConfig(
        max_iters=cfg["max_iters"], tol_grad=cfg["tol_grad"], tol_energy=cfg["tol_energy"],
        restarts=cfg["restarts"], seed=cfg["seed"], jobs=cfg["jobs"],
    )


# ----------------------------------------------------------------------------
# output


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


class Writer:
    """Single writer for one run directory; stamps every file."""

    def __init__(self, out, formats, stamp):
        self.out = Path(out)
        self.formats = formats
        self.stamp = stamp
        self.written = []

    def _path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        self.written.append(path)
        return path

    def json(self, name, payload):
        if "json" not in self.formats:
            return
        body = {"pqlimit": self.stamp, **payload}
        if "config" in body:
            # the output location is not part of the result
            body["config"] = {k: v for k, v in body["config"].items() if k != "out"}
        text = json.dumps(body, indent=1, sort_keys=True, default=_json_default, allow_nan=True)
        self._path(name).write_text(text + "\n")

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return
        with open(self._path(name), "w", newline="") as fh:
            fh.write(f"# pqlimit {self.stamp['version']} config {self.stamp['config_hash']}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(x) for x in row])

    def field(self, name, u, extra=None):
        meta = {"pqlimit": self.stamp}
        if extra:
            meta.update(extra)
        save_field(u, self._path(name), meta)
        self.written.append(self.out / (name + ".json"))

    def svg(self, name, u, title):
        if "svg" not in self.formats:
            return
        plot_field(u, self._path(name), title, self.stamp)


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return str(x)


def plot_field(u, path, title, stamp):
    """Filled contour plot with a fixed 16-level palette; byte-stable output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dom = u.domain
    Z = np.where(dom.interior | dom.boundary, u.values, np.nan).reshape(dom.ny, dom.nx)
    lo, hi = float(np.nanmin(Z)), float(np.nanmax(Z))
    if not hi > lo:
        hi = lo + 1.0
    levels = np.linspace(lo, hi, CONTOUR_LEVELS + 1)
    colors = plt.get_cmap("viridis")(np.linspace(0.0, 1.0, CONTOUR_LEVELS))
    with matplotlib.rc_context({"svg.hashsalt": "pqlimit", "svg.fonttype": "none", "path.simplify": False}):
        fig, ax = plt.subplots(figsize=(5.0, 5.0))
        cs = ax.contourf(dom.xs, dom.ys, Z, levels=levels, colors=colors)
        fig.colorbar(cs, ax=ax, shrink=0.8)
        ax.set_aspect("equal")
        ax.set_title(title)
        fig.savefig(path, format="svg", metadata={
            "Date": None,
            "Title": title,
            "Description": f"pqlimit {stamp['version']} config {stamp['config_hash']}",
        })
        plt.close(fig)


# ----------------------------------------------------------------------------
# commands


def _domain(cfg):
    from .geometry import build_domain, parse_shape

    return build_domain(parse_shape(cfg["domain"]), cfg["h"])


def _lambda_choice(cfg):
    if cfg["lambda"] is not None and cfg["lambda_mult"] is not None:
        raise ConfigError("give either lambda or lambda_mult, not both")
    if cfg["lambda"] is None and cfg["lambda_mult"] is None:
        cfg["lambda_mult"] = 2.0
    val = cfg["lambda"] if cfg["lambda"] is not None else cfg["lambda_mult"]
    if not val > 0:
        raise ConfigError("lambda and lambda_mult must be positive")


def validate(command, cfg):
    """Per-command checks that need no computation."""
    if command in ("solve", "limit-r"):
        _lambda_choice(cfg)
        p, q = cfg["p"], cfg["q"]
        if not (p > 1 and q > 1 and p != q):
            raise ConfigError("need p, q > 1 and p != q")
    if command == "solve" and (math.isinf(cfg["r"]) or cfg["r"] < 2):
        raise ConfigError("solve needs a finite r >= 2; use limit-r for the sup norm")
    if command == "eigen":
        if cfg["m"] < 2:
            raise ConfigError("need m >= 2")
        if not cfg["r_sweep"] and not (math.isinf(cfg["r"]) or cfg["r"] >= 2):
            raise ConfigError("need r >= 2")
    if command == "limit-r":
        rs = cfg["r_schedule"]
        if any(b <= a for a, b in zip(rs, rs[1:])) or rs[0] < 2:
            raise ConfigError("r_schedule must be increasing and start at r >= 2")
    if command == "sweep-p":
        if cfg["Lambda_inf"] == (cfg["Lambda"] is not None):
            raise ConfigError("give exactly one of Lambda or Lambda_inf")
    if command == "infharm" and not cfg["peak"] > 0:
        raise ConfigError("peak must be positive")


def run_eigen(cfg, dom, w):
    from .eigen import lambda_inf_estimate, lambda_inf_pinned, rayleigh_min

    scfg = solver_config(cfg)
    m = cfg["m"]
    if cfg["r_sweep"]:
        est = lambda_inf_estimate(m, dom, scfg, rs=tuple(cfg["r_list"]))
        w.json("eigen.json", {"config": cfg, "command": "eigen", "lambda_inf": est.to_dict()})
        rows = []
        prev = None
        for r, lam in est.trend:
            mono = prev is None or lam <= prev * (1 + 1e-4)
            rows.append([r, lam, lam ** (1.0 / m), (lam / dom.area) ** (1.0 / m), mono])
            prev = lam
        w.csv("trend.csv", ["r", "lambda", "root", "normalized_root", "monotone"], rows)
        return EXIT_OK
    if math.isinf(cfg["r"]):
        pe = lambda_inf_pinned(m, dom)
        w.json("eigen.json", {"config": cfg, "command": "eigen", "result": {
            "m": m, "r": "inf", "lambda": pe.value, "root": pe.value ** (1.0 / m), "peak_node": pe.node,
            "peak_xy": list(dom.point_of(pe.node))}})
        return EXIT_OK
    res = rayleigh_min(m, cfg["r"], dom, scfg)
    w.json("eigen.json", {"config": cfg, "command": "eigen", "result": res.to_dict()})
    w.csv("trace.csv", ["iter", "log_quotient", "step"], res.trace)
    w.field("eigenfield.f64", res.eigenfield)
    w.svg("eigenfield.svg", res.eigenfield, f"eigenfield m={m:g} r={cfg['r']:g}")
    return EXIT_OK


def _gate_refused(w, cfg, command, decision):
    w.json("gate.json", {"config": cfg, "command": command, "gate": decision.to_dict()})
    print(f"pqlimit: existence gate refused: {decision.reason} "
          f"(lambda / threshold = {decision.ratio:.6g})", file=sys.stderr)
    return EXIT_GATE


def _write_report(w, rep, stem, title):
    w.json(f"{stem}.json", {"report": rep.to_dict()})
    w.csv(f"{stem}_trace.csv", ["iter", "energy", "nehari_residual", "step"], rep.trace)
    w.field(f"{stem}.f64", rep.field)
    w.svg(f"{stem}.svg", rep.field, title)


def run_solve(cfg, dom, w):
    from .eigen import rayleigh_min
    from .solver import existence_gate, solve_least_energy

    scfg = solver_config(cfg)
    p, q, r = cfg["p"], cfg["q"], cfg["r"]
    thr = rayleigh_min(p, r, dom, scfg).lambda_value
    lam = cfg["lambda"] if cfg["lambda"] is not None else cfg["lambda_mult"] * thr
    params = ProblemParams(p, q, r, lam)
    gate = existence_gate(params, dom, scfg, threshold=thr)
    if not gate.proceed:
        return _gate_refused(w, cfg, "solve", gate)
    rep = solve_least_energy(params, dom, scfg, gate=gate)
    w.json("solve.json", {"config": cfg, "command": "solve", "report": rep.to_dict()})
    w.csv("trace.csv", ["iter", "energy", "nehari_residual", "step"], rep.trace)
    w.field("field.f64", rep.field)
    w.svg("field.svg", rep.field, f"least energy p={p:g} q={q:g} r={r:g}")
    return EXIT_OK


def run_limit_r(cfg, dom, w):
    from .eigen import lambda_inf_pinned
    from .solver import continue_in_r, existence_gate

    scfg = solver_config(cfg)
    p, q = cfg["p"], cfg["q"]
    thr = lambda_inf_pinned(p, dom).value
    lam = cfg["lambda"] if cfg["lambda"] is not None else cfg["lambda_mult"] * thr
    params = ProblemParams(p, q, SUP, lam)
    gate = existence_gate(params, dom, scfg, threshold=thr)
    if not gate.proceed:
        return _gate_refused(w, cfg, "limit-r", gate)
    rep = continue_in_r(params, dom, scfg, tuple(cfg["r_schedule"]), gate=gate, refine=cfg["refine"])
    w.json("limit_r.json", {"config": cfg, "command": "limit-r", "report": rep.to_dict()})
    cols = ["r", "skipped", "energy", "lr", "sup", "lr_sup_gap", "grad_q", "cauchy_gap",
            "nehari_residual", "weak_residual", "iterations"]
    rows = [[s.get(c, float("nan")) for c in cols] for s in rep.extra["schedule"]]
    w.csv("schedule.csv", cols, rows)
    w.csv("trace.csv", ["iter", "energy", "nehari_residual", "step"], rep.trace)
    w.field("field.f64", rep.field)
    w.svg("field.svg", rep.field, f"sup-norm limit p={p:g} q={q:g}")
    return EXIT_OK


def run_sweep_p(cfg, dom, w):
    from .asymptotics import CSV_COLUMNS, SweepSpec, run_sweep

    scfg = solver_config(cfg)
    if cfg["Lambda_inf"]:
        spec = SweepSpec(cfg["Q"], None, "renorm", cfg["c"], tuple(cfg["p_list"]),
                         tuple(cfg["r_schedule"]), cfg["richardson_order"])
    else:
        spec = SweepSpec(cfg["Q"], cfg["Lambda"], "power", cfg["c"], tuple(cfg["p_list"]),
                         tuple(cfg["r_schedule"]), cfg["richardson_order"])
    try:
        rep = run_sweep(spec, dom, scfg, jobs=cfg["jobs"])
    except ConfigError:
        raise
    except PqlimitError as exc:
        print(f"pqlimit: existence gate refused: {exc}", file=sys.stderr)
        return EXIT_GATE
    w.json("sweep.json", {"config": cfg, "command": "sweep-p", "sweep": rep.to_dict()})
    w.csv("sweep.csv", list(CSV_COLUMNS), [[row[c] for c in CSV_COLUMNS] for row in rep.rows])
    for row, sub in zip(rep.rows, rep.reports):
        tag = f"p{row['p']:g}"
        w.field(f"field_{tag}.f64", sub.field)
        w.svg(f"field_{tag}.svg", sub.field, f"sweep Q={spec.Q:g} p={row['p']:g}")
    return EXIT_OK


def _puncture(cfg, dom):
    from .geometry import rho_maximizers

    text = cfg["puncture"].strip().lower()
    if text == "auto":
        return rho_maximizers(dom).primary
    try:
        x, y = (float(c) for c in text.split(","))
    except ValueError:
        raise ConfigError(f"puncture must be auto or x,y, got {cfg['puncture']!r}") from None
    k = dom.node_of((x, y))
    if not dom.interior[k]:
        raise ConfigError(f"puncture {x},{y} is not an interior node")
    return k


def run_infharm(cfg, dom, w):
    from .infinity import InfHarmonicProblem, cone_field, infharm_defect, infharm_run, node_ball

    k = _puncture(cfg, dom)
    try:
        prob = InfHarmonicProblem(dom, k, cfg["peak"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = infharm_run(prob, cfg["tol"], cfg["max_sweeps"])
    u = res.field
    near = node_ball(dom, k, 2 * dom.h)
    cone = cone_field(dom, k, cfg["peak"])
    diff = np.abs(u.values - cone.values)[dom.interior]
    payload = {
        "config": cfg,
        "command": "infharm",
        "puncture": {"node": k, "xy": list(dom.point_of(k))},
        "peak": cfg["peak"],
        "sweeps": res.sweeps,
        "last_change": res.last_change,
        "defect": infharm_defect(u, near, cfg["peak"]),
        "cone_max_deviation": float(diff.max()) / cfg["peak"],
        "cone_max_deviation_over_h": float(diff.max()) / (cfg["peak"] * dom.h),
    }
    w.json("infharm.json", payload)
    w.field("field.f64", u)
    w.svg("field.svg", u, f"infinity-harmonic peak={cfg['peak']:g}")
    return EXIT_OK


COMMANDS = {
    "eigen": run_eigen,
    "solve": run_solve,
    "limit-r": run_limit_r,
    "sweep-p": run_sweep_p,
    "infharm": run_infharm,
}


# ----------------------------------------------------------------------------
# argument parsing


def build_parser():
    ap = argparse.ArgumentParser(prog="pqlimit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pqlimit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--domain", help="shape, e.g. disk:1, square:1, rect:0,0,2,1, lshape:2")
        sp.add_argument("--h", help="grid spacing")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--formats", help="comma list from json,csv,svg")
        sp.add_argument("--seed")
        sp.add_argument("--max-iters", dest="max_iters")
        sp.add_argument("--tol-grad", dest="tol_grad")
        sp.add_argument("--tol-energy", dest="tol_energy")
        sp.add_argument("--restarts")
        sp.add_argument("--jobs", help="worker processes for per-p jobs")
        return sp

    sp = common(sub.add_parser("eigen", help="first eigenvalue lambda_r(m)"))
    sp.add_argument("--m")
    sp.add_argument("--r", help="number >= 2 or inf")
    sp.add_argument("--r-sweep", dest="r_sweep", action="store_const", const="true",
                    help="run the r trend and the sup-norm estimate")
    sp.add_argument("--r-list", dest="r_list")

    sp = common(sub.add_parser("solve", help="least-energy solution for finite r"))
    sp.add_argument("--p")
    sp.add_argument("--q")
    sp.add_argument("--r")
    sp.add_argument("--lambda", dest="lambda")
    sp.add_argument("--lambda-mult", dest="lambda_mult", help="lambda = k * lambda_r(p)")

    sp = common(sub.add_parser("limit-r", help="continuation in r to the sup-norm problem"))
    sp.add_argument("--p")
    sp.add_argument("--q")
    sp.add_argument("--lambda", dest="lambda")
    sp.add_argument("--lambda-mult", dest="lambda_mult", help="lambda = k * lambda_inf(p)")
    sp.add_argument("--r-schedule", dest="r_schedule")
    sp.add_argument("--no-refine", dest="refine", action="store_const", const="false")

    sp = common(sub.add_parser("sweep-p", help="sup-norm solutions along p with q = Q p"))
    sp.add_argument("--Q", dest="Q")
    sp.add_argument("--Lambda", dest="Lambda", help="lambda_p = Lambda^p")
    sp.add_argument("--Lambda-inf", dest="Lambda_inf", action="store_const", const="true",
                    help="lambda_p = c |Omega| Lambda_inf^p")
    sp.add_argument("--c")
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--r-schedule", dest="r_schedule")
    sp.add_argument("--richardson-order", dest="richardson_order")

    sp = common(sub.add_parser("infharm", help="infinity-harmonic function on a punctured domain"))
    sp.add_argument("--peak")
    sp.add_argument("--puncture", help="auto or x,y")
    sp.add_argument("--tol")
    sp.add_argument("--max-sweeps", dest="max_sweeps")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    cfg_path = flags.pop("config", None)
    try:
        file_values = read_config_file(cfg_path) if cfg_path else {}
        cfg = resolve(command, file_values, flags)
        validate(command, cfg)
        solver_config(cfg)
        dom = _domain(cfg)
    except (ConfigError, GeometryError) as exc:
        print(f"pqlimit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stamp = {"version": __version__, "config_hash": config_hash(command, cfg)}
    w = Writer(cfg["out"], cfg["formats"], stamp)
    try:
        return COMMANDS[command](cfg, dom, w)
    except ConfigError as exc:
        print(f"pqlimit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"pqlimit: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ProjectionInfeasible as exc:
        print(f"pqlimit: no Nehari point: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except PqlimitError as exc:
        from .solver import GateRefused

        if isinstance(exc, GateRefused):
            return _gate_refused(w, cfg, command, exc.decision)
        print(f"pqlimit: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
