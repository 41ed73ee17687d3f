"""Nodal scalar fields, P1 gradients and the norms built from them.

All power sums factor out the largest magnitude first, so ``||grad u||_m``
and ``||u||_r`` stay finite for exponents of several hundred.  Every norm
comes with its exact logarithm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ZeroFieldError
from .geometry import node_set_diameter

__all__ = [
    "ScalarField",
    "CellGradients",
    "MaxSet",
    "gradients",
    "grad_norm_p",
    "lp_norm",
    "sup_norm",
    "sup_gateaux",
    "save_field",
    "load_field",
    "MAXSET_RTOL",
]

MAXSET_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values on every lattice node of ``domain``.

    With ``dirichlet=True`` values off the interior mask are forced to 0.
    """

    domain: object
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if v.size != self.domain.n:
            raise ValueError(f"field has {v.size} values, domain has {self.domain.n} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.dirichlet:
            v[~self.domain.interior] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, domain, f, dirichlet=True):
        xy = domain.coords
        return cls(domain, f(xy[:, 0], xy[:, 1]), dirichlet)

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros(domain.n))

    def with_values(self, values):
        return ScalarField(self.domain, values, self.dirichlet)

    def __mul__(self, t):
        return self.with_values(self.values * float(t))

    __rmul__ = __mul__

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def is_zero(self):
        return not np.any(self.values)


@dataclass(frozen=True)
class CellGradients:
    gx: np.ndarray
    gy: np.ndarray
    area: float

    @property
    def magnitude(self):
        return np.hypot(self.gx, self.gy)


@dataclass(frozen=True)
class MaxSet:
    max_value: float
    nodes: tuple
    diameter: float
    unique: bool

    @property
    def primary(self):
        return self.nodes[0] if self.nodes else None


def gradients(u):
    gx, gy = u.domain.mesh.grad(u.values)
    return CellGradients(gx, gy, u.domain.mesh.area)


def _log_power_sum(x, w, m):
    """``log(sum(w * x**m))`` for ``x >= 0`` via max-factoring; ``-inf`` if all zero."""
    xmax = float(np.max(x, initial=0.0))
    if xmax == 0.0:
        return -math.inf
    s, _, _, _ = kernels.ratio_powers(x, w, xmax, m, m)
    return m * math.log(xmax) + math.log(s)


def log_grad_power(u_values, mesh, m):
    """``log ||grad u||_m^m`` for a raw nodal vector."""
    gx, gy = mesh.grad(u_values)
    return _log_power_sum(np.hypot(gx, gy), None, m) + math.log(mesh.area)


def grad_norm_p(u, m):
    """``(||grad u||_m, log ||grad u||_m)``; zero field gives ``(0, -inf)``."""
    mesh = u.domain.mesh
    lg = log_grad_power(u.values, mesh, m)
    if lg == -math.inf:
        return 0.0, -math.inf
    log_value = lg / m
    return math.exp(log_value), log_value


def grad_sup(u):
    g = gradients(u).magnitude
    return float(np.max(g, initial=0.0))


def log_lp_power(u_values, weights, r):
    return _log_power_sum(np.abs(u_values), weights, r)


def lp_norm(u, r):
    """Lumped-quadrature ``||u||_r``."""
    lv = log_lp_power(u.values, u.domain.weights, r)
    return 0.0 if lv == -math.inf else math.exp(lv / r)


def log_lp_norm(u, r):
    return log_lp_power(u.values, u.domain.weights, r) / r


def sup_norm(u):
    """Maximum of ``|u|`` and the nodes attaining it to relative 1e-12."""
    a = np.abs(u.values)
    top = float(a.max(initial=0.0))
    if top == 0.0:
        return MaxSet(0.0, (), 0.0, False)
    nodes = np.flatnonzero(a >= top * (1.0 - MAXSET_RTOL))
    diam = node_set_diameter(u.domain, nodes)
    return MaxSet(top, tuple(int(k) for k in nodes), diam, diam <= 2 * u.domain.h + 1e-12)


def sup_gateaux(u, v, p):
    """Right derivative of ``eps -> ||u + eps v||_inf^p`` at ``eps = 0``."""
    ms = sup_norm(u)
    if ms.max_value == 0.0:
        raise ZeroFieldError("sup_gateaux needs a nonzero field")
    idx = np.asarray(ms.nodes)
    uu = u.values[idx]
    vv = v.values[idx]
    return p * float(np.max(np.abs(uu) ** (p - 2) * uu * vv))


def save_field(u, path, extra=None):
    """Write ``path`` (little-endian float64, row-major) and ``path.json`` sidecar."""
    path = Path(path)
    path.write_bytes(np.asarray(u.values, dtype="<f8").tobytes())
    meta = {
        "domain": u.domain.digest,
        "dirichlet": bool(u.dirichlet),
        "nx": u.domain.nx,
        "ny": u.domain.ny,
        "h": u.domain.h,
        "dtype": "<f8",
    }
    if extra:
        meta.update(extra)
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    return path


def load_field(path, domain):
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    if meta["domain"] != domain.digest:
        raise ValueError(f"field was written for domain {meta['domain']}, not {domain.digest}")
    values = np.frombuffer(path.read_bytes(), dtype="<f8")
    return ScalarField(domain, values, meta["dirichlet"])
