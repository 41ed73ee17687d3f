"""Planar shapes on uniform lattices and their distance-to-boundary field.

A :class:`Domain` is a uniform node lattice covering the bounding box of a
:class:`Shape`.  Nodes strictly inside the shape are *interior*; lattice
nodes outside (or exactly on) the boundary that touch an interior node
through the 8-neighbourhood form the *boundary* mask.  The distance field is
``rho = max(signed_distance, 0)``, which is exactly 1-Lipschitz on the
lattice and vanishes on every boundary node.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GeometryError

__all__ = [
    "Shape",
    "Domain",
    "MaximizerSet",
    "build_domain",
    "lambda_inf_cap",
    "rho_maximizers",
    "parse_shape",
]

_EPS = 1e-12


def _segment_distance(px, py, ax, ay, bx, by):
    """Euclidean distance from points to the segment [a, b]."""
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    t = np.clip(t, 0.0, 1.0)
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return np.hypot(qx, qy)


def _polygon_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class Shape:
    """Tagged shape description.

    ``kind`` is one of ``disk``, ``rectangle``, ``lshape`` or ``polygon``.
    Use the classmethod constructors, which validate their arguments.
    """

    kind: str
    params: tuple

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0):
        if not radius > 0:
            raise GeometryError(f"disk radius must be positive, got {radius}")
        return cls("disk", (float(center[0]), float(center[1]), float(radius)))

    @classmethod
    def rectangle(cls, lo=(0.0, 0.0), hi=(1.0, 1.0)):
        if not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise GeometryError(f"rectangle needs lo < hi componentwise, got {lo}, {hi}")
        return cls("rectangle", (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])))

    @classmethod
    def lshape(cls, lo=(0.0, 0.0), hi=(2.0, 2.0), notch=(1.0, 1.0)):
        """Rectangle ``[lo, hi]`` with the upper-right quadrant ``[notch, hi]`` removed."""
        if not (lo[0] < notch[0] < hi[0] and lo[1] < notch[1] < hi[1]):
            raise GeometryError("lshape notch must lie strictly inside the bounding rectangle")
        return cls("lshape", tuple(float(c) for c in (*lo, *hi, *notch)))

    @classmethod
    def polygon(cls, vertices):
        v = [(float(x), float(y)) for x, y in vertices]
        if len(v) < 3:
            raise GeometryError("polygon needs at least three vertices")
        if len(set(v)) != len(v):
            raise GeometryError("polygon has repeated vertices")
        area = _polygon_area(v)
        if area <= 0:
            raise GeometryError("polygon must be counterclockwise with positive area")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise GeometryError("polygon is not simple")
        return cls("polygon", tuple(v))

    def vertices(self):
        """Counterclockwise vertex list for polygonal kinds."""
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        if self.kind == "lshape":
            x0, y0, x1, y1, nx, ny = self.params
            return [(x0, y0), (x1, y0), (x1, ny), (nx, ny), (nx, y1), (x0, y1)]
        if self.kind == "polygon":
            return list(self.params)
        raise GeometryError(f"{self.kind} has no vertex list")

    def bbox(self):
        if self.kind == "disk":
            cx, cy, r = self.params
            return cx - r, cy - r, cx + r, cy + r
        v = np.asarray(self.vertices())
        return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())

    def max_distance(self, point):
        """Largest distance from ``point`` to the boundary of the shape."""
        px, py = float(point[0]), float(point[1])
        if self.kind == "disk":
            cx, cy, r = self.params
            return math.hypot(px - cx, py - cy) + r
        return max(math.hypot(px - x, py - y) for x, y in self.vertices())

    def area(self):
        if self.kind == "disk":
            return math.pi * self.params[2] ** 2
        return _polygon_area(self.vertices())

    def signed_distance(self, x, y):
        """Distance to the boundary, positive inside and negative outside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "disk":
            cx, cy, r = self.params
            return r - np.hypot(x - cx, y - cy)
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            inside = np.minimum(np.minimum(x - x0, x1 - x), np.minimum(y - y0, y1 - y))
            dx = np.maximum(np.maximum(x0 - x, x - x1), 0.0)
            dy = np.maximum(np.maximum(y0 - y, y - y1), 0.0)
            return np.where(inside >= 0, inside, -np.hypot(dx, dy))
        v = self.vertices()
        n = len(v)
        dist = np.full(x.shape, np.inf)
        inside = np.zeros(x.shape, dtype=bool)
        for i in range(n):
            (ax, ay), (bx, by) = v[i], v[(i + 1) % n]
            dist = np.minimum(dist, _segment_distance(x, y, ax, ay, bx, by))
            crosses = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (y - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (x < xint)
        return np.where(inside, dist, -dist)

    def scaled(self, s):
        """Shape dilated by ``s`` about the origin."""
        if s <= 0:
            raise GeometryError("scale factor must be positive")
        if self.kind == "disk":
            cx, cy, r = self.params
            return Shape.disk((s * cx, s * cy), s * r)
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return Shape.rectangle((s * x0, s * y0), (s * x1, s * y1))
        if self.kind == "lshape":
            return Shape("lshape", tuple(s * c for c in self.params))
        return Shape.polygon([(s * x, s * y) for x, y in self.params])

    def to_dict(self):
        return {"kind": self.kind, "params": [list(p) if isinstance(p, tuple) else p for p in self.params]}

    def describe(self):
        return f"{self.kind}:" + ",".join(
            f"{c[0]!r} {c[1]!r}" if isinstance(c, tuple) else repr(c) for c in self.params
        )


def parse_shape(text):
    """Parse a compact shape string.

    Accepted forms::

        disk:R                  disk of radius R centred at the origin
        disk:CX,CY,R
        square:S                [0, S]^2
        rect:X0,Y0,X1,Y1
        lshape:S                [0, S]^2 minus [S/2, S]^2
        lshape:X0,Y0,X1,Y1,NX,NY
        polygon:X Y;X Y;...     counterclockwise vertices
    """
    if ":" not in text:
        raise GeometryError(f"malformed shape {text!r}: expected kind:params")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "polygon":
            pts = [tuple(float(c) for c in item.replace(",", " ").split()) for item in rest.split(";") if item.strip()]
            if any(len(p) != 2 for p in pts):
                raise ValueError("vertices need two coordinates")
            return Shape.polygon(pts)
        nums = [float(c) for c in rest.split(",") if c.strip()]
    except ValueError as exc:
        raise GeometryError(f"malformed shape {text!r}: {exc}") from None
    if kind == "disk" and len(nums) == 1:
        return Shape.disk((0.0, 0.0), nums[0])
    if kind == "disk" and len(nums) == 3:
        return Shape.disk(nums[:2], nums[2])
    if kind == "square" and len(nums) == 1:
        return Shape.rectangle((0.0, 0.0), (nums[0], nums[0]))
    if kind in ("rect", "rectangle") and len(nums) == 4:
        return Shape.rectangle(nums[:2], nums[2:])
    if kind == "lshape" and len(nums) == 1:
        s = nums[0]
        return Shape.lshape((0.0, 0.0), (s, s), (s / 2, s / 2))
    if kind == "lshape" and len(nums) == 6:
        return Shape.lshape(nums[:2], nums[2:4], nums[4:])
    raise GeometryError(f"malformed shape {text!r}")


@dataclass(frozen=True)
class MaximizerSet:
    nodes: tuple
    diameter: float
    unique: bool

    @property
    def primary(self):
        return self.nodes[0]


@dataclass(frozen=True, eq=False)
class Domain:
    """Lattice discretisation of a shape.

    Arrays are flat, row-major over ``(ny, nx)`` with ``x`` varying fastest;
    node ``k`` sits at ``(x[k % nx], y[k // nx])``.
    """

    shape: Shape
    h: float
    nx: int
    ny: int
    i0: int
    j0: int
    interior: np.ndarray
    boundary: np.ndarray
    rho: np.ndarray
    weights: np.ndarray
    cell_active: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.nx * self.ny

    @property
    def xs(self):
        return (self.i0 + np.arange(self.nx)) * self.h

    @property
    def ys(self):
        return (self.j0 + np.arange(self.ny)) * self.h

    @cached_property
    def coords(self):
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def area(self):
        """Lumped (trapezoid) measure of the active cells."""
        return float(self.weights.sum())

    @property
    def closure(self):
        return self.interior | self.boundary

    @cached_property
    def interior_index(self):
        return np.flatnonzero(self.interior)

    @cached_property
    def mesh(self):
        from .p1 import P1Mesh

        return P1Mesh(self)

    def node_of(self, point):
        """Index of the lattice node nearest to ``point``."""
        i = int(round(point[0] / self.h)) - self.i0
        j = int(round(point[1] / self.h)) - self.j0
        i = min(max(i, 0), self.nx - 1)
        j = min(max(j, 0), self.ny - 1)
        return j * self.nx + i

    def point_of(self, k):
        return float(self.coords[k, 0]), float(self.coords[k, 1])

    @cached_property
    def digest(self):
        """Stable content hash used to tie exported fields to their domain."""
        m = hashlib.sha256()
        m.update(json.dumps({"shape": self.shape.to_dict(), "h": self.h, "nx": self.nx, "ny": self.ny,
                             "i0": self.i0, "j0": self.j0}, sort_keys=True).encode())
        m.update(np.packbits(self.interior).tobytes())
        m.update(np.packbits(self.boundary).tobytes())
        return m.hexdigest()[:16]

    def to_json(self):
        return {
            "shape": self.shape.to_dict(),
            "h": self.h,
            "nx": self.nx,
            "ny": self.ny,
            "origin": [self.i0 * self.h, self.j0 * self.h],
            "area": self.area,
            "digest": self.digest,
            "interior_rle": _rle(self.interior),
            "boundary_rle": _rle(self.boundary),
            "rho": [float(v) for v in self.rho],
        }


def _rle(mask):
    """Run lengths of a boolean array, starting with a run of False."""
    mask = np.asarray(mask, dtype=bool)
    change = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    edges = np.concatenate([[0], change, [mask.size]])
    runs = np.diff(edges).tolist()
    if mask.size and mask[0]:
        runs = [0] + runs
    return runs


def rle_decode(runs, size):
    out = np.zeros(size, dtype=bool)
    pos, val = 0, False
    for r in runs:
        out[pos:pos + r] = val
        pos += r
        val = not val
    return out


def _readonly(a):
    a.setflags(write=False)
    return a


def build_domain(shape, h):
    """Discretise ``shape`` on the lattice ``h * Z^2``.

    Raises :class:`GeometryError` when fewer than 9 interior nodes result.
    """
    if not h > 0:
        raise GeometryError(f"grid spacing must be positive, got {h}")
    xmin, ymin, xmax, ymax = shape.bbox()
    i0 = math.floor(xmin / h + 1e-9) - 1
    j0 = math.floor(ymin / h + 1e-9) - 1
    nx = math.ceil(xmax / h - 1e-9) + 1 - i0 + 1
    ny = math.ceil(ymax / h - 1e-9) + 1 - j0 + 1
    X, Y = np.meshgrid((i0 + np.arange(nx)) * h, (j0 + np.arange(ny)) * h)
    sd = shape.signed_distance(X, Y)
    tol = _EPS * max(1.0, h)
    interior = sd > tol
    if interior.sum() < 9:
        raise GeometryError(f"grid too coarse: only {int(interior.sum())} interior nodes at h={h}")

    # non-interior nodes touching an interior node through the 8-neighbourhood
    pad = np.pad(interior, 1)
    near = np.zeros_like(interior)
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            near |= pad[1 + dj:1 + dj + ny, 1 + di:1 + di + nx]
    boundary = near & ~interior

    rho = np.where(interior, sd, 0.0)

    # lumped weights: each active cell gives h^2/4 to each of its corners
    cell_active = (interior[:-1, :-1] | interior[1:, :-1] | interior[:-1, 1:] | interior[1:, 1:])
    w = np.zeros((ny, nx))
    q = 0.25 * h * h * cell_active
    w[:-1, :-1] += q
    w[1:, :-1] += q
    w[:-1, 1:] += q
    w[1:, 1:] += q

    return Domain(
        shape=shape,
        h=float(h),
        nx=nx,
        ny=ny,
        i0=i0,
        j0=j0,
        interior=_readonly(interior.ravel().copy()),
        boundary=_readonly(boundary.ravel().copy()),
        rho=_readonly(rho.ravel().copy()),
        weights=_readonly(w.ravel().copy()),
        cell_active=_readonly(cell_active.copy()),
    )


def lambda_inf_cap(domain):
    """Reciprocal of the largest distance to the boundary."""
    return 1.0 / float(domain.rho[domain.interior].max())


def _diameter(points):
    if len(points) < 2:
        return 0.0
    # maximizer sets are small, so the quadratic pass is fine
    d = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def node_set_diameter(domain, nodes):
    return _diameter(domain.coords[np.asarray(nodes, dtype=int)])


def rho_maximizers(domain):
    """Interior nodes where ``rho`` is within ``h/2`` of its maximum."""
    rho = domain.rho
    top = rho[domain.interior].max()
    nodes = np.flatnonzero(domain.interior & (rho >= top - 0.5 * domain.h))
    # nearest-to-maximum first, ties broken by index
    order = np.lexsort((nodes, -rho[nodes]))
    nodes = nodes[order]
    diam = node_set_diameter(domain, nodes)
    return MaximizerSet(tuple(int(k) for k in nodes), diam, diam <= 2 * domain.h + 1e-12)
