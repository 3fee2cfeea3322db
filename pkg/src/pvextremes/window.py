"""Observation windows and seeded Poisson sampling.

Windows are normalized to unit area on construction.  Sampling happens on a
padded superset of the window so that cells whose nucleus lies in (or near)
the window are built from every point that can influence them.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ParameterError, ValidationError

SQUARE = "unit-square"
DISK = "disk-of-unit-area"
POLYGON = "convex-polygon"
KINDS = (SQUARE, DISK, POLYGON)


def unit_ball_volume(d: int) -> float:
    """Volume kappa_d of the d-dimensional unit ball."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


class ConvexPolygon:
    """Closed convex polygon with counter-clockwise vertices."""

    kind = "polygon"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValidationError("polygon needs at least three 2-D vertices")
        self.vertices = v
        self.edges = np.roll(v, -1, axis=0) - v
        nrm = np.hypot(self.edges[:, 0], self.edges[:, 1])
        if np.any(nrm == 0.0):
            raise ValidationError("polygon has repeated vertices")
        # outward unit normals and offsets: inside iff normals @ z <= offsets
        self.normals = np.column_stack([self.edges[:, 1], -self.edges[:, 0]]) / nrm[:, None]
        self.offsets = np.einsum("ij,ij->i", self.normals, v)

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def centroid(self) -> np.ndarray:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = 0.5 * cr.sum()
        return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * a)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def diameter(self) -> float:
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    def signed_slack(self, points) -> np.ndarray:
        """Minimum over edges of (offset - normal.z); >= 0 inside."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (self.offsets[None, :] - p @ self.normals.T).min(axis=1)

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        return self.signed_slack(points) >= -tol

    def contains_ball(self, centers, radii) -> np.ndarray:
        return self.signed_slack(centers) >= np.asarray(radii, dtype=float)

    def distance(self, points) -> np.ndarray:
        """Euclidean distance to the polygon (0 inside)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(p))
        outside = ~self.contains(p)
        if outside.any():
            q = p[outside]
            best = np.full(len(q), np.inf)
            for a, e in zip(self.vertices, self.edges):
                t = np.clip(((q - a) @ e) / (e @ e), 0.0, 1.0)
                foot = a + t[:, None] * e
                best = np.minimum(best, np.hypot(*(q - foot).T))
            out[outside] = best
        return out

    def clip_segments(self, a, b):
        """Liang-Barsky clipping of segments [a, b] against the polygon.

        Returns ``(hit, p0, p1)``: ``hit`` flags segments meeting the closed
        polygon, ``p0``/``p1`` are the endpoints of the clipped pieces.
        """
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        d = b - a
        # slack along the segment: s(t) = base + t * rate >= 0 inside
        base = self.offsets[None, :] - a @ self.normals.T
        rate = -(d @ self.normals.T)
        t0 = np.zeros(len(a))
        t1 = np.ones(len(a))
        hit = np.ones(len(a), dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            tcut = -base / rate
        for k in range(len(self.offsets)):
            r, s, tc = rate[:, k], base[:, k], tcut[:, k]
            par = r == 0.0
            hit &= ~(par & (s < 0.0))
            enter = r > 0.0  # slack increasing: constraint active before tc
            t0 = np.where(enter, np.maximum(t0, tc), t0)
            leave = r < 0.0
            t1 = np.where(leave, np.minimum(t1, tc), t1)
        hit &= t0 <= t1
        return hit, a + t0[:, None] * d, a + t1[:, None] * d

    def offset(self, m: float) -> "ConvexPolygon":
        """Polygon whose edges are pushed outward by ``m`` (mitred corners)."""
        if m == 0.0:
            return ConvexPolygon(self.vertices.copy())
        n = self.normals
        c = self.offsets + m
        k = len(c)
        verts = []
        for i in range(k):
            j = (i - 1) % k
            mat = np.array([n[j], n[i]])
            verts.append(np.linalg.solve(mat, np.array([c[j], c[i]])))
        return ConvexPolygon(np.array(verts))


class Disk:
    """Closed disk."""

    kind = "disk"

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.vertices = np.empty((0, 2))

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def centroid(self) -> np.ndarray:
        return self.center.copy()

    @property
    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def _dist_center(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.hypot(p[:, 0] - self.center[0], p[:, 1] - self.center[1])

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        return self._dist_center(points) <= self.radius + tol

    def contains_ball(self, centers, radii) -> np.ndarray:
        return self._dist_center(centers) + np.asarray(radii, dtype=float) <= self.radius

    def distance(self, points) -> np.ndarray:
        return np.maximum(self._dist_center(points) - self.radius, 0.0)

    def clip_segments(self, a, b):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        d = b - a
        f = a - self.center
        qa = np.einsum("ij,ij->i", d, d)
        qb = 2.0 * np.einsum("ij,ij->i", f, d)
        qc = np.einsum("ij,ij->i", f, f) - self.radius ** 2
        disc = qb * qb - 4.0 * qa * qc
        hit = disc >= 0.0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(qa > 0, (-qb - sq) / (2.0 * qa), 0.0)
            hi = np.where(qa > 0, (-qb + sq) / (2.0 * qa), 1.0)
        # degenerate segment: a single point
        point_seg = qa == 0.0
        hit = np.where(point_seg, qc <= 0.0, hit)
        t0 = np.maximum(lo, 0.0)
        t1 = np.minimum(hi, 1.0)
        hit &= t0 <= t1
        return hit, a + t0[:, None] * d, a + t1[:, None] * d

    def offset(self, m: float) -> "Disk":
        return Disk(self.center, self.radius + m)


@dataclass(frozen=True)
class SampleWindow:
    """Unit-area convex observation window with a sampling margin."""

    kind: str
    vertices: tuple = ()
    padding: float = 0.0
    scale: float = 1.0
    dimension: int = 2

    @property
    def shape(self):
        if self.kind == DISK:
            return Disk((0.5, 0.5), 1.0 / math.sqrt(math.pi))
        return ConvexPolygon(self.vertices)

    @property
    def padded(self):
        return self.shape.offset(self.padding)

    @property
    def area(self) -> float:
        return self.shape.area

    def contains(self, points) -> np.ndarray:
        return self.shape.contains(points)

    def with_padding(self, m: float) -> "SampleWindow":
        if m < 0:
            raise ParameterError(f"padding must be >= 0, got {m}")
        return replace(self, padding=float(m))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vertices": [list(v) for v in self.vertices],
                "padding": self.padding, "scale": self.scale}


def _is_strictly_convex_ccw(v: np.ndarray) -> bool:
    e = np.roll(v, -1, axis=0) - v
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    if not np.all(cross > 0):
        return False
    # total turning of 2*pi rules out star-shaped self-intersections
    ang = np.arctan2(e[:, 1], e[:, 0])
    turn = np.mod(np.diff(np.append(ang, ang[0])), 2 * np.pi).sum()
    return abs(turn - 2 * np.pi) < 1e-9


def make_window(kind: str, vertices: Sequence[Sequence[float]] | None = None) -> SampleWindow:
    """Build a unit-area window of the given kind.

    Polygons must be convex and counter-clockwise; they are rescaled about
    the origin to unit area and the scale factor is kept on the window.
    """
    if kind == SQUARE:
        return SampleWindow(SQUARE, ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
    if kind == DISK:
        return SampleWindow(DISK)
    if kind != POLYGON:
        raise ValidationError(f"unknown window kind {kind!r}; expected one of {KINDS}")
    if vertices is None:
        raise ValidationError("convex-polygon window requires vertices")
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValidationError("convex-polygon window requires at least three 2-D vertices")
    x, y = v[:, 0], v[:, 1]
    area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if not area > 1e-300:
        raise ValidationError("polygon is degenerate or clockwise (area <= 0)")
    if not _is_strictly_convex_ccw(v):
        raise ValidationError("polygon is not strictly convex")
    s = 1.0 / math.sqrt(area)
    return SampleWindow(POLYGON, tuple(tuple(map(float, p)) for p in v * s), scale=s)


def default_padding(gamma: float, d: int = 2) -> float:
    """Sampling margin 3 * ((log gamma + 10) / (kappa_d gamma))**(1/d)."""
    if not gamma >= 2:
        raise ParameterError(f"default_padding requires gamma >= 2, got {gamma}")
    return 3.0 * ((math.log(gamma) + 10.0) / (unit_ball_volume(d) * gamma)) ** (1.0 / d)


def derive_seed(master_seed: int, *keys) -> int:
    """64-bit seed hashed from a master seed and replication keys."""
    text = ":".join([str(int(master_seed))] + [repr(k) for k in keys])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    points: np.ndarray
    intensity: float
    seed: int
    window: SampleWindow
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)


def _uniform_in(region, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = region.bbox
    box_area = float(np.prod(hi - lo))
    out = np.empty((0, 2))
    while len(out) < n:
        need = n - len(out)
        batch = int(need * box_area / region.area * 1.1) + 16
        cand = lo + (hi - lo) * rng.random((batch, 2))
        out = np.vstack([out, cand[region.contains(cand)]])
    return out[:n]


def sample_poisson(gamma: float, window: SampleWindow, seed: int) -> PointConfiguration:
    """Homogeneous Poisson process of intensity ``gamma`` on the padded window."""
    if not gamma > 0:
        raise ParameterError(f"intensity must be positive, got {gamma}")
    rng = make_rng(seed)
    region = window.padded
    n = int(rng.poisson(gamma * region.area))
    pts = _uniform_in(region, n, rng) if n else np.empty((0, 2))
    pts.setflags(write=False)
    return PointConfiguration(pts, float(gamma), int(seed), window)


def from_points(points, window: SampleWindow | None = None, gamma: float = float("nan"),
                seed: int = -1) -> PointConfiguration:
    """Wrap an explicit point set (hand-built configurations, replays)."""
    pts = np.array(points, dtype=float).reshape(-1, 2)
    pts.setflags(write=False)
    if window is None:
        window = make_window(SQUARE)
        if len(pts):
            shape = window.shape
            reach = float(np.max(shape.distance(pts)))
            window = window.with_padding(reach)
    return PointConfiguration(pts, gamma, seed, window)
