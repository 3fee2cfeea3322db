"""Planar Voronoi cells, their characteristic radii and window classes.

Two routes build cells:

* :func:`compute_cell` clips a large box by perpendicular bisectors of the
  points found through a :class:`NeighborIndex`, doubling the search radius
  until no further point can cut the cell.
* :func:`cell_table` builds every cell of a configuration at once from the
  Delaunay triangulation (Voronoi vertices are triangle circumcenters) and is
  what the experiment harness uses.

Both produce the same radii, face counts and class flags; the tests hold them
against each other and against brute-force oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import DegenerateInputError, InsufficientDataError
from .window import PointConfiguration, SampleWindow

DEDUP_EPS = 1e-12
MIN_EDGE = 1e-10


class NeighborIndex:
    """Uniform bucket grid over a point set for closed-ball range queries."""

    def __init__(self, points, bbox=None):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        self.points = pts
        n = max(len(pts), 1)
        if bbox is None:
            lo = pts.min(axis=0) if len(pts) else np.zeros(2)
            hi = pts.max(axis=0) if len(pts) else np.ones(2)
        else:
            lo, hi = (np.asarray(b, dtype=float) for b in bbox)
        span = np.maximum(hi - lo, 1e-12)
        self.side = float(math.sqrt(span[0] * span[1] / n)) or 1.0
        self.lo = lo
        self.shape = np.maximum(np.ceil(span / self.side).astype(int), 1)
        nx, ny = self.shape
        ij = self._bucket(pts) if len(pts) else np.empty((0, 2), dtype=int)
        keys = ij[:, 1] * nx + ij[:, 0]
        self.order = np.argsort(keys, kind="stable")
        counts = np.bincount(keys, minlength=nx * ny)
        self.start = np.concatenate([[0], np.cumsum(counts)])

    def _bucket(self, p):
        ij = np.floor((np.atleast_2d(p) - self.lo) / self.side).astype(np.int64)
        return np.clip(ij, 0, self.shape - 1)

    def range_query(self, x, rho: float) -> np.ndarray:
        """Sorted ids of points within closed distance ``rho`` of ``x``."""
        if len(self.points) == 0:
            return np.empty(0, dtype=int)
        x = np.asarray(x, dtype=float)
        (i0, j0), = self._bucket(x - rho)
        (i1, j1), = self._bucket(x + rho)
        nx = self.shape[0]
        chunks = [self.order[self.start[j * nx + i0]:self.start[j * nx + i1 + 1]]
                  for j in range(j0, j1 + 1)]
        ids = np.concatenate(chunks)
        d2 = ((self.points[ids] - x) ** 2).sum(axis=1)
        return np.sort(ids[d2 <= rho * rho])


@dataclass(frozen=True, eq=False)
class VoronoiCellRecord:
    nucleus_id: int
    nucleus: np.ndarray
    vertices: np.ndarray  # CCW, empty when unbounded
    face_count: int
    inradius: float
    circumradius: float
    bounded: bool
    certified: bool
    nucleus_in_W: bool = False
    subset_of_W: bool = False
    meets_W: bool = False
    neighbors: tuple = field(default=())

    @property
    def class_flags(self) -> dict:
        return {"nucleus_in_W": self.nucleus_in_W, "subset_of_W": self.subset_of_W,
                "meets_W": self.meets_W}


def _clip(poly, labels, nx, ny, c, label):
    """Keep the part of a convex polygon where nx*x + ny*y <= c."""
    s = [nx * x + ny * y - c for x, y in poly]
    if max(s) <= 0.0:
        return poly, labels
    if min(s) > 0.0:
        return [], []
    out, lab = [], []
    m = len(poly)
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        si, sj = s[i], s[j]
        if si <= 0.0:
            out.append(poly[i])
            lab.append(labels[i])
            if sj > 0.0:
                t = si / (si - sj)
                (xi, yi), (xj, yj) = poly[i], poly[j]
                out.append((xi + t * (xj - xi), yi + t * (yj - yi)))
                lab.append(label)
        elif sj <= 0.0:
            t = si / (si - sj)
            (xi, yi), (xj, yj) = poly[i], poly[j]
            out.append((xi + t * (xj - xi), yi + t * (yj - yi)))
            lab.append(labels[i])
    return _dedup(out, lab)


def _dedup(poly, labels):
    # drop a vertex when it coincides with its successor; the zero-length
    # edge leaving it disappears with it
    changed = True
    while changed and len(poly) > 1:
        changed = False
        for k in range(len(poly)):
            a, b = poly[k], poly[(k + 1) % len(poly)]
            if abs(a[0] - b[0]) <= DEDUP_EPS and abs(a[1] - b[1]) <= DEDUP_EPS:
                del poly[k]
                del labels[k]
                changed = True
                break
    return poly, labels


def halfplane_cell(nucleus, others, ids=None, half_size: float = 1e6):
    """Cell of ``nucleus`` w.r.t. ``others`` inside a square box.

    Returns the CCW vertex list and, for each edge ``v[i] -> v[i+1]``, the id
    of the point whose bisector supports it (``-1`` for box edges).
    Coordinates are handled relative to the nucleus.
    """
    x0, y0 = float(nucleus[0]), float(nucleus[1])
    L = half_size
    poly = [(-L, -L), (L, -L), (L, L), (-L, L)]
    labels = [-1, -1, -1, -1]
    others = np.asarray(others, dtype=float).reshape(-1, 2)
    if ids is None:
        ids = range(len(others))
    for pid, (px, py) in zip(ids, others):
        nx, ny = px - x0, py - y0
        if nx == 0.0 and ny == 0.0:
            raise DegenerateInputError(f"point {pid} coincides with the nucleus")
        poly, labels = _clip(poly, labels, nx, ny, 0.5 * (nx * nx + ny * ny), int(pid))
        if not poly:
            break
    verts = np.array([(x + x0, y + y0) for x, y in poly]).reshape(-1, 2)
    return verts, labels


def _edge_lengths(verts):
    if len(verts) == 0:
        return np.empty(0)
    e = np.roll(verts, -1, axis=0) - verts
    return np.hypot(e[:, 0], e[:, 1])


def compute_cell(nucleus_id: int, config: PointConfiguration,
                 index: NeighborIndex | None = None) -> VoronoiCellRecord:
    """Exact cell of one nucleus by iterative bisector clipping."""
    pts = config.points
    x = pts[nucleus_id]
    region = config.window.padded
    lo, hi = region.bbox
    lo = np.minimum(lo, pts.min(axis=0))
    hi = np.maximum(hi, pts.max(axis=0))
    diam = float(np.hypot(*(hi - lo)))
    if index is None:
        index = NeighborIndex(pts, (lo, hi))
    # box = point bounding box dilated by its diameter, in nucleus coordinates
    half = float(np.max(np.abs(np.concatenate([lo - x, hi - x])))) + diam

    dup = np.flatnonzero((pts == x).all(axis=1))
    if len(dup) > 1:
        raise DegenerateInputError(f"point(s) {sorted(set(dup) - {nucleus_id})} coincide "
                                   f"with nucleus {nucleus_id}")

    def build(scale):
        L = half * scale
        poly = [(-L, -L), (L, -L), (L, L), (-L, L)]
        labels = [-1, -1, -1, -1]
        seen = {nucleus_id}
        rho = 3.0 * index.side
        while True:
            if rho >= diam:
                cand = np.arange(len(pts))
            else:
                cand = index.range_query(x, rho)
            cand = [int(i) for i in cand if int(i) not in seen]
            if cand:
                d2 = ((pts[cand] - x) ** 2).sum(axis=1)
                for k in np.argsort(d2, kind="stable"):
                    pid = cand[k]
                    seen.add(pid)
                    nx, ny = pts[pid, 0] - x[0], pts[pid, 1] - x[1]
                    poly, labels = _clip(poly, labels, nx, ny, 0.5 * (nx * nx + ny * ny), pid)
            reach = max(math.hypot(px, py) for px, py in poly)
            if rho >= diam or 2.0 * reach <= rho:
                return poly, labels
            rho *= 2.0

    scale = 1.0
    for _ in range(3):
        poly, labels = build(scale)
        v = np.array(poly)
        lens = _edge_lengths(v)
        touches = any(lab == -1 and ln > MIN_EDGE for lab, ln in zip(labels, lens))
        if not touches:
            break
        scale *= 1e4
    v = np.array(poly) + x
    lens = _edge_lengths(v)
    support = [lab for lab, ln in zip(labels, lens) if lab >= 0 and ln >= MIN_EDGE]
    all_nb = [lab for lab in labels if lab >= 0]
    if len(pts) < 2:
        r = math.inf
    else:
        r = 0.5 * min(math.hypot(*(pts[i] - x)) for i in all_nb) if all_nb else math.inf
    if touches:
        rec = VoronoiCellRecord(nucleus_id, x.copy(), np.empty((0, 2)), len(support), r,
                                math.inf, False, False, neighbors=tuple(support))
    else:
        R = float(np.max(np.hypot(*(v - x).T)))
        cert = bool(region.contains_ball(x[None, :], [2.0 * R])[0])
        rec = VoronoiCellRecord(nucleus_id, x.copy(), v, len(support), r, R, True, cert,
                                neighbors=tuple(support))
    flags = classify_cell(rec, config.window)
    return VoronoiCellRecord(**{**rec.__dict__, **flags})


def inradius_nn(nucleus_id: int, config: PointConfiguration,
                index: NeighborIndex | None = None) -> float:
    """Half the distance from a nucleus to its nearest other point."""
    pts = config.points
    if len(pts) < 2:
        raise InsufficientDataError("inradius needs at least two points")
    x = pts[nucleus_id]
    if index is None:
        d2 = ((pts - x) ** 2).sum(axis=1)
        d2[nucleus_id] = np.inf
        return 0.5 * math.sqrt(d2.min())
    rho = 2.0 * index.side
    while True:
        ids = index.range_query(x, rho)
        ids = ids[ids != nucleus_id]
        if len(ids):
            d = math.sqrt(((pts[ids] - x) ** 2).sum(axis=1).min())
            if d <= rho:
                return 0.5 * d
        rho *= 2.0


def _point_in_convex(verts, p) -> bool:
    e = np.roll(verts, -1, axis=0) - verts
    q = np.asarray(p, dtype=float) - verts
    return bool(np.all(e[:, 0] * q[:, 1] - e[:, 1] * q[:, 0] >= 0.0))


def classify_cell(record: VoronoiCellRecord, window: SampleWindow) -> dict:
    """Window-class flags of a cell: nucleus in W, cell inside W, cell meets W."""
    shape = window.shape
    inside = bool(shape.contains(record.nucleus[None, :])[0])
    if not record.bounded:
        return {"nucleus_in_W": inside, "subset_of_W": False, "meets_W": inside}
    v = record.vertices
    subset = bool(np.all(shape.contains(v)))
    meets = inside or subset
    if not meets:
        hit, _, _ = shape.clip_segments(v, np.roll(v, -1, axis=0))
        meets = bool(hit.any()) or _point_in_convex(v, shape.centroid)
    return {"nucleus_in_W": inside, "subset_of_W": subset, "meets_W": meets}


def _circumcenters(p, simplices):
    a = p[simplices[:, 0]]
    b = p[simplices[:, 1]] - a
    c = p[simplices[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    bb = (b ** 2).sum(axis=1)
    cc = (c ** 2).sum(axis=1)
    ux = (c[:, 1] * bb - b[:, 1] * cc) / d
    uy = (b[:, 0] * cc - c[:, 0] * bb) / d
    return a + np.column_stack([ux, uy])


@dataclass(eq=False)
class CellTable:
    """Column-wise description of every cell of a configuration."""

    config: PointConfiguration
    r: np.ndarray
    R: np.ndarray
    face_count: np.ndarray
    bounded: np.ndarray
    certified: np.ndarray
    nucleus_in_W: np.ndarray
    subset_of_W: np.ndarray
    meets_W: np.ndarray
    reach_in_W: np.ndarray  # max distance from nucleus to C ∩ W (nan if empty)
    circumcenters: np.ndarray = None
    simplices: np.ndarray = None
    edge_a: np.ndarray = None  # finite Voronoi edges: nuclei a, b and
    edge_b: np.ndarray = None  # endpoint triangles ta, tb
    edge_ta: np.ndarray = None
    edge_tb: np.ndarray = None
    inc_tri: np.ndarray = None
    inc_start: np.ndarray = None
    records: list = None  # set when built by the clipping fallback

    @property
    def points(self) -> np.ndarray:
        return self.config.points

    def __len__(self) -> int:
        return len(self.r)

    @property
    def crosses_boundary(self) -> np.ndarray:
        """Cells meeting W without lying inside it."""
        return self.meets_W & ~self.subset_of_W

    @property
    def uncertified_meets(self) -> bool:
        """True when some cell meeting W is not provably exact."""
        return bool(np.any(self.meets_W & ~self.certified))

    def vertices_of(self, i: int) -> np.ndarray:
        if self.records is not None:
            return self.records[i].vertices
        if not self.bounded[i]:
            return np.empty((0, 2))
        tris = self.inc_tri[self.inc_start[i]:self.inc_start[i + 1]]
        v = self.circumcenters[tris]
        rel = v - self.points[i]
        v = v[np.argsort(np.arctan2(rel[:, 1], rel[:, 0]), kind="stable")]
        poly, _ = _dedup([tuple(p) for p in v], [0] * len(v))
        return np.array(poly)

    def neighbors_of(self, i: int) -> tuple:
        if self.records is not None:
            return self.records[i].neighbors
        ln = np.hypot(*(self.circumcenters[self.edge_ta] - self.circumcenters[self.edge_tb]).T)
        keep = ln >= MIN_EDGE
        nb = np.concatenate([self.edge_b[keep & (self.edge_a == i)],
                             self.edge_a[keep & (self.edge_b == i)]])
        return tuple(sorted(int(k) for k in nb))

    def record(self, i: int) -> VoronoiCellRecord:
        if self.records is not None:
            return self.records[i]
        return VoronoiCellRecord(
            i, self.points[i].copy(), self.vertices_of(i), int(self.face_count[i]),
            float(self.r[i]), float(self.R[i]), bool(self.bounded[i]),
            bool(self.certified[i]), bool(self.nucleus_in_W[i]), bool(self.subset_of_W[i]),
            bool(self.meets_W[i]), self.neighbors_of(i))


def _table_from_records(config, records) -> CellTable:
    def col(name, dtype):
        return np.array([getattr(rec, name) for rec in records], dtype=dtype)

    n = len(records)
    reach = np.full(n, np.nan)
    shape = config.window.shape
    for k, rec in enumerate(records):
        if rec.subset_of_W:
            reach[k] = rec.circumradius
        elif rec.meets_W and rec.bounded:
            reach[k] = _reach_in_window(rec.vertices, rec.nucleus, shape)
    return CellTable(config, col("inradius", float), col("circumradius", float),
                     col("face_count", int), col("bounded", bool), col("certified", bool),
                     col("nucleus_in_W", bool), col("subset_of_W", bool), col("meets_W", bool),
                     reach, records=list(records))


def _reach_in_window(verts, x, shape) -> float:
    """max |x - y| over y in (polygon verts) ∩ shape, per-cell version."""
    cand = []
    hit, p0, p1 = shape.clip_segments(verts, np.roll(verts, -1, axis=0))
    cand += list(p0[hit]) + list(p1[hit])
    for w in shape.vertices:
        if _point_in_convex(verts, w):
            cand.append(w)
    if shape.kind == "disk":
        cand.append(_antipode(shape, x))
        if not _point_in_convex(verts, cand[-1]):
            cand.pop()
    if not cand:
        return math.nan
    return float(np.max(np.hypot(*(np.array(cand) - x).T)))


def _antipode(disk, x):
    off = disk.center - np.asarray(x, dtype=float)
    n = math.hypot(*off)
    u = off / n if n > 0 else np.array([1.0, 0.0])
    return disk.center + disk.radius * u


def cell_table(config: PointConfiguration) -> CellTable:
    """Every cell of ``config`` with radii, face counts and class flags."""
    pts = config.points
    n = len(pts)
    if n < 3:
        return _table_from_records(config, [compute_cell(i, config) for i in range(n)])
    try:
        tri = Delaunay(pts)
    except QhullError:
        return _table_from_records(config, [compute_cell(i, config) for i in range(n)])
    if len(tri.coplanar):
        raise DegenerateInputError("configuration contains coincident points")

    tree = cKDTree(pts)
    dnn, _ = tree.query(pts, k=2)
    if np.any(dnn[:, 1] == 0.0):
        raise DegenerateInputError("configuration contains coincident points")
    r = 0.5 * dnn[:, 1]

    S = tri.simplices
    T = len(S)
    cc = _circumcenters(pts, S)

    # triangle incidence per point (CSR)
    flat = S.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=n)
    start = np.concatenate([[0], np.cumsum(counts)])
    inc_tri = order // 3

    dist = np.hypot(*(cc[inc_tri] - pts[flat[order]]).T)
    R = np.maximum.reduceat(dist, start[:-1])

    hull = np.zeros(n, dtype=bool)
    hull[tri.convex_hull.ravel()] = True
    bounded = ~hull
    R = np.where(bounded, R, np.inf)

    # Voronoi edges from Delaunay edges: (t, i) is the edge opposite vertex i
    tid = np.repeat(np.arange(T), 3)
    loc = np.tile(np.arange(3), T)
    nb = tri.neighbors.ravel()
    ea = S[tid, (loc + 1) % 3]
    eb = S[tid, (loc + 2) % 3]
    fin = nb > tid
    ray = nb == -1
    ta, tb = tid[fin], nb[fin]
    fa, fb = ea[fin], eb[fin]
    elen = np.hypot(*(cc[ta] - cc[tb]).T)
    keep = elen >= MIN_EDGE
    face = (np.bincount(fa[keep], minlength=n) + np.bincount(fb[keep], minlength=n)
            + np.bincount(ea[ray], minlength=n) + np.bincount(eb[ray], minlength=n))

    shape = config.window.shape
    region = config.window.padded
    nucleus_in = shape.contains(pts)
    certified = bounded & region.contains_ball(pts, np.where(bounded, 2.0 * R, 0.0))

    cc_in = shape.contains(cc)
    subset = (np.minimum.reduceat(cc_in[inc_tri].astype(np.int8), start[:-1]) > 0) & bounded

    # meets W: nucleus in W, an edge (or ray) crossing W, or W inside the cell
    ra, rb, rt, rl = ea[ray], eb[ray], tid[ray], loc[ray]
    if len(rt):
        e = pts[rb] - pts[ra]
        perp = np.column_stack([e[:, 1], -e[:, 0]])
        third = pts[S[rt, rl]]
        flip = ((third - pts[ra]) * perp).sum(axis=1) > 0
        perp[flip] *= -1.0
        perp /= np.hypot(*perp.T)[:, None]
        far = np.hypot(*(cc[rt] - shape.centroid).T) + shape.diameter + 1.0
        ray_end = cc[rt] + far[:, None] * perp
    else:
        ray_end = np.empty((0, 2))
    seg_a = np.vstack([cc[ta], cc[rt]])
    seg_b = np.vstack([cc[tb], ray_end])
    own_a = np.concatenate([fa, ra])
    own_b = np.concatenate([fb, rb])
    hit, p0, p1 = shape.clip_segments(seg_a, seg_b)
    meets = nucleus_in.copy()
    meets[own_a[hit]] = True
    meets[own_b[hit]] = True
    _, owner = tree.query(shape.centroid)
    meets[owner] = True

    reach = np.full(n, np.nan)
    reach[subset] = R[subset]
    strad = meets & ~subset & bounded
    if strad.any():
        ha, hb = own_a[hit], own_b[hit]
        cand_pts = [p0[hit], p1[hit], p0[hit], p1[hit]]
        cand_own = [ha, ha, hb, hb]
        if len(shape.vertices):
            _, wown = tree.query(shape.vertices)
            cand_pts.append(shape.vertices)
            cand_own.append(wown)
        if shape.kind == "disk":
            sid = np.flatnonzero(strad)
            anti = np.array([_antipode(shape, pts[i]) for i in sid]).reshape(-1, 2)
            _, aown = tree.query(anti)
            ok = aown == sid
            cand_pts.append(anti[ok])
            cand_own.append(sid[ok])
        cp = np.vstack(cand_pts)
        co = np.concatenate(cand_own)
        sel = strad[co]
        dd = np.hypot(*(cp[sel] - pts[co[sel]]).T)
        np.fmax.at(reach, co[sel], dd)

    return CellTable(config, r, R, face, bounded, certified, nucleus_in, subset, meets, reach,
                     circumcenters=cc, simplices=S, edge_a=fa, edge_b=fb, edge_ta=ta,
                     edge_tb=tb, inc_tri=inc_tri, inc_start=start)


def all_cells(config: PointConfiguration, window: SampleWindow | None = None) -> list:
    """One :class:`VoronoiCellRecord` per point of ``config``."""
    if window is not None and window != config.window:
        config = PointConfiguration(config.points, config.intensity, config.seed, window)
    table = cell_table(config)
    return [table.record(i) for i in range(len(table))]
