"""Hausdorff distance between a window and its Poisson-Voronoi approximation.

The approximation ``V`` is the union of the cells whose nucleus lies in the
window ``W``.  The outward part ``sup_{y in V} d(y, W)`` is exact (a convex
function on a union of polygons peaks at a vertex).  The inward part
``sup_{y in W} d(y, V)`` is bracketed on a square grid of step ``h``: grid
points inside W give a lower bound, and since distance to a set is
1-Lipschitz, each square meeting W is bounded by its center value plus the
half-diagonal ``h * sqrt(2) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .covering import alpha1 as _alpha1
from .errors import CertificationError, DomainError
from .geometry import CellTable, halfplane_cell
from .window import DISK, SQUARE, SampleWindow, unit_ball_volume


@dataclass(frozen=True)
class PVAResult:
    gamma: float
    seed: int
    outward: float
    inward_lo: float
    inward_hi: float
    d_H_lo: float
    d_H_hi: float
    v_gamma: float
    within_bound: bool
    alpha: float
    h: float


def c_alpha(alpha: float, d: int = 2) -> float:
    """1/kappa_d + 2^d / (kappa_d * alpha)."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    k = unit_ball_volume(d)
    return 1.0 / k + 2 ** d / (k * alpha)


def v_gamma(gamma: float, alpha: float, d: int = 2, alpha1: float | None = None) -> float:
    """(c(alpha) / gamma * log(alpha1 * gamma * (log gamma)^(d-1)))^(1/d)."""
    a1 = _alpha1(d) if alpha1 is None else alpha1
    if not gamma > 1.0:
        raise DomainError(f"v_gamma needs gamma > 1, got {gamma}")
    arg = a1 * gamma * math.log(gamma) ** (d - 1)
    if not arg > 1.0:
        raise DomainError(f"log argument {arg} is not above 1")
    return (c_alpha(alpha, d) / gamma * math.log(arg)) ** (1.0 / d)


def alpha_for_window(window: SampleWindow) -> float:
    """Lower bound on |B(y, v) ∩ W| / |B(y, v)| for small v and y in W."""
    if window.kind in (SQUARE, DISK):
        return 0.25
    v = np.asarray(window.vertices, dtype=float)
    prev = np.roll(v, 1, axis=0) - v
    nxt = np.roll(v, -1, axis=0) - v
    cos = (prev * nxt).sum(axis=1) / (np.hypot(*prev.T) * np.hypot(*nxt.T))
    ang = np.arccos(np.clip(cos, -1.0, 1.0))
    return float(min(ang.min() / (2.0 * math.pi), 0.5))


def _point_segment_distance(p, a, b, chunk: int = 4096):
    out = np.full(len(p), np.inf)
    if len(a) == 0:
        return out
    d = b - a
    dd = (d ** 2).sum(axis=1)
    dd = np.where(dd > 0, dd, 1.0)
    for s in range(0, len(p), chunk):
        q = p[s:s + chunk]
        rel = q[:, None, :] - a[None, :, :]
        t = np.clip((rel * d[None]).sum(-1) / dd[None], 0.0, 1.0)
        foot = rel - t[..., None] * d[None]
        out[s:s + chunk] = np.sqrt((foot ** 2).sum(-1)).min(axis=1)
    return out


def grid_points(window: SampleWindow, h: float):
    """Square grid over the window's bounding box.

    Returns (centers, nodes, step).  Halving ``step`` nests the grids: old
    nodes and centers are all nodes of the finer grid, and every fine square
    lies inside one coarse square.
    """
    lo, hi = window.shape.bbox
    span = hi - lo
    n = int(math.ceil(float(span.max()) / h - 1e-9))
    step = float(span.max()) / n
    nx, ny = (int(math.ceil(s / step - 1e-9)) for s in span)
    cx = lo[0] + (np.arange(nx) + 0.5) * step
    cy = lo[1] + (np.arange(ny) + 0.5) * step
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    centers = np.column_stack([X.ravel(), Y.ravel()])
    X, Y = np.meshgrid(lo[0] + np.arange(nx + 1) * step, lo[1] + np.arange(ny + 1) * step,
                       indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    return centers, nodes, step


def _approximation_geometry(table: CellTable):
    """Vertices of cells with nucleus in W and the boundary segments of V."""
    inside = table.nucleus_in_W
    if table.records is not None:
        # small or degenerate configurations: re-clip to recover edge supports
        pts = table.points
        verts, segs_a, segs_b = [], [], []
        for i in np.flatnonzero(inside):
            others = np.delete(np.arange(len(pts)), i)
            v, labels = halfplane_cell(pts[i], pts[others], others)
            verts.append(v)
            w = np.roll(v, -1, axis=0)
            for k, lab in enumerate(labels):
                if lab >= 0 and not inside[lab]:
                    segs_a.append(v[k])
                    segs_b.append(w[k])
        verts = np.vstack(verts) if verts else np.empty((0, 2))
        return verts, np.array(segs_a).reshape(-1, 2), np.array(segs_b).reshape(-1, 2)
    S = table.simplices
    cc = table.circumcenters
    verts = cc[inside[S].any(axis=1)]
    cross = inside[table.edge_a] != inside[table.edge_b]
    return verts, cc[table.edge_ta[cross]], cc[table.edge_tb[cross]]


def hausdorff_bracket(window: SampleWindow, table: CellTable, h: float | None = None,
                      grid_div: int = 20, alpha: float | None = None,
                      d: int = 2) -> PVAResult:
    """Bracket ``d_H(W, V)`` for one realization."""
    config = table.config
    gamma = config.intensity
    if alpha is None:
        alpha = alpha_for_window(window)
    vg = v_gamma(gamma, alpha, d) if gamma > 1 else math.nan
    if h is None:
        h = vg / grid_div
    if not h > 0:
        raise DomainError(f"grid step must be positive, got {h}")
    inside = table.nucleus_in_W
    if np.any(inside & ~(table.bounded & table.certified)):
        raise CertificationError("a cell with nucleus in W is unbounded or uncertified")

    shape = window.shape
    centers, nodes, step = grid_points(window, h)
    slack = step * math.sqrt(d) / 2.0
    # lower bound: grid points inside W; upper bound: every square that can
    # meet W, valued at its center plus the half-diagonal
    probe = np.vstack([centers, nodes])
    probe = probe[shape.contains(probe)]
    near = centers[shape.distance(centers) <= slack]

    if not inside.any():
        inf = math.inf
        return PVAResult(gamma, config.seed, 0.0, inf, inf, inf, inf, vg, False, alpha, step)

    verts, sa, sb = _approximation_geometry(table)
    outward = float(shape.distance(verts).max()) if len(verts) else 0.0
    tree = cKDTree(table.points)

    def dist_to_v(y):
        out = np.zeros(len(y))
        if len(y):
            _, owner = tree.query(y)
            need = ~inside[owner]
            out[need] = _point_segment_distance(y[need], sa, sb)
        return out

    inward_lo = float(dist_to_v(probe).max()) if len(probe) else 0.0
    inward_hi = float(dist_to_v(near).max()) + slack
    lo = max(outward, inward_lo)
    hi = max(outward, inward_hi)
    return PVAResult(gamma, config.seed, outward, inward_lo, inward_hi, lo, hi, vg,
                     bool(hi <= vg), alpha, step)
