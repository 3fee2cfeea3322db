import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull
from shapely.geometry import Polygon

from pvextremes.errors import DegenerateInputError, InsufficientDataError
from pvextremes.geometry import (NeighborIndex, all_cells, cell_table, classify_cell,
                                 compute_cell, halfplane_cell, inradius_nn)
from pvextremes.window import (DISK, SQUARE, default_padding, from_points, make_window,
                               sample_poisson)


def cfg_of(points, pad=None):
    pts = np.asarray(points, dtype=float)
    w = make_window(SQUARE)
    if pad is None:
        pad = float(np.max(w.shape.distance(pts))) + 1.0
    return from_points(pts, w.with_padding(pad))


def random_cfg(gamma=200.0, seed=0, kind=SQUARE):
    w = make_window(kind).with_padding(default_padding(gamma))
    return sample_poisson(gamma, w, seed)


def test_neighbor_index_matches_brute_force():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 2, size=(400, 2))
    idx = NeighborIndex(pts)
    for _ in range(200):
        x = rng.uniform(-1.5, 2.5, size=2)
        rho = rng.uniform(0, 1.5)
        brute = np.flatnonzero(np.hypot(*(pts - x).T) <= rho)
        assert list(idx.range_query(x, rho)) == list(brute)


def test_square_cell():
    cfg = cfg_of([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])
    rec = compute_cell(0, cfg)
    assert rec.bounded and rec.face_count == 4
    assert rec.inradius == pytest.approx(0.5)
    assert rec.circumradius == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    got = sorted(map(tuple, np.round(rec.vertices, 12)))
    assert got == sorted([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    assert set(rec.neighbors) == {1, 2, 3, 4}


def test_single_neighbor_is_unbounded():
    cfg = cfg_of([(0, 0), (1, 0)])
    rec = compute_cell(0, cfg)
    assert not rec.bounded and not rec.certified
    assert rec.circumradius == math.inf
    assert rec.inradius == 0.5
    assert len(rec.vertices) == 0


def test_duplicate_point_rejected():
    cfg = cfg_of([(0, 0), (0, 0), (1, 1)])
    with pytest.raises(DegenerateInputError):
        compute_cell(0, cfg)


def test_inradius_nn_examples():
    assert inradius_nn(0, cfg_of([(0, 0), (1, 0)])) == 0.5
    assert inradius_nn(0, cfg_of([(0, 0), (3, 4), (6, 0)])) == 2.5
    with pytest.raises(InsufficientDataError):
        inradius_nn(0, cfg_of([(0, 0)]))


def test_inradius_nn_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(20):
        pts = rng.uniform(0, 1, size=(100, 2))
        cfg = cfg_of(pts)
        d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
        np.fill_diagonal(d, np.inf)
        for i in range(0, 100, 7):
            assert inradius_nn(i, cfg) == pytest.approx(d[i].min() / 2, abs=1e-15)


def test_record_invariants():
    cfg = random_cfg(300, 1)
    table = cell_table(cfg)
    for i in range(len(table)):
        rec = table.record(i)
        if rec.bounded:
            assert rec.inradius <= rec.circumradius
            assert rec.face_count == len(rec.vertices)
            assert Polygon(rec.vertices).contains(shapely.Point(rec.nucleus))
            assert len(rec.neighbors) == rec.face_count
        if rec.subset_of_W or rec.nucleus_in_W:
            assert rec.meets_W


def test_clipping_and_delaunay_routes_agree():
    cfg = random_cfg(400, 2)
    table = cell_table(cfg)
    idx = NeighborIndex(cfg.points)
    for i in range(0, len(table), 5):
        rec = compute_cell(i, cfg, idx)
        assert rec.bounded == table.bounded[i]
        assert rec.certified == table.certified[i]
        assert rec.face_count == table.face_count[i]
        assert rec.inradius == pytest.approx(table.r[i], abs=1e-12)
        if rec.certified:
            assert rec.circumradius == pytest.approx(table.R[i], abs=1e-12)
        elif rec.bounded:
            # far-out hull cells: circumcenters of nearly flat triangles
            assert rec.circumradius == pytest.approx(table.R[i], rel=1e-9)
        for flag in ("nucleus_in_W", "subset_of_W", "meets_W"):
            assert getattr(rec, flag) == getattr(table, flag)[i]


def test_boundedness_matches_hull():
    rng = np.random.default_rng(9)
    for _ in range(30):
        pts = rng.uniform(0, 1, size=(rng.integers(4, 30), 2))
        cfg = cfg_of(pts)
        hull = set(ConvexHull(pts).vertices)
        table = cell_table(cfg)
        for i in range(len(pts)):
            assert table.bounded[i] == (i not in hull)


def test_partition_probes():
    rng = np.random.default_rng(4)
    cfg = cfg_of(rng.uniform(0, 1, size=(60, 2)))
    table = cell_table(cfg)
    polys = {i: Polygon(table.vertices_of(i)) for i in range(len(table)) if table.bounded[i]}
    probes = rng.uniform(0.2, 0.8, size=(1000, 2))
    for y in probes:
        nearest = int(np.argmin(np.hypot(*(cfg.points - y).T)))
        inside = [i for i, p in polys.items() if p.covers(shapely.Point(y))]
        assert inside == [nearest]


def test_five_point_interiors_disjoint():
    cfg = cfg_of([(0.5, 0.5), (0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)])
    recs = all_cells(cfg)
    assert len(recs) == 5
    center = Polygon(recs[0].vertices)
    assert recs[0].bounded and center.area > 0


def test_empty_config():
    assert all_cells(cfg_of(np.empty((0, 2)), pad=0.1)) == []


def test_small_configs_use_clipping():
    table = cell_table(cfg_of([(0.2, 0.2), (0.8, 0.8)]))
    assert len(table) == 2 and not table.bounded.any()
    collinear = cell_table(cfg_of([(0.1, 0.5), (0.5, 0.5), (0.9, 0.5)]))
    assert not collinear.bounded.any()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10 ** 6))
def test_equivariance(lam, tx, ty, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, size=(30, 2))
    base = halfplane_cell(pts[0], pts[1:])[0]
    moved = halfplane_cell(lam * pts[0] + (tx, ty), lam * pts[1:] + (tx, ty))[0]
    a = cfg_of(pts)
    b = cfg_of(lam * pts + (tx, ty))
    ra, rb = compute_cell(0, a), compute_cell(0, b)
    assert ra.face_count == rb.face_count
    assert rb.inradius == pytest.approx(lam * ra.inradius, rel=1e-9)
    if ra.bounded:
        assert rb.circumradius == pytest.approx(lam * ra.circumradius, rel=1e-9)
        assert np.allclose(np.sort(moved, axis=0), np.sort(lam * base + (tx, ty), axis=0),
                           atol=1e-8 * max(1.0, lam))


def test_classify_examples():
    w = make_window(SQUARE)
    deep = cfg_of([(0.5, 0.5), (0.6, 0.5), (0.4, 0.5), (0.5, 0.6), (0.5, 0.4)])
    flags = classify_cell(compute_cell(0, deep), w)
    assert flags == {"nucleus_in_W": True, "subset_of_W": True, "meets_W": True}
    out = cfg_of([(1.02, 0.5), (1.03, 0.5), (1.01, 0.5), (1.02, 0.51), (1.02, 0.49)])
    flags = classify_cell(compute_cell(0, out), w)
    assert flags == {"nucleus_in_W": False, "subset_of_W": False, "meets_W": False}
    strad = cfg_of([(0.999, 0.5), (1.1, 0.5), (0.9, 0.5), (0.999, 0.6), (0.999, 0.4)])
    rec = compute_cell(0, strad)
    flags = classify_cell(rec, w)
    assert flags == {"nucleus_in_W": True, "subset_of_W": False, "meets_W": True}
    assert Polygon(rec.vertices).intersects(Polygon(w.vertices))


@pytest.mark.parametrize("kind", [SQUARE, DISK])
def test_classification_against_shapely(kind):
    cfg = random_cfg(300, 7, kind)
    w = cfg.window
    W = Polygon(w.vertices) if kind == SQUARE else shapely.Point(0.5, 0.5).buffer(
        w.shape.radius, quad_segs=4096)
    table = cell_table(cfg)
    for i in range(len(table)):
        if not table.bounded[i]:
            continue
        C = Polygon(table.vertices_of(i))
        meets = C.intersects(W)
        if C.distance(W.boundary) > 1e-6 or not meets:
            assert table.meets_W[i] == meets
        if kind == SQUARE:
            assert table.subset_of_W[i] == W.covers(C)
        if table.meets_W[i] and C.distance(W.boundary) > 1e-6:
            clip = C.intersection(W)
            far = max(math.hypot(*(np.array(p) - cfg.points[i])) for p in clip.exterior.coords)
            assert table.reach_in_W[i] == pytest.approx(far, abs=1e-5 if kind == DISK else 1e-12)


def test_certification_tracks_padding():
    cfg = random_cfg(500, 3)
    table = cell_table(cfg)
    region = cfg.window.padded
    for i in np.flatnonzero(table.bounded)[:200]:
        ok = region.contains_ball(cfg.points[i][None], [2 * table.R[i]])[0]
        assert table.certified[i] == ok
    assert not table.uncertified_meets
