import math

import numpy as np
import pytest
import shapely
from shapely.geometry import Polygon
from shapely.ops import unary_union

from pvextremes.errors import CertificationError, DomainError
from pvextremes.geometry import cell_table
from pvextremes.pva import alpha_for_window, c_alpha, grid_points, hausdorff_bracket, v_gamma
from pvextremes.window import (DISK, POLYGON, SQUARE, default_padding, from_points, make_window,
                               sample_poisson)


def test_c_alpha():
    assert c_alpha(1.0) == pytest.approx(5 / math.pi)
    assert c_alpha(0.25) == pytest.approx(17 / math.pi)
    assert c_alpha(0.25) == pytest.approx(5.4113, abs=1e-4)
    a = np.linspace(0.05, 1, 30)
    assert np.all(np.diff([c_alpha(x) for x in a]) < 0)
    for bad in (0.0, -0.5):
        with pytest.raises(DomainError):
            c_alpha(bad)


def test_alpha_for_window():
    assert alpha_for_window(make_window(SQUARE)) == 0.25
    assert alpha_for_window(make_window(DISK)) == 0.25
    sq = make_window(POLYGON, [(0, 0), (1, 0), (1, 1), (0, 1)])
    assert alpha_for_window(sq) == pytest.approx(0.25)
    tri = make_window(POLYGON, [(0, 0), (1, 0), (0, 1)])
    assert alpha_for_window(tri) == pytest.approx(1 / 8)
    hexagon = [(math.cos(a), math.sin(a)) for a in np.arange(6) * math.pi / 3]
    assert alpha_for_window(make_window(POLYGON, hexagon)) == pytest.approx(1 / 3)


def test_v_gamma():
    assert v_gamma(1e4, 0.25) == pytest.approx(0.07865, abs=5e-5)
    g = np.logspace(1, 6, 40)
    assert np.all(np.diff([v_gamma(x, 0.25) for x in g]) < 0)
    assert v_gamma(1e4, 1.0) < v_gamma(1e4, 0.25)
    for bad in (1.0, 1.5):
        with pytest.raises(DomainError):
            v_gamma(bad, 0.25)


def with_ring(inner, radius=6.0, n=16, pad=20.0):
    ring = [(0.5 + radius * math.cos(a), 0.5 + radius * math.sin(a))
            for a in np.arange(n) * 2 * math.pi / n]
    return from_points(list(inner) + ring, make_window(SQUARE).with_padding(pad), gamma=100.0)


def v_union(table):
    return unary_union([Polygon(table.vertices_of(i)) for i in np.flatnonzero(table.nucleus_in_W)])


def fine_oracle(window, table, h):
    """Directed distances on a grid ten times finer, computed with shapely."""
    V = v_union(table)
    W = Polygon(window.vertices)
    outward = float(np.max(shapely.distance(shapely.points(shapely.get_coordinates(V)), W)))
    centers, nodes, _ = grid_points(window, h / 10)
    pts = np.vstack([centers, nodes])
    pts = pts[window.contains(pts)]
    inward = float(np.max(shapely.distance(shapely.points(pts), V)))
    return outward, inward


def test_nuclei_deep_inside():
    g = np.linspace(0.05, 0.95, 10)
    X, Y = np.meshgrid(g, g)
    cfg = with_ring(np.column_stack([X.ravel(), Y.ravel()]))
    r = hausdorff_bracket(cfg.window, cell_table(cfg), h=0.01)
    assert r.outward > 0
    assert r.inward_lo == 0
    assert r.d_H_lo == r.outward
    assert r.d_H_lo <= r.d_H_hi


def test_exterior_nucleus_carves_into_w():
    inner = [(0.3, 0.3), (0.7, 0.3), (0.5, 0.75), (1.1, 0.9)]
    cfg = with_ring(inner)
    table = cell_table(cfg)
    h = 0.02
    r = hausdorff_bracket(cfg.window, table, h=h)
    out, inw = fine_oracle(cfg.window, table, h)
    assert r.outward == pytest.approx(out, abs=1e-12)
    assert r.inward_lo <= inw + 1e-12
    assert inw <= r.inward_hi
    assert r.inward_lo > 0
    assert r.d_H_lo <= max(out, inw) <= r.d_H_hi


@pytest.mark.parametrize("seed", range(50))
def test_bracket_against_fine_grid(seed):
    gamma = 60.0
    w = make_window(SQUARE).with_padding(default_padding(gamma))
    cfg = sample_poisson(gamma, w, seed)
    table = cell_table(cfg)
    if not table.nucleus_in_W.any():
        pytest.skip("no nucleus in W")
    h = 0.05
    r = hausdorff_bracket(w, table, h=h)
    out, inw = fine_oracle(w, table, h)
    true_lo = max(out, inw)
    slack_fine = h / 10 * math.sqrt(2) / 2
    assert r.outward == pytest.approx(out, abs=1e-12)
    assert r.d_H_lo <= true_lo + slack_fine + 1e-12
    assert true_lo <= r.d_H_hi + 1e-12
    assert r.within_bound == (r.d_H_hi <= r.v_gamma)


def test_refinement_tightens_bracket():
    gamma = 200.0
    w = make_window(SQUARE).with_padding(default_padding(gamma))
    for seed in range(5):
        table = cell_table(sample_poisson(gamma, w, seed))
        prev = None
        for n in (5, 10, 20, 40, 80):
            r = hausdorff_bracket(w, table, h=1.0 / n)
            if prev is not None:
                assert r.inward_lo >= prev.inward_lo
                assert r.inward_hi <= prev.inward_hi + 1e-15
            assert r.inward_lo <= r.inward_hi
            prev = r


def test_outward_exactness():
    inner = [(0.3, 0.3), (0.7, 0.3), (0.5, 0.75), (0.5, 0.98)]
    base = hausdorff_bracket(make_window(SQUARE), cell_table(with_ring(inner)), h=0.05)
    moved = list(inner)
    moved[3] = (0.5, 0.999)  # pushes the protruding top vertex outward
    r = hausdorff_bracket(make_window(SQUARE), cell_table(with_ring(moved)), h=0.05)
    assert r.outward > base.outward


def test_disk_window():
    gamma = 300.0
    w = make_window(DISK).with_padding(default_padding(gamma))
    r = hausdorff_bracket(w, cell_table(sample_poisson(gamma, w, 1)))
    assert 0 < r.d_H_lo <= r.d_H_hi
    assert r.h == pytest.approx(r.v_gamma / 20, rel=0.05)


def test_uncertified_cells_raise():
    cfg = from_points([(0.5, 0.5), (0.6, 0.5), (0.5, 0.6), (0.4, 0.4)],
                      make_window(SQUARE).with_padding(0.0), gamma=100.0)
    with pytest.raises(CertificationError):
        hausdorff_bracket(cfg.window, cell_table(cfg), h=0.1)
    ok = with_ring([(0.5, 0.5)])
    with pytest.raises(DomainError):
        hausdorff_bracket(ok.window, cell_table(ok), h=0.0)


def test_clipped_records_route_matches_delaunay_route():
    from pvextremes.geometry import _table_from_records, compute_cell
    gamma = 80.0
    w = make_window(SQUARE).with_padding(default_padding(gamma))
    cfg = sample_poisson(gamma, w, 3)
    a = cell_table(cfg)
    b = _table_from_records(cfg, [compute_cell(i, cfg) for i in range(len(cfg))])
    ra = hausdorff_bracket(w, a, h=0.05)
    rb = hausdorff_bracket(w, b, h=0.05)
    for f in ("outward", "inward_lo", "inward_hi"):
        assert getattr(ra, f) == pytest.approx(getattr(rb, f), abs=1e-12)
