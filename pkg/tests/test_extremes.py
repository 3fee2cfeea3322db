import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvextremes.errors import CertificationError, DomainError, EmptyClassError, ParameterError
from pvextremes.extremes import (CellClass, Constants, ExtremeSample, StatKind, default_constants,
                                 extremes_of, limit_law, rescale, u_threshold)
from pvextremes.geometry import all_cells, cell_table
from pvextremes.stats import ks_distance
from pvextremes.window import SQUARE, default_padding, from_points, make_window, sample_poisson


def test_rescale_examples():
    assert rescale("r_min", 3.989e-3, 100) == pytest.approx(1.0, abs=1e-3)
    assert rescale("r_max", 0.0, 1e4) == pytest.approx(-math.log(1e4))
    assert rescale("R_max", 0.019075, 1e4) == pytest.approx(0.0, abs=1e-3)
    with pytest.raises(ParameterError):
        rescale("nope", 1.0, 10)


def test_u_threshold_examples():
    assert u_threshold(StatKind.R_MIN_IN, 1.0, 100) == pytest.approx(3.989e-3, rel=1e-3)
    assert u_threshold(StatKind.R_MAX, 0.0, 1e4) == pytest.approx(0.019075, rel=1e-4)
    with pytest.raises(DomainError):
        u_threshold(StatKind.R_MIN, -1.0, 100)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(StatKind)), st.floats(0, 20), st.floats(10, 1e6))
def test_round_trip(kind, t, gamma):
    u = u_threshold(kind, t, gamma)
    assert rescale(kind, u, gamma) == pytest.approx(t, abs=1e-12 * max(1.0, abs(t)) + 1e-12 * math.log(gamma))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(StatKind)), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5),
       st.floats(10, 1e6))
def test_rescale_increasing(kind, a, b, gamma):
    if a < b:
        assert rescale(kind, a, gamma) < rescale(kind, b, gamma)


def test_limit_laws():
    g = limit_law("r_max")
    assert g.kind == "GUMBEL" and g.cdf(0.0) == pytest.approx(math.exp(-1))
    assert limit_law("R_max").kind == "GUMBEL"
    assert limit_law("r_min").survival(0.0) == 1.0
    w = limit_law("R_min")
    assert w.beta == 3 and w.survival(1.0) == pytest.approx(math.exp(-1))
    assert limit_law("R_min", d=3).beta == 4
    assert limit_law("Rmin_excl").beta == 4
    for law in (g, w, limit_law("r_min")):
        q = np.linspace(0.01, 0.99, 50)
        assert np.allclose(law.cdf(law.ppf(q)), q)


def test_ks_invariance_raw_vs_rescaled():
    # KS on raw radii against the transformed law equals KS on rescaled values
    cfg_vals = np.random.default_rng(0).uniform(0.01, 0.03, 500)
    gamma = 1e3
    t = rescale("R_max", cfg_vals, gamma)
    law = limit_law("R_max")

    class Raw:
        @staticmethod
        def cdf(v):
            return law.cdf(rescale("R_max", v, gamma))

    assert ks_distance(cfg_vals, Raw) == pytest.approx(ks_distance(t, law), abs=1e-15)


def table_for(gamma, seed):
    w = make_window(SQUARE).with_padding(default_padding(gamma))
    return cell_table(sample_poisson(gamma, w, seed))


def brute(table, mask, d=2):
    r, R, F = table.r[mask], table.R[mask], table.face_count[mask]
    excl = R[F >= d + 2]
    return r.max(), r.min(), R.max(), R.min(), int(F[np.argmin(R)]), \
        (excl.min() if len(excl) else math.inf)


@pytest.mark.parametrize("cls", list(CellClass))
def test_extremes_match_exhaustive_scan(cls):
    table = table_for(500, 4)
    s = extremes_of(table, cls)
    mask = getattr(table, cls.column)
    assert (s.r_max, s.r_min, s.R_max, s.R_min, s.argminR_faces, s.Rmin_excl) == brute(table, mask)
    assert s.n_cells == mask.sum()
    assert s.r_min <= s.r_max and s.R_min <= s.R_max
    assert s.r_min <= s.R_min and s.r_max <= s.R_max and s.R_min <= s.Rmin_excl


def test_records_path_matches_table_path():
    table = table_for(300, 5)
    recs = [table.record(i) for i in range(len(table))]
    win = table.config.window
    for cls in CellClass:
        a = extremes_of(table, cls)
        b = extremes_of(recs, cls, win, gamma=300.0, seed=table.config.seed)
        for f in ("r_max", "r_min", "R_max", "R_min", "argminR_faces", "Rmin_excl", "n_cells"):
            assert getattr(a, f) == getattr(b, f)
        assert a.Rp_max == pytest.approx(b.Rp_max, abs=1e-12)


def test_class_monotonicity():
    for seed in range(5):
        table = table_for(1000, seed)
        e = {c: extremes_of(table, c) for c in ("b", "plain", "i")}
        assert e["i"].r_max <= e["plain"].r_max <= e["b"].r_max
        assert e["i"].R_max <= e["plain"].R_max <= e["b"].R_max
        assert e["i"].r_min >= e["plain"].r_min >= e["b"].r_min
        assert e["i"].R_min >= e["plain"].R_min >= e["b"].R_min
        # the reach inside W never exceeds the true circumradius
        assert e["b"].Rp_max <= e["b"].R_max + 1e-15


def test_single_cell():
    pts = [(0.5, 0.5), (1.5, 0.5), (-0.5, 0.5), (0.5, 1.5), (0.5, -0.5)]
    cfg = from_points(pts, make_window(SQUARE).with_padding(3.0))
    s = extremes_of(all_cells(cfg), "plain", cfg.window)
    assert s.n_cells == 1
    assert s.r_max == s.r_min == 0.5
    assert s.R_max == s.R_min == pytest.approx(math.sqrt(2) / 2)
    assert s.argminR_faces == 4 and s.Rmin_excl == s.R_min


def test_hand_built_three_cells():
    inner = [(0.3, 0.5), (0.5, 0.5), (0.7, 0.45)]
    ring = [(0.5 + 2 * math.cos(a), 0.5 + 2 * math.sin(a)) for a in np.linspace(0, 2 * math.pi, 13)[:-1]]
    cfg = from_points(inner + ring, make_window(SQUARE).with_padding(5.0))
    recs = all_cells(cfg)
    s = extremes_of(recs, "plain", cfg.window)
    mine = [r for r in recs if r.nucleus_in_W]
    assert len(mine) == 3
    assert s.R_max == max(r.circumradius for r in mine)
    assert s.r_min == min(r.inradius for r in mine)


def test_errors():
    table = table_for(50, 1)
    empty = from_points([(5.0, 5.0), (6.0, 5.0), (5.0, 6.0)], make_window(SQUARE).with_padding(10))
    with pytest.raises(EmptyClassError):
        extremes_of(cell_table(empty), "i")
    cfg = from_points([(0.5, 0.5), (0.6, 0.5), (0.5, 0.6), (0.4, 0.4)],
                      make_window(SQUARE).with_padding(0.0))
    with pytest.raises(CertificationError):
        extremes_of(cell_table(cfg), "plain")
    with pytest.raises(ValueError):
        extremes_of(table, "q")


def test_rescaled_and_value():
    s = extremes_of(table_for(1000, 2), "plain").rescaled()
    assert s.t_rmax == pytest.approx(rescale("r_max", s.r_max, 1000))
    assert s.value("R_min") == s.t_Rmin
    assert s.value(StatKind.R_MIN_EXCL) == s.t_Rmin_excl
    assert "Rp_max" in ExtremeSample.field_names()


def test_constants():
    c = default_constants()
    assert c.alpha1 == pytest.approx(1.0)
    assert c.alpha2 == pytest.approx(0.22494274821, abs=1e-10)
    assert 0.49 < c.alpha2_prime < 0.51
    custom = Constants(1.0, 0.5, 1.0)
    assert rescale("R_min", 0.01, 1e4, constants=custom) == pytest.approx(
        0.5 * math.pi * 1e4 ** (4 / 3) * 1e-4)
