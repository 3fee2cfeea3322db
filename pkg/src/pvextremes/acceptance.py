"""Acceptance checks: limit laws, covering constants, oracles and bounds.

Each ``criterion_N`` returns a :class:`Criterion`.  The Monte-Carlo runs
shared by several criteria are cached, so running the whole suite draws
each replication once.  Seeds are fixed; nothing here is tuned per outcome.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .covering import alpha1, circumradius_by_covering, estimate_mu_k, estimate_p_k
from .extremes import StatKind
from .geometry import compute_cell, inradius_nn, NeighborIndex
from .harness import ExperimentSpec, run_experiment, run_pva, summarize
from .stats import ks_two_sample
from .window import SQUARE, default_padding, derive_seed, make_rng, make_window, sample_poisson

SEED = 20241016
GAMMAS = (1e2, 1e3, 1e4)
REPS = 2000
PVA_REPS = 500
P3_EXACT = 3.0 / 32.0 * (5.0 / 12.0 - 4.0 / math.pi ** 2)


@dataclass
class Criterion:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.title}: {self.detail}"


@functools.lru_cache(maxsize=None)
def extremes_run():
    spec = ExperimentSpec(gammas=list(GAMMAS), reps=REPS, master_seed=SEED,
                          classes=["b", "plain", "i"])
    return run_experiment(spec)


@functools.lru_cache(maxsize=None)
def pva_run():
    spec = ExperimentSpec(gammas=list(GAMMAS), reps=PVA_REPS, master_seed=SEED, grid_div=20)
    return run_pva(spec, alpha=0.25)


def ks(kind, gamma, cls="plain") -> float:
    res = extremes_run()
    return summarize(res.samples, gamma, cls, kind).ks_distance


def _values(kind, gamma, cls):
    return np.array([s.value(kind) for s in extremes_run().samples
                     if s.gamma == gamma and s.cell_class == cls])


def criterion_1() -> Criterion:
    k = ks(StatKind.R_MIN_IN, 1e4)
    return Criterion(1, "r_min exponential law", k <= 0.05, f"KS(1e4)={k:.4f} (<= 0.05)")


def criterion_2() -> Criterion:
    hi, lo = ks(StatKind.R_MAX_IN, 1e4), ks(StatKind.R_MAX_IN, 1e2)
    ok = hi <= 0.15 and hi < lo
    return Criterion(2, "r_max Gumbel law", ok,
                     f"KS(1e4)={hi:.4f} (<= 0.15), KS(1e2)={lo:.4f} (must exceed KS(1e4))")


def criterion_3() -> Criterion:
    hi, lo = ks(StatKind.R_MIN, 1e4), ks(StatKind.R_MIN, 1e2)
    ok = hi <= 0.20 and hi < lo
    return Criterion(3, "R_min Weibull(3) law", ok,
                     f"KS(1e4)={hi:.4f} (<= 0.20), KS(1e2)={lo:.4f} (must exceed KS(1e4))")


def criterion_4() -> Criterion:
    v = [ks(StatKind.R_MAX, g) for g in GAMMAS]
    ok = v[0] > v[1] > v[2]
    return Criterion(4, "R_max Gumbel convergence", ok,
                     "KS over gamma 1e2,1e3,1e4 = " + ", ".join(f"{x:.4f}" for x in v)
                     + " (strictly decreasing)")


def criterion_5() -> Criterion:
    p3 = estimate_p_k(3, 2, n=10 ** 7, seed=SEED)
    z = abs(p3.p_hat - P3_EXACT) / p3.std_error
    rel = abs(p3.p_hat - P3_EXACT) / P3_EXACT
    p2 = estimate_p_k(2, 2, n=10 ** 6, seed=SEED)
    a1 = alpha1(2)
    ok = z <= 4 and rel <= 0.05 and p2.hits == 0 and abs(a1 - 1.0) <= 1e-12
    return Criterion(5, "covering constants", ok,
                     f"p3={p3.p_hat:.5e} (exact {P3_EXACT:.5e}, {z:.2f} SE, rel {rel:.2%}); "
                     f"p2 hits={p2.hits}/10^6; |alpha1(2)-1|={abs(a1 - 1):.1e}")


def _polygon_inradius(x, verts) -> float:
    e = np.roll(verts, -1, axis=0) - verts
    rel = x - verts
    return float(np.min(np.abs(e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0]) / np.hypot(*e.T)))


def oracle_configs(n: int = 500, gamma: float = 20.0):
    """Yield (config, nucleus id) for ``n`` random certified bounded cells."""
    window = make_window(SQUARE).with_padding(default_padding(gamma))
    i = 0
    while n > 0:
        config = sample_poisson(gamma, window, derive_seed(SEED, "oracle", i))
        i += 1
        inside = np.flatnonzero(window.contains(config.points))
        if len(inside) == 0:
            continue
        rng = make_rng(derive_seed(SEED, "oracle-pick", i))
        j = int(inside[rng.integers(len(inside))])
        yield config, j
        n -= 1


def criterion_6() -> Criterion:
    worst_R = worst_r = 0.0
    bad = 0
    count = 0
    for config, j in oracle_configs():
        index = NeighborIndex(config.points)
        rec = compute_cell(j, config, index)
        if not (rec.bounded and rec.certified):
            bad += 1
            continue
        x = config.points[j]
        others = np.delete(config.points, j, axis=0)
        worst_R = max(worst_R, abs(rec.circumradius - circumradius_by_covering(x, others)))
        worst_r = max(worst_r, abs(inradius_nn(j, config, index) -
                                   _polygon_inradius(x, rec.vertices)))
        count += 1
    ok = bad == 0 and worst_R <= 1e-9 and worst_r <= 1e-12
    return Criterion(6, "polygon vs covering oracles", ok,
                     f"{count} cells, max|dR|={worst_R:.2e} (<= 1e-9), "
                     f"max|dr|={worst_r:.2e} (<= 1e-12), uncertified={bad}")


def criterion_7() -> Criterion:
    hits = {}
    for k in (1, 2):
        for method in ("points", "caps"):
            hits[(k, method)] = estimate_p_k(k, 2, n=10 ** 4, seed=SEED, method=method).hits
    mu3 = estimate_mu_k(3, n=10 ** 6, seed=SEED).hits
    ok = all(h == 0 for h in hits.values()) and mu3 == 0
    return Criterion(7, "at most two caps never cover; mu_3 = 0", ok,
                     f"coverings with k<=2 over 10^4 trials each: {sum(hits.values())}; "
                     f"mu-conditioned successes with k=3 over 10^6 trials: {mu3}")


def criterion_8() -> Criterion:
    worst, where = 0.0, ""
    for kind in StatKind:
        vals = {c: _values(kind, 1e4, c) for c in ("b", "plain", "i")}
        for a, b in (("b", "plain"), ("b", "i"), ("plain", "i")):
            d = ks_two_sample(vals[a], vals[b])
            if d > worst:
                worst, where = d, f"{kind.value} {a}/{b}"
    return Criterion(8, "boundary classes share limits", worst <= 0.1,
                     f"max pairwise KS at 1e4 = {worst:.4f} ({where}) (<= 0.1)")


def simplex_fraction(gamma) -> float:
    s = [x for x in extremes_run().samples if x.gamma == gamma and x.cell_class == "plain"]
    return float(np.mean([x.argminR_faces == 3 for x in s]))


def criterion_9() -> Criterion:
    f = [simplex_fraction(g) for g in GAMMAS]
    ok = f[0] <= f[1] <= f[2] and f[2] - f[0] >= 0.1
    return Criterion(9, "smallest circumradius cell is a triangle", ok,
                     "fraction over gamma 1e2,1e3,1e4 = " + ", ".join(f"{x:.4f}" for x in f)
                     + " (non-decreasing, gain >= 0.1)")


def criterion_10() -> Criterion:
    results, aborted = pva_run()
    p = []
    for g in GAMMAS:
        r = [x for x in results if x.gamma == g]
        p.append(float(np.mean([x.within_bound for x in r])))
    ok = p[2] >= 0.99 and p[0] <= p[1] <= p[2]
    return Criterion(10, "Hausdorff bound on the Voronoi approximation", ok,
                     "P(d_H_hi <= v_gamma) over gamma 1e2,1e3,1e4 = "
                     + ", ".join(f"{x:.4f}" for x in p) + " (>= 0.99 at 1e4, non-decreasing)")


def half_min_distance(points) -> float:
    if len(points) < 2:
        return math.inf
    d, _ = cKDTree(points).query(points, k=2)
    return 0.5 * float(d[:, 1].min())


def criterion_11(reps: int = 10 ** 4, gamma: float = 1e3) -> Criterion:
    d, M = 2, 1.0
    u = 0.5 * gamma ** -0.75
    c_M = 0.25 * d ** (-d / 2) * M ** d
    bound = math.exp(-c_M * gamma ** 2 * u ** d)
    window = make_window(SQUARE)
    exceed = 0
    for rep in range(reps):
        pts = sample_poisson(gamma, window, derive_seed(SEED, "tail", rep)).points
        exceed += half_min_distance(pts) >= u
    p = exceed / reps
    return Criterion(11, "tail bound for half the minimal distance", p <= bound,
                     f"P(r'_min >= u)={p:.4f} <= bound {bound:.4f} (u={u:.3e})")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_all(only=None) -> list:
    return [CRITERIA[i]() for i in (only or sorted(CRITERIA))]
