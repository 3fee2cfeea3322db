"""Empirical distribution functions and Kolmogorov-Smirnov distances."""

from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError


class ECDF:
    """Right-continuous empirical distribution function."""

    def __init__(self, values):
        x = np.sort(np.asarray(values, dtype=float).ravel())
        if len(x) == 0:
            raise InsufficientDataError("ECDF of an empty sample")
        self.x = x
        self.n = len(x)

    def __call__(self, t):
        return np.searchsorted(self.x, t, side="right") / self.n


def ecdf(values) -> ECDF:
    return ECDF(values)


def ks_distance(values, law) -> float:
    """sup_t |F_n(t) - F(t)| against a continuous law, evaluated at the jumps."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise InsufficientDataError("KS distance of an empty sample")
    F = np.asarray(law.cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_two_sample(a, b) -> float:
    """sup_t |F_a(t) - F_b(t)| between two empirical distributions."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if len(a) == 0 or len(b) == 0:
        raise InsufficientDataError("KS distance of an empty sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def fd_histogram(values):
    """Fixed-width histogram with Freedman-Diaconis bin width (finite values)."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return np.array([0.0, 1.0]), np.array([0])
    if np.ptp(v) == 0.0 or np.subtract(*np.percentile(v, [75, 25])) == 0.0:
        edges = np.histogram_bin_edges(v, bins=1)
    else:
        edges = np.histogram_bin_edges(v, bins="fd")
    counts, edges = np.histogram(v, bins=edges)
    return edges, counts
