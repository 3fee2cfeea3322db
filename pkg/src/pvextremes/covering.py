"""Random covering of the circle by caps and the constants built on it.

A point ``y`` near a nucleus ``x`` cuts the circle ``S(x, u)`` along the
bisector of ``[x, y]``; the part on ``y``'s side is a closed cap.  The cell
of ``x`` has circumradius below ``u`` exactly when those caps cover the
circle, which turns distributional questions about ``R`` into covering
probabilities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateInputError, ParameterError, UnsupportedDimensionError
from .geometry import MIN_EDGE, _edge_lengths, halfplane_cell
from .window import derive_seed, make_rng

TWO_PI = 2.0 * math.pi
# closed-arc convention: arcs whose ends meet within this angle touch
ARC_EPS = 1e-12
CHUNK = 500_000


@dataclass(frozen=True)
class Cap:
    center_angle: float
    half_width: float

    @property
    def normalized_radius(self) -> float:
        return self.half_width / math.pi


class Constant(float):
    """A float carrying a standard error and a provenance note."""

    def __new__(cls, value, std_error: float = 0.0, source: str = ""):
        obj = super().__new__(cls, value)
        obj.std_error = float(std_error)
        obj.source = source
        return obj

    def __repr__(self):
        return f"Constant({float(self)!r}, std_error={self.std_error!r}, source={self.source!r})"


@dataclass(frozen=True)
class CoveringEstimate:
    k: int
    d: int
    n: int
    hits: int
    seed: int
    mu: bool = False

    @property
    def p_hat(self) -> float:
        return self.hits / self.n

    @property
    def std_error(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.n)

    def merge(self, other: "CoveringEstimate") -> "CoveringEstimate":
        if (self.k, self.d, self.mu) != (other.k, other.d, other.mu):
            raise ParameterError("can only merge estimates of the same quantity")
        return CoveringEstimate(self.k, self.d, self.n + other.n, self.hits + other.hits,
                                self.seed, self.mu)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(p_hat=self.p_hat, std_error=self.std_error)
        return out


def cap_from_point(x, y, u: float) -> Cap | None:
    """Cap cut on ``S(x, u)`` by the bisector of ``[x, y]``, or None if it misses."""
    if not u > 0:
        raise ParameterError(f"sphere radius must be positive, got {u}")
    dx, dy = float(y[0]) - float(x[0]), float(y[1]) - float(x[1])
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise DegenerateInputError("cap undefined for y == x")
    if dist >= 2.0 * u:
        return None
    return Cap(math.atan2(dy, dx) % TWO_PI, math.acos(dist / (2.0 * u)))


def circle_covered(caps) -> bool:
    """Exact decision whether closed arcs cover the whole circle.

    Arcs are unrolled onto the line together with their 2*pi translates and
    swept from angle 0; a gap wider than ``ARC_EPS`` means not covered.
    """
    caps = [c for c in caps if c is not None]
    if not caps:
        return False
    spans = []
    for c in caps:
        if c.half_width >= math.pi:
            return True
        s = (c.center_angle - c.half_width) % TWO_PI
        e = s + 2.0 * c.half_width
        spans += [(s - TWO_PI, e - TWO_PI), (s, e), (s + TWO_PI, e + TWO_PI)]
    spans.sort()
    reach = 0.0
    for s, e in spans:
        if e < reach:
            continue
        if s > reach + ARC_EPS:
            return False
        reach = e
        if reach >= TWO_PI - ARC_EPS:
            return True
    return False


def covered_batch(psi, phi) -> np.ndarray:
    """Vectorized coverage test for ``m`` trials of ``k`` arcs each.

    The union has a gap iff some arc's right end is not followed by another
    arc, i.e. no arc ``j`` holds the right end ``e_i`` in ``[s_j, e_j)``.
    """
    psi = np.asarray(psi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m, k = psi.shape
    if k == 0:
        return np.zeros(m, dtype=bool)
    start = psi - phi
    end = psi + phi
    width = end - start  # same rounding as end_i - start_j for equal arcs
    ok = np.ones(m, dtype=bool)
    for i in range(k):
        nxt = np.zeros(m, dtype=bool)
        for j in range(k):
            if j == i:
                continue
            dd = np.mod(end[:, i] - start[:, j], TWO_PI)
            dd = np.where(dd > TWO_PI - ARC_EPS, 0.0, dd)
            nxt |= dd < width[:, j]
        ok &= nxt
    return ok


def theta_from_uniform(u, d: int):
    """Inverse CDF of the cap-radius law: theta = arccos(U**(1/d)) / pi."""
    return np.arccos(np.asarray(u, dtype=float) ** (1.0 / d)) / math.pi


def theta_cdf(theta, d: int):
    """CDF 1 - cos(pi theta)**d on [0, 1/2]."""
    t = np.clip(np.asarray(theta, dtype=float), 0.0, 0.5)
    return 1.0 - np.cos(math.pi * t) ** d


def sample_theta(d: int, rng: np.random.Generator, size=None):
    """Normalized cap radius drawn from d*pi*sin(pi t)*cos(pi t)**(d-1) on [0, 1/2]."""
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    return theta_from_uniform(rng.random(size), d)


def _caps_from_points(m, k, rng):
    # k points uniform in B(0, 2) cut S(0, 1)
    rad = 2.0 * np.sqrt(rng.random((m, k)))
    psi = rng.random((m, k)) * TWO_PI
    phi = np.arccos(rad / 2.0)
    return psi, phi, rad


def _trial_points(psi, rad):
    return np.stack([rad * np.cos(psi), rad * np.sin(psi)], axis=-1)


def estimate_p_k(k: int, d: int = 2, n: int = 100_000, seed: int = 0,
                 method: str = "points") -> CoveringEstimate:
    """Monte-Carlo probability that ``k`` random caps cover the circle.

    ``method="points"`` draws ``k`` points uniformly in ``B(0, 2u)`` and maps
    them to caps; ``method="caps"`` draws uniform centers and radii from the
    cap-radius law directly.  Both estimate the same ``p_k``.
    """
    if d != 2:
        raise UnsupportedDimensionError("exact covering decisions are only available for d=2")
    if k < 0 or n < 1:
        raise ParameterError("need k >= 0 and n >= 1")
    hits = 0
    done = 0
    chunk_id = 0
    while done < n:
        m = min(CHUNK, n - done)
        rng = make_rng(derive_seed(seed, "p_k", k, method, chunk_id))
        if k > 0:
            if method == "points":
                psi, phi, _ = _caps_from_points(m, k, rng)
            elif method == "caps":
                psi = rng.random((m, k)) * TWO_PI
                phi = math.pi * sample_theta(d, rng, (m, k))
            else:
                raise ParameterError(f"unknown method {method!r}")
            hits += int(covered_batch(psi, phi).sum())
        done += m
        chunk_id += 1
    return CoveringEstimate(k, d, n, hits, seed)


def origin_face_count(points) -> int:
    """Number of edges of the cell of the origin among ``{0} ∪ points``."""
    verts, labels = halfplane_cell((0.0, 0.0), points, half_size=1e3)
    lens = _edge_lengths(verts)
    return sum(1 for lab, ln in zip(labels, lens) if lab >= 0 and ln >= MIN_EDGE)


def estimate_mu_k(k: int, n: int = 100_000, seed: int = 0, d: int = 2) -> CoveringEstimate:
    """Probability that ``k`` uniform points in ``B(0, 2u)`` cover ``S(0, u)``
    while the cell of the origin has at least four edges."""
    if d != 2:
        raise UnsupportedDimensionError("mu_k is defined for d=2 only")
    if k < 0 or n < 1:
        raise ParameterError("need k >= 0 and n >= 1")
    hits = 0
    done = 0
    chunk_id = 0
    while done < n:
        m = min(CHUNK, n - done)
        rng = make_rng(derive_seed(seed, "mu_k", k, chunk_id))
        if k > 0:
            psi, phi, rad = _caps_from_points(m, k, rng)
            cov = np.flatnonzero(covered_batch(psi, phi))
            pts = _trial_points(psi[cov], rad[cov])
            hits += sum(1 for p in pts if origin_face_count(p) >= 4)
        done += m
        chunk_id += 1
    return CoveringEstimate(k, d, n, hits, seed, mu=True)


def alpha1(d: int) -> float:
    """(1/d!) * (sqrt(pi) Gamma(d/2 + 1) / Gamma((d + 1)/2))**(d - 1)."""
    if d < 1 or int(d) != d:
        raise ParameterError(f"dimension must be a positive integer, got {d}")
    lg = math.lgamma
    log_ratio = 0.5 * math.log(math.pi) + lg(d / 2.0 + 1.0) - lg((d + 1) / 2.0)
    return math.exp(-lg(d + 1.0) + (d - 1) * log_ratio)


ALPHA2_D2 = (5.0 / 12.0 - 4.0 / math.pi ** 2) ** (1.0 / 3.0)


def _as_estimate(p):
    if isinstance(p, CoveringEstimate):
        return p.p_hat, p.std_error
    return float(p), float(getattr(p, "std_error", 0.0))


def alpha2(d: int = 2, p_estimate=None) -> Constant:
    """Minimal-circumradius constant (2^{d(d+1)} p_{d+1} / (d+1)!)^{1/(d+1)}.

    For ``d=2`` the closed form (5/12 - 4/pi^2)^{1/3} is used unless an
    estimate of ``p_3`` is passed.
    """
    if p_estimate is None:
        if d == 2:
            return Constant(ALPHA2_D2, 0.0, "closed form d=2")
        raise ParameterError(f"alpha2 for d={d} needs an estimate of p_{d + 1}")
    p, se = _as_estimate(p_estimate)
    val = (2.0 ** (d * (d + 1)) / math.factorial(d + 1) * p) ** (1.0 / (d + 1))
    err = val * se / ((d + 1) * p) if p > 0 else math.nan
    return Constant(val, err, f"Monte-Carlo p_{d + 1}")


def alpha2_prime(mu4_estimate) -> Constant:
    """((32/3) * mu_4)^{1/4}."""
    mu, se = _as_estimate(mu4_estimate)
    if not 0.0 <= mu <= 1.0:
        raise ParameterError(f"mu_4 must lie in [0, 1], got {mu}")
    val = (32.0 / 3.0 * mu) ** 0.25
    err = val * se / (4.0 * mu) if mu > 0 else math.nan
    return Constant(val, err, "Monte-Carlo mu_4")


# measured once: estimate_mu_k(4, n=10**7, seed=20240229) -> 58718 hits
MU4_FROZEN = Constant(0.0058718, 2.416055041748842e-05,
                      "estimate_mu_k(4, n=10**7, seed=20240229)")


def alpha2_prime_frozen() -> Constant:
    return alpha2_prime(MU4_FROZEN)


def circumradius_lt_u(x, points, u: float) -> bool:
    """Whether the caps of ``points`` (within open distance 2u) cover ``S(x, u)``."""
    caps = []
    for y in np.asarray(points, dtype=float).reshape(-1, 2):
        if y[0] == x[0] and y[1] == x[1]:
            continue
        caps.append(cap_from_point(x, y, u))
    return circle_covered(caps)


def circumradius_by_covering(x, points, rel_tol: float = 1e-14) -> float:
    """Circumradius of the cell of ``x`` by bisection on the covering event."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.hypot(*(pts - np.asarray(x, dtype=float)).T)
    d = d[d > 0]
    if len(d) == 0:
        return math.inf
    hi = float(d.max())
    # past max distance every point contributes a cap; caps only widen with u
    for _ in range(60):
        if circumradius_lt_u(x, pts, hi):
            break
        hi *= 2.0
    else:
        return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if circumradius_lt_u(x, pts, mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * hi:
            break
    return hi
