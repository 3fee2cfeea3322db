"""Extremes of cell radii, their normalizations and limiting laws."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .covering import alpha1, alpha2, alpha2_prime_frozen
from .errors import CertificationError, DomainError, EmptyClassError, ParameterError
from .geometry import CellTable, _reach_in_window
from .window import unit_ball_volume


class StatKind(str, enum.Enum):
    R_MAX_IN = "r_max"      # largest inradius, Gumbel
    R_MIN_IN = "r_min"      # smallest inradius, exponential
    R_MAX = "R_max"         # largest circumradius, Gumbel
    R_MIN = "R_min"         # smallest circumradius, Weibull(d+1)
    R_MIN_EXCL = "Rmin_excl"  # smallest circumradius among non-simplex cells, Weibull(4)


class CellClass(str, enum.Enum):
    MEETS_W = "b"
    NUCLEUS_IN_W = "plain"
    SUBSET_OF_W = "i"
    CROSSES_BOUNDARY = "x"  # meets W but not inside it

    @property
    def column(self) -> str:
        return {"b": "meets_W", "plain": "nucleus_in_W", "i": "subset_of_W",
                "x": "crosses_boundary"}[self.value]


@dataclass(frozen=True)
class Constants:
    alpha1: float
    alpha2: float
    alpha2_prime: float

    def to_dict(self) -> dict:
        return {"alpha1": float(self.alpha1), "alpha2": float(self.alpha2),
                "alpha2_prime": float(self.alpha2_prime)}


def default_constants(d: int = 2) -> Constants:
    a2p = alpha2_prime_frozen() if d == 2 else math.nan
    return Constants(alpha1(d), float(alpha2(d)), float(a2p))


def _kind(kind) -> StatKind:
    try:
        return StatKind(kind)
    except ValueError:
        raise ParameterError(f"unknown statistic {kind!r}") from None


def rescale(kind, v, gamma: float, d: int = 2, constants: Constants | None = None):
    """Normalized statistic whose law converges as gamma grows."""
    kind = _kind(kind)
    c = constants or default_constants(d)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ParameterError("radii must be non-negative")
    kap = unit_ball_volume(d)
    with np.errstate(over="ignore"):
        vd = v ** d
    if kind is StatKind.R_MAX_IN:
        out = 2 ** d * kap * gamma * vd - math.log(gamma)
    elif kind is StatKind.R_MIN_IN:
        out = 2 ** (d - 1) * kap * gamma ** 2 * vd
    elif kind is StatKind.R_MAX:
        out = kap * gamma * vd - math.log(c.alpha1 * gamma * math.log(gamma) ** (d - 1))
    elif kind is StatKind.R_MIN:
        out = c.alpha2 * kap * gamma ** ((d + 2) / (d + 1)) * vd
    else:
        if d != 2:
            raise ParameterError("the non-simplex minimum is only normalized for d=2")
        out = c.alpha2_prime * math.pi * gamma ** 1.25 * vd
    return out if out.ndim else float(out)


def u_threshold(kind, t, gamma: float, d: int = 2, constants: Constants | None = None):
    """Radius whose rescaled value is ``t`` (inverse of :func:`rescale`)."""
    kind = _kind(kind)
    c = constants or default_constants(d)
    t = np.asarray(t, dtype=float)
    kap = unit_ball_volume(d)
    if kind is StatKind.R_MAX_IN:
        base = (t + math.log(gamma)) / (2 ** d * kap * gamma)
    elif kind is StatKind.R_MAX:
        base = (t + math.log(c.alpha1 * gamma * math.log(gamma) ** (d - 1))) / (kap * gamma)
    else:
        if np.any(t < 0):
            raise DomainError("minimum-type laws are supported on t >= 0")
        if kind is StatKind.R_MIN_IN:
            base = t / (2 ** (d - 1) * kap * gamma ** 2)
        elif kind is StatKind.R_MIN:
            base = t / (c.alpha2 * kap * gamma ** ((d + 2) / (d + 1)))
        else:
            if d != 2:
                raise ParameterError("the non-simplex minimum is only normalized for d=2")
            base = t / (c.alpha2_prime * math.pi * gamma ** 1.25)
    if np.any(base < 0):
        raise DomainError("t lies below the smallest attainable normalized value")
    out = base ** (1.0 / d)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LimitLaw:
    kind: str  # "GUMBEL", "EXP_MIN" or "WEIBULL_MIN"
    beta: float = 1.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "GUMBEL":
            out = np.exp(-np.exp(-t))
        else:
            out = 1.0 - self.survival(t)
        return out if out.ndim else float(out)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "GUMBEL":
            out = 1.0 - np.exp(-np.exp(-t))
        else:
            tp = np.maximum(t, 0.0)
            out = np.where(t >= 0, np.exp(-tp ** self.beta), 1.0)
        return out if out.ndim else float(out)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "GUMBEL":
            return -np.log(-np.log(q))
        return (-np.log1p(-q)) ** (1.0 / self.beta)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))


def limit_law(kind, d: int = 2) -> LimitLaw:
    kind = _kind(kind)
    if kind in (StatKind.R_MAX_IN, StatKind.R_MAX):
        return LimitLaw("GUMBEL")
    if kind is StatKind.R_MIN_IN:
        return LimitLaw("EXP_MIN", 1.0)
    if kind is StatKind.R_MIN:
        return LimitLaw("WEIBULL_MIN", float(d + 1))
    return LimitLaw("WEIBULL_MIN", 4.0)


@dataclass(frozen=True)
class ExtremeSample:
    gamma: float
    seed: int
    cell_class: str
    n_cells: int
    r_max: float
    r_min: float
    R_max: float
    R_min: float
    Rp_max: float
    Rmin_excl: float
    argminR_faces: int
    t_rmax: float = math.nan
    t_rmin: float = math.nan
    t_Rmax: float = math.nan
    t_Rmin: float = math.nan
    t_Rmin_excl: float = math.nan

    def rescaled(self, constants: Constants | None = None, d: int = 2) -> "ExtremeSample":
        g = self.gamma
        c = constants or default_constants(d)
        return replace(
            self,
            t_rmax=rescale(StatKind.R_MAX_IN, self.r_max, g, d, c),
            t_rmin=rescale(StatKind.R_MIN_IN, self.r_min, g, d, c),
            t_Rmax=rescale(StatKind.R_MAX, self.R_max, g, d, c),
            t_Rmin=rescale(StatKind.R_MIN, self.R_min, g, d, c),
            t_Rmin_excl=rescale(StatKind.R_MIN_EXCL, self.Rmin_excl, g, d, c) if d == 2 else math.nan,
        )

    def value(self, kind) -> float:
        col = {StatKind.R_MAX_IN: "t_rmax", StatKind.R_MIN_IN: "t_rmin",
               StatKind.R_MAX: "t_Rmax", StatKind.R_MIN: "t_Rmin",
               StatKind.R_MIN_EXCL: "t_Rmin_excl"}[_kind(kind)]
        return getattr(self, col)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _columns(cells, window):
    if isinstance(cells, CellTable):
        return cells
    recs = list(cells)
    shape = window.shape if window is not None else None

    class _Cols:
        pass

    cols = _Cols()
    for name, attr in [("r", "inradius"), ("R", "circumradius"), ("face_count", "face_count"),
                       ("certified", "certified"), ("bounded", "bounded"),
                       ("nucleus_in_W", "nucleus_in_W"), ("subset_of_W", "subset_of_W"),
                       ("meets_W", "meets_W")]:
        setattr(cols, name, np.array([getattr(rec, attr) for rec in recs]))
    reach = []
    for rec in recs:
        if rec.subset_of_W:
            reach.append(rec.circumradius)
        elif rec.meets_W and rec.bounded and shape is not None:
            reach.append(_reach_in_window(rec.vertices, rec.nucleus, shape))
        else:
            reach.append(math.nan)
    cols.reach_in_W = np.array(reach, dtype=float)
    cols.crosses_boundary = cols.meets_W & ~cols.subset_of_W
    return cols


def extremes_of(cells, cell_class, window=None, gamma: float = math.nan, seed: int = -1,
                d: int = 2) -> ExtremeSample:
    """The four extremes (plus helpers) over the cells of one class."""
    cls = CellClass(cell_class)
    t = _columns(cells, window)
    if isinstance(cells, CellTable):
        gamma = cells.config.intensity if math.isnan(gamma) else gamma
        seed = cells.config.seed if seed == -1 else seed
    mask = np.asarray(getattr(t, cls.column), dtype=bool)
    if not mask.any():
        raise EmptyClassError(f"no cell in class {cls.value!r}")
    if not np.all(np.asarray(t.certified)[mask]):
        raise CertificationError(f"uncertified cell in class {cls.value!r}")
    idx = np.flatnonzero(mask)
    r = np.asarray(t.r)[idx]
    R = np.asarray(t.R)[idx]
    F = np.asarray(t.face_count)[idx]
    amin = int(np.argmin(R))
    excl = R[F >= d + 2]
    reach = np.asarray(t.reach_in_W)[idx]
    return ExtremeSample(
        gamma=float(gamma), seed=int(seed), cell_class=cls.value, n_cells=int(len(idx)),
        r_max=float(r.max()), r_min=float(r.min()), R_max=float(R.max()), R_min=float(R[amin]),
        Rp_max=float(np.nanmax(reach)) if np.any(~np.isnan(reach)) else math.nan,
        Rmin_excl=float(excl.min()) if len(excl) else math.inf,
        argminR_faces=int(F[amin]),
    )
