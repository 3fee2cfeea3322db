"""Experiment orchestration, summaries and serialization.

Every replication draws its own seed from ``derive_seed(master, gamma, rep)``
so results do not depend on execution order or on the number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (CertificationError, EmptyClassError, ParameterError, RunAbortedError,
                     ValidationError)
from .extremes import CellClass, ExtremeSample, StatKind, default_constants, extremes_of, limit_law
from .geometry import cell_table
from .pva import PVAResult, hausdorff_bracket
from .stats import fd_histogram, ks_distance
from .window import KINDS, SampleWindow, default_padding, derive_seed, make_window, sample_poisson

ABORT_TOLERANCE = 1e-3


# ---------------------------------------------------------------- spec

@dataclass
class ExperimentSpec:
    gammas: list
    reps: int
    master_seed: int = 0
    window: object = "unit-square"  # kind name or {"kind": ..., "vertices": [...]}
    classes: list = field(default_factory=lambda: ["plain"])
    outputs: dict = field(default_factory=dict)
    grid_div: int = 20
    workers: int = 1

    def __post_init__(self):
        self.gammas = [float(g) for g in np.atleast_1d(self.gammas)]
        if not self.gammas:
            raise ValidationError("gammas must be non-empty")
        if any(not g >= 2 for g in self.gammas):
            raise ValidationError(f"every gamma must be >= 2, got {self.gammas}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValidationError(f"reps must be a positive integer, got {self.reps}")
        self.reps = int(self.reps)
        self.master_seed = int(self.master_seed)
        self.classes = [CellClass(c).value if c in {e.value for e in CellClass}
                        else _bad_class(c) for c in self.classes]
        if not self.classes:
            raise ValidationError("classes must be non-empty")
        if self.grid_div < 1:
            raise ValidationError("grid_div must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        self.outputs = dict(self.outputs or {})
        self.sample_window()  # validate eagerly

    def sample_window(self) -> SampleWindow:
        w = self.window
        if isinstance(w, SampleWindow):
            return w
        if isinstance(w, str):
            if w not in KINDS:
                raise ValidationError(f"unknown window kind {w!r}")
            return make_window(w)
        if isinstance(w, dict):
            return make_window(w.get("kind", "convex-polygon"), w.get("vertices"))
        raise ValidationError(f"cannot interpret window {w!r}")

    def to_dict(self) -> dict:
        w = self.window
        if isinstance(w, SampleWindow):
            w = {"kind": w.kind, "vertices": [list(map(float, v)) for v in w.vertices]}
        return {"gammas": list(self.gammas), "reps": self.reps, "master_seed": self.master_seed,
                "window": w, "classes": list(self.classes), "outputs": dict(self.outputs),
                "grid_div": self.grid_div, "workers": self.workers}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown spec keys {sorted(extra)}")
        if "gammas" not in data or "reps" not in data:
            raise ValidationError("spec needs 'gammas' and 'reps'")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def run_dict(self) -> dict:
        """Fields that determine results (output paths and workers do not)."""
        d = self.to_dict()
        for k in ("outputs", "workers"):
            d.pop(k)
        return d

    def spec_hash(self) -> str:
        """sha256 of the canonical JSON of the run-defining fields."""
        return hashlib.sha256(json.dumps(self.run_dict(), sort_keys=True).encode()).hexdigest()


def _bad_class(c):
    raise ValidationError(f"unknown cell class {c!r}; use b, plain, i or x")


def replication_seed(master_seed: int, gamma: float, rep: int) -> int:
    return derive_seed(master_seed, float(gamma), int(rep))


# ---------------------------------------------------------------- summaries

@dataclass(frozen=True)
class SummaryStats:
    stat_kind: str
    cell_class: str
    gamma: float
    n: int
    ks_distance: float
    bin_edges: tuple
    counts: tuple
    dropped_replications: int
    n_infinite: int = 0

    def to_dict(self) -> dict:
        return {"stat_kind": self.stat_kind, "cell_class": self.cell_class,
                "gamma": self.gamma, "n": self.n, "ks_distance": self.ks_distance,
                "bin_edges": list(self.bin_edges), "counts": list(self.counts),
                "dropped_replications": self.dropped_replications,
                "n_infinite": self.n_infinite}


def summarize(samples, gamma: float, cell_class: str, kind, dropped: int = 0,
              d: int = 2) -> SummaryStats:
    """KS distance to the limit law and a Freedman-Diaconis histogram.

    ``n`` counts the non-NaN rescaled values; infinite ones (no cell with
    enough faces) enter the ECDF but not the histogram, whose counts plus
    ``n_infinite`` sum to ``n``.
    """
    kind = StatKind(kind)
    vals = np.array([s.value(kind) for s in samples
                     if s.gamma == gamma and s.cell_class == cell_class], dtype=float)
    vals = vals[~np.isnan(vals)]
    n = len(vals)
    ks = ks_distance(vals, limit_law(kind, d)) if n else math.nan
    edges, counts = fd_histogram(vals)
    return SummaryStats(kind.value, cell_class, float(gamma), n, ks,
                        tuple(float(e) for e in edges), tuple(int(c) for c in counts),
                        int(dropped), int(np.isinf(vals).sum()))


def summarize_all(samples, gammas, classes, dropped: dict | None = None) -> list:
    dropped = dropped or {}
    out = []
    for g in gammas:
        for c in classes:
            for kind in StatKind:
                out.append(summarize(samples, g, c, kind, dropped.get(f"{g!r}/{c}", 0)))
    return out


# ---------------------------------------------------------------- running

def simulate_replication(gamma: float, seed: int, window: SampleWindow, classes) -> tuple:
    """One replication: returns (samples, empty_classes).

    Raises :class:`CertificationError` when a needed cell cannot be certified.
    """
    win = window.with_padding(default_padding(gamma))
    config = sample_poisson(gamma, win, seed)
    table = cell_table(config)
    samples, empty = [], []
    for c in classes:
        try:
            samples.append(extremes_of(table, c, win, gamma, seed).rescaled())
        except EmptyClassError:
            empty.append(c)
    return samples, empty


def _run_one(task):
    gi, rep, gamma, seed, window, classes = task
    try:
        samples, empty = simulate_replication(gamma, seed, window, classes)
        return gi, rep, "ok", samples, empty
    except CertificationError as exc:
        return gi, rep, "aborted", [], [str(exc)]


def _run_one_pva(task):
    gi, rep, gamma, seed, window, grid_div, alpha = task
    win = window.with_padding(default_padding(gamma))
    config = sample_poisson(gamma, win, seed)
    try:
        res = hausdorff_bracket(win, cell_table(config), grid_div=grid_div, alpha=alpha)
        return gi, rep, "ok", [res], []
    except CertificationError as exc:
        return gi, rep, "aborted", [], [str(exc)]


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    samples: list
    summaries: list
    aborted: dict      # "gamma" -> count
    dropped: dict      # "gamma/class" -> count of empty-class replications

    def header(self) -> dict:
        return run_header(self.spec, "ExtremeSample",
                          aborted=self.aborted, dropped=self.dropped)


def _check_aborts(aborted: dict, total: int):
    n_abort = sum(aborted.values())
    if n_abort > ABORT_TOLERANCE * total:
        raise RunAbortedError(f"{n_abort} of {total} replications aborted "
                              f"(tolerance {ABORT_TOLERANCE:.1%})")


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    window = spec.sample_window()
    tasks = [(gi, rep, g, replication_seed(spec.master_seed, g, rep), window, spec.classes)
             for gi, g in enumerate(spec.gammas) for rep in range(spec.reps)]
    results = sorted(_map(_run_one, tasks, spec.workers), key=lambda r: (r[0], r[1]))
    samples = []
    aborted = {repr(g): 0 for g in spec.gammas}
    dropped = {f"{g!r}/{c}": 0 for g in spec.gammas for c in spec.classes}
    for gi, _, status, recs, info in results:
        g = spec.gammas[gi]
        if status == "aborted":
            aborted[repr(g)] += 1
            for c in spec.classes:
                dropped[f"{g!r}/{c}"] += 1
            continue
        samples.extend(recs)
        for c in info:
            dropped[f"{g!r}/{c}"] += 1
    _check_aborts(aborted, len(tasks))
    summaries = summarize_all(samples, spec.gammas, spec.classes, dropped)
    return ExperimentResult(spec, samples, summaries, aborted, dropped)


def run_pva(spec: ExperimentSpec, alpha: float | None = None) -> tuple:
    """Hausdorff brackets for every (gamma, replication); returns (results, aborted)."""
    window = spec.sample_window()
    tasks = [(gi, rep, g, replication_seed(spec.master_seed, g, rep), window,
              spec.grid_div, alpha)
             for gi, g in enumerate(spec.gammas) for rep in range(spec.reps)]
    results = sorted(_map(_run_one_pva, tasks, spec.workers), key=lambda r: (r[0], r[1]))
    out, aborted = [], {repr(g): 0 for g in spec.gammas}
    for gi, _, status, recs, _ in results:
        if status == "aborted":
            aborted[repr(spec.gammas[gi])] += 1
        out.extend(recs)
    _check_aborts(aborted, len(tasks))
    return out, aborted


# ---------------------------------------------------------------- serialization

RECORD_TYPES = {"ExtremeSample": ExtremeSample, "PVAResult": PVAResult}
_RENAME = {"cell_class": "class"}
_UNRENAME = {v: k for k, v in _RENAME.items()}


def columns(record_type) -> list[str]:
    return [_RENAME.get(f.name, f.name) for f in dataclasses.fields(record_type)]


def run_header(spec: ExperimentSpec | None, record: str, **extra) -> dict:
    h = {"toolkit": f"pvextremes {__version__}", "record": record,
         "spec_hash": spec.spec_hash() if spec is not None else None,
         "constants": default_constants(2).to_dict()}
    if spec is not None:
        h["spec"] = spec.run_dict()
    h.update(extra)
    return h


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _parse(text: str, typ: str):
    if typ == "bool":
        if text not in ("true", "false"):
            raise ValidationError(f"bad boolean {text!r}")
        return text == "true"
    if typ == "int":
        return int(text)
    if typ == "float":
        return float(text)
    return text


def _record_type(records, header):
    if header.get("record") in RECORD_TYPES:
        return RECORD_TYPES[header["record"]]
    if records:
        return type(records[0])
    raise ParameterError("cannot infer the record type of an empty list")


def dumps(records, header: dict, fmt: str = "csv") -> str:
    records = list(records)
    rtype = _record_type(records, header)
    header = {**header, "record": rtype.__name__}
    cols = columns(rtype)
    names = [f.name for f in dataclasses.fields(rtype)]
    if fmt == "json":
        rows = []
        for r in records:
            row = {}
            for col, name in zip(cols, names):
                v = getattr(r, name)
                row[col] = v.item() if isinstance(v, np.generic) else v
            rows.append(row)
        return json.dumps({"header": header, "records": rows}, indent=1) + "\n"
    if fmt != "csv":
        raise ParameterError(f"unknown format {fmt!r}; use csv or json")
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(getattr(r, name)) for name in names])
    return buf.getvalue()


def emit(records, path, header: dict, fmt: str | None = None) -> None:
    """Write records as CSV or JSON; the format defaults to the file suffix."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    text = dumps(records, header, fmt)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def loads(text: str) -> tuple[dict, list]:
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        header = data["header"]
        rtype = RECORD_TYPES[header["record"]]
        types = {f.name: f.type for f in dataclasses.fields(rtype)}
        recs = []
        for row in data["records"]:
            kw = {_UNRENAME.get(k, k): v for k, v in row.items()}
            kw = {k: (float(v) if types[k] == "float" else v) for k, v in kw.items()}
            recs.append(rtype(**kw))
        return header, recs
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            header[key] = json.loads(val)
        elif line:
            body.append(line)
    rtype = RECORD_TYPES.get(header.get("record"))
    if rtype is None:
        raise ValidationError("file header does not name a known record type")
    rows = list(csv.reader(body))
    if not rows:
        raise ValidationError("missing column header")
    if rows[0] != columns(rtype):
        raise ValidationError(f"unexpected columns {rows[0]}")
    types = [f.type for f in dataclasses.fields(rtype)]
    names = [f.name for f in dataclasses.fields(rtype)]
    recs = [rtype(**{n: _parse(v, t) for n, v, t in zip(names, row, types)})
            for row in rows[1:]]
    return header, recs


def read_records(path) -> tuple[dict, list]:
    with open(path, newline="") as fh:
        return loads(fh.read())


def summaries_from_file(path) -> list:
    """Recompute the summaries of a simulate run from its emitted file."""
    header, recs = read_records(path)
    spec = header["spec"]
    gammas = [float(g) for g in spec["gammas"]]
    return summarize_all(recs, gammas, spec["classes"], header.get("dropped", {}))


def write_outputs(result: ExperimentResult) -> None:
    outs = result.spec.outputs
    if "records" in outs:
        emit(result.samples, outs["records"], result.header())
    if "summary" in outs:
        with open(outs["summary"], "w") as fh:
            json.dump({"header": result.header(),
                       "summaries": [s.to_dict() for s in result.summaries]}, fh, indent=1)
            fh.write("\n")


def ensure_dir(path) -> None:
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
