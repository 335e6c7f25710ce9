"""Seeded benchmark sweeps over (method, N, sigma, repeat) cells.

Every cell draws its own samples, noise and initial points from a seed
derived as ``derive_seed(spec.seed, i_N, i_sigma, repeat)``; all methods of
a cell see the same data.  Cells are independent, so the sweep can run on
any number of workers and still produce identical rows.
"""
import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _random
from .baseline import LocalPCAFitter
from .contraction import ContractionFitter
from .exceptions import ConfigError, ManifoldFitError, NonPositiveInput
from .manifolds import InitialBand, NoiseModel, add_noise, initial_points, make_manifold
from .metrics import FitReport, sup_and_avg_error

log = logging.getLogger(__name__)

METHODS = ("ysl23", "yx19")
RESULTS_HEADER = [
    "method", "manifold", "N", "sigma", "repeat", "seed",
    "sup_error", "avg_error", "seconds", "n_scored", "n_excluded",
]
_SEED_SAMPLE, _SEED_NOISE, _SEED_INIT = 0, 1, 2


@dataclass
class ExperimentSpec:
    """A benchmark sweep.

    ``overrides`` tunes the contraction method (``k``, ``r0``, ``r1``, ``r2``,
    ``lg_base``, ``min_neighbors``); ``yx19`` tunes the baseline (``d``,
    ``radius``, ``beta``, ``max_iters``, ``tol``).  With
    ``record_seconds=False`` the ``seconds`` column of results.csv is written
    as 0 and timings go to timings.csv, making results.csv byte-reproducible.
    """

    manifold: dict
    methods: list = field(default_factory=lambda: ["ysl23"])
    N: list = field(default_factory=lambda: [30000])
    sigma: list = field(default_factory=lambda: [0.06])
    n0: int = 100
    repeats: int = 10
    seed: int = 0
    output_dir: str = "results"
    overrides: dict = field(default_factory=dict)
    yx19: dict = field(default_factory=dict)
    n_jobs: int = 1
    record_seconds: bool = True
    include_failed: bool = False

    def __post_init__(self):
        if not isinstance(self.manifold, dict) or "kind" not in self.manifold:
            raise ConfigError("manifold must be a mapping with a 'kind' entry")
        for name in ("methods", "N", "sigma"):
            value = getattr(self, name)
            if isinstance(value, (int, float, str)):
                value = [value]
                setattr(self, name, value)
            if not value:
                raise ConfigError(f"{name} must be a non-empty list")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if any(not isinstance(n, int) or n < 2 for n in self.N):
            raise ConfigError("every N must be an integer >= 2")
        if any(not s > 0 for s in self.sigma):
            raise ConfigError("every sigma must be positive")
        if self.repeats < 1 or self.n0 < 1:
            raise ConfigError("repeats and n0 must be >= 1")
        if set(self.overrides) - {"k", "r0", "r1", "r2", "lg_base", "min_neighbors"}:
            raise ConfigError(f"unsupported overrides {sorted(self.overrides)}")

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ConfigError(f"unknown spec fields {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)

    def build_manifold(self):
        params = dict(self.manifold.get("params", {}))
        try:
            return make_manifold(self.manifold["kind"], **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad manifold spec: {exc}") from exc


@dataclass
class SweepRow:
    method: str
    manifold: str
    N: int
    sigma: float
    repeat: int
    seed: int
    sup_error: float
    avg_error: float
    seconds: float
    n_scored: int
    n_excluded: int

    @property
    def failed(self):
        return not (math.isfinite(self.sup_error) and math.isfinite(self.avg_error))


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    spec: ExperimentSpec = None
    timings: list = field(default_factory=list)
    examples: dict = field(default_factory=dict)

    @property
    def n_failed(self):
        return sum(r.failed for r in self.rows)

    def table(self):
        """Rows as a dict of numpy columns."""
        return {name: np.array([getattr(r, name) for r in self.rows]) for name in RESULTS_HEADER}


def cell_seed(seed, i_n, i_sigma, repeat):
    return _random.derive_seed(seed, i_n, i_sigma, repeat)


def make_estimator(method, sigma, model, spec):
    if method == "ysl23":
        return ContractionFitter(sigma=sigma, **spec.overrides)
    params = dict(spec.yx19)
    params.setdefault("d", model.intrinsic_dim)
    return LocalPCAFitter(sigma=sigma, **params)


def cell_data(spec, model, i_n, i_sigma, repeat):
    """Noisy samples and initial band points of one cell."""
    n, sigma = spec.N[i_n], spec.sigma[i_sigma]
    seed = cell_seed(spec.seed, i_n, i_sigma, repeat)
    clean = model.sample(n, _random.derive_seed(seed, _SEED_SAMPLE))
    noisy = add_noise(clean, NoiseModel(sigma), _random.derive_seed(seed, _SEED_NOISE)).noisy
    W = initial_points(
        model, InitialBand.for_sigma(sigma, spec.n0), NoiseModel(sigma), _random.derive_seed(seed, _SEED_INIT)
    )
    return noisy, W


def _run_cell(spec, model, i_n, i_sigma, repeat, keep_points):
    n, sigma = spec.N[i_n], spec.sigma[i_sigma]
    seed = cell_seed(spec.seed, i_n, i_sigma, repeat)
    rows, reports, timings, examples = [], [], [], {}
    setup_error = None
    try:
        noisy, W = cell_data(spec, model, i_n, i_sigma, repeat)
    except (ManifoldFitError, ValueError) as exc:
        log.warning("cell N=%s sigma=%s repeat=%s failed to generate data: %s", n, sigma, repeat, exc)
        noisy = W = None
        setup_error = f"{type(exc).__name__}: {exc}"

    for method in spec.methods:
        config = {"method": method, "N": n, "sigma": sigma}
        sup = avg = math.nan
        seconds = 0.0
        n_scored, n_excluded = 0, spec.n0
        try:
            if W is None:
                raise ManifoldFitError(setup_error)
            est = make_estimator(method, sigma, model, spec)
            t0 = time.perf_counter()
            est.fit(noisy)
            outcome = est.project(W)
            seconds = time.perf_counter() - t0
            config.update(est.config_.snapshot(n) if method == "ysl23" else est.config_.snapshot())
            if method == "yx19":
                config["label"] = "reimplementation"
            mask = None if spec.include_failed else outcome.ok
            n_scored = len(W) if mask is None else int(np.count_nonzero(mask))
            n_excluded = len(W) - n_scored
            sup, avg = sup_and_avg_error(outcome.outputs, model, mask)
            if keep_points:
                examples[method] = (np.array(W), np.array(outcome.outputs), np.array(outcome.status))
        except ManifoldFitError as exc:
            log.warning("%s failed on N=%s sigma=%s repeat=%s: %s", method, n, sigma, repeat, exc)
            config["error"] = f"{type(exc).__name__}: {exc}"
        timings.append(seconds)
        rows.append(SweepRow(
            method=method, manifold=model.kind, N=n, sigma=sigma, repeat=repeat, seed=seed,
            sup_error=sup, avg_error=avg, seconds=seconds if spec.record_seconds else 0.0,
            n_scored=n_scored, n_excluded=n_excluded,
        ))
        reports.append(FitReport(
            method=method, sup_error=sup, avg_error=avg, n_scored=n_scored, n_excluded=n_excluded,
            wall_clock_seconds=seconds if spec.record_seconds else 0.0, config=config, seed=seed,
        ))
    return rows, reports, timings, examples


def run_experiment(spec, n_jobs=None, keep_points=True):
    """Run every cell of ``spec``; failures become rows with NaN errors."""
    model = spec.build_manifold()
    cells = [
        (i_n, i_s, rep)
        for i_n in range(len(spec.N))
        for i_s in range(len(spec.sigma))
        for rep in range(spec.repeats)
    ]
    seeds = [cell_seed(spec.seed, *c) for c in cells]
    assert len(set(seeds)) == len(seeds), "cells must not share an RNG stream"

    def work(c):
        return _run_cell(spec, model, *c, keep_points=keep_points and c == cells[0])

    n_jobs = n_jobs or spec.n_jobs or 1
    if n_jobs == 1:
        outs = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outs = list(pool.map(work, cells))
    result = SweepResult(spec=spec)
    for rows, reports, timings, examples in outs:
        result.rows.extend(rows)
        result.reports.extend(reports)
        result.timings.extend(timings)
        result.examples.update(examples)
    return result


def fit_slope(xs, ys):
    """OLS slope of ``log y`` against ``log x``."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if len(xs) < 3:
        raise ValueError("need at least 3 points for a slope")
    if not (np.all(xs > 0) and np.all(ys > 0)):
        raise NonPositiveInput("log-log slope needs strictly positive values")
    lx, ly = np.log(xs), np.log(ys)
    lx = lx - lx.mean()
    return float(lx @ (ly - ly.mean()) / (lx @ lx))


def aggregate(result, keys):
    """Mean errors and seconds per group; failed rows are left out of the means."""
    groups = {}
    for row in result.rows:
        groups.setdefault(tuple(getattr(row, k) for k in keys), []).append(row)
    out = []
    for key, rows in groups.items():
        good = [r for r in rows if not r.failed]
        mean = lambda name: math.fsum(getattr(r, name) for r in good) / len(good) if good else math.nan
        out.append(dict(zip(keys, key)) | {
            "mean_sup_error": mean("sup_error"),
            "mean_avg_error": mean("avg_error"),
            "mean_seconds": mean("seconds"),
            "repeats": len(good),
            "failed": len(rows) - len(good),
        })
    return out


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path, rows):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for row in rows:
            writer.writerow([_fmt(getattr(row, name)) for name in RESULTS_HEADER])


def read_results_csv(path):
    """Parse a results.csv back into a :class:`SweepResult`."""
    casts = {f.name: f.type for f in fields(SweepRow)}
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULTS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            rows.append(SweepRow(**{k: casts[k](v) for k, v in rec.items()}))
    return SweepResult(rows=rows)


def _write_table(path, records, columns):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_fmt(rec[c]) for c in columns])


def scatter_svg(inputs, outputs, truth, size=480):
    """Minimal SVG scatter of 2-D inputs (grey), outputs (black) and truth (red)."""
    allpts = np.concatenate([np.atleast_2d(p) for p in (inputs, outputs, truth) if len(p)])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * span

    def xy(p):
        return (
            (p[0] - lo[0] + pad) / (span + 2 * pad) * size,
            size - (p[1] - lo[1] + pad) / (span + 2 * pad) * size,
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for pts, colour, r in ((truth, "red", 1.2), (inputs, "grey", 2.0), (outputs, "black", 2.0)):
        for p in pts:
            x, y = xy(p)
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{colour}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_outputs(result, directory):
    """Write results.csv, report.json and per-figure CSVs; return the written paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def add(name):
        path = out / name
        written.append(path)
        return path

    write_results_csv(add("results.csv"), result.rows)
    report = {
        "spec": result.spec.to_dict() if result.spec is not None else None,
        "reports": [r.to_dict() for r in result.reports],
    }
    add("report.json").write_text(json.dumps(_finite(report), indent=2, allow_nan=False) + "\n")

    sweep_cols = ["mean_sup_error", "mean_avg_error", "mean_seconds", "repeats", "failed"]
    _write_table(
        add("sigma_sweep.csv"),
        sorted(aggregate(result, ["method", "N", "sigma"]), key=lambda r: (r["method"], r["N"], -r["sigma"])),
        ["method", "N", "sigma"] + sweep_cols,
    )
    _write_table(
        add("n_sweep.csv"),
        sorted(aggregate(result, ["method", "sigma", "N"]), key=lambda r: (r["method"], -r["sigma"], r["N"])),
        ["method", "sigma", "N"] + sweep_cols,
    )
    _write_table(
        add("method_comparison.csv"),
        sorted(aggregate(result, ["N", "sigma", "method"]), key=lambda r: (r["N"], -r["sigma"], r["method"])),
        ["N", "sigma", "method"] + sweep_cols,
    )
    if result.spec is not None and not result.spec.record_seconds:
        with add("timings.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "N", "sigma", "repeat", "seconds"])
            for row, sec in zip(result.rows, result.timings):
                writer.writerow([row.method, row.N, repr(row.sigma), row.repeat, repr(sec)])

    if result.spec is not None and result.examples:
        model = result.spec.build_manifold()
        if model.ambient_dim == 2:
            truth = model.sample(720, 0)
            for method, (W, outputs, status) in sorted(result.examples.items()):
                add(f"scatter_{method}.svg").write_text(scatter_svg(W, outputs[status == "ok"], truth))
    return written


def _finite(obj):
    """Recursively convert numpy scalars/arrays to JSON types and NaN/inf to None."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj
