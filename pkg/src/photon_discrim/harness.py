"""Sweep engine and plot-data exporters.

Everything here writes plain CSV so results can be plotted with any tool.
All randomness flows from one master seed through :func:`derive_seed`, so
a sweep is reproducible byte-for-byte regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import DEFAULT_ADALINE_EPOCHS, DEFAULT_LEARNING_RATE, adaline_train, nb_log_odds
from .dataset import SubsetCollection, build_collection, draw_subsets, featurize_matrix
from .errors import ConfigurationError, PhotonDiscrimError
from .nets import cnn_train, mnn_train
from .seeding import derive_seed, nbar_key
from .stats import CANONICAL_NBARS, SourceKind, check_nbar, pmf, sample_counts

log = logging.getLogger(__name__)

__all__ = [
    "CLASSIFIERS",
    "REPORT_HEADER",
    "HISTOGRAM_HEADER",
    "PROJECTION_HEADER",
    "SweepConfig",
    "AccuracyRow",
    "AccuracyReport",
    "load_config",
    "run_sweep",
    "emit_histograms",
    "empirical_pmf",
    "tv_distance",
    "export_projection",
    "centroid_distance",
    "separation_ratio",
    "width_sweep",
    "write_gnuplot_script",
]

CLASSIFIERS = ("adaline", "cnn", "mnn", "nb")
ERROR_BAR_MODES = ("partition", "retrain")
REPORT_HEADER = ["classifier", "nbar", "m", "mean_accuracy", "std_accuracy", "repetitions", "seed"]
HISTOGRAM_HEADER = ["n", "empirical_coherent", "analytic_coherent", "empirical_thermal", "analytic_thermal"]
PROJECTION_HEADER = ["class", "p0", "p1", "p2"]
REPORT_FILENAME = "accuracy_report.csv"
CONFIG_SCHEMA = 1

_CLASSIFIER_KEYS = {name: i + 10 for i, name in enumerate(CLASSIFIERS)}


def _default_error_bars() -> dict:
    # naive Bayes partitions one test pool; trained models are retrained
    return {"nb": "partition", "adaline": "retrain", "mnn": "retrain", "cnn": "retrain"}


@dataclass
class SweepConfig:
    nbar_list: Sequence[float] = CANONICAL_NBARS
    m_list: Sequence[int] = tuple(range(10, 161, 10))
    classifiers: Sequence[str] = ("adaline", "nb")
    n_subsets_per_class: int = 1000
    repetitions: int = 10
    master_seed: int = 0
    output_dir: str = "results"
    split_fraction: float = 0.7
    learning_rate: float = DEFAULT_LEARNING_RATE
    adaline_epochs: int = DEFAULT_ADALINE_EPOCHS
    mnn_epochs: int = 200
    mnn_hidden: int = 10
    cnn_epochs: int = 200
    sampling_mode: str = "fresh"
    error_bars: dict = field(default_factory=_default_error_bars)
    workers: int = 1

    def __post_init__(self):
        self.nbar_list = tuple(check_nbar(x) for x in self.nbar_list)
        self.m_list = tuple(int(m) for m in self.m_list)
        self.classifiers = tuple(str(c).lower() for c in self.classifiers)
        merged = _default_error_bars()
        merged.update(self.error_bars or {})
        self.error_bars = merged
        self.validate()

    def validate(self) -> None:
        if not self.nbar_list or not self.m_list or not self.classifiers:
            raise ConfigurationError("nbar_list, m_list and classifiers must be non-empty")
        if any(m < 1 for m in self.m_list):
            raise ConfigurationError("every subset size must be >= 1")
        unknown = set(self.classifiers) - set(CLASSIFIERS)
        if unknown:
            raise ConfigurationError(f"unknown classifiers: {sorted(unknown)}")
        if len(set(self.classifiers)) != len(self.classifiers):
            raise ConfigurationError("classifiers must not repeat")
        if self.repetitions < 2:
            raise ConfigurationError("repetitions must be >= 2 to form error bars")
        if self.n_subsets_per_class < 2:
            raise ConfigurationError("need at least two subsets per class")
        for name, mode in self.error_bars.items():
            if mode not in ERROR_BAR_MODES:
                raise ConfigurationError(f"error-bar mode for {name} must be one of {ERROR_BAR_MODES}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nbar_list"] = list(self.nbar_list)
        d["m_list"] = list(self.m_list)
        d["classifiers"] = list(self.classifiers)
        return {"schema": CONFIG_SCHEMA, **d}

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        schema = data.pop("schema", None)
        if schema != CONFIG_SCHEMA:
            raise ConfigurationError(f"config schema must be {CONFIG_SCHEMA}, got {schema!r}")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return SweepConfig.from_dict(data)


@dataclass(frozen=True)
class AccuracyRow:
    classifier: str
    nbar: float
    m: int
    mean_accuracy: float
    std_accuracy: float
    repetitions: int
    seed: int

    @property
    def failed(self) -> bool:
        return math.isnan(self.mean_accuracy)


@dataclass
class AccuracyReport:
    rows: list[AccuracyRow]
    failures: list[dict] = field(default_factory=list)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow(
                [r.classifier, repr(r.nbar), r.m, repr(r.mean_accuracy), repr(r.std_accuracy), r.repetitions, r.seed]
            )
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())
        return path

    @classmethod
    def from_csv(cls, path) -> "AccuracyReport":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != REPORT_HEADER:
                raise ConfigurationError(f"{path}: unexpected report header {header}")
            rows = [
                AccuracyRow(c, float(nb), int(m), float(mu), float(sd), int(reps), int(seed))
                for c, nb, m, mu, sd, reps, seed in reader
            ]
        return cls(rows)

    def select(self, classifier: str, nbar: float | None = None) -> list[AccuracyRow]:
        return [
            r
            for r in self.rows
            if r.classifier == classifier and (nbar is None or math.isclose(r.nbar, nbar))
        ]

    def curve(self, classifier: str, nbar: float) -> tuple[np.ndarray, np.ndarray]:
        rows = sorted(self.select(classifier, nbar), key=lambda r: r.m)
        return np.array([r.m for r in rows]), np.array([r.mean_accuracy for r in rows])


def _evaluation_set(classifier: str, train: SubsetCollection, test: SubsetCollection) -> SubsetCollection:
    # naive Bayes has nothing to fit, so every subset of the collection is test data
    if classifier != "nb":
        return test
    return SubsetCollection(
        np.concatenate([train.features, test.features]),
        np.concatenate([train.targets, test.targets]),
        np.concatenate([train.counts, test.counts]),
        np.concatenate([train.subset_ids, test.subset_ids]),
        test.nbar,
        test.m,
        test.n_subsets_per_class,
        test.split_fraction,
    )


def _predict(classifier: str, config: SweepConfig, train: SubsetCollection, test: SubsetCollection, seed: int):
    if classifier == "nb":
        return np.where(nb_log_odds(test.counts, test.nbar) > 0, 1, -1)
    if classifier == "adaline":
        model = adaline_train(train, config.learning_rate, config.adaline_epochs, seed)
    elif classifier == "mnn":
        model = mnn_train(train, config.mnn_epochs, seed, hidden=config.mnn_hidden)
    else:
        model = cnn_train(train, config.cnn_epochs, seed)
    return model.predict_targets(test.features)


def _balanced_groups(targets: np.ndarray, n_groups: int) -> list[np.ndarray]:
    per_class = [np.array_split(np.flatnonzero(targets == t), n_groups) for t in (1, -1)]
    return [np.concatenate([per_class[0][g], per_class[1][g]]) for g in range(n_groups)]


def _run_cell(config: SweepConfig, nbar: float, m: int) -> tuple[list[AccuracyRow], list[dict]]:
    reps = config.repetitions
    cache: dict[int, tuple[SubsetCollection, SubsetCollection]] = {}

    def collection(rep: int):
        if rep not in cache:
            cache[rep] = build_collection(
                nbar,
                m,
                config.n_subsets_per_class,
                config.split_fraction,
                derive_seed(config.master_seed, nbar_key(nbar), m, rep),
                config.sampling_mode,
            )
        return cache[rep]

    rows, failures = [], []
    for clf in config.classifiers:
        key = _CLASSIFIER_KEYS[clf]
        try:
            if config.error_bars[clf] == "retrain":
                accs = []
                for rep in range(reps):
                    train, test = collection(rep)
                    test = _evaluation_set(clf, train, test)
                    seed = derive_seed(config.master_seed, nbar_key(nbar), m, rep, key)
                    accs.append(float(np.mean(_predict(clf, config, train, test, seed) == test.targets)))
            else:
                train, test = collection(0)
                test = _evaluation_set(clf, train, test)
                seed = derive_seed(config.master_seed, nbar_key(nbar), m, 0, key)
                correct = _predict(clf, config, train, test, seed) == test.targets
                accs = [float(np.mean(correct[g])) for g in _balanced_groups(test.targets, reps)]
            mean, std = float(np.mean(accs)), float(np.std(accs, ddof=1))
        except PhotonDiscrimError as exc:
            log.warning("cell %s nbar=%s m=%s failed: %s", clf, nbar, m, exc)
            failures.append({"classifier": clf, "nbar": nbar, "m": m, "error": str(exc)})
            mean = std = float("nan")
        rows.append(AccuracyRow(clf, nbar, m, mean, std, reps, config.master_seed))
    return rows, failures


def _run_cell_star(args):
    return _run_cell(*args)


def run_sweep(config: SweepConfig, write: bool = True) -> AccuracyReport:
    """Evaluate every (classifier, nbar, m) cell and write the report CSV."""
    out_dir = Path(config.output_dir)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(config, nbar, m) for nbar in config.nbar_list for m in config.m_list]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell_star, cells))
    else:
        results = [_run_cell(*c) for c in cells]
    rows = [r for cell_rows, _ in results for r in cell_rows]
    failures = [f for _, cell_failures in results for f in cell_failures]
    rows.sort(key=lambda r: (r.classifier, r.nbar, r.m))
    report = AccuracyReport(rows, failures)
    if write:
        report.to_csv(out_dir / REPORT_FILENAME)
        if failures:
            (out_dir / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    return report


def empirical_pmf(counts, max_n: int) -> np.ndarray:
    """Relative frequencies of 0..max_n; mass above ``max_n`` is dropped."""
    counts = np.asarray(counts)
    hist = np.bincount(counts[counts <= max_n], minlength=max_n + 1)
    return hist / counts.size


def tv_distance(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def emit_histograms(nbar: float, n_measurements: int = 1_000_000, seed: int = 0, path=None, max_n: int = 12):
    """Empirical vs. analytic photon-number histograms for both sources."""
    nbar = check_nbar(nbar)
    if n_measurements < 1:
        raise ConfigurationError("n_measurements must be >= 1")
    columns = []
    for source in (SourceKind.COHERENT, SourceKind.THERMAL):
        counts = sample_counts(source, nbar, n_measurements, derive_seed(seed, source.index)).counts
        columns.append(empirical_pmf(counts, max_n))
        columns.append(np.array([pmf(source, n, nbar) for n in range(max_n + 1)]))
    rows = [(n, *(float(c[n]) for c in columns)) for n in range(max_n + 1)]
    if path is not None:
        _write_rows(path, HISTOGRAM_HEADER, rows)
    return rows


def export_projection(nbar: float, m: int, n_subsets_per_class: int, seed: int = 0, path=None):
    """Rows ``(class, p0, p1, p2)`` for every subset of both sources."""
    rows = []
    for source in (SourceKind.COHERENT, SourceKind.THERMAL):
        feats = featurize_matrix(draw_subsets(source, nbar, m, n_subsets_per_class, seed))
        rows.extend((source.value, *map(float, f[:3])) for f in feats)
    if path is not None:
        _write_rows(path, PROJECTION_HEADER, rows)
    return rows


def _class_points(rows) -> tuple[np.ndarray, np.ndarray]:
    pts = {s.value: [] for s in SourceKind}
    for cls, *p in rows:
        pts[cls].append(p)
    return np.array(pts[SourceKind.COHERENT.value]), np.array(pts[SourceKind.THERMAL.value])


def centroid_distance(rows) -> float:
    """Euclidean distance between the class centroids of projection rows."""
    a, b = _class_points(rows)
    return float(np.linalg.norm(a.mean(axis=0) - b.mean(axis=0)))


def separation_ratio(rows) -> float:
    """Centroid distance over the pooled RMS distance of points to their own centroid.

    Each centroid converges to the analytic (P(0), P(1), P(2)) of its source,
    so the distance alone does not depend on the subset size; the spread
    shrinks like 1/sqrt(m), which is what makes the classes pull apart.
    """
    a, b = _class_points(rows)
    spread = np.concatenate([a - a.mean(axis=0), b - b.mean(axis=0)])
    rms = math.sqrt(float(np.mean(np.sum(spread**2, axis=1))))
    return centroid_distance(rows) / rms if rms > 0 else math.inf


def width_sweep(
    nbar: float,
    m: int,
    widths: Sequence[int] = (10, 50, 100, 200),
    n_subsets_per_class: int = 1000,
    repetitions: int = 3,
    epochs: int = 200,
    seed: int = 0,
    path=None,
):
    """MNN test accuracy versus hidden width; every width sees the same data."""
    accs = {w: [] for w in widths}
    for rep in range(repetitions):
        train, test = build_collection(nbar, m, n_subsets_per_class, 0.7, derive_seed(seed, nbar_key(nbar), m, rep))
        for w in widths:
            model = mnn_train(train, epochs, derive_seed(seed, rep, w), hidden=w)
            accs[w].append(float(np.mean(model.predict_targets(test.features) == test.targets)))
    rows = [(w, float(np.mean(a)), float(np.std(a, ddof=1)) if len(a) > 1 else 0.0) for w, a in accs.items()]
    if path is not None:
        _write_rows(path, ["width", "mean_accuracy", "std_accuracy"], rows)
    return rows


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


_GNUPLOT = {
    "accuracy": """set datafile separator ','
set key autotitle columnhead
set xlabel 'data points per subset (M)'
set ylabel 'accuracy'
plot for [c in "{classifiers}"] for [nb in "{nbars}"] '{csv}' \\
    using (strcol(1) eq c && abs($2 - nb) < 1e-9 ? $3 : 1/0):4:5 with yerrorlines title c.' nbar='.nb
""",
    "histogram": """set datafile separator ','
set key autotitle columnhead
set style data histograms
set xlabel 'photon number n'
set ylabel 'probability'
plot '{csv}' using 2:xtic(1), '' using 3 with linespoints, '' using 4, '' using 5 with linespoints
""",
    "projection": """set datafile separator ','
set xlabel 'P(0)'; set ylabel 'P(1)'; set zlabel 'P(2)'
splot '{csv}' using (strcol(1) eq 'coherent' ? $2 : 1/0):3:4 title 'coherent', \\
      '' using (strcol(1) eq 'thermal' ? $2 : 1/0):3:4 title 'thermal'
""",
}


def write_gnuplot_script(csv_path, kind: str, script_path=None, report: AccuracyReport | None = None) -> Path:
    if kind not in _GNUPLOT:
        raise ConfigurationError(f"no gnuplot template for {kind!r}")
    csv_path = Path(csv_path)
    script_path = Path(script_path) if script_path else csv_path.with_suffix(".gp")
    classifiers = " ".join(sorted({r.classifier for r in report.rows})) if report else " ".join(CLASSIFIERS)
    nbars = " ".join(sorted({repr(r.nbar) for r in report.rows})) if report else " ".join(map(repr, CANONICAL_NBARS))
    script_path.write_text(_GNUPLOT[kind].format(csv=csv_path.name, classifiers=classifiers, nbars=nbars))
    return script_path
