"""Subset collections: draw, featurize, split and persist.

A *subset* is ``m`` photon counts from one source.  Its feature vector is
the empirical distribution ``[P(0), ..., P(5), P(>=6)]``.  Collections hold
an equal number of coherent and thermal subsets, with the raw counts kept
next to the features because naive Bayes works on the counts directly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError
from .seeding import derive_seed
from .stats import N_FEATURES, PhotonCountSequence, SourceKind, _draw, check_nbar, sample_counts

__all__ = [
    "GENERATOR_VERSION",
    "FEATURE_COLUMNS",
    "FeatureVector",
    "SubsetCollection",
    "Standardizer",
    "featurize",
    "featurize_matrix",
    "draw_subsets",
    "build_collection",
    "save_collection",
    "load_collection",
]

GENERATOR_VERSION = "1"
FEATURE_COLUMNS = ["p0", "p1", "p2", "p3", "p4", "p5", "p6plus"]

_CLASSES = (SourceKind.COHERENT, SourceKind.THERMAL)
# key used to derive the shuffle seed; class keys are 0 and 1
_SHUFFLE_KEY = 2
_POOL_KEY = 3


@dataclass(frozen=True, eq=False)
class FeatureVector:
    probs: np.ndarray
    m: int
    nbar: float | None = None
    source: SourceKind | None = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if probs.size != N_FEATURES:
            raise DomainError(f"feature vector needs {N_FEATURES} entries, got {probs.size}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)


def featurize_matrix(counts: np.ndarray) -> np.ndarray:
    """Row-wise empirical distributions of a ``(n_subsets, m)`` count array."""
    counts = np.asarray(counts)
    if counts.ndim != 2 or counts.shape[1] < 1:
        raise DomainError("expected a non-empty 2-D count array")
    m = counts.shape[1]
    clipped = np.minimum(counts, N_FEATURES - 1)
    rows = np.repeat(np.arange(counts.shape[0]), m)
    hist = np.zeros((counts.shape[0], N_FEATURES))
    np.add.at(hist, (rows, clipped.ravel()), 1.0)
    return hist / m


def featurize(counts) -> FeatureVector:
    seq = counts if isinstance(counts, PhotonCountSequence) else None
    arr = np.asarray(seq.counts if seq is not None else counts)
    if arr.size == 0:
        raise DomainError("cannot featurize an empty count sequence")
    if np.any(arr < 0):
        raise DomainError("photon counts must be non-negative")
    hist = np.bincount(np.minimum(arr.ravel(), N_FEATURES - 1), minlength=N_FEATURES)
    return FeatureVector(
        hist / arr.size,
        int(arr.size),
        seq.nbar if seq is not None else None,
        seq.source if seq is not None else None,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring fitted on a training set."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        scale = X.std(axis=0)
        # constant columns (e.g. an always-empty P(>=6) bucket) pass through unscaled
        scale = np.where(scale > 0, scale, 1.0)
        return cls(X.mean(axis=0), scale)

    @classmethod
    def identity(cls, n: int = N_FEATURES) -> "Standardizer":
        return cls(np.zeros(n), np.ones(n))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


@dataclass(frozen=True, eq=False)
class SubsetCollection:
    """Labelled feature vectors plus their raw counts.

    ``targets`` is +1 for coherent and -1 for thermal.
    """

    features: np.ndarray
    targets: np.ndarray
    counts: np.ndarray
    subset_ids: np.ndarray
    nbar: float
    m: int
    n_subsets_per_class: int
    split_fraction: float

    def __len__(self) -> int:
        return int(self.targets.size)

    def __eq__(self, other):
        if not isinstance(other, SubsetCollection):
            return NotImplemented
        return (
            self.nbar == other.nbar
            and self.m == other.m
            and self.n_subsets_per_class == other.n_subsets_per_class
            and self.split_fraction == other.split_fraction
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.subset_ids, other.subset_ids)
        )

    __hash__ = None

    @property
    def sources(self) -> list[SourceKind]:
        return [SourceKind.from_target(t) for t in self.targets]

    @property
    def class_counts(self) -> dict[SourceKind, int]:
        n_coh = int(np.sum(self.targets > 0))
        return {SourceKind.COHERENT: n_coh, SourceKind.THERMAL: len(self) - n_coh}

    @property
    def is_balanced(self) -> bool:
        c = self.class_counts
        return c[SourceKind.COHERENT] == c[SourceKind.THERMAL]

    def vectors(self) -> list[FeatureVector]:
        return [
            FeatureVector(f, self.m, self.nbar, s)
            for f, s in zip(self.features, self.sources)
        ]

    def sequences(self) -> list[PhotonCountSequence]:
        return [PhotonCountSequence(c, s, self.nbar) for c, s in zip(self.counts, self.sources)]

    def take(self, index) -> "SubsetCollection":
        index = np.asarray(index)
        return SubsetCollection(
            self.features[index],
            self.targets[index],
            self.counts[index],
            self.subset_ids[index],
            self.nbar,
            self.m,
            self.n_subsets_per_class,
            self.split_fraction,
        )


def draw_subsets(
    source: SourceKind,
    nbar: float,
    m: int,
    n_subsets: int,
    seed: int,
    mode: str = "fresh",
) -> np.ndarray:
    """Raw counts for ``n_subsets`` subsets of one source, shape ``(n_subsets, m)``.

    ``fresh`` draws every subset from its own derived seed; ``pool`` carves
    one ``n_subsets * m`` measurement run into consecutive disjoint blocks.
    """
    source = SourceKind.parse(source)
    class_key = source.index
    if mode == "fresh":
        return np.stack(
            [
                sample_counts(source, nbar, m, derive_seed(seed, class_key, j)).counts
                for j in range(n_subsets)
            ]
        )
    if mode == "pool":
        rng = np.random.default_rng(derive_seed(seed, class_key, _POOL_KEY))
        return _draw(source, check_nbar(nbar), n_subsets * m, rng).reshape(n_subsets, m)
    raise ConfigurationError(f"unknown sampling mode {mode!r}")


def build_collection(
    nbar: float,
    m: int,
    n_subsets_per_class: int = 1000,
    split_fraction: float = 0.7,
    seed: int = 0,
    mode: str = "fresh",
) -> tuple[SubsetCollection, SubsetCollection]:
    """Draw a balanced collection and split it per class into train and test."""
    nbar = check_nbar(nbar)
    if int(m) != m or m < 1:
        raise DomainError(f"subset size must be a positive integer, got {m!r}")
    if int(n_subsets_per_class) != n_subsets_per_class or n_subsets_per_class < 2:
        raise ConfigurationError("need at least two subsets per class")
    if not 0.0 < split_fraction < 1.0:
        raise ConfigurationError(f"split fraction must lie in (0, 1), got {split_fraction!r}")
    m = int(m)
    n = int(n_subsets_per_class)
    n_train = int(round(split_fraction * n))
    if n_train == 0 or n_train == n:
        raise ConfigurationError(
            f"split fraction {split_fraction} leaves an empty partition with {n} subsets per class"
        )

    rng = np.random.default_rng(derive_seed(seed, _SHUFFLE_KEY))
    parts = {"train": [], "test": []}
    for source in _CLASSES:
        counts = draw_subsets(source, nbar, m, n, seed, mode)
        ids = source.index * n + np.arange(n)
        order = rng.permutation(n)
        for name, idx in (("train", order[:n_train]), ("test", order[n_train:])):
            parts[name].append((counts[idx], ids[idx], np.full(idx.size, source.target)))

    out = []
    for name in ("train", "test"):
        counts = np.concatenate([p[0] for p in parts[name]])
        ids = np.concatenate([p[1] for p in parts[name]])
        targets = np.concatenate([p[2] for p in parts[name]])
        mix = rng.permutation(targets.size)
        out.append(
            SubsetCollection(
                featurize_matrix(counts[mix]),
                targets[mix],
                counts[mix],
                ids[mix],
                nbar,
                m,
                n,
                float(split_fraction),
            )
        )
    return out[0], out[1]


def _write_split(coll: SubsetCollection, features_path: Path, counts_path: Path) -> None:
    with open(features_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subset_id", "class", "nbar", "m", *FEATURE_COLUMNS])
        for sid, t, f in zip(coll.subset_ids.tolist(), coll.targets.tolist(), coll.features.tolist()):
            w.writerow([sid, SourceKind.from_target(t).value, repr(coll.nbar), coll.m, *map(repr, f)])
    with open(counts_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subset_id", "bin_index", "count"])
        for sid, row in zip(coll.subset_ids.tolist(), coll.counts.tolist()):
            for j, c in enumerate(row):
                w.writerow([sid, j, c])


def save_collection(
    directory,
    train: SubsetCollection,
    test: SubsetCollection,
    seed: int,
    mode: str = "fresh",
) -> Path:
    """Write ``{train,test}.csv``, ``{train,test}_counts.csv`` and ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, coll in (("train", train), ("test", test)):
        _write_split(coll, directory / f"{name}.csv", directory / f"{name}_counts.csv")
    manifest = {
        "seed": int(seed),
        "nbar": train.nbar,
        "m": train.m,
        "n_subsets_per_class": train.n_subsets_per_class,
        "split_fraction": train.split_fraction,
        "mode": mode,
        "generator_version": GENERATOR_VERSION,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _read_split(features_path: Path, counts_path: Path, manifest: dict) -> SubsetCollection:
    with open(features_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ids = np.array([int(r["subset_id"]) for r in rows], dtype=np.int64)
    targets = np.array([SourceKind.parse(r["class"]).target for r in rows], dtype=np.int64)
    features = np.array([[float(r[c]) for c in FEATURE_COLUMNS] for r in rows])
    m = int(manifest["m"])
    counts = np.zeros((ids.size, m), dtype=np.int64)
    row_of = {sid: i for i, sid in enumerate(ids.tolist())}
    with open(counts_path, newline="") as fh:
        for r in csv.DictReader(fh):
            counts[row_of[int(r["subset_id"])], int(r["bin_index"])] = int(r["count"])
    return SubsetCollection(
        features,
        targets,
        counts,
        ids,
        float(manifest["nbar"]),
        m,
        int(manifest["n_subsets_per_class"]),
        float(manifest["split_fraction"]),
    )


def load_collection(directory) -> tuple[SubsetCollection, SubsetCollection, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    train = _read_split(directory / "train.csv", directory / "train_counts.csv", manifest)
    test = _read_split(directory / "test.csv", directory / "test_counts.csv", manifest)
    return train, test, manifest
