"""ADALINE and naive Bayes discriminators for coherent vs. thermal light.

ADALINE is a single linear neuron ``y = w . x + b`` on the seven-entry
feature vector, trained with the delta (Widrow-Hoff) rule against targets
+1 (coherent) and -1 (thermal), and thresholded at zero.

Naive Bayes works on the raw counts with the exact analytic likelihoods of
both sources at a known mean photon number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._kernels import delta_rule_epochs
from .dataset import FeatureVector, Standardizer, SubsetCollection, featurize
from .errors import DomainError, NumericError, TrainingError
from .stats import (
    N_FEATURES,
    PhotonCountSequence,
    SourceKind,
    check_nbar,
    coherent_logpmf,
    thermal_logpmf,
)

__all__ = [
    "DEFAULT_LEARNING_RATE",
    "DEFAULT_ADALINE_EPOCHS",
    "AdalineModel",
    "NaiveBayesModel",
    "delta_step",
    "adaline_train",
    "adaline_predict",
    "learning_rate_sweep",
    "nb_classify",
    "nb_log_odds",
    "evaluate",
    "save_model",
    "load_model",
]

DEFAULT_LEARNING_RATE = 0.001
DEFAULT_ADALINE_EPOCHS = 50


def _as_features(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.probs
    if isinstance(x, PhotonCountSequence):
        return featurize(x).probs
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class AdalineModel:
    """Trained ADALINE neuron.

    ``weights`` and ``bias`` act on raw feature vectors; any input
    standardization used during training has been folded into them.
    """

    weights: np.ndarray
    bias: float
    learning_rate: float
    epochs_trained: int
    max_epochs: int = DEFAULT_ADALINE_EPOCHS
    nbar: float | None = None
    m: int | None = None
    seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != N_FEATURES:
            raise DomainError(f"ADALINE needs {N_FEATURES} weights, got {w.size}")
        if not (np.all(np.isfinite(w)) and math.isfinite(self.bias)):
            raise DomainError("ADALINE parameters must be finite")
        if self.epochs_trained > self.max_epochs:
            raise DomainError("epochs_trained exceeds max_epochs")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    def activation(self, X) -> np.ndarray:
        return _as_features(X) @ self.weights + self.bias

    def predict_targets(self, X) -> np.ndarray:
        """+1/-1 per row; an activation of exactly zero counts as coherent."""
        return np.where(self.activation(X) >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "type": "adaline",
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "eta": self.learning_rate,
            "epochs": self.epochs_trained,
            "nbar": self.nbar,
            "m": self.m,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdalineModel":
        epochs = int(data["epochs"])
        return cls(
            np.array(data["weights"], dtype=float),
            float(data["bias"]),
            float(data["eta"]),
            epochs,
            max(epochs, DEFAULT_ADALINE_EPOCHS),
            data.get("nbar"),
            data.get("m"),
            data.get("seed"),
        )


def delta_step(w, b: float, x, d: float, eta: float) -> tuple[np.ndarray, float]:
    """One delta-rule update: ``w += eta (d - y) x``, ``b += eta (d - y)``."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    err = d - (float(w @ x) + b)
    return w + eta * err * x, b + eta * err


def adaline_train(
    train: SubsetCollection,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    max_epochs: int = DEFAULT_ADALINE_EPOCHS,
    seed: int = 0,
    standardize: bool = True,
    init: str = "zeros",
) -> AdalineModel:
    """Train an ADALINE for exactly ``max_epochs`` epochs.

    Sample order is reshuffled each epoch from ``seed``.  With
    ``standardize`` the rule runs on z-scored features; without it, on the
    raw probabilities.  ``init`` is ``"zeros"`` or ``"uniform"`` (+-0.01).
    """
    if len(train) == 0:
        raise DomainError("training collection is empty")
    if not train.is_balanced:
        raise DomainError("training collection is not class-balanced")
    if not (learning_rate > 0 and math.isfinite(learning_rate)):
        raise DomainError(f"learning rate must be positive, got {learning_rate!r}")
    if max_epochs < 0:
        raise DomainError("max_epochs must be non-negative")

    rng = np.random.default_rng(seed)
    scaler = Standardizer.fit(train.features) if standardize else Standardizer.identity()
    X = np.ascontiguousarray(scaler.transform(train.features))
    d = train.targets.astype(float)
    if init == "zeros":
        w = np.zeros(N_FEATURES)
        b = 0.0
    elif init == "uniform":
        w = rng.uniform(-0.01, 0.01, N_FEATURES)
        b = float(rng.uniform(-0.01, 0.01))
    else:
        raise DomainError(f"unknown initialization {init!r}")
    order = np.zeros((max_epochs, len(train)), dtype=np.int64)
    for e in range(max_epochs):
        order[e] = rng.permutation(len(train))

    b, epochs, diverged = delta_rule_epochs(X, d, order, w, b, float(learning_rate))
    if diverged or not np.all(np.isfinite(w)):
        raise TrainingError(
            f"delta rule diverged at epoch {epochs} with learning rate {learning_rate}",
            epoch=epochs,
            learning_rate=learning_rate,
        )
    w_raw = w / scaler.scale
    b_raw = b - float(w_raw @ scaler.mean)
    return AdalineModel(w_raw, b_raw, float(learning_rate), int(epochs), int(max_epochs), train.nbar, train.m, seed)


def adaline_predict(model: AdalineModel, x) -> SourceKind:
    return SourceKind.from_target(model.predict_targets(_as_features(x).reshape(1, -1))[0])


def learning_rate_sweep(
    train: SubsetCollection,
    test: SubsetCollection,
    rates: Sequence[float] = (0.001, 0.01, 0.1),
    max_epochs: int = DEFAULT_ADALINE_EPOCHS,
    seed: int = 0,
) -> dict[float, float]:
    """Test accuracy per learning rate; diverged runs map to ``nan``."""
    out = {}
    for rate in rates:
        try:
            model = adaline_train(train, rate, max_epochs, seed)
        except TrainingError:
            out[rate] = float("nan")
            continue
        out[rate] = evaluate(model.predict_targets(test.features), test.targets)
    return out


@dataclass(frozen=True)
class NaiveBayesModel:
    nbar: float
    prior: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "nbar", check_nbar(self.nbar))
        if not 0.0 < self.prior < 1.0:
            raise DomainError(f"class prior must lie in (0, 1), got {self.prior!r}")

    def to_dict(self) -> dict:
        return {"type": "nb", "nbar": self.nbar, "prior": self.prior}

    @classmethod
    def from_dict(cls, data: dict) -> "NaiveBayesModel":
        return cls(float(data["nbar"]), float(data.get("prior", 0.5)))


def _log_posteriors(counts: np.ndarray, nbar: float, prior: float) -> tuple[float, float]:
    log_c = math.log(prior) + float(np.sum(coherent_logpmf(counts, nbar)))
    log_t = math.log(1.0 - prior) + float(np.sum(thermal_logpmf(counts, nbar)))
    if not (math.isfinite(log_c) and math.isfinite(log_t)):
        raise NumericError("non-finite log-posterior accumulation")
    return log_c, log_t


def nb_classify(
    counts,
    model: NaiveBayesModel,
    estimate_nbar: bool = False,
) -> tuple[SourceKind, float]:
    """Return the more probable source and the log-posterior margin.

    The margin is ``L_winner - L_loser >= 0``.  A tie goes to thermal.
    With ``estimate_nbar`` the sample mean replaces ``model.nbar``.
    """
    arr = np.asarray(counts.counts if isinstance(counts, PhotonCountSequence) else counts)
    if arr.size == 0:
        raise DomainError("cannot classify an empty count sequence")
    if np.any(arr < 0):
        raise DomainError("photon counts must be non-negative")
    nbar = model.nbar
    if estimate_nbar:
        nbar = float(arr.mean())
        if nbar == 0.0:
            # both likelihoods degenerate to 1 at vanishing nbar
            return SourceKind.THERMAL, 0.0
    log_c, log_t = _log_posteriors(arr, nbar, model.prior)
    if log_c > log_t:
        return SourceKind.COHERENT, log_c - log_t
    return SourceKind.THERMAL, log_t - log_c


def nb_log_odds(counts: np.ndarray, nbar: float, prior: float = 0.5) -> np.ndarray:
    """Signed log-posterior difference ``L_coh - L_th`` per row of ``counts``.

    Vectorized form used by the sweep; positive means coherent.
    """
    counts = np.asarray(counts)
    top = int(counts.max()) if counts.size else 0
    k = np.arange(top + 1)
    ratio = coherent_logpmf(k, nbar) - thermal_logpmf(k, nbar)
    return math.log(prior) - math.log1p(-prior) + ratio[counts].sum(axis=-1)


def evaluate(predictions, labels) -> float:
    """Fraction of ``predictions`` equal to ``labels``.

    Either side may hold ``SourceKind`` values, their string tags, or +1/-1
    targets.
    """
    p = _as_targets(predictions)
    t = _as_targets(labels)
    if p.size == 0:
        raise DomainError("cannot score an empty collection")
    if p.shape != t.shape:
        raise DomainError(f"{p.size} predictions for {t.size} labels")
    return float(np.mean(p == t))


def _as_targets(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype.kind in "iuf":
        return np.where(values > 0, 1, -1)
    return np.array(
        [v if isinstance(v, (int, np.integer)) else SourceKind.parse(v).target for v in values]
    )


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path):
    """Load any persisted model, dispatching on its ``type`` field."""
    data = json.loads(Path(path).read_text())
    kind = data.get("type")
    if kind == "adaline":
        return AdalineModel.from_dict(data)
    if kind == "nb":
        return NaiveBayesModel.from_dict(data)
    if kind in ("mnn", "cnn"):
        from .nets import model_from_dict

        return model_from_dict(data)
    raise DomainError(f"{path}: unknown model type {kind!r}")
