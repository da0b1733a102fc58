"""Small from-scratch neural baselines on the seven-entry feature vector.

Two architectures, both ending in a two-way softmax (index 0 = coherent,
index 1 = thermal) and trained on mean cross-entropy:

* ``MnnModel``: one sigmoid hidden layer (10 units by default).
* ``CnnModel``: conv -> conv -> max-pool -> conv -> max-pool -> dense ->
  softmax, ReLU after every hidden layer, ``same`` padding throughout.

Training is full-batch gradient descent with momentum.  Inputs are z-scored
with statistics from the training set; the scaler is stored in the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureVector, Standardizer, SubsetCollection
from .errors import DomainError, TrainingError
from .stats import N_FEATURES, SourceKind

__all__ = [
    "SCHEMA_VERSION",
    "DEFAULT_CNN_ARCHITECTURE",
    "MomentumGD",
    "MnnModel",
    "CnnModel",
    "softmax",
    "cross_entropy",
    "max_pool1d",
    "flattened_length",
    "init_mnn",
    "init_cnn",
    "mnn_train",
    "mnn_predict",
    "cnn_train",
    "cnn_predict",
    "numerical_gradient",
    "model_from_dict",
]

SCHEMA_VERSION = 1

DEFAULT_CNN_ARCHITECTURE = {
    "input_length": N_FEATURES,
    "kernel": 3,
    "conv1": 8,
    "conv2": 16,
    "conv3": 16,
    "pool": 2,
    "dense": 16,
    "padding": "same",
    "layers": ["conv1", "conv2", "pool", "conv3", "pool", "flatten", "dense", "softmax"],
}


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels ``y``."""
    p = probs[np.arange(y.size), y]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _glorot(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# --- 1-D convolution and pooling -------------------------------------------------


def _conv_forward(x, W, b):
    """``same``-padded stride-1 convolution on channels-last ``x`` (N, L, C).

    ``W`` has shape (out, in, kernel); the im2col columns are returned for
    the backward pass.
    """
    n, length, c = x.shape
    out_ch, _, k = W.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    cols = np.concatenate([xp[:, j : j + length, :] for j in range(k)], axis=2)  # (N, L, K*C)
    wm = W.transpose(2, 1, 0).reshape(k * c, out_ch)
    return cols @ wm + b, cols


def _conv_backward(dout, cols, W):
    n, length, out_ch = dout.shape
    _, c, k = W.shape
    pad = k // 2
    wm = W.transpose(2, 1, 0).reshape(k * c, out_ch)
    d2 = dout.reshape(n * length, out_ch)
    dW = (cols.reshape(n * length, k * c).T @ d2).reshape(k, c, out_ch).transpose(2, 1, 0)
    db = d2.sum(axis=0)
    dcols = (dout @ wm.T).reshape(n, length, k, c)
    dxp = np.zeros((n, length + 2 * pad, c))
    for j in range(k):
        dxp[:, j : j + length, :] += dcols[:, :, j, :]
    return dxp[:, pad : pad + length, :], dW, db


def _pool_forward(x, width):
    """Non-overlapping max-pool along axis 1 of (N, L, C); first maximum wins ties."""
    n, length, c = x.shape
    out_len = length // width
    xr = x[:, : out_len * width, :].reshape(n, out_len, width, c)
    idx = xr.argmax(axis=2)
    mask = np.arange(width)[None, None, :, None] == idx[:, :, None, :]
    return xr.max(axis=2), mask


def _pool_backward(dout, mask, length):
    n, out_len, width, c = mask.shape
    dx = np.zeros((n, length, c))
    dx[:, : out_len * width, :] = (mask * dout[:, :, None, :]).reshape(n, out_len * width, c)
    return dx


def max_pool1d(values, width: int = 2) -> np.ndarray:
    """Non-overlapping max-pooling of a 1-D sequence; a trailing remainder is dropped."""
    v = np.asarray(values, dtype=float)
    out, _ = _pool_forward(v.reshape(1, -1, 1), width)
    return out.reshape(-1)


def flattened_length(arch: dict = DEFAULT_CNN_ARCHITECTURE) -> int:
    length = arch["input_length"]
    for layer in arch["layers"]:
        if layer == "pool":
            length //= arch["pool"]
    if length < 1:
        raise DomainError("architecture pools the input away")
    return arch["conv3"] * length


# --- optimizer -------------------------------------------------------------------


@dataclass
class MomentumGD:
    learning_rate: float = 0.05
    momentum: float = 0.9
    _velocity: dict = field(default_factory=dict, repr=False)

    def step(self, params: dict, grads: dict) -> None:
        for name, g in grads.items():
            v = self._velocity.get(name)
            v = -self.learning_rate * g if v is None else self.momentum * v - self.learning_rate * g
            self._velocity[name] = v
            params[name] += v


# --- models ----------------------------------------------------------------------


@dataclass(eq=False)
class _Network:
    params: dict
    scaler: Standardizer
    epochs_trained: int = 0
    seed: int | None = None

    kind = ""

    def loss_and_grad(self, X, y):
        raise NotImplementedError

    def probabilities(self, X) -> np.ndarray:
        raise NotImplementedError

    @property
    def architecture(self) -> dict:
        raise NotImplementedError

    def predict(self, x) -> tuple[SourceKind, np.ndarray]:
        """Label and class probabilities for one feature vector; ties go to coherent."""
        probs = self.probabilities(_as_matrix(x))[0]
        label = SourceKind.COHERENT if probs[0] >= probs[1] else SourceKind.THERMAL
        return label, probs

    def predict_targets(self, X) -> np.ndarray:
        probs = self.probabilities(_as_matrix(X))
        return np.where(probs[:, 0] >= probs[:, 1], 1, -1)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in sorted(self.params)])

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "type": self.kind,
            "architecture": self.architecture,
            "params": {
                k: {"shape": list(v.shape), "values": v.ravel().tolist()}
                for k, v in sorted(self.params.items())
            },
            "scaler": {"mean": self.scaler.mean.tolist(), "scale": self.scaler.scale.tolist()},
            "epochs": self.epochs_trained,
            "seed": self.seed,
        }


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        x = x.probs
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != N_FEATURES:
        raise DomainError(f"expected {N_FEATURES} features per row, got {X.shape[1]}")
    return X


@dataclass(eq=False)
class MnnModel(_Network):
    kind = "mnn"

    @property
    def hidden_width(self) -> int:
        return self.params["W1"].shape[0]

    @property
    def architecture(self) -> dict:
        return {"input_length": N_FEATURES, "hidden": self.hidden_width, "hidden_activation": "sigmoid"}

    def _forward(self, X):
        Z = self.scaler.transform(X)
        h = _sigmoid(Z @ self.params["W1"].T + self.params["b1"])
        probs = softmax(h @ self.params["W2"].T + self.params["b2"])
        return Z, h, probs

    def probabilities(self, X) -> np.ndarray:
        return self._forward(X)[2]

    def loss_and_grad(self, X, y):
        Z, h, probs = self._forward(X)
        loss = cross_entropy(probs, y)
        dlogits = probs.copy()
        dlogits[np.arange(y.size), y] -= 1.0
        dlogits /= y.size
        dh = dlogits @ self.params["W2"]
        dz = dh * h * (1.0 - h)
        grads = {
            "W2": dlogits.T @ h,
            "b2": dlogits.sum(axis=0),
            "W1": dz.T @ Z,
            "b1": dz.sum(axis=0),
        }
        return loss, grads


@dataclass(eq=False)
class CnnModel(_Network):
    arch: dict = field(default_factory=lambda: dict(DEFAULT_CNN_ARCHITECTURE))

    kind = "cnn"

    @property
    def architecture(self) -> dict:
        return dict(self.arch)

    def _forward(self, X):
        p = self.params
        pool = self.arch["pool"]
        c = {}
        a0 = self.scaler.transform(X)[:, :, None]
        c["z1"], c["c1"] = _conv_forward(a0, p["conv1_w"], p["conv1_b"])
        a1 = np.maximum(c["z1"], 0.0)
        c["z2"], c["c2"] = _conv_forward(a1, p["conv2_w"], p["conv2_b"])
        a2 = np.maximum(c["z2"], 0.0)
        q1, c["p1"] = _pool_forward(a2, pool)
        c["z3"], c["c3"] = _conv_forward(q1, p["conv3_w"], p["conv3_b"])
        a3 = np.maximum(c["z3"], 0.0)
        q2, c["p2"] = _pool_forward(a3, pool)
        # flatten channel-major so the layout matches (channels, length)
        c["flat"] = q2.transpose(0, 2, 1).reshape(q2.shape[0], -1)
        c["q2_shape"] = q2.shape
        c["z4"] = c["flat"] @ p["dense_w"].T + p["dense_b"]
        c["a4"] = np.maximum(c["z4"], 0.0)
        probs = softmax(c["a4"] @ p["out_w"].T + p["out_b"])
        return probs, c

    def probabilities(self, X) -> np.ndarray:
        return self._forward(X)[0]

    def loss_and_grad(self, X, y):
        p = self.params
        probs, c = self._forward(X)
        loss = cross_entropy(probs, y)
        g = {}
        dlogits = probs.copy()
        dlogits[np.arange(y.size), y] -= 1.0
        dlogits /= y.size
        g["out_w"] = dlogits.T @ c["a4"]
        g["out_b"] = dlogits.sum(axis=0)
        dz4 = (dlogits @ p["out_w"]) * (c["z4"] > 0)
        g["dense_w"] = dz4.T @ c["flat"]
        g["dense_b"] = dz4.sum(axis=0)
        n, l2, ch = c["q2_shape"]
        dq2 = (dz4 @ p["dense_w"]).reshape(n, ch, l2).transpose(0, 2, 1)
        dz3 = _pool_backward(dq2, c["p2"], c["z3"].shape[1]) * (c["z3"] > 0)
        dq1, g["conv3_w"], g["conv3_b"] = _conv_backward(dz3, c["c3"], p["conv3_w"])
        dz2 = _pool_backward(dq1, c["p1"], c["z2"].shape[1]) * (c["z2"] > 0)
        da1, g["conv2_w"], g["conv2_b"] = _conv_backward(dz2, c["c2"], p["conv2_w"])
        dz1 = da1 * (c["z1"] > 0)
        _, g["conv1_w"], g["conv1_b"] = _conv_backward(dz1, c["c1"], p["conv1_w"])
        return loss, g


def init_mnn(hidden: int = 10, seed: int = 0, scaler: Standardizer | None = None) -> MnnModel:
    rng = np.random.default_rng(seed)
    params = {
        "W1": _glorot(rng, (hidden, N_FEATURES), N_FEATURES, hidden),
        "b1": np.zeros(hidden),
        "W2": _glorot(rng, (2, hidden), hidden, 2),
        "b2": np.zeros(2),
    }
    return MnnModel(params, scaler or Standardizer.identity(), 0, seed)


def init_cnn(seed: int = 0, scaler: Standardizer | None = None, arch: dict | None = None) -> CnnModel:
    arch = dict(arch or DEFAULT_CNN_ARCHITECTURE)
    rng = np.random.default_rng(seed)
    k = arch["kernel"]
    c1, c2, c3, dense = arch["conv1"], arch["conv2"], arch["conv3"], arch["dense"]
    flat = flattened_length(arch)
    params = {
        "conv1_w": _glorot(rng, (c1, 1, k), k, c1 * k),
        "conv1_b": np.zeros(c1),
        "conv2_w": _glorot(rng, (c2, c1, k), c1 * k, c2 * k),
        "conv2_b": np.zeros(c2),
        "conv3_w": _glorot(rng, (c3, c2, k), c2 * k, c3 * k),
        "conv3_b": np.zeros(c3),
        "dense_w": _glorot(rng, (dense, flat), flat, dense),
        "dense_b": np.zeros(dense),
        "out_w": _glorot(rng, (2, dense), dense, 2),
        "out_b": np.zeros(2),
    }
    return CnnModel(params, scaler or Standardizer.identity(), 0, seed, arch)


def _class_indices(coll: SubsetCollection) -> np.ndarray:
    return np.where(coll.targets > 0, 0, 1)


def _fit(model: _Network, train: SubsetCollection, max_epochs: int, optimizer) -> _Network:
    if len(train) == 0 or not train.is_balanced:
        raise DomainError("training collection must be non-empty and class-balanced")
    optimizer = optimizer or MomentumGD()
    X = train.features
    y = _class_indices(train)
    for epoch in range(1, max_epochs + 1):
        loss, grads = model.loss_and_grad(X, y)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingError(f"{model.kind} training diverged at epoch {epoch}", epoch=epoch)
        optimizer.step(model.params, grads)
        model.epochs_trained = epoch
    return model


def mnn_train(
    train: SubsetCollection,
    max_epochs: int = 200,
    seed: int = 0,
    hidden: int = 10,
    optimizer=None,
) -> MnnModel:
    model = init_mnn(hidden, seed, Standardizer.fit(train.features))
    return _fit(model, train, max_epochs, optimizer)


def cnn_train(
    train: SubsetCollection,
    max_epochs: int = 200,
    seed: int = 0,
    optimizer=None,
    arch: dict | None = None,
) -> CnnModel:
    model = init_cnn(seed, Standardizer.fit(train.features), arch)
    return _fit(model, train, max_epochs, optimizer)


def mnn_predict(model: MnnModel, x) -> tuple[SourceKind, np.ndarray]:
    return model.predict(x)


def cnn_predict(model: CnnModel, x) -> tuple[SourceKind, np.ndarray]:
    return model.predict(x)


def numerical_gradient(model: _Network, X, y, eps: float = 1e-6) -> dict:
    """Central finite differences of the mean cross-entropy for every parameter."""
    grads = {}
    for name, value in model.params.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = model.loss_and_grad(X, y)[0]
            flat[i] = orig - eps
            minus = model.loss_and_grad(X, y)[0]
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * eps)
        grads[name] = g
    return grads


def model_from_dict(data: dict) -> _Network:
    if data.get("schema") != SCHEMA_VERSION:
        raise DomainError(f"unsupported model schema {data.get('schema')!r}")
    params = {
        k: np.array(v["values"], dtype=float).reshape(v["shape"]) for k, v in data["params"].items()
    }
    scaler = Standardizer(np.array(data["scaler"]["mean"]), np.array(data["scaler"]["scale"]))
    if data["type"] == "mnn":
        return MnnModel(params, scaler, int(data.get("epochs", 0)), data.get("seed"))
    if data["type"] == "cnn":
        return CnnModel(params, scaler, int(data.get("epochs", 0)), data.get("seed"), dict(data["architecture"]))
    raise DomainError(f"unknown network type {data['type']!r}")
