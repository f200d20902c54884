"""Edge featurization and a full-batch logistic-regression edge classifier."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from kglinkbench.errors import DegenerateTrainingSetError, TrainingDivergedError

OPERATORS = ("hadamard", "average", "concat", "l1", "l2")
THRESHOLD = 0.5

_P_LO = np.finfo(np.float64).tiny
_P_HI = np.nextafter(1.0, 0.0)


def _check_operator(op):
    if op not in OPERATORS:
        raise ValueError(f"unknown edge operator {op!r}; choose from {OPERATORS}")


def feature_dim(op: str, dim: int) -> int:
    _check_operator(op)
    return 2 * dim if op == "concat" else dim


def combine(U: np.ndarray, V: np.ndarray, op: str) -> np.ndarray:
    """Apply an edge operator row-wise to two equally shaped arrays."""
    _check_operator(op)
    if op == "hadamard":
        return U * V
    if op == "average":
        return (U + V) / 2.0
    if op == "concat":
        return np.concatenate([U, V], axis=-1)
    if op == "l1":
        return np.abs(U - V)
    return (U - V) ** 2


def edge_features(space, h, t, op: str = "hadamard") -> np.ndarray:
    return combine(space.vector(h), space.vector(t), op)


def edge_feature_matrix(space, pairs, op: str = "hadamard") -> np.ndarray:
    """Feature rows for (head, tail) pairs (or triples); ids must be in ``space``."""
    pairs = list(pairs)
    if not pairs:
        return np.empty((0, feature_dim(op, space.dim)))
    hr = np.fromiter((space.row(p[0]) for p in pairs), dtype=np.int64, count=len(pairs))
    tr = np.fromiter((space.row(p[-1]) for p in pairs), dtype=np.int64, count=len(pairs))
    return combine(space.vectors[hr], space.vectors[tr], op)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _P_LO, _P_HI)


def logistic_loss(w, b, X, y, l2_reg):
    z = X @ w + b
    # log(1 + e^z) - y z == -[y log p + (1 - y) log(1 - p)]
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_reg * np.dot(w, w))


def logistic_grad(w, b, X, y, l2_reg):
    r = sigmoid(X @ w + b) - y
    n = X.shape[0]
    return X.T @ r / n + l2_reg * w, float(np.sum(r) / n)


@dataclass(frozen=True)
class ClassifierConfig:
    lr: float = 0.1
    epochs: int = 1000
    l2_reg: float = 1e-4

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2_reg < 0:
            raise ValueError(f"l2_reg must be >= 0, got {self.l2_reg}")


@dataclass(frozen=True, eq=False)
class Classifier:
    weights: np.ndarray
    bias: float
    operator: str = "hadamard"
    iterations: int = 0
    final_loss: float = float("nan")
    seed: int = 0
    loss_history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "weights": [float(x) for x in self.weights],
            "bias": float(self.bias),
            "meta": {"iterations": self.iterations, "final_loss": self.final_loss, "seed": self.seed},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Classifier":
        m = d.get("meta", {})
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]), d["operator"],
                   m.get("iterations", 0), m.get("final_loss", float("nan")), m.get("seed", 0))


def train_classifier(
    features,
    labels,
    lr: float = 0.1,
    epochs: int = 1000,
    l2_reg: float = 1e-4,
    seed: int = 0,
    operator: str = "hadamard",
    record_history: bool = False,
) -> Classifier:
    """Full-batch gradient descent on the L2-regularised mean logistic loss,
    starting from w = 0, b = 0, for exactly ``epochs`` iterations.

    Rows are put in a canonical order first, so the result does not depend
    on the order of the training examples. ``seed`` is only recorded.
    """
    X = np.array(features, dtype=np.float64, ndmin=2)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise DegenerateTrainingSetError("degenerate training set: need at least 2 examples")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise DegenerateTrainingSetError("degenerate training set: only one class present")
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")

    keys = np.column_stack([X, y])
    order = np.lexsort(keys.T[::-1])
    X, y = np.ascontiguousarray(X[order]), y[order]

    w = np.zeros(X.shape[1])
    b = 0.0
    history = []
    for _ in range(epochs):
        if record_history:
            history.append(logistic_loss(w, b, X, y, l2_reg))
        gw, gb = logistic_grad(w, b, X, y, l2_reg)
        w = w - lr * gw
        b = b - lr * gb
    loss = logistic_loss(w, b, X, y, l2_reg)
    if not math.isfinite(loss):
        raise TrainingDivergedError(f"classifier loss is non-finite (lr={lr}); try a lower lr")
    if record_history:
        history.append(loss)
    return Classifier(w, b, operator, epochs, loss, seed, tuple(history))


def predict_proba(c: Classifier, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.shape[-1] != c.weights.shape[0]:
        raise ValueError(f"feature dimension {X.shape[-1]} != classifier dimension {c.weights.shape[0]}")
    return sigmoid(X @ c.weights + c.bias)


def predict(c: Classifier, features) -> float:
    """Probability that a single feature vector is a true edge."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes one feature vector; use predict_proba for batches")
    return float(predict_proba(c, x))


def predict_labels(c: Classifier, features) -> np.ndarray:
    return (predict_proba(c, features) >= THRESHOLD).astype(np.int64)
