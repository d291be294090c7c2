"""Closed-form ridge regression and one-vs-rest classification.

The solver works on standardized features and solves the normal equations
``(X'X + alpha*I) w = X'y`` through a symmetric positive-definite
factorization in double precision.  When features outnumber instances the
equivalent dual system ``(XX' + alpha*I) a = y, w = X'a`` is solved
instead, picking whichever dimension is smaller.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._binio import (
    read_array,
    read_header,
    read_str,
    read_values,
    write_array,
    write_header,
    write_str,
    write_values,
)

_MODEL_MAGIC = b"RKRM"
_MODEL_VERSION = 1


@dataclass
class RidgeModel:
    """Linear model with the standardization statistics baked in.

    ``class_names`` is None for regression models; for classifiers the
    columns of ``weights`` follow ``class_names`` order.
    """

    weights: np.ndarray
    intercepts: np.ndarray
    feature_means: np.ndarray
    feature_scales: np.ndarray
    alpha: float
    class_names: list | None = None

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def save(self, path) -> None:
        with open(path, "wb") as f:
            write_header(f, _MODEL_MAGIC, _MODEL_VERSION)
            n_features, n_outputs = self.weights.shape
            write_values(
                f,
                "QQdB",
                n_features,
                n_outputs,
                self.alpha,
                1 if self.class_names is not None else 0,
            )
            write_array(f, self.weights.astype(np.float64))
            write_array(f, self.intercepts.astype(np.float64))
            write_array(f, self.feature_means.astype(np.float64))
            write_array(f, self.feature_scales.astype(np.float64))
            if self.class_names is not None:
                for name in self.class_names:
                    write_str(f, name)

    @classmethod
    def load(cls, path) -> "RidgeModel":
        with open(path, "rb") as f:
            read_header(f, _MODEL_MAGIC, _MODEL_VERSION)
            n_features, n_outputs, alpha, has_classes = read_values(f, "QQdB")
            weights = read_array(f, np.float64, int(n_features * n_outputs)).reshape(
                int(n_features), int(n_outputs)
            )
            intercepts = read_array(f, np.float64, int(n_outputs))
            means = read_array(f, np.float64, int(n_features))
            scales = read_array(f, np.float64, int(n_features))
            class_names = [read_str(f) for _ in range(n_outputs)] if has_classes else None
        return cls(
            weights=weights,
            intercepts=intercepts,
            feature_means=means,
            feature_scales=scales,
            alpha=float(alpha),
            class_names=class_names,
        )


def _as_matrix(features) -> np.ndarray:
    values = np.asarray(getattr(features, "values", features), dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if not np.isfinite(values).all():
        raise ValueError("features contain non-finite values")
    return values


def solve_penalized(X: np.ndarray, Y: np.ndarray, alpha: float) -> np.ndarray:
    """Solve ``(X'X + alpha*I) W = X'Y`` in double precision.

    Uses the primal system when ``n_features <= n_instances`` and the dual
    otherwise; alpha > 0 keeps either system positive definite.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    single = Y.ndim == 1
    if single:
        Y = Y[:, np.newaxis]
    n, f = X.shape
    if f <= n:
        gram = X.T @ X
        gram[np.diag_indices_from(gram)] += alpha
        W = cho_solve(cho_factor(gram), X.T @ Y)
    else:
        outer = X @ X.T
        outer[np.diag_indices_from(outer)] += alpha
        W = X.T @ cho_solve(cho_factor(outer), Y)
    return W[:, 0] if single else W


def _standardize(X: np.ndarray):
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[~(scales > 0.0)] = 1.0
    return (X - means) / scales, means, scales


def fit(features, labels, alpha: float = 1.0) -> RidgeModel:
    """Fit a one-vs-rest ridge classifier on standardized features."""
    X = _as_matrix(features)
    if X.shape[0] < 2:
        raise ValueError("at least two instances are required")
    labels = [str(lab) for lab in labels]
    if len(labels) != X.shape[0]:
        raise ValueError("one label per instance is required")
    class_names = sorted(set(labels))
    if len(class_names) < 2:
        raise ValueError("classification needs at least two classes")
    Xs, means, scales = _standardize(X)
    index = {name: i for i, name in enumerate(class_names)}
    Y = np.full((X.shape[0], len(class_names)), -1.0)
    for row, lab in enumerate(labels):
        Y[row, index[lab]] = 1.0
    intercepts = Y.mean(axis=0)
    W = solve_penalized(Xs, Y - intercepts, alpha)
    return RidgeModel(
        weights=W,
        intercepts=intercepts,
        feature_means=means,
        feature_scales=scales,
        alpha=alpha,
        class_names=class_names,
    )


def fit_regression(features, targets, alpha: float = 1.0) -> RidgeModel:
    """Fit a ridge regressor on standardized features."""
    X = _as_matrix(features)
    if X.shape[0] < 2:
        raise ValueError("at least two instances are required")
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ValueError("one target per instance is required")
    Xs, means, scales = _standardize(X)
    intercept = y.mean()
    w = solve_penalized(Xs, y - intercept, alpha)
    return RidgeModel(
        weights=w[:, np.newaxis],
        intercepts=np.array([intercept]),
        feature_means=means,
        feature_scales=scales,
        alpha=alpha,
        class_names=None,
    )


def predict_scores(model: RidgeModel, features) -> np.ndarray:
    X = _as_matrix(features)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, got {X.shape[1]}"
        )
    Xs = (X - model.feature_means) / model.feature_scales
    return Xs @ model.weights + model.intercepts


def predict(model: RidgeModel, features) -> np.ndarray:
    """Predicted class labels; score ties resolve to the lowest class index."""
    if model.class_names is None:
        raise ValueError("model was fit for regression; use predict_values")
    scores = predict_scores(model, features)
    picks = np.argmax(scores, axis=1)
    return np.asarray([model.class_names[i] for i in picks])


def predict_values(model: RidgeModel, features) -> np.ndarray:
    """Regression predictions (single output column)."""
    return predict_scores(model, features)[:, 0]


def accuracy(predicted, truth) -> float:
    predicted = [str(p) for p in predicted]
    truth = [str(t) for t in truth]
    if len(predicted) != len(truth):
        raise ValueError("prediction and truth lengths differ")
    if not truth:
        raise ValueError("cannot score an empty label set")
    hits = sum(1 for p, t in zip(predicted, truth) if p == t)
    return hits / len(truth)


def select_alpha(features, labels, alphas, val_fraction: float = 0.25, seed: int = 0):
    """Pick alpha from a grid by accuracy on a seeded validation split.

    Returns ``(best_alpha, {alpha: validation_accuracy})``.  Ties keep the
    first grid entry.
    """
    X = _as_matrix(features)
    labels = [str(lab) for lab in labels]
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    order = rng.permutation(X.shape[0])
    n_val = max(1, int(round(val_fraction * X.shape[0])))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size < 2:
        raise ValueError("not enough instances left for training")
    train_labels = [labels[i] for i in train_idx]
    val_labels = [labels[i] for i in val_idx]
    scores = {}
    best = None
    for alpha in alphas:
        model = fit(X[train_idx], train_labels, alpha=alpha)
        acc = accuracy(predict(model, X[val_idx]), val_labels)
        scores[alpha] = acc
        if best is None or acc > scores[best]:
            best = alpha
    return best, scores
