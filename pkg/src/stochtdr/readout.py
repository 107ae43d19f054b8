"""Linear output layer: regularized least-squares training and error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RankDeficiencyError(ValueError):
    """Normal equations are singular and no regularization was requested."""


@dataclass
class ReadoutModel:
    """Output weights trained by ridge regression; output function is identity."""

    w_out: np.ndarray
    lam: float
    uses_bias_column: bool = True

    @property
    def dim(self) -> int:
        """Reservoir dimension this model was trained on."""
        return self.w_out.size - (1 if self.uses_bias_column else 0)

    def save_csv(self, path) -> None:
        """Serialize weights as ``index,weight`` rows."""
        with open(path, "w", newline="") as fh:
            fh.write("index,weight\n")
            for i, w in enumerate(self.w_out):
                fh.write(f"{i},{float(w)!r}\n")


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.column_stack([X, np.ones(X.shape[0])])


def ridge_train(X: np.ndarray, Y: np.ndarray, lam: float,
                use_bias: bool = True) -> ReadoutModel:
    """Solve (X^T X + lam*I) w = X^T Y by a factored linear solve.

    With lam > 0 the system is always solvable; at lam = 0 a singular
    Gram matrix raises RankDeficiencyError with the detected rank.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != Y.size:
        raise ValueError(f"shape mismatch: X {X.shape} vs Y ({Y.size},)")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise ValueError("non-finite entries in training data")
    if lam < 0:
        raise ValueError("regularization parameter must be >= 0")
    Xd = _with_bias(X) if use_bias else X
    gram = Xd.T @ Xd + lam * np.eye(Xd.shape[1])
    if lam == 0.0:
        rank = np.linalg.matrix_rank(gram)
        if rank < Xd.shape[1]:
            raise RankDeficiencyError(
                f"X^T X is rank deficient (rank {rank} < {Xd.shape[1]}) and lam = 0")
    w = np.linalg.solve(gram, Xd.T @ Y)
    return ReadoutModel(w_out=w, lam=float(lam), uses_bias_column=use_bias)


def predict(model: ReadoutModel, X: np.ndarray) -> np.ndarray:
    """yhat = X w (identity output function)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
                         f"model expects {model.dim}")
    Xd = _with_bias(X) if model.uses_bias_column else X
    return Xd @ model.w_out


def nmse(y: np.ndarray, yhat: np.ndarray, y_train_mean: float) -> float:
    """Normalized mean squared error vs. the predict-the-training-mean baseline.

    sum((y - yhat)^2) / sum((y - y_train_mean)^2): 0 for a perfect
    prediction, exactly 1 for predicting the training mean.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.size != yhat.size:
        raise ValueError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    denom = float(np.sum((y - y_train_mean) ** 2))
    if denom <= 0.0:
        raise ValueError("targets have zero variance around the training mean")
    return float(np.sum((y - yhat) ** 2)) / denom


def classification_accuracy(y: np.ndarray, yhat: np.ndarray,
                            threshold: float = 0.5) -> float:
    """Fraction of samples where (yhat >= threshold) matches the 0/1 label."""
    y = np.asarray(y).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.size != yhat.size:
        raise ValueError(f"length mismatch: {y.size} labels vs {yhat.size} predictions")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return float(np.mean((yhat >= threshold) == (y == 1)))
