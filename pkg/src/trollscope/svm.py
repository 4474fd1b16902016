"""Soft-margin RBF SVM trained with SMO, plus [-1, 1] range normalization.

The solver works on the dual

    min_a  1/2 a'Qa - e'a    s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)

picking the maximal violating pair each step and stopping when the gap
between the two violation extremes drops below ``tol``.
"""

from __future__ import annotations

import itertools
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.model_selection import StratifiedKFold
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError, InsufficientDataError
from .metrics import MeanMetrics, Metrics, compute_metrics, mean_metrics

logger = logging.getLogger(__name__)

MODEL_FORMAT = "trollscope-svm"
MODEL_VERSION = 1
DEFAULT_C = 32.0
DEFAULT_GAMMA = 0.0078125
FULL_KERNEL_LIMIT = 4096
DEFAULT_C_GRID = tuple(2.0**k for k in range(-5, 16))
DEFAULT_GAMMA_GRID = tuple(2.0**k for k in range(-15, 4))


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    values = set(np.unique(y).tolist())
    if not values <= {-1, 1}:
        raise ValueError(f"labels must be -1 or +1, got {sorted(values)}")
    return y.astype(np.int64)


def check_matrix(X) -> np.ndarray:
    try:
        return check_array(X, dtype=np.float64, ensure_all_finite=True)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if np.any(self.mins > self.maxs):
            raise ValueError("normalization min exceeds max")

    def to_dict(self):
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))


def fit_normalization(matrix) -> NormalizationParams:
    X = check_matrix(matrix)
    if X.shape[0] == 0:
        raise ValueError("cannot fit normalization on an empty matrix")
    return NormalizationParams(X.min(axis=0), X.max(axis=0))


def apply_normalization(rows, params: NormalizationParams) -> np.ndarray:
    """Map to [-1, 1] with the training range; constant features become 0."""
    X = np.asarray(rows, dtype=float)
    span = params.maxs - params.mins
    live = span > 0
    out = np.zeros_like(X)
    out[..., live] = -1.0 + 2.0 * (X[..., live] - params.mins[live]) / span[live]
    return np.clip(out, -1.0, 1.0)


class RangeNormalizer(BaseEstimator, TransformerMixin):
    """Scale every column to [-1, 1] using the range seen in ``fit``."""

    def fit(self, X, y=None):
        self.params_ = fit_normalization(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return apply_normalization(check_matrix(X), self.params_)


def rbf(x, z, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    d = x - z
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    K = np.exp(-gamma * sq)
    if A is B:
        np.fill_diagonal(K, 1.0)
    return K


@dataclass(frozen=True)
class TrainConfig:
    C: float = DEFAULT_C
    gamma: float = DEFAULT_GAMMA
    tol: float = 1e-3
    max_iter: int | None = None
    seed: int = 42

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def to_dict(self):
        return {"C": self.C, "gamma": self.gamma, "tol": self.tol,
                "max_iter": self.max_iter, "seed": self.seed}


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    gap: float
    iterations: int
    converged: bool


class _KernelColumns:
    def __init__(self, X, gamma):
        self.X = X
        self.gamma = gamma
        n = X.shape[0]
        self.full = rbf_matrix(X, X, gamma) if n <= FULL_KERNEL_LIMIT else None
        self.sqnorm = np.einsum("ij,ij->i", X, X)

    def column(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[:, i]
        d = self.sqnorm + self.sqnorm[i] - 2.0 * (self.X @ self.X[i])
        col = np.exp(-self.gamma * np.maximum(d, 0.0))
        col[i] = 1.0
        return col


def smo(X: np.ndarray, y: np.ndarray, C: float, gamma: float, tol: float = 1e-3,
        max_iter: int | None = None) -> SmoResult:
    """Solve the SVM dual; returns multipliers and the bias of f(x) = sum a_i y_i K + b."""
    n = X.shape[0]
    yf = y.astype(float)
    max_iter = max_iter if max_iter is not None else max(10 * n, 100_000)
    kern = _KernelColumns(X, gamma)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective, Q a - e
    gap = np.inf
    it = 0
    converged = False
    while True:
        up = ((yf > 0) & (alpha < C)) | ((yf < 0) & (alpha > 0))
        low = ((yf > 0) & (alpha > 0)) | ((yf < 0) & (alpha < C))
        score = -yf * grad
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        Ki = kern.column(i)
        Kj = kern.column(j)
        eta = max(Ki[i] + Kj[j] - 2.0 * Ki[j], 1e-12)
        t = gap / eta
        t = min(t, C - alpha[i] if yf[i] > 0 else alpha[i])
        t = min(t, alpha[j] if yf[j] > 0 else C - alpha[j])
        alpha[i] = min(C, max(0.0, alpha[i] + yf[i] * t))
        alpha[j] = min(C, max(0.0, alpha[j] - yf[j] * t))
        grad += yf * t * (Ki - Kj)
    if not converged:
        warnings.warn(
            f"SMO stopped after {it} iterations with KKT gap {gap:.3g} > tol {tol:g}",
            ConvergenceWarning, stacklevel=2,
        )
    return SmoResult(alpha, _bias(alpha, grad, yf, C), float(gap), it, converged)


def _bias(alpha, grad, yf, C) -> float:
    yg = yf * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(np.mean(yg[free]))
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (yf < 0)) | (~at_upper & (yf > 0))
        lb_mask = (at_upper & (yf > 0)) | (~at_upper & (yf < 0))
        ub = float(np.min(yg[ub_mask])) if np.any(ub_mask) else np.inf
        lb = float(np.max(yg[lb_mask])) if np.any(lb_mask) else -np.inf
        rho = (ub + lb) / 2.0 if np.isfinite(ub) and np.isfinite(lb) else (
            ub if np.isfinite(ub) else lb
        )
    return -rho


def dual_objective(alpha, X, y, gamma) -> float:
    """Value of sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij (to be maximised)."""
    coef = np.asarray(alpha) * np.asarray(y, dtype=float)
    K = rbf_matrix(X, X, gamma)
    return float(np.sum(alpha) - 0.5 * coef @ K @ coef)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # a_i * y_i
    bias: float
    gamma: float
    C: float
    normalization: NormalizationParams | None = None
    fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def alpha(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision_function(self, X, normalized: bool = False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DataError(
                f"feature dimension mismatch: model has {self.n_features}, got {X.shape[1]}"
            )
        if self.normalization is not None and not normalized:
            X = apply_normalization(X, self.normalization)
        return rbf_matrix(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def dual_objective(self) -> float:
        K = rbf_matrix(self.support_vectors, self.support_vectors, self.gamma)
        return float(np.sum(self.alpha) - 0.5 * self.dual_coef @ K @ self.dual_coef)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kernel": {"type": "rbf", "gamma": self.gamma},
            "C": self.C,
            "bias": self.bias,
            "manifest_fingerprint": self.fingerprint,
            "normalization": self.normalization.to_dict() if self.normalization else None,
            "n_features": self.n_features,
            "support_vectors": [
                {"coef": float(c), "x": row.tolist()}
                for c, row in zip(self.dual_coef, self.support_vectors)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DataError("not a trollscope SVM model file (or unsupported version)")
        svs = d["support_vectors"]
        n_features = d["n_features"]
        return cls(
            support_vectors=np.array([s["x"] for s in svs], dtype=float).reshape(
                len(svs), n_features
            ),
            dual_coef=np.array([s["coef"] for s in svs], dtype=float),
            bias=float(d["bias"]),
            gamma=float(d["kernel"]["gamma"]),
            C=float(d["C"]),
            normalization=(
                NormalizationParams.from_dict(d["normalization"]) if d["normalization"] else None
            ),
            fingerprint=d.get("manifest_fingerprint", ""),
            meta=d.get("meta", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "SvmModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read model {path}: {exc}") from exc
        return cls.from_dict(data)


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # lexicographic by (features..., label) so row order never affects the solve
    keys = [y] + [X[:, k] for k in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def train(matrix, labels, config: TrainConfig | None = None,
          normalization: NormalizationParams | None = None, fingerprint: str = "") -> SvmModel:
    """Train on already-normalized rows.

    ``normalization`` is only recorded in the model so that ``predict`` can
    apply it to raw rows later.
    """
    config = config or TrainConfig()
    X = check_matrix(matrix)
    y = check_labels(labels)
    if X.shape[0] != y.shape[0]:
        raise ValueError("matrix and labels have different lengths")
    if len(set(y.tolist())) < 2:
        raise ValueError("training data must contain both classes")
    order = _canonical_order(X, y)
    X, y = X[order], y[order]
    res = smo(X, y, config.C, config.gamma, config.tol, config.max_iter)
    sv = res.alpha > 0
    logger.debug("SMO: %d iterations, gap %.3g, %d SVs", res.iterations, res.gap, int(sv.sum()))
    return SvmModel(
        support_vectors=X[sv].copy(),
        dual_coef=(res.alpha * y)[sv],
        bias=res.bias,
        gamma=config.gamma,
        C=config.C,
        normalization=normalization,
        fingerprint=fingerprint,
        meta={"iterations": res.iterations, "kkt_gap": res.gap, "converged": res.converged,
              "n_train": int(X.shape[0])},
    )


def predict(model: SvmModel, row, fingerprint: str | None = None) -> tuple[int, float]:
    if fingerprint is not None and model.fingerprint and fingerprint != model.fingerprint:
        raise DataError("feature manifest fingerprint does not match the model")
    value = float(model.decision_function(np.asarray(row, dtype=float).reshape(1, -1))[0])
    return (1 if value >= 0 else -1), value


class RbfSVC(ClassifierMixin, BaseEstimator):
    """Binary RBF-kernel SVM (labels -1/+1) with built-in [-1, 1] scaling.

    Parameters
    ----------
    C : float, default 32
    gamma : float, default 0.0078125
    tol : float, default 1e-3
        Stop when the maximal KKT violation gap is below this.
    max_iter : int or None
        SMO step cap; None picks ``max(10 n, 100000)``.
    normalize : bool, default True
        Fit a :class:`RangeNormalizer` on the training rows first.
    random_state : int, default 42
    """

    def __init__(self, C=DEFAULT_C, gamma=DEFAULT_GAMMA, tol=1e-3, max_iter=None,
                 normalize=True, random_state=42):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y, fingerprint: str = ""):
        X = check_matrix(X)
        y = check_labels(y)
        cfg = TrainConfig(self.C, self.gamma, self.tol, self.max_iter, self.random_state)
        params = fit_normalization(X) if self.normalize else None
        Xn = apply_normalization(X, params) if params is not None else X
        self.model_ = train(Xn, y, cfg, normalization=params, fingerprint=fingerprint)
        self.classes_ = np.array([-1, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(check_matrix(X))

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)


def stratified_folds(labels, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    y = check_labels(labels)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    for cls in (-1, 1):
        n = int(np.sum(y == cls))
        if n < folds:
            raise InsufficientDataError(
                f"class {cls:+d} has {n} members, fewer than {folds} folds"
            )
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(len(y)), y))


def cross_validate(matrix, labels, config: TrainConfig | None = None, folds: int = 5,
                   seed: int | None = None) -> MeanMetrics:
    """Stratified k-fold CV; normalization is refit inside every fold."""
    config = config or TrainConfig()
    X = check_matrix(matrix)
    y = check_labels(labels)
    seed = config.seed if seed is None else seed
    per_fold: list[Metrics] = []
    for train_idx, test_idx in stratified_folds(y, folds, seed):
        params = fit_normalization(X[train_idx])
        model = train(apply_normalization(X[train_idx], params), y[train_idx], config,
                      normalization=params)
        pred = np.where(model.decision_function(X[test_idx]) >= 0, 1, -1)
        per_fold.append(compute_metrics(pred.tolist(), y[test_idx].tolist(), positive_label=1))
    return mean_metrics(per_fold)


@dataclass(frozen=True)
class GridResult:
    C: float
    gamma: float
    scores: dict  # (C, gamma) -> mean CV accuracy


def grid_search(matrix, labels, C_grid: Sequence[float] = DEFAULT_C_GRID,
                gamma_grid: Sequence[float] = DEFAULT_GAMMA_GRID, folds: int = 5,
                seed: int = 42, tol: float = 1e-3, n_jobs: int = 1) -> GridResult:
    """Exhaustive CV grid; best mean accuracy, ties to smaller C then smaller gamma."""
    if not C_grid or not gamma_grid:
        raise ValueError("grids must be non-empty")
    cells = sorted(itertools.product(sorted(set(C_grid)), sorted(set(gamma_grid))))

    def score(C, g):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            return cross_validate(matrix, labels, TrainConfig(C=C, gamma=g, tol=tol, seed=seed),
                                  folds, seed).accuracy

    accs = Parallel(n_jobs=n_jobs)(delayed(score)(C, g) for C, g in cells)
    best, best_acc = cells[0], -1.0
    for cell, acc in zip(cells, accs):
        if round(acc, 12) > round(best_acc, 12):
            best, best_acc = cell, acc
    return GridResult(best[0], best[1], dict(zip(cells, accs)))
