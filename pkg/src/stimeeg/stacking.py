"""Simplex-constrained logistic meta-classifier over base-model log-odds.

Weights live on the probability simplex and are fit by exponentiated
gradient (mirror descent) with backtracking, plus a log-barrier that keeps
every weight strictly positive. The decision threshold maximizes
GMean = sqrt(PPV * TPR) on validation probabilities.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gbdt import sigmoid

logger = logging.getLogger(__name__)

_EG_STEP = 0.5
_EG_TOL = 1e-8
_EG_MAX_ITER = 10_000
_OBJECTIVE_SLACK = 1e-6


class StackingError(ValueError):
    pass


@dataclass
class StackInputs:
    P: np.ndarray  # N x K base-model log-odds
    y: np.ndarray  # N labels in {0, 1}
    alpha: float = 0.05

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64)
        if not np.isfinite(self.P).all():
            raise StackingError("base log-odds must be finite")
        if self.alpha <= 0:
            raise StackingError("barrier coefficient alpha must be positive")
        if self.P.shape[0] != len(self.y):
            raise StackingError("P rows must match y length")
        if len(np.unique(self.y)) < 2:
            raise StackingError("both classes required to fit stacking weights")
        if self.P.shape[1] > 10:
            raise StackingError("at most 10 base classifiers are supported")


def stack_objective(w: np.ndarray, inputs: StackInputs) -> float:
    """Mean logistic loss of the weighted log-odds plus the log barrier."""
    z = inputs.P @ w
    y = inputs.y
    # -log sigma(z) is softplus(-z); the negative-class term uses sigma(1 - z)
    loss = np.mean(y * np.logaddexp(0.0, -z) + (1 - y) * np.logaddexp(0.0, z - 1.0))
    return float(loss - inputs.alpha * np.log(w).sum())


def _stack_gradient(w: np.ndarray, inputs: StackInputs) -> np.ndarray:
    z = inputs.P @ w
    y = inputs.y
    dz = -y * sigmoid(-z) + (1 - y) * sigmoid(z - 1.0)
    return inputs.P.T @ dz / len(y) - inputs.alpha / w


def fit_stack(inputs: StackInputs) -> np.ndarray:
    """Exponentiated-gradient descent from the uniform start.

    Stops when the max weight change drops below 1e-8 (or 10k iterations,
    with a warning); the returned iterate's objective is within 1e-6 of the
    best iterate seen.
    """
    k = inputs.P.shape[1]
    w = np.full(k, 1.0 / k)
    obj = stack_objective(w, inputs)
    best_w, best_obj = w, obj

    converged = False
    for _ in range(_EG_MAX_ITER):
        grad = _stack_gradient(w, inputs)
        step = _EG_STEP
        cand, cand_obj = None, None
        while step >= 1e-12:
            trial = w * np.exp(-step * (grad - grad.max()))
            trial /= trial.sum()
            trial_obj = stack_objective(trial, inputs)
            if trial_obj <= obj:
                cand, cand_obj = trial, trial_obj
                break
            step /= 2.0
        if cand is None:  # no non-increasing step exists: stationary
            converged = True
            break
        assert cand.min() > 0 and abs(cand.sum() - 1.0) < 1e-9
        delta = np.max(np.abs(cand - w))
        w, obj = cand, cand_obj
        if obj < best_obj:
            best_w, best_obj = w, obj
        if delta < _EG_TOL:
            converged = True
            break
    if not converged:
        warnings.warn("stacking optimizer hit the iteration cap; using best iterate",
                      RuntimeWarning, stacklevel=2)
        w, obj = best_w, best_obj
    if obj > best_obj + _OBJECTIVE_SLACK:
        w, obj = best_w, best_obj
    return w


@dataclass
class EnsembleModel:
    base_models: list
    weights: np.ndarray
    threshold: float
    config_keys: list[str] = field(default_factory=list)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise StackingError("weights must lie on the probability simplex")
        if not 0 < self.threshold < 1:
            raise StackingError("threshold must lie strictly inside (0, 1)")
        self.weights = w


def predict_stack(weights: np.ndarray, log_odds_rows: np.ndarray) -> np.ndarray:
    """sigma(sum_k w_k p_k) for each row of base-model log-odds."""
    P = np.atleast_2d(np.asarray(log_odds_rows, dtype=np.float64))
    w = np.asarray(weights, dtype=np.float64)
    if P.shape[1] != len(w):
        raise StackingError(
            f"log-odds width {P.shape[1]} does not match {len(w)} weights"
        )
    return sigmoid(P @ w)


def gmean_score(probabilities: np.ndarray, y: np.ndarray, threshold: float) -> float:
    """sqrt(PPV * TPR) for decisions p > threshold; 0 when PPV is undefined."""
    pred = probabilities > threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    pos = int(np.sum(y == 1))
    if tp + fp == 0 or pos == 0:
        return 0.0
    ppv = tp / (tp + fp)
    tpr = tp / pos
    return float(np.sqrt(ppv * tpr))


def select_threshold_gmean(probabilities: np.ndarray, y: np.ndarray) -> float:
    """Candidates are midpoints of consecutive sorted unique probabilities,
    guarded by an all-positive and an all-negative candidate inside (0, 1);
    ties break toward the larger threshold."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise StackingError("both classes required to pick a threshold")
    uniq = np.unique(p)
    candidates = [uniq[0] / 2.0, (uniq[-1] + 1.0) / 2.0]
    candidates += list((uniq[:-1] + uniq[1:]) / 2.0)
    best_t, best_score = None, -1.0
    for t in candidates:
        s = gmean_score(p, y, t)
        if s > best_score or (s == best_score and t > best_t):
            best_t, best_score = float(t), s
    return best_t
