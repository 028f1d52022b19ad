"""Gradient-boosted regression trees for binary classification.

Second-order boosting on the logistic loss with exact greedy splits over
sorted feature values (cohorts here are tiny, no histogram approximation).
Positive-class gradients and hessians are weighted by scale_pos_weight;
missing values are routed to the split side that minimizes training loss.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

SERIAL_VERSION = 1


class GbdtError(ValueError):
    pass


@dataclass(frozen=True)
class GbdtParams:
    n_estimators: int = 100
    max_depth: int = 6
    subsample: float = 0.9
    gamma: float = 0.1
    learning_rate: float = 0.1
    scale_pos_weight: float = 1.0
    l2_leaf_reg: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise GbdtError("n_estimators must be >= 1")
        if not 0 < self.subsample <= 1:
            raise GbdtError("subsample must lie in (0, 1]")
        if not 0 < self.learning_rate <= 1:
            raise GbdtError("learning_rate must lie in (0, 1]")
        if self.scale_pos_weight <= 0:
            raise GbdtError("scale_pos_weight must be positive")


@dataclass
class Tree:
    """Flat array representation; feature == -1 marks a leaf."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    missing_left: list[bool] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_leaf(self, value: float) -> int:
        return self._add(-1, 0.0, -1, -1, False, value)

    def _add(self, feat, thr, left, right, miss_left, value) -> int:
        self.feature.append(feat)
        self.threshold.append(thr)
        self.left.append(left)
        self.right.append(right)
        self.missing_left.append(miss_left)
        self.value.append(value)
        return len(self.feature) - 1

    @property
    def n_splits(self) -> int:
        return sum(1 for f in self.feature if f >= 0)

    def max_node_depth(self) -> int:
        if not self.feature:
            return 0
        depth = [0] * len(self.feature)
        best = 0
        for i, f in enumerate(self.feature):
            if f >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return max(depth) if depth else 0

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Vectorized traversal of rows x features (NaN allowed)."""
        n = x.shape[0]
        node = np.zeros(n, dtype=np.intp)
        feat = np.asarray(self.feature)
        thr = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        miss_left = np.asarray(self.missing_left)
        for _ in range(self.max_node_depth() + 1):
            internal = feat[node] >= 0
            if not internal.any():
                break
            rows = np.nonzero(internal)[0]
            f = feat[node[rows]]
            v = x[rows, f]
            goes_left = v < thr[node[rows]]
            missing = np.isnan(v)
            goes_left = np.where(missing, miss_left[node[rows]], goes_left)
            node[rows] = np.where(goes_left, left[node[rows]], right[node[rows]])
        return np.asarray(self.value)[node]


@dataclass
class TrainedBaseModel:
    trees: list[Tree]
    base_score: float
    params: GbdtParams
    feature_names: list[str]
    imputation_medians: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.imputation_medians)

    def to_dict(self) -> dict:
        return {
            "version": SERIAL_VERSION,
            "base_score": self.base_score,
            "params": asdict(self.params),
            "feature_names": list(self.feature_names),
            "imputation_medians": [
                None if np.isnan(v) else float(v) for v in self.imputation_medians
            ],
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "left": t.left,
                    "right": t.right,
                    "missing_left": [bool(b) for b in t.missing_left],
                    "value": t.value,
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedBaseModel":
        if d.get("version") != SERIAL_VERSION:
            raise GbdtError(f"unsupported model version {d.get('version')}")
        trees = [Tree(**{k: v for k, v in t.items()}) for t in d["trees"]]
        med = np.array([np.nan if v is None else v for v in d["imputation_medians"]])
        return cls(trees, d["base_score"], GbdtParams(**d["params"]),
                   d["feature_names"], med)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "TrainedBaseModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(y: np.ndarray, margins: np.ndarray) -> float:
    # -log sigma(m) = log(1 + e^-m), stable both tails
    return float(np.mean(np.logaddexp(0.0, -margins * (2.0 * y - 1.0))))


def scale_pos_weight_for_fold(y_train: np.ndarray) -> float:
    y = np.asarray(y_train)
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0:
        raise GbdtError("cannot weight classes: no positive samples in fold")
    return neg / pos


def _grow_tree(x: np.ndarray, g: np.ndarray, h: np.ndarray,
               params: GbdtParams) -> Tree:
    """Exact greedy tree on pre-imputed x (NaN only for all-NaN columns)."""
    lam = params.l2_leaf_reg
    lr = params.learning_rate
    tree = Tree()

    def leaf_value(rows: np.ndarray) -> float:
        G, H = g[rows].sum(), h[rows].sum()
        return float(-lr * G / (H + lam))

    def best_split(rows: np.ndarray):
        m = len(rows)
        if m < 2:
            return None
        xn = x[rows]
        order = np.argsort(xn, axis=0, kind="stable")
        xs = np.take_along_axis(xn, order, axis=0)
        gs = g[rows][order]
        hs = h[rows][order]
        nan_mask = np.isnan(xs)
        g_nan = np.where(nan_mask, gs, 0.0).sum(axis=0)
        h_nan = np.where(nan_mask, hs, 0.0).sum(axis=0)
        cum_g = np.cumsum(np.where(nan_mask, 0.0, gs), axis=0)[:-1]
        cum_h = np.cumsum(np.where(nan_mask, 0.0, hs), axis=0)[:-1]

        G, H = g[rows].sum(), h[rows].sum()
        parent = G * G / (H + lam)
        valid = xs[1:] > xs[:-1]  # False at finite->NaN boundaries too
        if not valid.any():
            return None

        def gain_for(gl, hl):
            gr, hr = G - gl, H - hl
            return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)

        gain_left = gain_for(cum_g + g_nan, cum_h + h_nan) - params.gamma
        gain_right = gain_for(cum_g, cum_h) - params.gamma
        miss_left = gain_left >= gain_right
        gains = np.where(valid, np.maximum(gain_left, gain_right), -np.inf)
        flat = int(np.argmax(gains))
        if gains.flat[flat] <= 0:
            return None
        pos, feat = np.unravel_index(flat, gains.shape)
        thr = 0.5 * (xs[pos, feat] + xs[pos + 1, feat])
        xv = x[rows, feat]
        to_left = xv < thr
        to_left = np.where(np.isnan(xv), bool(miss_left[pos, feat]), to_left)
        return feat, float(thr), bool(miss_left[pos, feat]), rows[to_left], rows[~to_left]

    def build(rows: np.ndarray, depth: int) -> int:
        if depth < params.max_depth:
            split = best_split(rows)
            if split is not None:
                feat, thr, miss_left, rows_l, rows_r = split
                node = tree._add(int(feat), thr, -1, -1, miss_left, 0.0)
                tree.left[node] = build(rows_l, depth + 1)
                tree.right[node] = build(rows_r, depth + 1)
                return node
        return tree.add_leaf(leaf_value(rows))

    build(np.arange(len(g)), 0)
    return tree


def fit(X: np.ndarray, y: np.ndarray, params: GbdtParams,
        feature_names: list[str] | None = None) -> TrainedBaseModel:
    """Boost params.n_estimators rounds; rounds whose tree finds no positive
    gain contribute nothing (predictions stay at the base rate)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise GbdtError("need at least 2 samples")
    if len(np.unique(y)) < 2:
        raise GbdtError("degenerate labels: both classes must be present")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    if len(feature_names) != d:
        raise GbdtError("feature_names length mismatch")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
        medians = np.nanmedian(X, axis=0)
    X_imp = np.where(np.isnan(X), medians, X)

    pi = float(y.mean())
    base_score = float(np.log(pi / (1 - pi)))
    margins = np.full(n, base_score)
    rng = np.random.default_rng(params.seed)
    spw = params.scale_pos_weight
    sample_w = np.where(y == 1, spw, 1.0)

    trees: list[Tree] = []
    k = max(2, int(round(params.subsample * n)))
    for _ in range(params.n_estimators):
        p = sigmoid(margins)
        g = sample_w * (p - y)
        h = sample_w * p * (1 - p)
        if params.subsample < 1.0:
            rows = np.sort(rng.choice(n, size=min(k, n), replace=False))
        else:
            rows = np.arange(n)
        tree = _grow_tree(X_imp[rows], g[rows], h[rows], params)
        if tree.n_splits == 0:
            continue
        trees.append(tree)
        margins = margins + tree.predict(X_imp)

    return TrainedBaseModel(trees, base_score, params, list(feature_names),
                            medians)


def predict_log_odds(model: TrainedBaseModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise GbdtError(
            f"feature count mismatch: model has {model.n_features}, got {X.shape[1]}"
        )
    X = np.where(np.isnan(X), model.imputation_medians, X)
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out = out + tree.predict(X)
    return out


def predict_proba(model: TrainedBaseModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(predict_log_odds(model, X))
