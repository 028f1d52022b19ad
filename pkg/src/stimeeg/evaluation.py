"""LOSO cross-validation, metrics, configuration ranking, and ensembling.

Stage 1 evaluates each feature configuration with plain LOSO (no inner
split). The ensemble stage gives every fold a subject-level 70/30 inner
split: base models are fit on the inner-train subjects, stacking weights and
the GMean threshold come from the validation subjects, base models are
refit on all training subjects with weights/threshold frozen, and the
held-out subject is scored. Each run is repeated over several seeds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import numpy as np

from . import gbdt
from .features import FeatureConfig, FeatureMatrix, build_feature_matrix
from .ingest import Recording, SegmentKind
from .stacking import StackInputs, fit_stack, predict_stack, select_threshold_gmean

DEFAULT_N_SEEDS = 5
VALID_FRACTION = 0.3
CLINICAL_POSTERIOR = 0.6


class EvaluationError(ValueError):
    pass


# --- fold planning --------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    test_subject: str
    train_subjects: tuple[str, ...]
    inner_train_subjects: tuple[str, ...]
    valid_subjects: tuple[str, ...]
    seed: int

    def validate(self) -> None:
        assert self.test_subject not in self.train_subjects
        assert set(self.inner_train_subjects).isdisjoint(self.valid_subjects)
        assert set(self.inner_train_subjects) | set(self.valid_subjects) == set(
            self.train_subjects
        )


def _stratified_inner_split(
    train: Sequence[str], labels: Mapping[str, int], rng: np.random.Generator
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    valid: list[str] = []
    for cls in (0, 1):
        members = sorted(s for s in train if labels[s] == cls)
        if len(members) < 2:
            continue  # cannot spare a subject from this class
        k = int(round(VALID_FRACTION * len(members)))
        k = min(max(k, 1), len(members) - 1)
        rng.shuffle(members)
        valid.extend(members[:k])
    inner = tuple(s for s in train if s not in set(valid))
    return inner, tuple(sorted(valid))


def loso_folds(subject_ids: Sequence[str], labels: Mapping[str, int],
               seed: int) -> list[FoldPlan]:
    """One fold per subject; the inner split is stratified by label."""
    ids = list(subject_ids)
    if len(ids) != len(set(ids)):
        raise EvaluationError("subject ids must be unique")
    if len(ids) < 3:
        raise EvaluationError("need at least 3 subjects for LOSO")
    classes = {labels[s] for s in ids}
    if classes != {0, 1}:
        raise EvaluationError("both classes must be present")

    folds = []
    for fold_idx, test in enumerate(ids):
        train = tuple(s for s in ids if s != test)
        rng = np.random.default_rng([seed, fold_idx])
        for _ in range(100):
            inner, valid = _stratified_inner_split(train, labels, rng)
            if {labels[s] for s in inner} == {0, 1}:
                break
        else:
            raise EvaluationError(
                f"fold {test}: could not draw a two-class inner training split"
            )
        plan = FoldPlan(test, train, inner, valid, seed)
        plan.validate()
        folds.append(plan)
    return folds


# --- metrics ---------------------------------------------------------------

def compute_auc(probabilities: np.ndarray, y: np.ndarray) -> float:
    """Mann-Whitney concordance: (concordant pairs + half ties) / (n+ n-)."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(y)
    pos = p[y == 1]
    neg = p[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise EvaluationError("AUC needs both classes")
    from scipy.stats import rankdata

    ranks = rankdata(np.concatenate([pos, neg]))
    r_pos = ranks[: len(pos)].sum()
    return float((r_pos - len(pos) * (len(pos) + 1) / 2) / (len(pos) * len(neg)))


def roc_curve(probabilities: np.ndarray, y: np.ndarray
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ROC staircase (fpr, tpr, thresholds), tied scores grouped."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs both classes")
    order = np.argsort(-p, kind="mergesort")
    p_sorted, y_sorted = p[order], y[order]
    distinct = np.nonzero(np.diff(p_sorted))[0]
    cut = np.r_[distinct, len(p_sorted) - 1]
    tp = np.cumsum(y_sorted == 1)[cut]
    fp = np.cumsum(y_sorted == 0)[cut]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, p_sorted[cut]]
    return fpr, tpr, thresholds


def fpr_at_tpr(fpr: np.ndarray, tpr: np.ndarray, sens: float) -> float:
    """FPR where the ROC polyline first reaches the requested TPR
    (linear interpolation between vertices)."""
    if sens <= tpr[0]:
        return float(fpr[0])
    for i in range(1, len(tpr)):
        if tpr[i] >= sens:
            if tpr[i] == tpr[i - 1]:
                return float(fpr[i - 1])
            w = (sens - tpr[i - 1]) / (tpr[i] - tpr[i - 1])
            return float(fpr[i - 1] + w * (fpr[i] - fpr[i - 1]))
    return 1.0


def compute_bac_at_sens(probabilities: np.ndarray, y: np.ndarray,
                        sens: float = 0.8) -> float:
    fpr, tpr, _ = roc_curve(probabilities, y)
    return (sens + (1.0 - fpr_at_tpr(fpr, tpr, sens))) / 2.0


def clinically_relevant_line(p1: float, p0: float,
                             p_posterior: float = CLINICAL_POSTERIOR) -> float:
    """Slope of the ROC line above which a positive prediction implies a
    posterior probability of at least p_posterior at cohort prevalence."""
    if not (0 < p1 < 1 and 0 < p0 < 1):
        raise EvaluationError("class proportions must lie strictly inside (0, 1)")
    if abs(p1 + p0 - 1.0) > 1e-9:
        raise EvaluationError("class proportions must sum to 1")
    return (p_posterior * p0) / (p1 * (1.0 - p_posterior))


def point_is_clinically_relevant(fpr: float, tpr: float, slope: float) -> bool:
    return tpr > slope * fpr


# --- leakage audit ----------------------------------------------------------

def row_fingerprint(row: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(row, dtype=np.float64).tobytes()
                          ).hexdigest()


@dataclass
class FitAudit:
    """Records the fingerprint of every feature row entering a fit call."""

    events: list[dict] = field(default_factory=list)

    def record(self, stage: str, seed: int, test_subject: str,
               X_rows: np.ndarray) -> None:
        self.events.append({
            "stage": stage,
            "seed": seed,
            "test_subject": test_subject,
            "row_hashes": {row_fingerprint(r) for r in np.atleast_2d(X_rows)},
        })


# --- reports ----------------------------------------------------------------

@dataclass
class EvaluationReport:
    kind: str  # "single" | "ensemble"
    config_keys: list[str]
    segment: str
    seeds: list[int]
    auc_per_seed: list[float]
    bac_per_seed: list[float]
    auc_mean: float
    auc_std: float
    bac_mean: float
    bac_std: float
    subject_ids: list[str]
    y_true: list[int]
    prob_mean: list[float]
    decisions: list[int]
    threshold: float
    roc_fpr: list[float]
    roc_tpr: list[float]
    gmean: float
    cr_slope: float
    operating_point: tuple[float, float]
    clinically_relevant: bool
    fold_weights: list[list[list[float]]] = field(default_factory=list)
    fold_thresholds: list[list[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _seed_stats(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    return float(v.mean()), std


def _decision_rates(decisions: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    pos = y == 1
    neg = ~pos
    tpr = float(decisions[pos].mean()) if pos.any() else 0.0
    fpr = float(decisions[neg].mean()) if neg.any() else 0.0
    return fpr, tpr


def _finalize_report(kind, config_keys, segment, seeds, aucs, bacs, ids, y,
                     prob_runs, decision_runs, thresholds, fold_weights,
                     fold_thresholds) -> EvaluationReport:
    from .stacking import gmean_score

    y = np.asarray(y)
    prob_mean = np.mean(prob_runs, axis=0)
    decisions = (np.mean(decision_runs, axis=0) >= 0.5).astype(int)
    auc_mean, auc_std = _seed_stats(aucs)
    bac_mean, bac_std = _seed_stats(bacs)
    fpr, tpr, _ = roc_curve(prob_mean, y)
    p1 = float(y.mean())
    slope = clinically_relevant_line(p1, 1.0 - p1)
    op = _decision_rates(decisions, y)
    t_rep = float(np.median(thresholds))
    return EvaluationReport(
        kind=kind,
        config_keys=list(config_keys),
        segment=segment,
        seeds=list(seeds),
        auc_per_seed=[float(a) for a in aucs],
        bac_per_seed=[float(b) for b in bacs],
        auc_mean=auc_mean, auc_std=auc_std,
        bac_mean=bac_mean, bac_std=bac_std,
        subject_ids=list(ids),
        y_true=[int(v) for v in y],
        prob_mean=[float(v) for v in prob_mean],
        decisions=[int(d) for d in decisions],
        threshold=t_rep,
        roc_fpr=[float(v) for v in fpr],
        roc_tpr=[float(v) for v in tpr],
        gmean=gmean_score(prob_mean, y, t_rep),
        cr_slope=slope,
        operating_point=op,
        clinically_relevant=point_is_clinically_relevant(op[0], op[1], slope),
        fold_weights=fold_weights,
        fold_thresholds=fold_thresholds,
    )


# --- stage 1: single configurations -----------------------------------------

def _labels_for(matrix: FeatureMatrix, labels: Mapping[str, int]) -> np.ndarray:
    missing = [s for s in matrix.subject_ids if s not in labels]
    if missing:
        raise EvaluationError(f"missing labels for subjects: {missing}")
    return np.array([labels[s] for s in matrix.subject_ids], dtype=int)


def labels_from_recordings(recordings: Sequence) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in recordings:
        rec = item.recording if hasattr(item, "recording") else item
        if rec.label is None:
            raise EvaluationError(f"subject {rec.subject_id} has no label")
        out[rec.subject_id] = 1 if rec.label == "epileptic" else 0
    return out


def evaluate_single_matrix(
    matrix: FeatureMatrix,
    labels: Mapping[str, int],
    n_seeds: int = DEFAULT_N_SEEDS,
    params: gbdt.GbdtParams | None = None,
    audit: FitAudit | None = None,
) -> EvaluationReport:
    """LOSO over one feature matrix; stage 1 trains on all N-1 subjects."""
    base = params or gbdt.GbdtParams()
    ids = matrix.subject_ids
    y = _labels_for(matrix, labels)
    label_map = {s: int(v) for s, v in zip(ids, y)}

    aucs, bacs, prob_runs, decision_runs, thresholds = [], [], [], [], []
    for seed in range(n_seeds):
        folds = loso_folds(ids, label_map, seed)
        probs = np.empty(len(ids))
        for i, fold in enumerate(folds):
            X_tr = matrix.rows(fold.train_subjects)
            y_tr = np.array([label_map[s] for s in fold.train_subjects], float)
            if audit is not None:
                audit.record("single_fit", seed, fold.test_subject, X_tr)
            spw = gbdt.scale_pos_weight_for_fold(y_tr)
            model = gbdt.fit(X_tr, y_tr, gbdt.GbdtParams(
                **{**asdict(base), "scale_pos_weight": spw, "seed": seed}),
                feature_names=matrix.feature_names)
            probs[ids.index(fold.test_subject)] = gbdt.predict_proba(
                model, matrix.rows([fold.test_subject]))[0]
        aucs.append(compute_auc(probs, y))
        bacs.append(compute_bac_at_sens(probs, y))
        t = select_threshold_gmean(probs, y)
        thresholds.append(t)
        prob_runs.append(probs)
        decision_runs.append((probs > t).astype(int))

    return _finalize_report("single", [matrix.config.key()], matrix.segment_kind.value,
                            list(range(n_seeds)), aucs, bacs, ids, y, prob_runs,
                            decision_runs, thresholds, [], [])


def run_single_config(
    recordings: Sequence,
    config: FeatureConfig,
    segment_kind: SegmentKind,
    n_seeds: int = DEFAULT_N_SEEDS,
    params: gbdt.GbdtParams | None = None,
    audit: FitAudit | None = None,
) -> EvaluationReport:
    matrix = build_feature_matrix(recordings, config, segment_kind)
    return evaluate_single_matrix(matrix, labels_from_recordings(recordings),
                                  n_seeds=n_seeds, params=params, audit=audit)


# --- ranking -----------------------------------------------------------------

def rank_configs(
    reports: Mapping[FeatureConfig, EvaluationReport],
) -> dict[str, FeatureConfig]:
    """Best configuration per family: highest mean AUC, ties broken by higher
    BAC, then smaller window."""
    best: dict[str, tuple] = {}
    for config, report in reports.items():
        key = (report.auc_mean, report.bac_mean, -config.window_length_s)
        fam = config.family.value
        if fam not in best or key > best[fam][0]:
            best[fam] = (key, config)
    return {fam: cfg for fam, (_, cfg) in sorted(best.items())}


def order_families_by_auc(
    reports: Mapping[FeatureConfig, EvaluationReport],
    best: Mapping[str, FeatureConfig],
) -> list[str]:
    return sorted(best, key=lambda fam: -reports[best[fam]].auc_mean)


# --- stage 2: stacked ensembles ----------------------------------------------

def evaluate_ensemble_matrices(
    matrices: Sequence[FeatureMatrix],
    labels: Mapping[str, int],
    n_seeds: int = DEFAULT_N_SEEDS,
    params: gbdt.GbdtParams | None = None,
    alpha: float = 0.05,
    audit: FitAudit | None = None,
    inner_split_seed: int | None = None,
) -> EvaluationReport:
    """Per fold: fit bases on inner-train, stack + threshold on validation,
    refit bases on the full training set, score the held-out subject."""
    if not 2 <= len(matrices) <= 10:
        raise EvaluationError("ensembles combine 2..10 base configurations")
    base = params or gbdt.GbdtParams()
    ids = list(matrices[0].subject_ids)
    for m in matrices[1:]:
        if m.subject_ids != ids:
            raise EvaluationError("feature matrices must cover identical subjects")
    y = _labels_for(matrices[0], labels)
    label_map = {s: int(v) for s, v in zip(ids, y)}

    aucs, bacs, prob_runs, decision_runs, thresholds = [], [], [], [], []
    all_fold_weights, all_fold_thresholds = [], []
    for seed in range(n_seeds):
        split_seed = seed if inner_split_seed is None else inner_split_seed
        folds = loso_folds(ids, label_map, split_seed)
        probs = np.empty(len(ids))
        decisions = np.empty(len(ids), dtype=int)
        fold_weights, fold_thresholds = [], []
        for fold in folds:
            y_inner = np.array([label_map[s] for s in fold.inner_train_subjects], float)
            y_valid = np.array([label_map[s] for s in fold.valid_subjects], float)
            y_train = np.array([label_map[s] for s in fold.train_subjects], float)

            inner_models = []
            for m in matrices:
                X_inner = m.rows(fold.inner_train_subjects)
                if audit is not None:
                    audit.record("ensemble_inner", seed, fold.test_subject, X_inner)
                spw = gbdt.scale_pos_weight_for_fold(y_inner)
                inner_models.append(gbdt.fit(X_inner, y_inner, gbdt.GbdtParams(
                    **{**asdict(base), "scale_pos_weight": spw, "seed": seed}),
                    feature_names=m.feature_names))

            P_valid = np.column_stack([
                gbdt.predict_log_odds(model, m.rows(fold.valid_subjects))
                for model, m in zip(inner_models, matrices)
            ])
            w = fit_stack(StackInputs(P_valid, y_valid, alpha=alpha))
            t = select_threshold_gmean(predict_stack(w, P_valid), y_valid)

            refit_models = []
            for m in matrices:
                X_train = m.rows(fold.train_subjects)
                if audit is not None:
                    audit.record("ensemble_refit", seed, fold.test_subject, X_train)
                spw = gbdt.scale_pos_weight_for_fold(y_train)
                refit_models.append(gbdt.fit(X_train, y_train, gbdt.GbdtParams(
                    **{**asdict(base), "scale_pos_weight": spw, "seed": seed}),
                    feature_names=m.feature_names))

            p_test = np.array([[
                gbdt.predict_log_odds(model, m.rows([fold.test_subject]))[0]
                for model, m in zip(refit_models, matrices)
            ]])
            prob = float(predict_stack(w, p_test)[0])
            idx = ids.index(fold.test_subject)
            probs[idx] = prob
            decisions[idx] = int(prob > t)
            fold_weights.append([float(v) for v in w])
            fold_thresholds.append(float(t))

        aucs.append(compute_auc(probs, y))
        bacs.append(compute_bac_at_sens(probs, y))
        prob_runs.append(probs)
        decision_runs.append(decisions)
        thresholds.append(float(np.median(fold_thresholds)))
        all_fold_weights.append(fold_weights)
        all_fold_thresholds.append(fold_thresholds)

    return _finalize_report(
        "ensemble", [m.config.key() for m in matrices],
        matrices[0].segment_kind.value, list(range(n_seeds)), aucs, bacs, ids, y,
        prob_runs, decision_runs, thresholds, all_fold_weights, all_fold_thresholds)


def run_ensemble(
    recordings: Sequence,
    configs: Sequence[FeatureConfig],
    segment_kind: SegmentKind,
    n_seeds: int = DEFAULT_N_SEEDS,
    params: gbdt.GbdtParams | None = None,
    alpha: float = 0.05,
    audit: FitAudit | None = None,
    inner_split_seed: int | None = None,
) -> EvaluationReport:
    labels = labels_from_recordings(recordings)
    matrices = [build_feature_matrix(recordings, c, segment_kind) for c in configs]
    common = [s for s in matrices[0].subject_ids
              if all(s in m.subject_ids for m in matrices)]
    aligned = []
    for m in matrices:
        keep = [m.subject_ids.index(s) for s in common]
        aligned.append(FeatureMatrix(m.config, common, m.X[keep], m.feature_names,
                                     m.segment_kind, m.dropped_subjects))
    return evaluate_ensemble_matrices(aligned, labels, n_seeds=n_seeds,
                                      params=params, alpha=alpha, audit=audit,
                                      inner_split_seed=inner_split_seed)
