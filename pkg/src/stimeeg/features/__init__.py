"""Feature extraction: ten families x montage x window length x combiner.

A FeatureConfig names one cell of the extraction grid; build_feature_matrix
turns a cohort of preprocessed recordings into the subjects x features matrix
for that cell. Matrices may contain NaN (combiner undefined for too few
windows, subjects without clean windows); imputation with training-fold
medians happens at model-fitting time.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..ingest import Recording, SegmentKind
from ..preprocess import (
    Montage,
    MontageKind,
    PreprocessError,
    PreprocessResult,
    WINDOW_LENGTHS_S,
    build_montage,
    window_segment,
)
from .bands import BAND_NAMES, FrequencyBands
from .connectivity import (
    cc_names,
    extract_cc,
    extract_plv,
    max_cross_correlation,
    plv_matrices,
    plv_names,
)
from .graphs import graph_feature_names, graph_feature_vector, graph_metrics
from .spectral import extract_spectral, spectral_names
from .stockwell import extract_stockwell, stockwell_names
from .utm import extract_utm, utm_names
from .wavelets import cwt_names, dwt_names, extract_cwt, extract_dwt

logger = logging.getLogger(__name__)


class Family(enum.Enum):
    UTM = "utm"
    SPECTRAL = "spectral"
    CWT = "cwt"
    DWT = "dwt"
    MST = "mst"
    SST = "sst"
    CC = "cc"
    PLV = "plv"
    GCC = "gcc"
    GPLV = "gplv"


class Combiner(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    STD = "std"
    SKEWNESS = "skewness"
    KURTOSIS = "kurtosis"


@dataclass(frozen=True)
class FeatureConfig:
    family: Family
    montage: MontageKind
    window_length_s: float
    combiner: Combiner

    def __post_init__(self):
        if self.window_length_s not in WINDOW_LENGTHS_S:
            raise ValueError(
                f"window_length_s must be one of {WINDOW_LENGTHS_S}, "
                f"got {self.window_length_s}"
            )

    @classmethod
    def parse(cls, family: str, montage: str, window_length_s: float,
              combiner: str) -> "FeatureConfig":
        return cls(Family(family.lower()), MontageKind(montage.lower()),
                   window_length_s, Combiner(combiner.lower()))

    def key(self) -> str:
        w = int(self.window_length_s)
        return f"{self.family.value}_{self.montage.value}_{w}s_{self.combiner.value}"

    def __str__(self) -> str:
        return self.key()


def extract_window(family: Family, window: np.ndarray, fs: float) -> np.ndarray:
    """Feature vector of one montage-derived window."""
    if family is Family.UTM:
        return extract_utm(window)
    if family is Family.SPECTRAL:
        return extract_spectral(window, fs)
    if family is Family.CWT:
        return extract_cwt(window, fs)
    if family is Family.DWT:
        return extract_dwt(window)
    if family is Family.MST:
        return extract_stockwell(window, fs, "mst")
    if family is Family.SST:
        return extract_stockwell(window, fs, "sst")
    if family is Family.CC:
        return extract_cc(window, fs)
    if family is Family.PLV:
        return extract_plv(window, fs)
    if family is Family.GCC:
        return graph_feature_vector(max_cross_correlation(window, fs))
    if family is Family.GPLV:
        bands = FrequencyBands.standard(fs)
        mats = plv_matrices(window, fs, bands)
        return np.concatenate([graph_feature_vector(mats[b]) for b in bands.names])
    raise ValueError(f"unknown family {family}")


def feature_names(family: Family, channel_names) -> list[str]:
    if family is Family.UTM:
        return utm_names(channel_names)
    if family is Family.SPECTRAL:
        return spectral_names(channel_names)
    if family is Family.CWT:
        return cwt_names(channel_names)
    if family is Family.DWT:
        return dwt_names(channel_names)
    if family is Family.MST:
        return stockwell_names("mst", channel_names)
    if family is Family.SST:
        return stockwell_names("sst", channel_names)
    if family is Family.CC:
        return cc_names(channel_names)
    if family is Family.PLV:
        return plv_names(channel_names)
    if family is Family.GCC:
        return graph_feature_names("gcc", channel_names)
    if family is Family.GPLV:
        return [
            n for b in BAND_NAMES
            for n in graph_feature_names(f"gplv_{b}", channel_names)
        ]
    raise ValueError(f"unknown family {family}")


def extract_windows(family: Family, windows: Sequence[np.ndarray],
                    fs: float) -> np.ndarray:
    """Stack per-window feature vectors into windows x features."""
    return np.vstack([extract_window(family, w, fs) for w in windows])


def _sample_std(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    if n < 2:
        return np.full(v.shape[1], np.nan)
    return v.std(axis=0, ddof=1)


def _sample_skew(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    out = np.full(v.shape[1], np.nan)
    if n < 3:
        return out
    d = v - v.mean(axis=0)
    m2 = np.mean(d ** 2, axis=0)
    m3 = np.mean(d ** 3, axis=0)
    ok = m2 > 0
    out[ok] = m3[ok] / m2[ok] ** 1.5 * np.sqrt(n * (n - 1)) / (n - 2)
    return out


def _sample_kurtosis(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    out = np.full(v.shape[1], np.nan)
    if n < 4:
        return out
    d = v - v.mean(axis=0)
    m2 = np.mean(d ** 2, axis=0)
    m4 = np.mean(d ** 4, axis=0)
    ok = m2 > 0
    g2 = m4[ok] / m2[ok] ** 2 - 3.0
    out[ok] = ((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3))
    return out


def apply_combiner(window_values: np.ndarray, combiner: Combiner) -> np.ndarray:
    """Elementwise statistic across windows; NaN where undefined."""
    v = np.atleast_2d(np.asarray(window_values, dtype=np.float64))
    if combiner is Combiner.MEAN:
        return v.mean(axis=0)
    if combiner is Combiner.MEDIAN:
        return np.median(v, axis=0)
    if combiner is Combiner.STD:
        return _sample_std(v)
    if combiner is Combiner.SKEWNESS:
        return _sample_skew(v)
    if combiner is Combiner.KURTOSIS:
        return _sample_kurtosis(v)
    raise ValueError(f"unknown combiner {combiner}")


@dataclass
class FeatureMatrix:
    config: FeatureConfig
    subject_ids: list[str]
    X: np.ndarray  # subjects x features, may contain NaN
    feature_names: list[str]
    segment_kind: SegmentKind
    dropped_subjects: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.X.shape != (len(self.subject_ids), len(self.feature_names)):
            raise ValueError("feature matrix shape does not match ids/names")
        if np.isinf(self.X).any():
            raise ValueError("feature matrix contains infinities")

    def rows(self, subject_ids: Sequence[str]) -> np.ndarray:
        index = {s: i for i, s in enumerate(self.subject_ids)}
        return self.X[[index[s] for s in subject_ids]]

    def save_csv(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w") as f:
            f.write("subject_id," + ",".join(self.feature_names) + "\n")
            for sid, row in zip(self.subject_ids, self.X):
                f.write(sid + "," + ",".join(repr(v) for v in row) + "\n")

    def save_npz(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            X=self.X,
            subject_ids=np.array(self.subject_ids),
            feature_names=np.array(self.feature_names),
            segment_kind=self.segment_kind.value,
            config_key=self.config.key(),
        )

    @classmethod
    def load_npz(cls, path: str | Path, config: FeatureConfig) -> "FeatureMatrix":
        with np.load(path, allow_pickle=False) as z:
            if str(z["config_key"]) != config.key():
                raise ValueError(
                    f"cache {path} holds {z['config_key']}, expected {config.key()}"
                )
            return cls(
                config=config,
                subject_ids=[str(s) for s in z["subject_ids"]],
                X=z["X"],
                feature_names=[str(n) for n in z["feature_names"]],
                segment_kind=SegmentKind(str(z["segment_kind"])),
            )


def _first_per_subject(
    recordings: Sequence[Recording | PreprocessResult],
) -> list[tuple[Recording, np.ndarray | None]]:
    seen: set[str] = set()
    out = []
    for item in recordings:
        rec = item.recording if isinstance(item, PreprocessResult) else item
        mask = item.clean_mask if isinstance(item, PreprocessResult) else None
        if rec.subject_id in seen:
            continue
        seen.add(rec.subject_id)
        out.append((rec, mask))
    return out


def build_feature_matrix(
    recordings: Sequence[Recording | PreprocessResult],
    config: FeatureConfig,
    segment_kind: SegmentKind,
) -> FeatureMatrix:
    """One row per subject (first recording each); drops subjects lacking the
    requested segment (or with one shorter than the window), with a warning."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    names: list[str] | None = None
    dropped: list[str] = []

    for rec, mask in _first_per_subject(recordings):
        seg = rec.segment(segment_kind)
        if seg is None:
            logger.warning("subject %s: no %s segment, dropped",
                           rec.subject_id, segment_kind.value)
            dropped.append(rec.subject_id)
            continue
        montage = build_montage(config.montage, rec.channels)
        this_names = feature_names(config.family, montage.channel_names)
        if names is None:
            names = this_names
        elif names != this_names:
            logger.warning("subject %s: channel set differs, dropped", rec.subject_id)
            dropped.append(rec.subject_id)
            continue
        try:
            ws = window_segment(rec, seg, montage, config.window_length_s, mask)
        except PreprocessError as e:
            logger.warning("subject %s: %s, dropped", rec.subject_id, e)
            dropped.append(rec.subject_id)
            continue
        if not ws.windows:
            logger.warning("subject %s: no clean windows, row is NaN", rec.subject_id)
            rows.append(np.full(len(names), np.nan))
            ids.append(rec.subject_id)
            continue
        values = extract_windows(config.family, ws.windows, rec.fs)
        rows.append(apply_combiner(values, config.combiner))
        ids.append(rec.subject_id)

    if not rows:
        raise ValueError(f"no subject provides a usable {segment_kind.value} segment")
    return FeatureMatrix(config, ids, np.vstack(rows), names, segment_kind,
                         dropped_subjects=dropped)


__all__ = [
    "BAND_NAMES",
    "Combiner",
    "Family",
    "FeatureConfig",
    "FeatureMatrix",
    "FrequencyBands",
    "apply_combiner",
    "build_feature_matrix",
    "extract_window",
    "extract_windows",
    "feature_names",
]
