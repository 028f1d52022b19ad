"""Automated preprocessing chain: notch, zero-phase high-pass, RMS artifact
rejection, polyphase resampling, montage re-referencing, and windowing.

All operations are pure functions; the chain order is fixed:
unit-consistent input -> notch -> high-pass -> artifact rejection ->
resampling -> segment cropping/windowing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .channels import CANONICAL_1020, DOUBLE_BANANA_PAIRS, LAPLACIAN_NEIGHBOURS
from .ingest import Recording, Segment, SegmentKind


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class RmsThresholdRule:
    """Reject a window when a channel RMS exceeds median + k*MAD over the
    recording's windows, or an absolute ceiling (None disables)."""

    mad_multiplier: float = 6.0
    absolute_ceiling_uv: float | None = 500.0


@dataclass(frozen=True)
class PreprocessConfig:
    notch_hz: float = 50.0
    highpass_hz: float = 1.0
    highpass_order: int = 4
    target_fs: float = 200.0
    rms_window_s: float = 1.0
    rms_rule: RmsThresholdRule = field(default_factory=RmsThresholdRule)

    def validate(self, source_fs: float) -> None:
        if self.notch_hz not in (50.0, 60.0):
            raise PreprocessError(f"notch_hz must be 50 or 60, got {self.notch_hz}")
        if self.target_fs > source_fs:
            raise PreprocessError(
                f"target_fs {self.target_fs} exceeds source fs {source_fs}"
            )
        if not 0 < self.highpass_hz < self.notch_hz:
            raise PreprocessError("highpass_hz must lie in (0, notch_hz)")
        if min(self.target_fs, self.rms_window_s) <= 0:
            raise PreprocessError("rates and windows must be positive")


_NOTCH_Q = 30.0


def _ir_length(b: np.ndarray, a: np.ndarray, fs: float, eps: float = 1e-9) -> int:
    """Effective impulse-response length: where the tail drops below eps*peak."""
    n = max(int(10 * fs), 64)
    h = sps.lfilter(b, a, np.r_[1.0, np.zeros(n - 1)])
    mag = np.abs(h)
    above = np.nonzero(mag > eps * mag.max())[0]
    return int(above[-1]) + 1 if len(above) else 1


def _filtfilt(b: np.ndarray, a: np.ndarray, x: np.ndarray, fs: float) -> np.ndarray:
    padlen = min(3 * _ir_length(b, a, fs), x.shape[-1] - 1)
    return sps.filtfilt(b, a, x, axis=-1, padtype="even", padlen=padlen)


def notch_filter(x: np.ndarray, fs: float, notch_hz: float) -> np.ndarray:
    """Zero-phase second-order IIR notch (Q=30) applied per channel."""
    if fs <= 2 * notch_hz:
        raise PreprocessError(f"fs={fs} must exceed 2x notch frequency {notch_hz}")
    b, a = sps.iirnotch(notch_hz, _NOTCH_Q, fs=fs)
    return _filtfilt(b, a, np.asarray(x, dtype=np.float64), fs)


def highpass_zero_phase(x: np.ndarray, fs: float, cutoff: float = 1.0,
                        order: int = 4) -> np.ndarray:
    """Butterworth high-pass run forward and backward (zero phase)."""
    if not 0 < cutoff < fs / 2:
        raise PreprocessError(f"cutoff {cutoff} must lie in (0, fs/2={fs / 2})")
    b, a = sps.butter(order, cutoff, btype="highpass", fs=fs)
    return _filtfilt(b, a, np.asarray(x, dtype=np.float64), fs)


def rms_artifact_reject(
    x: np.ndarray, fs: float, config: PreprocessConfig | None = None
) -> tuple[list[np.ndarray], np.ndarray]:
    """Split into consecutive rms_window_s windows and flag artifact windows.

    Returns (kept windows, keep mask over all windows). A window is rejected
    when any channel RMS exceeds its per-channel median + k*MAD across the
    recording, or the absolute ceiling.
    """
    config = config or PreprocessConfig()
    rule = config.rms_rule
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    w = int(round(config.rms_window_s * fs))
    n_win = x.shape[1] // w
    if n_win == 0:
        raise PreprocessError("signal shorter than one RMS window")

    chunks = x[:, : n_win * w].reshape(x.shape[0], n_win, w)
    rms = np.sqrt(np.mean(chunks ** 2, axis=2))  # channels x windows
    med = np.median(rms, axis=1, keepdims=True)
    mad = np.median(np.abs(rms - med), axis=1, keepdims=True)
    reject = rms > med + rule.mad_multiplier * mad
    if rule.absolute_ceiling_uv is not None:
        reject |= rms > rule.absolute_ceiling_uv
    keep = ~reject.any(axis=0)
    kept = [chunks[:, i, :] for i in range(n_win) if keep[i]]
    return kept, keep


def resample(x: np.ndarray, fs_in: float, fs_out: float) -> np.ndarray:
    """Polyphase rational-ratio resampling, anti-alias cutoff 0.9x output Nyquist."""
    if fs_out > fs_in:
        raise PreprocessError(f"fs_out {fs_out} must not exceed fs_in {fs_in}")
    if fs_out == fs_in:
        return np.asarray(x, dtype=np.float64)
    ratio = Fraction(fs_out).limit_denominator(10 ** 6) / Fraction(fs_in).limit_denominator(10 ** 6)
    up, down = ratio.numerator, ratio.denominator
    half = 32 * max(up, down)
    h = sps.firwin(2 * half + 1, 0.9 / down) * up
    return sps.resample_poly(np.asarray(x, dtype=np.float64), up, down,
                             axis=-1, window=h)


class MontageKind(enum.Enum):
    CAR = "car"
    CZ = "cz"
    LAPLACIAN = "laplacian"
    BIPOLAR_DB = "bipolardb"


@dataclass(frozen=True)
class Montage:
    kind: MontageKind
    channel_names: tuple[str, ...]  # derived channels
    matrix: np.ndarray  # derived x source


def build_montage(kind: MontageKind | str,
                  source_channels: tuple[str, ...] = CANONICAL_1020) -> Montage:
    """Linear re-referencing matrix for one montage over the given sources."""
    if isinstance(kind, str):
        kind = MontageKind(kind.lower())
    idx = {c: i for i, c in enumerate(source_channels)}
    c = len(source_channels)

    def require(name: str) -> int:
        if name not in idx:
            raise PreprocessError(f"montage {kind.value} requires missing channel {name}")
        return idx[name]

    if kind is MontageKind.CAR:
        m = np.eye(c) - np.full((c, c), 1.0 / c)
        return Montage(kind, tuple(source_channels), m)

    if kind is MontageKind.CZ:
        cz = require("Cz")
        names = tuple(ch for ch in source_channels if ch != "Cz")
        m = np.zeros((len(names), c))
        for r, ch in enumerate(names):
            m[r, idx[ch]] = 1.0
            m[r, cz] = -1.0
        return Montage(kind, names, m)

    if kind is MontageKind.LAPLACIAN:
        m = np.zeros((c, c))
        for r, ch in enumerate(source_channels):
            neigh = [nb for nb in LAPLACIAN_NEIGHBOURS[ch] if nb in idx]
            if not neigh:
                raise PreprocessError(f"montage laplacian: no neighbours present for {ch}")
            m[r, idx[ch]] = 1.0
            for nb in neigh:
                m[r, idx[nb]] -= 1.0 / len(neigh)
        return Montage(kind, tuple(source_channels), m)

    if kind is MontageKind.BIPOLAR_DB:
        names = []
        rows = []
        for a, b in DOUBLE_BANANA_PAIRS:
            ia, ib = require(a), require(b)
            row = np.zeros(c)
            row[ia] = 1.0
            row[ib] = -1.0
            rows.append(row)
            names.append(f"{a}-{b}")
        return Montage(kind, tuple(names), np.vstack(rows))

    raise PreprocessError(f"unknown montage {kind}")


def apply_montage(data: np.ndarray, montage: Montage) -> np.ndarray:
    """Re-reference channels x samples data (or a stack of windows)."""
    return montage.matrix @ data


@dataclass
class WindowedSegment:
    montage_kind: MontageKind
    window_length_s: float
    windows: list[np.ndarray]  # each derived-channels x samples
    segment_kind: SegmentKind
    channel_names: tuple[str, ...]


WINDOW_LENGTHS_S = (1, 2, 5, 10, 20, 60)


def window_segment(
    recording: Recording,
    segment: Segment,
    montage: Montage,
    window_length_s: float,
    clean_mask: np.ndarray | None = None,
) -> WindowedSegment:
    """Cut one segment into consecutive non-overlapping montage windows.

    clean_mask (per-sample boolean, True = keep) drops any window touching a
    rejected span. The trailing remainder is dropped.
    """
    fs = recording.fs
    w = int(round(window_length_s * fs))
    data = recording.data[:, segment.start_sample:segment.end_sample]
    if data.shape[1] < w:
        raise PreprocessError(
            f"segment too short: {data.shape[1] / fs:.1f}s < window {window_length_s}s"
        )
    derived = apply_montage(data, montage)
    n_win = data.shape[1] // w
    windows = []
    for i in range(n_win):
        lo = segment.start_sample + i * w
        if clean_mask is not None and not clean_mask[lo:lo + w].all():
            continue
        windows.append(derived[:, i * w:(i + 1) * w])
    return WindowedSegment(montage.kind, window_length_s, windows,
                           segment.kind, montage.channel_names)


@dataclass
class PreprocessResult:
    recording: Recording  # filtered + resampled, segments remapped
    clean_mask: np.ndarray  # per-sample at target fs, True = keep
    rejected_fraction: float
    keep_windows: np.ndarray  # per 1s-window keep flags at the source rate


def preprocess_recording(recording: Recording,
                         config: PreprocessConfig) -> PreprocessResult:
    """Run the full chain on an ingested Recording.

    Artifact windows are masked (not cut out) so segment boundaries stay
    aligned; windowing later skips masked spans.
    """
    config.validate(recording.fs)
    x = notch_filter(recording.data, recording.fs, config.notch_hz)
    x = highpass_zero_phase(x, recording.fs, config.highpass_hz, config.highpass_order)
    _, keep = rms_artifact_reject(x, recording.fs, config)

    y = resample(x, recording.fs, config.target_fs)
    scale = config.target_fs / recording.fs
    n_out = y.shape[1]

    mask = np.ones(n_out, dtype=bool)
    w_src = int(round(config.rms_window_s * recording.fs))
    for i, ok in enumerate(keep):
        if not ok:
            lo = int(math.floor(i * w_src * scale))
            hi = int(math.ceil((i + 1) * w_src * scale))
            mask[lo:min(hi, n_out)] = False
    # Samples past the last full RMS window keep their default (True).

    segments = [
        Segment(s.kind,
                min(int(round(s.start_sample * scale)), n_out),
                min(int(round(s.end_sample * scale)), n_out))
        for s in recording.segments
    ]
    out = replace(recording, fs=config.target_fs, data=y, segments=segments)
    out.validate()
    return PreprocessResult(
        recording=out,
        clean_mask=mask,
        rejected_fraction=float(1.0 - keep.mean()) if len(keep) else 0.0,
        keep_windows=keep,
    )
