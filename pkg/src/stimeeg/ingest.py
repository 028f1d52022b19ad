"""EDF ingestion: channel selection, photic-train detection, segment location.

Recordings are reduced to the 19-electrode 10-20 montage in microvolts; the
photic trigger channel is carried separately. IPS flash trains are detected
from the trigger channel's spectrogram; hyperventilation boundaries come from
a sidecar annotation file.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .channels import CANONICAL_1020, CANONICAL_INDEX, is_photic_label, normalize_label
from .edf import EdfHeader, parse_edf


class IngestError(ValueError):
    pass


class SegmentKind(enum.Enum):
    RESTING = "resting"
    IPS = "ips"
    HV = "hv"


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    start_sample: int
    end_sample: int

    def duration_s(self, fs: float) -> float:
        return (self.end_sample - self.start_sample) / fs


@dataclass
class Recording:
    """Multichannel EEG in microvolts with per-segment annotations."""

    subject_id: str
    channels: tuple[str, ...]
    fs: float
    data: np.ndarray  # channels x samples, float64, uV
    segments: list[Segment] = field(default_factory=list)
    label: str | None = None  # "epileptic" | "non_epileptic"
    ied_free: bool = True

    def validate(self) -> None:
        if self.fs <= 0:
            raise IngestError(f"fs must be positive, got {self.fs}")
        if self.data.ndim != 2 or self.data.shape[0] != len(self.channels):
            raise IngestError("data row count must equal channel count")
        unknown = [c for c in self.channels if c not in CANONICAL_INDEX]
        if unknown:
            raise IngestError(f"channels outside the 10-20 set: {unknown}")
        n = self.data.shape[1]
        ordered = sorted(self.segments, key=lambda s: s.start_sample)
        prev_end = 0
        for seg in ordered:
            if not (0 <= seg.start_sample < seg.end_sample <= n):
                raise IngestError(f"segment {seg} outside [0, {n})")
        for a, b in zip(ordered, ordered[1:]):
            if b.start_sample < a.end_sample:
                raise IngestError(f"overlapping segments: {a} and {b}")

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def is_epileptic(self) -> bool | None:
        if self.label is None:
            return None
        return self.label == "epileptic"

    def segment(self, kind: SegmentKind) -> Segment | None:
        for seg in self.segments:
            if seg.kind == kind:
                return seg
        return None


@dataclass(frozen=True)
class PhoticTrain:
    start_sample: int
    end_sample: int
    flash_frequency_hz: float

    def __post_init__(self):
        if self.end_sample <= self.start_sample:
            raise IngestError("train end must exceed start")
        if not (1.0 <= self.flash_frequency_hz <= 30.0):
            raise IngestError(
                f"flash frequency {self.flash_frequency_hz:.2f} Hz outside [1, 30]"
            )


class ChannelSelection(NamedTuple):
    recording: Recording
    photic: np.ndarray | None
    photic_fs: float | None


_UV_ALIASES = {"uv", "µv", "μv"}
_MV_ALIASES = {"mv"}


def select_channels(header: EdfHeader, signals: list[np.ndarray],
                    subject_id: str = "") -> ChannelSelection:
    """Keep 10-20 channels in canonical order, converted to uV.

    The photic trigger channel (label containing "Photic") is returned
    separately at its native rate. Non-EEG channels are discarded.
    """
    found: dict[str, tuple[int, np.ndarray]] = {}
    photic = None
    photic_fs = None
    for i, label in enumerate(header.labels):
        if is_photic_label(label):
            photic = np.asarray(signals[i], dtype=np.float64)
            photic_fs = header.sampling_rate(i)
            continue
        name = normalize_label(label)
        if name is None or name in found:
            continue
        dim = header.physical_dimensions[i].strip().lower()
        if dim in _UV_ALIASES or dim == "":
            scale = 1.0
        elif dim in _MV_ALIASES:
            scale = 1000.0
        else:
            raise IngestError(
                f"unknown unit {header.physical_dimensions[i]!r} on channel {label!r}"
            )
        found[name] = (i, np.asarray(signals[i], dtype=np.float64) * scale)

    if len(found) < 2:
        raise IngestError(
            f"insufficient montage coverage: matched {len(found)} of 19 channels"
        )

    rates = {header.sampling_rate(i) for i, _ in found.values()}
    if len(rates) != 1:
        raise IngestError(f"mixed EEG sampling rates: {sorted(rates)}")
    fs = rates.pop()

    names = tuple(c for c in CANONICAL_1020 if c in found)
    n = min(len(found[c][1]) for c in names)
    data = np.vstack([found[c][1][:n] for c in names])
    rec = Recording(subject_id=subject_id, channels=names, fs=fs, data=data)
    rec.validate()
    return ChannelSelection(rec, photic, photic_fs)


# Spectrogram burst detection parameters.
_STFT_WINDOW_S = 1.0
_STFT_HOP_S = 0.25
_BAND = (0.5, 30.0)
_ACTIVE_FACTOR = 10.0


def detect_ips_trains(photic_channel: np.ndarray, fs: float) -> list[PhoticTrain]:
    """Find flash trains on the trigger channel via its spectrogram.

    A 1 s Hann-windowed frame (hop 0.25 s) is active when its peak magnitude
    in 0.5-30 Hz exceeds 10x the median magnitude of the whole spectrogram in
    that band; contiguous active frames form one train. Each train's frequency
    is the dominant bin of its mean magnitude spectrum, parabolic-refined.
    """
    if fs < 50:
        raise IngestError(f"fs={fs} too low to resolve flash frequencies (need >= 50)")
    x = np.asarray(photic_channel, dtype=np.float64)
    win = int(round(_STFT_WINDOW_S * fs))
    hop = int(round(_STFT_HOP_S * fs))
    if len(x) < win:
        return []

    n_frames = 1 + (len(x) - win) // hop
    taper = np.hanning(win)
    freqs = np.fft.rfftfreq(win, d=1.0 / fs)
    band = (freqs >= _BAND[0]) & (freqs <= _BAND[1])
    frames = np.lib.stride_tricks.sliding_window_view(x, win)[::hop][:n_frames]
    # Per-frame mean removal keeps DC offsets from leaking into the band.
    frames = frames - frames.mean(axis=1, keepdims=True)
    mags = np.abs(np.fft.rfft(frames * taper, axis=1))[:, band]
    band_freqs = freqs[band]

    floor = np.median(mags)
    peak_per_frame = mags.max(axis=1)
    active = peak_per_frame > _ACTIVE_FACTOR * floor

    trains: list[PhoticTrain] = []
    i = 0
    while i < n_frames:
        if not active[i]:
            i += 1
            continue
        j = i
        while j + 1 < n_frames and active[j + 1]:
            j += 1
        start = i * hop
        end = min(j * hop + win, len(x))
        mean_mag = mags[i:j + 1].mean(axis=0)
        k = int(np.argmax(mean_mag))
        f_hat = _parabolic_peak(band_freqs, mean_mag, k)
        trains.append(PhoticTrain(start, end, float(np.clip(f_hat, 1.0, 30.0))))
        i = j + 1
    return trains


def _parabolic_peak(freqs: np.ndarray, mags: np.ndarray, k: int) -> float:
    if k == 0 or k == len(mags) - 1:
        return freqs[k]
    a, b, c = mags[k - 1], mags[k], mags[k + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return freqs[k]
    delta = 0.5 * (a - c) / denom
    return freqs[k] + delta * (freqs[1] - freqs[0])


def locate_segments(
    recording: Recording,
    trains: list[PhoticTrain],
    hv_markers: tuple[float, float] | None = None,
) -> Recording:
    """Crop the recording timeline into IPS / HV / resting segments.

    IPS spans [first train start, last train end]; HV comes from the sidecar
    markers (seconds); resting is the longest remaining stimulus-free span.
    """
    n = recording.n_samples
    fs = recording.fs
    blocked: list[Segment] = []
    if trains:
        start = min(t.start_sample for t in trains)
        end = max(t.end_sample for t in trains)
        blocked.append(Segment(SegmentKind.IPS, start, min(end, n)))
    if hv_markers is not None:
        h0, h1 = hv_markers
        seg = Segment(SegmentKind.HV, int(round(h0 * fs)), min(int(round(h1 * fs)), n))
        if seg.end_sample <= seg.start_sample:
            raise IngestError(f"empty HV annotation: {hv_markers}")
        blocked.append(seg)

    blocked.sort(key=lambda s: s.start_sample)
    for a, b in zip(blocked, blocked[1:]):
        if b.start_sample < a.end_sample:
            raise IngestError(
                f"overlapping annotations: {a.kind.value} [{a.start_sample}, {a.end_sample}) "
                f"collides with {b.kind.value} [{b.start_sample}, {b.end_sample})"
            )

    # Longest stimulus-free span becomes the resting segment.
    gaps = []
    cursor = 0
    for seg in blocked:
        if seg.start_sample > cursor:
            gaps.append((cursor, seg.start_sample))
        cursor = max(cursor, seg.end_sample)
    if cursor < n:
        gaps.append((cursor, n))
    segments = list(blocked)
    if gaps:
        g0, g1 = max(gaps, key=lambda g: g[1] - g[0])
        if g1 > g0:
            segments.append(Segment(SegmentKind.RESTING, g0, g1))

    segments.sort(key=lambda s: s.start_sample)
    out = replace(recording, segments=segments)
    out.validate()
    return out


# --- sidecar annotations -------------------------------------------------

SIDECAR_SUFFIX = ".ann"


@dataclass
class Sidecar:
    subject_id: str
    label: str | None = None
    ied_free: bool = True
    hv_start_s: float | None = None
    hv_end_s: float | None = None


def parse_sidecar(text: str) -> Sidecar:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise IngestError(f"sidecar line {lineno}: expected 'key: value', got {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    if "subject_id" not in fields:
        raise IngestError("sidecar missing subject_id")
    label = fields.get("label")
    if label is not None and label not in ("epileptic", "non_epileptic"):
        raise IngestError(f"sidecar label must be epileptic|non_epileptic, got {label!r}")
    sc = Sidecar(
        subject_id=fields["subject_id"],
        label=label,
        ied_free=fields.get("ied_free", "true").lower() in ("true", "1", "yes"),
    )
    if "hv_start_s" in fields or "hv_end_s" in fields:
        try:
            sc.hv_start_s = float(fields["hv_start_s"])
            sc.hv_end_s = float(fields["hv_end_s"])
        except (KeyError, ValueError) as e:
            raise IngestError(f"sidecar HV markers malformed: {e}") from None
        if sc.hv_end_s <= sc.hv_start_s:
            raise IngestError("sidecar hv_end_s must exceed hv_start_s")
    return sc


def format_sidecar(sc: Sidecar) -> str:
    lines = [f"subject_id: {sc.subject_id}"]
    if sc.label is not None:
        lines.append(f"label: {sc.label}")
    lines.append(f"ied_free: {'true' if sc.ied_free else 'false'}")
    if sc.hv_start_s is not None:
        lines.append(f"hv_start_s: {sc.hv_start_s}")
        lines.append(f"hv_end_s: {sc.hv_end_s}")
    return "\n".join(lines) + "\n"


@dataclass
class IngestResult:
    recording: Recording
    trains: list[PhoticTrain]
    photic_found: bool
    sidecar: Sidecar | None


def load_recording(edf_path: str | Path) -> IngestResult:
    """Ingest one EDF file plus optional sidecar into a segmented Recording."""
    edf_path = Path(edf_path)
    header, signals = parse_edf(edf_path.read_bytes())

    sidecar = None
    sc_path = edf_path.with_suffix(edf_path.suffix + SIDECAR_SUFFIX)
    if sc_path.exists():
        sidecar = parse_sidecar(sc_path.read_text())

    subject = sidecar.subject_id if sidecar else edf_path.stem
    rec, photic, photic_fs = select_channels(header, signals, subject_id=subject)
    trains: list[PhoticTrain] = []
    if photic is not None:
        trains_native = detect_ips_trains(photic, photic_fs)
        # Trigger channel may run at a different rate; map to EEG samples.
        ratio = rec.fs / photic_fs
        trains = [
            PhoticTrain(int(math.floor(t.start_sample * ratio)),
                        int(math.ceil(t.end_sample * ratio)),
                        t.flash_frequency_hz)
            for t in trains_native
        ]

    hv = None
    if sidecar and sidecar.hv_start_s is not None:
        hv = (sidecar.hv_start_s, sidecar.hv_end_s)
    rec = locate_segments(rec, trains, hv)
    if sidecar:
        rec.label = sidecar.label
        rec.ied_free = sidecar.ied_free
    return IngestResult(rec, trains, photic is not None, sidecar)
