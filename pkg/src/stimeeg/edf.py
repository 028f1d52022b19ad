"""Minimal EDF reader/writer.

Plain EDF only: 256-byte fixed ASCII header + 256 bytes per signal, 16-bit
little-endian two's-complement samples. EDF+ annotation channels and BDF are
out of scope.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field

import numpy as np


class EdfError(ValueError):
    """Malformed EDF content; carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


@dataclass
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_datetime: _dt.datetime
    header_bytes: int
    n_records: int
    record_duration_s: float
    n_signals: int
    labels: list[str] = field(default_factory=list)
    transducers: list[str] = field(default_factory=list)
    physical_dimensions: list[str] = field(default_factory=list)
    physical_min: list[float] = field(default_factory=list)
    physical_max: list[float] = field(default_factory=list)
    digital_min: list[int] = field(default_factory=list)
    digital_max: list[int] = field(default_factory=list)
    prefilters: list[str] = field(default_factory=list)
    samples_per_record: list[int] = field(default_factory=list)

    def sampling_rate(self, i: int) -> float:
        return self.samples_per_record[i] / self.record_duration_s

    def validate(self) -> None:
        if self.header_bytes != 256 + 256 * self.n_signals:
            raise EdfError(
                f"header size mismatch: field says {self.header_bytes}, "
                f"expected {256 + 256 * self.n_signals} for {self.n_signals} signals",
                offset=184,
            )
        for i in range(self.n_signals):
            if not self.physical_max[i] > self.physical_min[i]:
                raise EdfError(f"signal {i}: physical_max <= physical_min")
            if not self.digital_max[i] > self.digital_min[i]:
                raise EdfError(f"signal {i}: digital_max <= digital_min")
            if self.samples_per_record[i] < 1:
                raise EdfError(f"signal {i}: samples_per_record < 1")


def _ascii(raw: bytes, offset: int) -> str:
    try:
        return raw.decode("ascii")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _int_field(raw: bytes, offset: int, name: str) -> int:
    s = _ascii(raw, offset).strip()
    try:
        return int(s)
    except ValueError:
        raise EdfError(f"non-numeric {name} field {s!r}", offset) from None


def _float_field(raw: bytes, offset: int, name: str) -> float:
    s = _ascii(raw, offset).strip()
    try:
        return float(s)
    except ValueError:
        raise EdfError(f"non-numeric {name} field {s!r}", offset) from None


def _parse_start(date_s: str, time_s: str) -> _dt.datetime:
    try:
        d, m, y = (int(p) for p in date_s.strip().split("."))
        hh, mm, ss = (int(p) for p in time_s.strip().split("."))
        y += 2000 if y < 85 else 1900  # EDF two-digit year pivot
        return _dt.datetime(y, m, d, hh, mm, ss)
    except (ValueError, TypeError):
        return _dt.datetime(1985, 1, 1)


def parse_edf(data: bytes) -> tuple[EdfHeader, list[np.ndarray]]:
    """Parse raw EDF bytes into a header and per-signal physical-unit arrays.

    Digital samples are mapped to physical units with the per-signal affine
    calibration. Signals are returned at their native rate, one float64 array
    per signal. n_records == -1 (continuous recording) is resolved from the
    file size.
    """
    if len(data) < 256:
        raise EdfError(f"truncated header: {len(data)} bytes, need 256", offset=len(data))

    pos = 0

    def take(n: int) -> tuple[bytes, int]:
        nonlocal pos
        chunk = data[pos:pos + n]
        off = pos
        pos += n
        return chunk, off

    version = _ascii(*take(8)).strip()
    patient_id = _ascii(*take(80)).strip()
    recording_id = _ascii(*take(80)).strip()
    date_raw, _ = take(8)
    time_raw, _ = take(8)
    header_bytes = _int_field(*take(8), name="header_bytes")
    take(44)  # reserved
    n_records = _int_field(*take(8), name="n_records")
    record_duration = _float_field(*take(8), name="record_duration")
    n_signals = _int_field(*take(4), name="n_signals")
    if n_signals < 1:
        raise EdfError(f"n_signals must be >= 1, got {n_signals}", offset=252)

    expected_header = 256 + 256 * n_signals
    if header_bytes != expected_header:
        raise EdfError(
            f"header size mismatch: field says {header_bytes}, expected {expected_header}",
            offset=184,
        )
    if len(data) < expected_header:
        raise EdfError(f"truncated header: {len(data)} bytes, need {expected_header}",
                       offset=len(data))

    def take_list(width: int, conv, name: str) -> list:
        out = []
        for i in range(n_signals):
            raw, off = take(width)
            out.append(conv(raw, off, f"{name}[{i}]"))
        return out

    text = lambda raw, off, name: _ascii(raw, off).strip()
    labels = take_list(16, text, "label")
    transducers = take_list(80, text, "transducer")
    dims = take_list(8, text, "physical_dimension")
    phys_min = take_list(8, _float_field, "physical_min")
    phys_max = take_list(8, _float_field, "physical_max")
    dig_min = take_list(8, _int_field, "digital_min")
    dig_max = take_list(8, _int_field, "digital_max")
    prefilters = take_list(80, text, "prefilter")
    samples_per_record = take_list(8, _int_field, "samples_per_record")
    take(32 * n_signals)  # reserved

    record_bytes = 2 * sum(samples_per_record)
    payload = len(data) - expected_header
    if n_records < 0:
        if record_bytes == 0:
            raise EdfError("cannot infer record count: empty records", offset=236)
        n_records = payload // record_bytes
    elif payload < n_records * record_bytes:
        raise EdfError(
            f"record count inconsistent with file size: header says {n_records} records "
            f"({n_records * record_bytes} bytes) but only {payload} payload bytes present",
            offset=expected_header + payload,
        )

    header = EdfHeader(
        version=version,
        patient_id=patient_id,
        recording_id=recording_id,
        start_datetime=_parse_start(_ascii(date_raw, 0), _ascii(time_raw, 0)),
        header_bytes=header_bytes,
        n_records=n_records,
        record_duration_s=record_duration,
        n_signals=n_signals,
        labels=labels,
        transducers=transducers,
        physical_dimensions=dims,
        physical_min=phys_min,
        physical_max=phys_max,
        digital_min=dig_min,
        digital_max=dig_max,
        prefilters=prefilters,
        samples_per_record=samples_per_record,
    )
    header.validate()

    raw = np.frombuffer(
        data, dtype="<i2", count=n_records * (record_bytes // 2), offset=expected_header
    )
    per_record = raw.reshape(n_records, record_bytes // 2)

    signals: list[np.ndarray] = []
    col = 0
    for i in range(n_signals):
        spr = samples_per_record[i]
        dig = per_record[:, col:col + spr].reshape(-1).astype(np.float64)
        col += spr
        scale = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        signals.append(phys_min[i] + (dig - dig_min[i]) * scale)
    return header, signals


def _fixed(value: str, width: int) -> bytes:
    b = value.encode("ascii", errors="replace")[:width]
    return b.ljust(width)


def _fmt_num(x: float, width: int) -> str:
    if float(x) == int(x) and abs(x) < 10 ** (width - 1):
        return str(int(x))
    s = f"{x:.{width}g}"
    while len(s) > width:
        s = s[:-1]
    return s


def write_edf(
    labels: list[str],
    signals: list[np.ndarray],
    fs: float,
    physical_dimensions: list[str] | None = None,
    patient_id: str = "X",
    recording_id: str = "X",
    start: _dt.datetime | None = None,
    physical_range: tuple[float, float] | None = None,
) -> bytes:
    """Serialize signals (all at rate fs, physical units) to EDF bytes.

    Record duration is chosen so samples/record is integral; per-signal
    calibration spans physical_range (default: symmetric around the observed
    extremes, padded 1%) over the full 16-bit digital range.
    """
    if len(labels) != len(signals):
        raise ValueError("labels and signals length mismatch")
    n = len(signals[0])
    if any(len(s) != n for s in signals):
        raise ValueError("all signals must have equal length")

    # Pick a record duration giving an integer number of samples per record.
    record_dur = 1.0
    if abs(fs - round(fs)) > 1e-9:
        for dur in (2.0, 5.0, 10.0):
            if abs(fs * dur - round(fs * dur)) < 1e-9:
                record_dur = dur
                break
        else:
            raise ValueError(f"cannot express fs={fs} as integer samples per record")
    spr = int(round(fs * record_dur))
    n_records = math.ceil(n / spr)
    pad = n_records * spr - n

    dims = physical_dimensions or ["uV"] * len(labels)
    start = start or _dt.datetime(2000, 1, 1, 0, 0, 0)

    dig_min, dig_max = -32768, 32767
    phys_ranges = []
    digital = []
    for s in signals:
        if physical_range is not None:
            lo, hi = physical_range
        else:
            peak = float(np.max(np.abs(s))) if n else 1.0
            peak = peak * 1.01 if peak > 0 else 1.0
            lo, hi = -peak, peak
        phys_ranges.append((lo, hi))
        scale = (dig_max - dig_min) / (hi - lo)
        d = np.round((np.asarray(s, dtype=np.float64) - lo) * scale + dig_min)
        d = np.clip(d, dig_min, dig_max).astype("<i2")
        if pad:
            d = np.concatenate([d, np.zeros(pad, dtype="<i2")])
        digital.append(d)

    ns = len(labels)
    head = b"".join([
        _fixed("0", 8),
        _fixed(patient_id, 80),
        _fixed(recording_id, 80),
        _fixed(start.strftime("%d.%m.%y"), 8),
        _fixed(start.strftime("%H.%M.%S"), 8),
        _fixed(str(256 + 256 * ns), 8),
        _fixed("", 44),
        _fixed(str(n_records), 8),
        _fixed(_fmt_num(record_dur, 8), 8),
        _fixed(str(ns), 4),
    ])
    cols = [
        b"".join(_fixed(lab, 16) for lab in labels),
        b"".join(_fixed("", 80) for _ in labels),
        b"".join(_fixed(d, 8) for d in dims),
        b"".join(_fixed(_fmt_num(lo, 8), 8) for lo, _ in phys_ranges),
        b"".join(_fixed(_fmt_num(hi, 8), 8) for _, hi in phys_ranges),
        b"".join(_fixed(str(dig_min), 8) for _ in labels),
        b"".join(_fixed(str(dig_max), 8) for _ in labels),
        b"".join(_fixed("", 80) for _ in labels),
        b"".join(_fixed(str(spr), 8) for _ in labels),
        b"".join(_fixed("", 32) for _ in labels),
    ]

    records = np.empty((n_records, ns * spr), dtype="<i2")
    for i, d in enumerate(digital):
        records[:, i * spr:(i + 1) * spr] = d.reshape(n_records, spr)

    return head + b"".join(cols) + records.tobytes()
