"""Univariate time measures: robust statistics, peaks, zero crossings,
Teager-Kaiser energy, signal energy, and amplitude-histogram entropy."""

from __future__ import annotations

import numpy as np
from scipy import signal as sps

UTM_STATS = (
    "median", "iqr", "mad", "peaks", "zerocross",
    "teager", "energy", "power", "entropy",
)

_ENTROPY_BINS = 64


def zero_crossings(x: np.ndarray) -> int:
    """Sign changes along the signal; exact zeros adopt the positive sign."""
    s = np.signbit(x)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def teager_energy(x: np.ndarray) -> float:
    """Mean of psi[n] = x[n]^2 - x[n-1]*x[n+1]."""
    if len(x) < 3:
        return 0.0
    psi = x[1:-1] ** 2 - x[:-2] * x[2:]
    return float(psi.mean())


def amplitude_entropy(x: np.ndarray, bins: int = _ENTROPY_BINS) -> float:
    """Shannon entropy (nats) of the equal-width amplitude histogram."""
    counts, _ = np.histogram(x, bins=bins)
    p = counts[counts > 0] / len(x)
    return float(-(p * np.log(p)).sum())


def extract_utm(window: np.ndarray) -> np.ndarray:
    """Per-channel UTM vector; rows ordered channel-major over UTM_STATS."""
    window = np.atleast_2d(window)
    out = np.empty((window.shape[0], len(UTM_STATS)))
    for c, x in enumerate(window):
        q75, med, q25 = np.percentile(x, [75, 50, 25])
        out[c] = (
            med,
            q75 - q25,
            np.median(np.abs(x - med)),
            len(sps.find_peaks(x)[0]),
            zero_crossings(x),
            teager_energy(x),
            float(np.sum(x ** 2)),
            float(np.mean(x ** 2)),
            amplitude_entropy(x),
        )
    return out.reshape(-1)


def utm_names(channel_names) -> list[str]:
    return [f"utm_{stat}_{ch}" for ch in channel_names for stat in UTM_STATS]
