"""Relative band power via Welch periodograms."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import signal as sps

from .bands import FrequencyBands


def welch_psd(window: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Welch PSD with 1 s Hann sub-windows at 50% overlap, per channel."""
    window = np.atleast_2d(window)
    nperseg = int(round(fs))
    if window.shape[1] < nperseg:
        raise ValueError("window must be at least 1 s long")
    return sps.welch(window, fs=fs, window="hann", nperseg=nperseg,
                     noverlap=nperseg // 2, axis=1)


def band_powers(psd_freqs: np.ndarray, psd: np.ndarray,
                bands: FrequencyBands) -> np.ndarray:
    """Absolute power per band (channels x bands), PSD-bin sums."""
    psd = np.atleast_2d(psd)
    out = np.empty((psd.shape[0], len(bands.edges)))
    for b, (_, lo, hi) in enumerate(bands.edges):
        mask = (psd_freqs >= lo) & (psd_freqs < hi)
        out[:, b] = psd[:, mask].sum(axis=1)
    return out


def extract_spectral(window: np.ndarray, fs: float,
                     bands: FrequencyBands | None = None) -> np.ndarray:
    """Per-channel relative band powers; the five values sum to 1.

    All-zero channels get the uniform 1/5 vector and raise a RuntimeWarning.
    """
    bands = bands or FrequencyBands.standard(fs)
    freqs, psd = welch_psd(window, fs)
    power = band_powers(freqs, psd, bands)
    total = power.sum(axis=1, keepdims=True)
    dead = total[:, 0] == 0
    if dead.any():
        warnings.warn(
            f"{int(dead.sum())} zero-power channel(s): relative power set uniform",
            RuntimeWarning, stacklevel=2,
        )
        power[dead] = 1.0
        total = power.sum(axis=1, keepdims=True)
    return (power / total).reshape(-1)


def spectral_names(channel_names, bands: FrequencyBands | None = None) -> list[str]:
    names = bands.names if bands else ("delta", "theta", "alpha", "beta", "gamma")
    return [f"spectral_rel_{b}_{ch}" for ch in channel_names for b in names]
