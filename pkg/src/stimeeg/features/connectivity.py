"""Pairwise connectivity: max normalized cross-correlation and phase locking."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import signal as sps

from .bands import FrequencyBands

CC_MAX_LAG_S = 0.25
_PLV_EDGE_FRACTION = 0.10


def _flag_dead_channels(window: np.ndarray) -> np.ndarray:
    dead = window.std(axis=1) == 0
    if dead.any():
        warnings.warn(
            f"{int(dead.sum())} zero-variance channel(s): pair values set to 0",
            RuntimeWarning, stacklevel=3,
        )
    return dead


def max_cross_correlation(window: np.ndarray, fs: float,
                          max_lag_s: float = CC_MAX_LAG_S) -> np.ndarray:
    """Channels x channels matrix of max |normalized cross-correlation| over
    lags within +-max_lag_s. Overlapping spans are norm-matched per lag, so a
    pure shift scores exactly 1. Diagonal is zeroed."""
    x = np.atleast_2d(np.asarray(window, dtype=np.float64))
    c, n = x.shape
    max_lag = min(int(round(max_lag_s * fs)), n - 1)
    dead = _flag_dead_channels(x)

    best = np.zeros((c, c))
    with np.errstate(invalid="ignore", divide="ignore"):
        for lag in range(max_lag + 1):
            a = x[:, lag:]
            b = x[:, :n - lag] if lag else x
            cross = a @ b.T
            na = np.linalg.norm(a, axis=1)
            nb = np.linalg.norm(b, axis=1)
            cmat = np.abs(cross) / np.outer(na, nb)
            cmat = np.nan_to_num(cmat, nan=0.0, posinf=0.0, neginf=0.0)
            np.maximum(best, cmat, out=best)
            np.maximum(best, cmat.T, out=best)
    best[dead, :] = 0.0
    best[:, dead] = 0.0
    np.fill_diagonal(best, 0.0)
    return np.minimum(best, 1.0)


def plv_matrices(window: np.ndarray, fs: float,
                 bands: FrequencyBands | None = None) -> dict[str, np.ndarray]:
    """Per-band channels x channels phase-locking matrices.

    Band-pass (4th-order zero-phase Butterworth), analytic phase via
    frequency-domain Hilbert transform; 10% of samples discarded at each edge
    before averaging the phase differences. Diagonals are zeroed."""
    x = np.atleast_2d(np.asarray(window, dtype=np.float64))
    c, n = x.shape
    dead = _flag_dead_channels(x)
    edge = int(_PLV_EDGE_FRACTION * n)
    bands = bands or FrequencyBands.standard(fs)

    out: dict[str, np.ndarray] = {}
    for name, lo, hi in bands.edges:
        sos = sps.butter(4, [lo, hi], btype="bandpass", fs=fs, output="sos")
        filtered = sps.sosfiltfilt(sos, x, axis=1)
        phase = np.angle(sps.hilbert(filtered, axis=1))
        if edge:
            phase = phase[:, edge:-edge]
        z = np.exp(1j * phase)
        plv = np.abs(z @ z.conj().T) / phase.shape[1]
        plv[dead, :] = 0.0
        plv[:, dead] = 0.0
        np.fill_diagonal(plv, 0.0)
        out[name] = np.minimum(plv, 1.0)
    return out


def channel_pairs(channel_names) -> list[tuple[int, int]]:
    c = len(channel_names)
    return [(i, j) for i in range(c) for j in range(i + 1, c)]


def extract_cc(window: np.ndarray, fs: float) -> np.ndarray:
    m = max_cross_correlation(window, fs)
    c = m.shape[0]
    return np.array([m[i, j] for i in range(c) for j in range(i + 1, c)])


def extract_plv(window: np.ndarray, fs: float,
                bands: FrequencyBands | None = None) -> np.ndarray:
    bands = bands or FrequencyBands.standard(fs)
    mats = plv_matrices(window, fs, bands)
    c = window.shape[0]
    vals = []
    for i in range(c):
        for j in range(i + 1, c):
            for name in bands.names:
                vals.append(mats[name][i, j])
    return np.array(vals)


def cc_names(channel_names) -> list[str]:
    return [f"cc_{channel_names[i]}__{channel_names[j]}"
            for i, j in channel_pairs(channel_names)]


def plv_names(channel_names, bands: FrequencyBands | None = None) -> list[str]:
    band_names = bands.names if bands else ("delta", "theta", "alpha", "beta", "gamma")
    return [
        f"plv_{b}_{channel_names[i]}__{channel_names[j]}"
        for i, j in channel_pairs(channel_names)
        for b in band_names
    ]
