"""Continuous (complex Morlet) and discrete (Daubechies-4) wavelet features.

Each transform is condensed per channel into the mean of squared coefficient
magnitudes and the standard deviation of squared magnitudes: 13 scales for the
CWT, 6 detail levels for the DWT.
"""

from __future__ import annotations

import numpy as np

N_CWT_SCALES = 13
CWT_FMIN = 1.0
CWT_FMAX = 45.0
MORLET_W0 = 6.0

N_DWT_LEVELS = 6

# Daubechies-4 (four vanishing moments) orthonormal scaling filter.
_DB4_H = np.array([
    0.230377813308855, 0.714846570552542, 0.630880767929590,
    -0.027983769416984, -0.187034811718881, 0.030841381835987,
    0.032883011666983, -0.010597401784997,
])
_DB4_G = ((-1.0) ** np.arange(8)) * _DB4_H[::-1]


def cwt_center_frequencies() -> np.ndarray:
    return np.geomspace(CWT_FMIN, CWT_FMAX, N_CWT_SCALES)


def morlet_cwt(x: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """FFT-based complex Morlet transform at the 13 standard scales.

    Returns (coefficients scales x samples, center frequencies in Hz).
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    fourier_factor = 4 * np.pi / (MORLET_W0 + np.sqrt(2 + MORLET_W0 ** 2))
    fcs = cwt_center_frequencies()
    scales = 1.0 / (fourier_factor * fcs)  # seconds

    xf = np.fft.fft(x)
    omega = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / fs)
    coeffs = np.empty((N_CWT_SCALES, n), dtype=np.complex128)
    for j, s in enumerate(scales):
        psi_hat = np.zeros(n)
        pos = omega > 0
        psi_hat[pos] = (np.pi ** -0.25) * np.sqrt(2 * np.pi * s * fs) * \
            np.exp(-0.5 * (s * omega[pos] - MORLET_W0) ** 2)
        coeffs[j] = np.fft.ifft(xf * psi_hat)
    return coeffs, fcs


def dwt_decompose(x: np.ndarray, levels: int = N_DWT_LEVELS
                  ) -> tuple[list[np.ndarray], np.ndarray]:
    """Periodized db4 analysis filter bank.

    Returns (details d1..dL, approximation aL). Orthonormal (energy
    preserving) for lengths divisible by 2^levels; odd intermediate lengths
    are padded by repeating the last sample.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2 ** levels:
        raise ValueError(f"window of {len(x)} samples too short for {levels} levels")
    a = x
    details: list[np.ndarray] = []
    for _ in range(levels):
        if len(a) % 2:
            a = np.r_[a, a[-1]]
        n = len(a)
        idx = (2 * np.arange(n // 2)[:, None] + np.arange(8)[None, :]) % n
        windows = a[idx]
        details.append(windows @ _DB4_G)
        a = windows @ _DB4_H
    return details, a


def extract_cwt(window: np.ndarray, fs: float) -> np.ndarray:
    """Per channel and scale: mean and std of squared coefficient magnitude."""
    window = np.atleast_2d(window)
    out = np.empty((window.shape[0], N_CWT_SCALES, 2))
    for c, x in enumerate(window):
        coeffs, _ = morlet_cwt(x, fs)
        sq = np.abs(coeffs) ** 2
        out[c, :, 0] = sq.mean(axis=1)
        out[c, :, 1] = sq.std(axis=1)
    return out.reshape(-1)


def extract_dwt(window: np.ndarray) -> np.ndarray:
    """Per channel and detail level: mean and std of squared coefficients."""
    window = np.atleast_2d(window)
    out = np.empty((window.shape[0], N_DWT_LEVELS, 2))
    for c, x in enumerate(window):
        details, _ = dwt_decompose(x)
        for lv, d in enumerate(details):
            sq = d ** 2
            out[c, lv, 0] = sq.mean()
            out[c, lv, 1] = sq.std()
    return out.reshape(-1)


def cwt_names(channel_names) -> list[str]:
    fcs = cwt_center_frequencies()
    return [
        f"cwt_{fc:.2f}hz_{stat}_{ch}"
        for ch in channel_names for fc in fcs for stat in ("meansq", "stdsq")
    ]


def dwt_names(channel_names) -> list[str]:
    return [
        f"dwt_d{lv}_{stat}_{ch}"
        for ch in channel_names
        for lv in range(1, N_DWT_LEVELS + 1)
        for stat in ("meansq", "stdsq")
    ]
