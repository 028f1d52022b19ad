"""Stockwell-transform band summaries (mST and sST)."""

from __future__ import annotations

import numpy as np

from .bands import FrequencyBands

_CHUNK = 128
_DEGENERATE_REL_VAR = 1e-12


def stockwell(x: np.ndarray, fs: float, fmin: float, fmax: float
              ) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Stockwell transform for frequency bins in [fmin, fmax).

    Returns (S voices x samples, voice frequencies in Hz). Uses the standard
    FFT formulation: S(tau, k) = IFFT_m{ X[m+k] * exp(-2 pi^2 m^2 / k^2) }.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    xf = np.fft.fft(x)
    k_lo = max(1, int(np.ceil(fmin * n / fs)))
    k_hi = int(np.ceil(fmax * n / fs))  # exclusive
    ks = np.arange(k_lo, k_hi)
    m = np.arange(n)
    m_signed = ((m + n // 2) % n) - n // 2

    S = np.empty((len(ks), n), dtype=np.complex128)
    for lo in range(0, len(ks), _CHUNK):
        kc = ks[lo:lo + _CHUNK]
        gauss = np.exp(-2 * np.pi ** 2 * m_signed[None, :] ** 2
                       / kc[:, None].astype(float) ** 2)
        shifted = xf[(m[None, :] + kc[:, None]) % n]
        S[lo:lo + len(kc)] = np.fft.ifft(shifted * gauss, axis=1)
    return S, ks * fs / n


def _sample_skewness(v: np.ndarray) -> float:
    """Bias-corrected skewness; 0 for (near-)constant input."""
    n = len(v)
    if n < 3:
        return 0.0
    mean = v.mean()
    d = v - mean
    m2 = np.mean(d ** 2)
    if m2 <= (_DEGENERATE_REL_VAR * max(abs(mean), 1e-300)) ** 2:
        return 0.0
    g1 = np.mean(d ** 3) / m2 ** 1.5
    return float(g1 * np.sqrt(n * (n - 1)) / (n - 2))


def extract_stockwell(window: np.ndarray, fs: float, variant: str,
                      bands: FrequencyBands | None = None) -> np.ndarray:
    """Per channel and band: mST or sST scalar.

    mST: mean over band voices of sqrt(std over time of squared magnitude).
    sST: skewness over time of the band-summed squared magnitude.
    """
    if variant not in ("mst", "sst"):
        raise ValueError(f"variant must be mst|sst, got {variant}")
    bands = bands or FrequencyBands.standard(fs)
    window = np.atleast_2d(window)
    lo_all, hi_all = bands.total_range
    out = np.empty((window.shape[0], len(bands.edges)))
    for c, x in enumerate(window):
        S, freqs = stockwell(x, fs, lo_all, hi_all)
        power = np.abs(S) ** 2
        for b, (_, lo, hi) in enumerate(bands.edges):
            rows = (freqs >= lo) & (freqs < hi)
            if not rows.any():
                out[c, b] = 0.0
                continue
            if variant == "mst":
                out[c, b] = np.sqrt(power[rows].std(axis=1)).mean()
            else:
                out[c, b] = _sample_skewness(power[rows].sum(axis=0))
    return out.reshape(-1)


def stockwell_names(variant: str, channel_names,
                    bands: FrequencyBands | None = None) -> list[str]:
    names = bands.names if bands else ("delta", "theta", "alpha", "beta", "gamma")
    return [f"{variant}_{b}_{ch}" for ch in channel_names for b in names]
