"""UTM, spectral, wavelet, and Stockwell family tests."""

import numpy as np
import pytest

from stimeeg.features import Combiner, apply_combiner
from stimeeg.features.bands import FrequencyBands
from stimeeg.features.spectral import extract_spectral
from stimeeg.features.stockwell import extract_stockwell, stockwell
from stimeeg.features.utm import (
    UTM_STATS,
    amplitude_entropy,
    extract_utm,
    teager_energy,
    zero_crossings,
)
from stimeeg.features.wavelets import (
    cwt_center_frequencies,
    dwt_decompose,
    extract_cwt,
    extract_dwt,
    morlet_cwt,
)


def sine(freq, fs, dur, amp=1.0, phase=0.0):
    t = np.arange(int(dur * fs)) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


class TestUtm:
    def test_sine_zero_crossings(self):
        fs, f, k = 200.0, 5.0, 10
        # Small negative phase keeps samples off exact zeros and puts all 2k
        # crossings strictly inside the k-period window.
        x = sine(f, fs, k / f, phase=-0.1)
        assert zero_crossings(x) == 2 * k

    def test_constant_signal(self):
        x = np.full(500, 3.3)
        v = extract_utm(x)
        stats = dict(zip(UTM_STATS, v))
        assert stats["zerocross"] == 0
        assert stats["teager"] == 0
        assert stats["entropy"] == 0
        assert stats["median"] == pytest.approx(3.3)

    def test_teager_energy_closed_form(self):
        fs, f, amp = 200.0, 5.0, 2.0
        x = sine(f, fs, 10, amp=amp)
        expected = amp ** 2 * (2 * np.pi * f / fs) ** 2
        assert teager_energy(x) == pytest.approx(expected, rel=0.01)

    def test_vector_layout(self):
        x = np.random.default_rng(0).normal(size=(3, 400))
        v = extract_utm(x)
        assert v.shape == (3 * 9,)
        assert v[9:18] == pytest.approx(extract_utm(x[1]))

    def test_entropy_nonnegative_and_bounded(self):
        x = np.random.default_rng(1).normal(size=2000)
        h = amplitude_entropy(x)
        assert 0 <= h <= np.log(64)


class TestSpectral:
    def test_relative_powers_sum_to_one(self):
        fs = 200.0
        x = np.random.default_rng(0).normal(size=(4, int(10 * fs)))
        v = extract_spectral(x, fs).reshape(4, 5)
        assert np.allclose(v.sum(axis=1), 1.0, atol=1e-9)

    def test_pure_alpha_sine(self):
        fs = 200.0
        v = extract_spectral(sine(10, fs, 10), fs)
        assert v[2] >= 0.95  # alpha is band index 2

    def test_white_noise_matches_bandwidth_fractions(self):
        fs = 200.0
        bands = FrequencyBands.standard(fs)
        fractions = np.array([hi - lo for _, lo, hi in bands.edges])
        fractions /= fractions.sum()
        acc = np.zeros(5)
        for seed in range(100):
            x = np.random.default_rng(seed).normal(size=int(10 * fs))
            acc += extract_spectral(x, fs)
        assert np.all(np.abs(acc / 100 - fractions) <= 0.05)

    def test_all_zero_uniform_with_flag(self):
        with pytest.warns(RuntimeWarning, match="zero-power"):
            v = extract_spectral(np.zeros((1, 400)), 200.0)
        assert np.allclose(v, 0.2)


class TestWavelets:
    def test_zero_signal_all_zero(self):
        assert np.allclose(extract_cwt(np.zeros((2, 400)), 200.0), 0.0)
        assert np.allclose(extract_dwt(np.zeros((2, 512))), 0.0)

    def test_dwt_parseval_on_impulse(self):
        x = np.zeros(256)
        x[100] = 1.0
        details, approx = dwt_decompose(x, 6)
        energy = sum(float((d ** 2).sum()) for d in details) + float((approx ** 2).sum())
        assert energy == pytest.approx(float((x ** 2).sum()), rel=0.01)

    def test_dwt_parseval_random_pow2(self):
        x = np.random.default_rng(5).normal(size=1024)
        details, approx = dwt_decompose(x, 6)
        energy = sum(float((d ** 2).sum()) for d in details) + float((approx ** 2).sum())
        assert energy == pytest.approx(float((x ** 2).sum()), rel=1e-9)

    def test_dwt_too_short_window(self):
        with pytest.raises(ValueError, match="too short"):
            dwt_decompose(np.zeros(32), 6)

    def test_cwt_peak_scale_matches_frequency_map(self):
        fs = 200.0
        f0 = 10.0
        coeffs, fcs = morlet_cwt(sine(f0, fs, 10), fs)
        mean_sq = (np.abs(coeffs) ** 2).mean(axis=1)
        # oracle: the admissible scale is the one whose center frequency is
        # nearest f0 in log space (max Gaussian response)
        expected = int(np.argmin(np.abs(np.log(fcs) - np.log(f0))))
        assert int(np.argmax(mean_sq)) == expected

    def test_cwt_feature_layout(self):
        v = extract_cwt(np.random.default_rng(0).normal(size=(2, 400)), 200.0)
        assert v.shape == (2 * 13 * 2,)

    def test_center_frequencies_span(self):
        fcs = cwt_center_frequencies()
        assert len(fcs) == 13
        assert fcs[0] == pytest.approx(1.0)
        assert fcs[-1] == pytest.approx(45.0)


class TestStockwell:
    def test_stationary_sine_small_skew(self):
        fs = 200.0
        v = extract_stockwell(sine(10, fs, 10), fs, "sst").reshape(1, 5)
        assert abs(v[0, 2]) < 0.5  # alpha band

    def test_amplitude_step_skews_band_power(self):
        fs = 200.0
        n = int(10 * fs)
        x = sine(10, fs, 10, amp=0.2)
        x[int(0.75 * n):] = sine(10, fs, 10, amp=1.0)[int(0.75 * n):]
        v = extract_stockwell(x, fs, "sst").reshape(1, 5)
        assert abs(v[0, 2]) > 0.5

    def test_zero_signal_mst_zero(self):
        v = extract_stockwell(np.zeros((1, 800)), 200.0, "mst")
        assert np.allclose(v, 0.0)

    def test_voice_frequencies_cover_requested_range(self):
        S, freqs = stockwell(np.random.default_rng(0).normal(size=400), 200.0, 1.0, 45.0)
        assert freqs.min() >= 1.0 - 1e-9
        assert freqs.max() < 45.0 + 0.5
        assert S.shape == (len(freqs), 400)

    def test_tone_concentrates_at_its_voice(self):
        fs = 200.0
        S, freqs = stockwell(sine(10, fs, 5), fs, 1.0, 45.0)
        power = (np.abs(S) ** 2).mean(axis=1)
        assert abs(freqs[int(np.argmax(power))] - 10.0) <= 0.5


class TestCombiners:
    def test_basic_stats(self):
        v = np.array([[1.0], [2.0], [3.0]])
        assert apply_combiner(v, Combiner.MEAN)[0] == 2.0
        assert apply_combiner(v, Combiner.MEDIAN)[0] == 2.0
        assert apply_combiner(v, Combiner.STD)[0] == pytest.approx(1.0)

    def test_identical_windows(self):
        v = np.ones((4, 2))
        assert np.all(apply_combiner(v, Combiner.STD) == 0.0)
        assert np.all(np.isnan(apply_combiner(v, Combiner.SKEWNESS)))

    def test_symmetric_values_zero_skew(self):
        v = np.array([[-1.0], [0.0], [1.0]])
        assert apply_combiner(v, Combiner.SKEWNESS)[0] == pytest.approx(0.0)

    def test_too_few_windows_nan(self):
        v = np.array([[1.0], [2.0]])
        assert np.isnan(apply_combiner(v, Combiner.SKEWNESS)[0])
        assert np.isnan(apply_combiner(v, Combiner.KURTOSIS)[0])
        assert np.isnan(apply_combiner(np.array([[1.0]]), Combiner.STD)[0])

    def test_kurtosis_matches_bias_corrected_formula(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(50, 1))
        from scipy.stats import kurtosis
        expected = kurtosis(v[:, 0], fisher=True, bias=False)
        assert apply_combiner(v, Combiner.KURTOSIS)[0] == pytest.approx(expected)
