import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitaltrace.errors import ContractError
from vitaltrace.refine import RefinedSignal
from vitaltrace.spectral import (
    BAND_BREATH_BPM,
    BAND_HEART_BPM,
    Spectrogram,
    SpectrogramParams,
    hop_samples,
    restrict_band,
    spectrogram,
    window_samples,
)


def refined(samples, fs):
    return RefinedSignal(samples=np.asarray(samples, dtype=float), fs=fs,
                         provenance={})


def sine(freq_hz, fs, duration_s, phase=0.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return np.sin(2 * np.pi * freq_hz * t + phase)


class TestSizing:
    def test_window_and_hop(self):
        p = SpectrogramParams(window_s=10.0, overlap_fraction=0.98)
        assert window_samples(p, 30.0) == 300
        assert hop_samples(p, 30.0) == 6

    def test_hop_floor_is_one(self):
        p = SpectrogramParams(window_s=1.0, overlap_fraction=0.98)
        assert hop_samples(p, 10.0) == 1

    def test_column_count(self):
        p = SpectrogramParams(window_s=10.0, overlap_fraction=0.98,
                              fft_points=2048)
        spec = spectrogram(refined(np.sin(np.arange(350) * 0.3), 10.0), p)
        # n=350, w=100, hop=2 -> (350-100)//2 + 1
        assert spec.n_columns == 126

    def test_first_column_center(self):
        p = SpectrogramParams(window_s=10.0, overlap_fraction=0.98,
                              fft_points=1024)
        spec = spectrogram(refined(np.sin(np.arange(200) * 0.3), 10.0), p)
        assert spec.time_axis[0] == pytest.approx(5.0)


class TestSpectrogram:
    def test_pure_sine_peak_location(self):
        fs = 10.0
        p = SpectrogramParams(window_s=10.0, fft_points=2048)
        spec = spectrogram(refined(sine(0.5, fs, 40.0), fs), p)
        resolution = fs * 60.0 / p.fft_points
        peaks = spec.freq_axis_bpm[spec.magnitudes.argmax(axis=1)]
        assert np.all(np.abs(peaks - 30.0) <= resolution)

    def test_columns_normalized_to_unit_max(self):
        fs = 10.0
        x = sine(0.5, fs, 40.0) * np.linspace(0.1, 5.0, 400)
        spec = spectrogram(refined(x, fs), SpectrogramParams(fft_points=2048))
        assert np.allclose(spec.magnitudes.max(axis=1), 1.0)
        assert np.all(spec.magnitudes >= 0.0)

    def test_zero_signal_stays_zero(self):
        spec = spectrogram(refined(np.zeros(200), 10.0),
                           SpectrogramParams(fft_points=1024))
        assert np.all(spec.magnitudes == 0.0)

    def test_band_restriction(self):
        spec = spectrogram(refined(sine(0.5, 10.0, 30.0), 10.0),
                           SpectrogramParams(fft_points=2048))
        lo, hi = BAND_BREATH_BPM
        assert spec.freq_axis_bpm[0] >= lo
        assert spec.freq_axis_bpm[-1] <= hi

    def test_heart_band_default_bounds(self):
        assert BAND_HEART_BPM == (40.0, 180.0)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.3, 0.7), st.integers(0, 2**31))
    def test_peak_tracks_frequency(self, f_hz, seed):
        fs = 10.0
        rng = np.random.default_rng(seed)
        x = sine(f_hz, fs, 30.0) + 0.05 * rng.normal(size=300)
        spec = spectrogram(refined(x, fs), SpectrogramParams(fft_points=2048))
        peaks = spec.freq_axis_bpm[spec.magnitudes.argmax(axis=1)]
        assert np.median(np.abs(peaks - f_hz * 60.0)) <= 1.0

    def test_too_short_signal(self):
        with pytest.raises(ContractError):
            spectrogram(refined(np.zeros(50), 10.0),
                        SpectrogramParams(window_s=10.0))

    def test_fft_points_smaller_than_window(self):
        with pytest.raises(ContractError):
            spectrogram(refined(np.zeros(400), 30.0),
                        SpectrogramParams(window_s=10.0, fft_points=256))


class TestRestrictBand:
    def test_inclusive_endpoints(self):
        spec = Spectrogram(
            magnitudes=np.ones((2, 5)),
            time_axis=np.array([0.0, 1.0]),
            freq_axis_bpm=np.array([10.0, 20.0, 30.0, 40.0, 50.0]),
            fs=10.0,
        )
        out = restrict_band(spec, 20.0, 40.0)
        assert list(out.freq_axis_bpm) == [20.0, 30.0, 40.0]
        assert out.magnitudes.shape == (2, 3)

    def test_empty_band(self):
        spec = Spectrogram(
            magnitudes=np.ones((1, 2)),
            time_axis=np.array([0.0]),
            freq_axis_bpm=np.array([10.0, 20.0]),
            fs=10.0,
        )
        with pytest.raises(ContractError):
            restrict_band(spec, 100.0, 200.0)


class TestParams:
    def test_invalid(self):
        with pytest.raises(ContractError):
            SpectrogramParams(band_lo_bpm=50, band_hi_bpm=15)
        with pytest.raises(ContractError):
            SpectrogramParams(overlap_fraction=1.0)
        with pytest.raises(ContractError):
            SpectrogramParams(window_s=0)
