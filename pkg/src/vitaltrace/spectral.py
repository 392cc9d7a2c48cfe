"""Short-time spectral density restricted to a physiological bpm band.

Columns are magnitude spectra of tapered, zero-padded windows; each column is
normalized to a unit maximum so the frequency tracker sees comparable scores
as signal energy drifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .errors import ContractError
from .refine import RefinedSignal

BAND_BREATH_BPM = (15.0, 50.0)
BAND_HEART_BPM = (40.0, 180.0)


@dataclass(frozen=True)
class SpectrogramParams:
    window_s: float = 10.0
    overlap_fraction: float = 0.98
    fft_points: int = 2048
    band_lo_bpm: float = BAND_BREATH_BPM[0]
    band_hi_bpm: float = BAND_BREATH_BPM[1]
    window_function: str = "hann"

    def __post_init__(self):
        if not 0.0 < self.band_lo_bpm < self.band_hi_bpm:
            raise ContractError("need 0 < band_lo_bpm < band_hi_bpm")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ContractError("overlap_fraction must lie in [0, 1)")
        if self.window_s <= 0:
            raise ContractError("window_s must be > 0")
        if self.fft_points < 2:
            raise ContractError("fft_points must be >= 2")


@dataclass(frozen=True)
class Spectrogram:
    """magnitudes[t, f]: non-negative, columns indexed by time_axis seconds and
    bins by freq_axis_bpm."""

    magnitudes: np.ndarray
    time_axis: np.ndarray
    freq_axis_bpm: np.ndarray
    fs: float

    @property
    def n_columns(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]


def window_samples(params: SpectrogramParams, fs: float) -> int:
    return int(round(params.window_s * fs))


def hop_samples(params: SpectrogramParams, fs: float) -> int:
    w = window_samples(params, fs)
    return max(1, int(round(w * (1.0 - params.overlap_fraction))))


def spectrogram(signal: RefinedSignal, params: SpectrogramParams) -> Spectrogram:
    x = np.asarray(signal.samples, dtype=np.float64)
    n = len(x)
    w = window_samples(params, signal.fs)
    hop = hop_samples(params, signal.fs)
    if w < 2:
        raise ContractError(f"window of {w} samples is too short")
    if n < w:
        raise ContractError(
            f"signal of {n} samples is shorter than one {w}-sample window"
        )
    if params.fft_points < w:
        raise ContractError(
            f"fft_points ({params.fft_points}) must be >= window samples ({w})"
        )
    taper = get_window(params.window_function, w)

    freqs_bpm = np.arange(params.fft_points // 2 + 1) * (
        signal.fs * 60.0 / params.fft_points
    )
    keep = (freqs_bpm >= params.band_lo_bpm) & (freqs_bpm <= params.band_hi_bpm)
    if not keep.any():
        raise ContractError(
            f"band [{params.band_lo_bpm}, {params.band_hi_bpm}] bpm contains "
            f"no FFT bins at fs={signal.fs}"
        )

    n_cols = (n - w) // hop + 1
    starts = np.arange(n_cols) * hop
    segments = x[starts[:, None] + np.arange(w)] * taper
    mags = np.abs(np.fft.rfft(segments, n=params.fft_points, axis=1))[:, keep]
    peaks = mags.max(axis=1)
    live = peaks > 0
    mags[live] /= peaks[live][:, None]

    times = (starts + (w - 1) / 2.0 + 0.5) / signal.fs
    return Spectrogram(
        magnitudes=mags,
        time_axis=times,
        freq_axis_bpm=freqs_bpm[keep],
        fs=signal.fs,
    )


def restrict_band(spec: Spectrogram, lo_bpm: float, hi_bpm: float) -> Spectrogram:
    """Keep exactly the bins with lo <= f <= hi."""
    keep = (spec.freq_axis_bpm >= lo_bpm) & (spec.freq_axis_bpm <= hi_bpm)
    if not keep.any():
        raise ContractError(
            f"band [{lo_bpm}, {hi_bpm}] bpm does not intersect the axis "
            f"[{spec.freq_axis_bpm[0]:.3g}, {spec.freq_axis_bpm[-1]:.3g}]"
        )
    return Spectrogram(
        magnitudes=spec.magnitudes[:, keep],
        time_axis=spec.time_axis,
        freq_axis_bpm=spec.freq_axis_bpm[keep],
        fs=spec.fs,
    )
