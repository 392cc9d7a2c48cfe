"""Synthetic frame sequences and signals with known embedded vital signs.

Every scene is a deterministic function of the spec (including its seed), so
repeated generation is byte-identical. Scenarios:

* breathing-motion: a textured belly patch translating vertically by a
  sinusoid with a known (possibly ramping) frequency, plus slow drift.
* patting-plus-breath: the above plus a second, stronger patch oscillating
  horizontally at an interference frequency. A hand pressing on the belly
  also displaces it vertically, so a fixed fraction of the patting amplitude
  is coupled into the overlap's vertical motion.
* pulse-color: a static skin-like texture whose green (and half-amplitude
  red) channel is modulated at the pulse frequency, with illumination drift
  and sensor noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .amtc import FrequencyTrace
from .errors import ContractError, DataError
from .flow import bilinear_sample
from .media_io import Frame, SequenceManifest, encode_frame, save_manifest
from .roi import RawSignal, RoiRect, KIND_MOTION
from .store import write_signal_csv, write_trace

SCENARIO_BREATH = "breathing-motion"
SCENARIO_PULSE = "pulse-color"
SCENARIO_PATTING = "patting-plus-breath"

# Fraction of the patting amplitude transmitted into vertical belly motion
# where the patting hand overlaps the belly.
PATTING_VERTICAL_COUPLING = 0.5

_FRAME_PATTERN = "frame_%06d.ppm"


@dataclass(frozen=True)
class SynthSpec:
    duration_s: float = 60.0
    fps: float = 30.0
    width: int = 320
    height: int = 240
    scenario: str = SCENARIO_BREATH
    freq_trace_bpm: Sequence = (25.0,)  # bpm, or [(time_s, bpm), ...] ramp
    amplitude: float = 2.0  # pixels (motion) or gray levels (color)
    drift_per_frame: float = 0.0
    noise_sigma: float = 0.0
    interference_freq_bpm: Optional[float] = None
    interference_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ContractError("amplitude must be > 0")
        if self.duration_s * self.fps < 4:
            raise ContractError("sequence too short")
        if self.scenario not in (SCENARIO_BREATH, SCENARIO_PULSE,
                                 SCENARIO_PATTING):
            raise ContractError(f"unknown scenario {self.scenario!r}")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s * self.fps))


@dataclass(frozen=True)
class SynthResult:
    manifest_path: Path
    truth_trace: FrequencyTrace
    truth_signal: Optional[RawSignal]


def _freq_schedule(spec_freq, times: np.ndarray) -> np.ndarray:
    """Piecewise-linear bpm schedule evaluated at each sample time."""
    arr = np.atleast_1d(np.asarray(spec_freq, dtype=np.float64))
    if arr.ndim == 1:
        if len(arr) == 1:
            return np.full_like(times, arr[0])
        raise ContractError(
            "freq_trace_bpm must be a scalar or a list of (time_s, bpm) pairs"
        )
    ts, vals = arr[:, 0], arr[:, 1]
    if np.any(np.diff(ts) <= 0):
        raise ContractError("freq schedule breakpoints must increase in time")
    return np.interp(times, ts, vals)


def _phase(freq_bpm: np.ndarray, fs: float) -> np.ndarray:
    """2*pi times the trapezoidal integral of the frequency in Hz."""
    f_hz = freq_bpm / 60.0
    increments = 0.5 * (f_hz[1:] + f_hz[:-1]) / fs
    return 2.0 * np.pi * np.concatenate([[0.0], np.cumsum(increments)])


def value_noise(height: int, width: int, cell: int, rng, lo: float,
                hi: float) -> np.ndarray:
    """Smooth deterministic texture: a coarse uniform grid, bilinearly
    upsampled, stretched to the [lo, hi] gray range."""
    gh = height // cell + 2
    gw = width // cell + 2
    grid = rng.uniform(0.0, 1.0, size=(gh, gw))
    ys, xs = np.mgrid[0:height, 0:width]
    tex = bilinear_sample(grid, xs / cell, ys / cell)
    tex = (tex - tex.min()) / max(tex.max() - tex.min(), 1e-12)
    return lo + tex * (hi - lo)


def _truth(spec: SynthSpec, freq_bpm: np.ndarray, times: np.ndarray,
           displacement: np.ndarray) -> tuple[FrequencyTrace, RawSignal]:
    trace = FrequencyTrace(
        freqs_bpm=freq_bpm, time_axis=times, score=float("nan"),
        bins=np.zeros(len(times), dtype=np.intp),
    )
    signal = RawSignal(samples=displacement, fs=spec.fps, kind=KIND_MOTION)
    return trace, signal


class _Patch:
    """A textured rectangle compositing onto a background with sub-pixel
    displacement (bilinear resampling, soft one-pixel edges)."""

    def __init__(self, x0, y0, texture):
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.tex = texture

    @property
    def h(self):
        return self.tex.shape[0]

    @property
    def w(self):
        return self.tex.shape[1]

    def composite(self, canvas: np.ndarray, dx: float, dy: float) -> None:
        hh, ww = canvas.shape
        left = self.x0 + dx
        top = self.y0 + dy
        cx0 = max(0, int(np.floor(left)) - 1)
        cy0 = max(0, int(np.floor(top)) - 1)
        cx1 = min(ww, int(np.ceil(left + self.w)) + 1)
        cy1 = min(hh, int(np.ceil(top + self.h)) + 1)
        if cx0 >= cx1 or cy0 >= cy1:
            return
        ys, xs = np.mgrid[cy0:cy1, cx0:cx1]
        px = xs - left
        py = ys - top
        sample = bilinear_sample(self.tex, px, py)
        # Coverage tapers linearly over one pixel at each patch border.
        ax = np.clip(np.minimum(px + 0.5, self.w - 0.5 - px), 0.0, 1.0)
        ay = np.clip(np.minimum(py + 0.5, self.h - 0.5 - py), 0.0, 1.0)
        alpha = ax * ay
        region = canvas[cy0:cy1, cx0:cx1]
        canvas[cy0:cy1, cx0:cx1] = region * (1.0 - alpha) + sample * alpha


def _check_patch_bounds(spec: SynthSpec, patch: _Patch, dys: np.ndarray,
                        dxs: np.ndarray) -> None:
    if (patch.y0 + dys.min() < 0 or patch.y0 + patch.h + dys.max() > spec.height
            or patch.x0 + dxs.min() < 0
            or patch.x0 + patch.w + dxs.max() > spec.width):
        raise DataError(
            "patch leaves frame bounds; reduce amplitude/drift or enlarge frame"
        )


def _belly_geometry(spec: SynthSpec):
    """Belly patch placement leaving head-room for the drift excursion."""
    pw = int(spec.width * 0.55)
    ph = int(spec.height * 0.5)
    px0 = (spec.width - pw) // 2
    total_drift = spec.drift_per_frame * (spec.n_frames - 1)
    margin = spec.amplitude + 2.0
    if total_drift >= 0:
        py0 = margin
    else:
        py0 = spec.height - ph - margin
    return px0, py0, pw, ph


def breathing_rois(spec: SynthSpec, n: int = 3) -> list[RoiRect]:
    """Up to three rectangles inside the belly patch interior (first-frame
    coordinates), offset from each other as independent draws would be."""
    px0, py0, pw, ph = _belly_geometry(spec)
    inset_x = max(8, pw // 6)
    inset_y = max(8, ph // 6)
    base = RoiRect(int(px0 + inset_x), int(py0 + inset_y),
                   pw - 2 * inset_x, ph - 2 * inset_y)
    rois = [base]
    shifts = [(6, 4), (-5, 7)]
    for sx, sy in shifts[: max(0, n - 1)]:
        rois.append(RoiRect(base.x0 + sx, base.y0 + sy,
                            base.w - 12, base.h - 12))
    return rois[:n]


def synth_breathing_video(spec: SynthSpec, out_dir) -> SynthResult:
    """Render the breathing-motion (optionally patting-plus-breath) scene."""
    if spec.scenario not in (SCENARIO_BREATH, SCENARIO_PATTING):
        raise ContractError(f"scenario {spec.scenario!r} is not motion-based")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = spec.n_frames
    times = np.arange(n) / spec.fps
    freq = _freq_schedule(spec.freq_trace_bpm, times)
    dys = spec.amplitude * np.sin(_phase(freq, spec.fps)) \
        + spec.drift_per_frame * np.arange(n)

    bg = value_noise(spec.height, spec.width, cell=12,
                     rng=np.random.default_rng([spec.seed, 1]), lo=60, hi=140)
    px0, py0, pw, ph = _belly_geometry(spec)
    belly = _Patch(px0, py0, value_noise(
        ph, pw, cell=8, rng=np.random.default_rng([spec.seed, 2]),
        lo=90, hi=230))
    _check_patch_bounds(spec, belly, dys, np.zeros(1))

    patting = None
    pat_dxs = np.zeros(n)
    if spec.scenario == SCENARIO_PATTING:
        if spec.interference_freq_bpm is None or spec.interference_amplitude <= 0:
            raise ContractError(
                "patting scenario needs interference_freq_bpm and a positive "
                "interference_amplitude"
            )
        pat_freq = np.full(n, spec.interference_freq_bpm)
        pat_dxs = spec.interference_amplitude * np.sin(_phase(pat_freq, spec.fps))
        # Hand-sized patch overlapping the upper half of the belly.
        hw = int(pw * 0.7)
        hh = int(ph * 0.55)
        hand = _Patch(px0 + (pw - hw) // 2, py0 + hh // 4, value_noise(
            hh, hw, cell=6, rng=np.random.default_rng([spec.seed, 3]),
            lo=40, hi=250))
        _check_patch_bounds(
            spec, hand, PATTING_VERTICAL_COUPLING * pat_dxs, pat_dxs)
        patting = hand

    manifest = SequenceManifest(
        fps=spec.fps, frame_count=n, width=spec.width, height=spec.height,
        frame_name_pattern=_FRAME_PATTERN,
    )
    for t in range(n):
        canvas = bg.copy()
        belly.composite(canvas, 0.0, dys[t])
        if patting is not None:
            patting.composite(
                canvas, pat_dxs[t], PATTING_VERTICAL_COUPLING * pat_dxs[t])
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, 7, t])
            canvas = canvas + rng.normal(0.0, spec.noise_sigma, canvas.shape)
        plane = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        frame = Frame(index=t, red=plane, green=plane.copy(),
                      blue=plane.copy())
        path = manifest.frame_path(out_dir, t)
        path.write_bytes(encode_frame(frame))

    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    trace, signal = _truth(spec, freq, times, dys)
    write_trace(out_dir / "truth_trace.csv", trace)
    write_signal_csv(out_dir / "truth_signal.csv", signal.samples, signal.fs)
    return SynthResult(manifest_path=manifest_path, truth_trace=trace,
                       truth_signal=signal)


def skin_roi(spec: SynthSpec) -> RoiRect:
    """ROI inside the modulated skin region of the pulse scenario."""
    x0, y0, w, h = _skin_geometry(spec)
    inset = 10
    return RoiRect(x0 + inset, y0 + inset, w - 2 * inset, h - 2 * inset)


def _skin_geometry(spec: SynthSpec):
    w = int(spec.width * 0.5)
    h = int(spec.height * 0.5)
    return (spec.width - w) // 2, (spec.height - h) // 2, w, h


def synth_pulse_video(spec: SynthSpec, out_dir) -> SynthResult:
    """Render the pulse-color scene: static texture, modulated green/red."""
    if spec.scenario != SCENARIO_PULSE:
        raise ContractError(f"scenario {spec.scenario!r} is not pulse-color")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = spec.n_frames
    times = np.arange(n) / spec.fps
    freq = _freq_schedule(spec.freq_trace_bpm, times)
    modulation = spec.amplitude * np.sin(_phase(freq, spec.fps))
    drift = spec.drift_per_frame * np.arange(n)

    base = value_noise(spec.height, spec.width, cell=10,
                       rng=np.random.default_rng([spec.seed, 1]),
                       lo=90, hi=165)
    sx0, sy0, sw, sh = _skin_geometry(spec)
    mask = np.zeros((spec.height, spec.width))
    mask[sy0:sy0 + sh, sx0:sx0 + sw] = 1.0

    headroom_hi = base.max() + 30 + 1.5 * spec.amplitude + max(drift.max(), 0)
    headroom_lo = base.min() - 30 - 1.5 * spec.amplitude + min(drift.min(), 0)
    if headroom_hi > 255 or headroom_lo < 0:
        raise DataError(
            "amplitude + drift exceed the 8-bit channel head-room"
        )

    manifest = SequenceManifest(
        fps=spec.fps, frame_count=n, width=spec.width, height=spec.height,
        frame_name_pattern=_FRAME_PATTERN,
    )
    for t in range(n):
        r = base + 30 + drift[t] + mask * (0.5 * modulation[t])
        g = base + drift[t] + mask * modulation[t]
        b = base - 30 + drift[t]
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, 7, t])
            r = r + rng.normal(0.0, spec.noise_sigma, r.shape)
            g = g + rng.normal(0.0, spec.noise_sigma, g.shape)
            b = b + rng.normal(0.0, spec.noise_sigma, b.shape)
        frame = Frame(
            index=t,
            red=np.clip(np.rint(r), 0, 255).astype(np.uint8),
            green=np.clip(np.rint(g), 0, 255).astype(np.uint8),
            blue=np.clip(np.rint(b), 0, 255).astype(np.uint8),
        )
        manifest.frame_path(out_dir, t).write_bytes(encode_frame(frame))

    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    trace = FrequencyTrace(
        freqs_bpm=freq, time_axis=times, score=float("nan"),
        bins=np.zeros(n, dtype=np.intp),
    )
    write_trace(out_dir / "truth_trace.csv", trace)
    return SynthResult(manifest_path=manifest_path, truth_trace=trace,
                       truth_signal=None)


def synth_signal(
    freq_trace_bpm, fs: float, duration_s: float, amplitude: float = 1.0,
    drift_per_sample: float = 0.0, noise_sigma: float = 0.0, seed: int = 0,
) -> tuple[RawSignal, FrequencyTrace]:
    """1-D shortcut bypassing rendering: sinusoid with instantaneous frequency
    given by the schedule, plus linear drift and Gaussian noise."""
    if fs <= 0:
        raise ContractError("fs must be > 0")
    n = int(round(duration_s * fs))
    times = np.arange(n) / fs
    freq = _freq_schedule(freq_trace_bpm, times)
    samples = amplitude * np.sin(_phase(freq, fs)) \
        + drift_per_sample * np.arange(n)
    if noise_sigma > 0:
        samples = samples + np.random.default_rng([seed, 11]).normal(
            0.0, noise_sigma, n)
    trace = FrequencyTrace(
        freqs_bpm=freq, time_axis=times, score=float("nan"),
        bins=np.zeros(n, dtype=np.intp),
    )
    return RawSignal(samples=samples, fs=fs, kind=KIND_MOTION), trace


def generate(spec: SynthSpec, out_dir) -> SynthResult:
    """Dispatch on the spec's scenario."""
    if spec.scenario == SCENARIO_PULSE:
        return synth_pulse_video(spec, out_dir)
    return synth_breathing_video(spec, out_dir)
