"""Rectangular sample grids and per-frame scalar signal extraction.

A grid of sub-pixel sample points is placed once, in first-frame coordinates,
and carried through each frame by the first-frame-referenced flow field. Each
frame is then reduced to one scalar: the spatial mean of the vertical (or
horizontal) flow component, or a weighted mean RGB color.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ContractError, TrackingDegradedWarning
from .flow import FlowField, FlowParams, bilinear_sample, estimate_flow
from .media_io import Frame, GrayFrame, to_gray

MIN_GRID_POINTS = 16
_DEGRADED_FRACTION = 0.2

KIND_MOTION = "motion-vertical"
KIND_COLOR = "color-weighted"


@dataclass(frozen=True)
class RoiRect:
    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 8 or self.h < 8:
            raise ContractError(f"ROI must be at least 8x8, got {self.w}x{self.h}")

    def validate_inside(self, width: int, height: int) -> None:
        if self.x0 < 0 or self.y0 < 0 or self.x0 + self.w > width \
                or self.y0 + self.h > height:
            raise ContractError(
                f"ROI ({self.x0},{self.y0},{self.w},{self.h}) exceeds "
                f"{width}x{height} frame"
            )


@dataclass(frozen=True)
class RoiGrid:
    """Sample points (N, 2) array of (x, y), row-major over the lattice."""

    points: np.ndarray
    origin_rect: RoiRect
    spacing: float
    flagged: np.ndarray = field(default=None)  # True where a point was clamped

    def __post_init__(self):
        if self.flagged is None:
            object.__setattr__(
                self, "flagged", np.zeros(len(self.points), dtype=bool)
            )


@dataclass(frozen=True)
class RawSignal:
    """One scalar per frame; pixels for motion signals, gray levels for color."""

    samples: np.ndarray
    fs: float
    kind: str

    def __post_init__(self):
        if self.fs <= 0:
            raise ContractError("sampling rate must be > 0")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.fs


def _axis_coords(start: float, extent: float, spacing: float) -> np.ndarray:
    n = int(np.floor(extent / spacing + 1e-9))
    coords = start + spacing * np.arange(n + 1)
    if coords[-1] < start + extent - 1e-9:
        coords = np.append(coords, start + extent)
    return coords


def make_grid(rect: RoiRect, spacing: float) -> RoiGrid:
    """Regular lattice over the rectangle: corners plus interior at `spacing`."""
    if spacing < 1:
        raise ContractError(f"spacing must be >= 1, got {spacing}")
    xs = _axis_coords(rect.x0, rect.w, spacing)
    ys = _axis_coords(rect.y0, rect.h, spacing)
    if len(xs) * len(ys) < MIN_GRID_POINTS:
        raise ContractError(
            f"grid has {len(xs) * len(ys)} points; at least "
            f"{MIN_GRID_POINTS} are required to average out local noise"
        )
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    return RoiGrid(points=points, origin_rect=rect, spacing=float(spacing))


def track_grid(grid: RoiGrid, flow: FlowField) -> RoiGrid:
    """Move each lattice point by the flow sampled (bilinearly) at its
    first-frame position. Points pushed outside the frame are clamped and
    flagged; a warning fires when more than 20% are flagged."""
    base = grid.points
    x0, y0 = base[:, 0], base[:, 1]
    du = bilinear_sample(flow.u, x0, y0)
    dv = bilinear_sample(flow.v, x0, y0)
    nx = x0 + du
    ny = y0 + dv
    out = (nx < 0) | (nx > flow.width - 1) | (ny < 0) | (ny > flow.height - 1)
    nx = np.clip(nx, 0, flow.width - 1)
    ny = np.clip(ny, 0, flow.height - 1)
    if out.mean() > _DEGRADED_FRACTION:
        warnings.warn(
            f"{out.sum()}/{out.size} tracked points left the frame",
            TrackingDegradedWarning,
        )
    return RoiGrid(
        points=np.column_stack([nx, ny]),
        origin_rect=grid.origin_rect,
        spacing=grid.spacing,
        flagged=out,
    )


def motion_sample(grid: RoiGrid, flow: FlowField, axis: str = "y") -> float:
    """Spatial mean of one flow component over the grid's first-frame points."""
    plane = flow.v if axis == "y" else flow.u
    vals = bilinear_sample(plane, grid.points[:, 0], grid.points[:, 1])
    return float(vals.mean())


def color_sample(grid: RoiGrid, frame: Frame, flow: Optional[FlowField],
                 weights: Sequence[float]) -> float:
    """Weighted sum of per-channel means sampled at the tracked grid points."""
    if flow is not None:
        tracked = track_grid(grid, flow).points
    else:
        tracked = grid.points
    xs, ys = tracked[:, 0], tracked[:, 1]
    means = [bilinear_sample(ch, xs, ys).mean()
             for ch in (frame.red, frame.green, frame.blue)]
    return float(sum(w * m for w, m in zip(weights, means)))


def extract_motion_signal(
    frames: Iterable[GrayFrame],
    grid: RoiGrid,
    params: FlowParams,
    fps: float,
    axis: str = "y",
    flow_sink: Optional[Callable[[int, FlowField], None]] = None,
) -> RawSignal:
    """Mean y-axis (or x-axis) flow over the grid, one sample per frame.

    Flow is always computed against the first frame; sample 0 is 0 by
    definition. `flow_sink(index, flow)` is called per target frame when a
    debug dump is requested.
    """
    if axis not in ("x", "y"):
        raise ContractError(f"axis must be 'x' or 'y', got {axis!r}")
    it = iter(frames)
    try:
        reference = next(it)
    except StopIteration:
        raise ContractError("at least 2 frames are required")
    grid.origin_rect.validate_inside(reference.width, reference.height)
    samples = [0.0]
    count = 1
    for target in it:
        count += 1
        fl = estimate_flow(reference, target, params)
        if flow_sink is not None:
            flow_sink(count - 1, fl)
        samples.append(motion_sample(grid, fl, axis=axis))
    if count < 2:
        raise ContractError("at least 2 frames are required")
    return RawSignal(samples=np.array(samples), fs=fps, kind=KIND_MOTION)


def extract_color_signal(
    frames: Iterable[Frame],
    grid: RoiGrid,
    weights: Sequence[float],
    params: FlowParams,
    fps: float,
    flow_sink: Optional[Callable[[int, FlowField], None]] = None,
) -> RawSignal:
    """Weighted RGB mean over the flow-tracked grid, one sample per frame."""
    weights = [float(w) for w in weights]
    if len(weights) != 3 or not all(np.isfinite(weights)):
        raise ContractError("weights must be 3 finite numbers")
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ContractError("at least 2 frames are required")
    grid.origin_rect.validate_inside(first.width, first.height)
    reference = to_gray(first)
    samples = [color_sample(grid, first, None, weights)]
    count = 1
    for target in it:
        count += 1
        fl = estimate_flow(reference, to_gray(target), params)
        if flow_sink is not None:
            flow_sink(count - 1, fl)
        samples.append(color_sample(grid, target, fl, weights))
    if count < 2:
        raise ContractError("at least 2 frames are required")
    return RawSignal(samples=np.array(samples), fs=fps, kind=KIND_COLOR)
