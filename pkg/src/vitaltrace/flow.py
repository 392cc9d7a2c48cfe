"""Dense optical flow between a fixed reference frame and a target frame.

Coarse-to-fine variational flow: Horn-Schunck brightness-constancy data term
plus quadratic smoothness, solved per pyramid level with incremental warping.
Everything is deterministic; a given (reference, target, params) triple always
produces the same FlowField bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ContractError
from .media_io import GrayFrame

# Weighted 8-neighbour average used by the Horn-Schunck update.
_AVG_KERNEL = np.array(
    [[1.0, 2.0, 1.0], [2.0, 0.0, 2.0], [1.0, 2.0, 1.0]], dtype=np.float32
) / 12.0
_DERIV_KERNEL = np.array([[-0.5, 0.0, 0.5]], dtype=np.float32)

# Re-linearize (warp + derivative refresh) in fixed blocks so results do not
# depend on how iterations are scheduled.
_REWARP_BLOCKS = 5
_CONVERGENCE_TOL = 1e-4
_MIN_LEVEL_SIZE = 8


@dataclass(frozen=True)
class FlowParams:
    pyramid_levels: int = 4
    smoothness_weight: float = 10.0
    iterations_per_level: int = 100
    downscale_factor: float = 0.5

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ContractError("pyramid_levels must be >= 1")
        if self.smoothness_weight <= 0:
            raise ContractError("smoothness_weight must be > 0")
        if self.iterations_per_level < 1:
            raise ContractError("iterations_per_level must be >= 1")
        if not 0.0 < self.downscale_factor < 1.0:
            raise ContractError("downscale_factor must lie in (0, 1)")


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement in pixels; u horizontal, v vertical (signed)."""

    u: np.ndarray
    v: np.ndarray

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    def __post_init__(self):
        if self.u.shape != self.v.shape:
            raise ContractError("u and v must share one shape")
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise ContractError("flow planes must be finite")


def bilinear_sample(plane: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear interpolation with clamp-to-edge semantics.

    xs/ys are arrays of sample coordinates (x = column, y = row); out-of-bounds
    coordinates are clamped to the image border.
    """
    h, w = plane.shape
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    p = plane.astype(np.float64, copy=False)
    top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def warp(frame: GrayFrame, flow: FlowField) -> GrayFrame:
    """Sample frame at (x + u, y + v); out-of-bounds samples clamp to the edge."""
    if flow.u.shape != frame.luma.shape:
        raise ContractError(
            f"flow {flow.u.shape} does not match frame {frame.luma.shape}"
        )
    h, w = frame.luma.shape
    ys, xs = np.mgrid[0:h, 0:w]
    out = bilinear_sample(frame.luma, xs + flow.u, ys + flow.v)
    return GrayFrame(luma=out)


def build_pyramid(frame: GrayFrame, params: FlowParams) -> list[GrayFrame]:
    """Low-pass + decimate pyramid, original frame first, coarsest last."""
    levels = [frame]
    sigma = 0.5 / params.downscale_factor
    for _ in range(params.pyramid_levels - 1):
        prev = levels[-1].luma
        nh = int(round(prev.shape[0] * params.downscale_factor))
        nw = int(round(prev.shape[1] * params.downscale_factor))
        if nh < _MIN_LEVEL_SIZE or nw < _MIN_LEVEL_SIZE:
            raise ContractError(
                f"frame {frame.width}x{frame.height} too small for "
                f"{params.pyramid_levels} pyramid levels (coarsest must stay "
                f">= {_MIN_LEVEL_SIZE}x{_MIN_LEVEL_SIZE})"
            )
        blurred = cv2.GaussianBlur(
            prev.astype(np.float32), (0, 0), sigmaX=sigma, sigmaY=sigma,
            borderType=cv2.BORDER_REPLICATE,
        ).astype(np.float64)
        ys = (np.arange(nh) + 0.5) * (prev.shape[0] / nh) - 0.5
        xs = (np.arange(nw) + 0.5) * (prev.shape[1] / nw) - 0.5
        gx, gy = np.meshgrid(xs, ys)
        levels.append(GrayFrame(luma=bilinear_sample(blurred, gx, gy)))
    return levels


def _filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return cv2.filter2D(img, -1, kernel, borderType=cv2.BORDER_REPLICATE)


def _solve_level(
    ref: np.ndarray, tgt: np.ndarray, u: np.ndarray, v: np.ndarray,
    params: FlowParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Horn-Schunck iterations at one pyramid level, re-warping in blocks."""
    alpha2 = np.float32(params.smoothness_weight**2)
    h, w = ref.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float32)
    per_block = max(1, int(np.ceil(params.iterations_per_level / _REWARP_BLOCKS)))
    done = 0
    while done < params.iterations_per_level:
        block = min(per_block, params.iterations_per_level - done)
        done += block
        tgt_w = cv2.remap(
            tgt, xs + u, ys + v, cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE
        )
        ix = 0.5 * (_filter(ref, _DERIV_KERNEL) + _filter(tgt_w, _DERIV_KERNEL))
        iy = 0.5 * (_filter(ref, _DERIV_KERNEL.T) + _filter(tgt_w, _DERIV_KERNEL.T))
        it = tgt_w - ref
        # Linearized constancy: ix*(u' - u0) + iy*(v' - v0) + it = 0 with
        # (u0, v0) the warp-time flow.
        u0, v0 = u, v
        denom = alpha2 + ix * ix + iy * iy
        converged = False
        for _ in range(block):
            ubar = _filter(u, _AVG_KERNEL)
            vbar = _filter(v, _AVG_KERNEL)
            t = (ix * (ubar - u0) + iy * (vbar - v0) + it) / denom
            un = ubar - ix * t
            vn = vbar - iy * t
            delta = max(np.abs(un - u).max(), np.abs(vn - v).max())
            u, v = un, vn
            if delta < _CONVERGENCE_TOL:
                converged = True
                break
        if converged and np.abs(u - u0).max() < _CONVERGENCE_TOL \
                and np.abs(v - v0).max() < _CONVERGENCE_TOL:
            break
    return u, v


def estimate_flow(
    reference: GrayFrame, target: GrayFrame, params: FlowParams
) -> FlowField:
    """Estimate flow such that reference(x, y) ~ target(x + u, y + v)."""
    if reference.luma.shape != target.luma.shape:
        raise ContractError(
            f"reference {reference.luma.shape} and target {target.luma.shape} "
            "dimensions differ"
        )
    ref_pyr = build_pyramid(reference, params)
    tgt_pyr = build_pyramid(target, params)
    u = v = None
    for ref_lvl, tgt_lvl in zip(reversed(ref_pyr), reversed(tgt_pyr)):
        # Solver works on 8-bit-range intensities so the conventional
        # smoothness_weight default keeps its usual meaning.
        ref32 = (ref_lvl.luma * 255.0).astype(np.float32)
        tgt32 = (tgt_lvl.luma * 255.0).astype(np.float32)
        h, w = ref32.shape
        if u is None:
            u = np.zeros((h, w), dtype=np.float32)
            v = np.zeros((h, w), dtype=np.float32)
        else:
            sx = np.float32(w / u.shape[1])
            sy = np.float32(h / u.shape[0])
            u = cv2.resize(u, (w, h), interpolation=cv2.INTER_LINEAR) * sx
            v = cv2.resize(v, (w, h), interpolation=cv2.INTER_LINEAR) * sy
        u, v = _solve_level(ref32, tgt32, u, v, params)
    return FlowField(u=u.astype(np.float64), v=v.astype(np.float64))
