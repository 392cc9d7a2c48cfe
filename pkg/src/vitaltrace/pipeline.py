"""End-to-end orchestration: frames -> raw signals -> refined -> spectrogram
-> frequency traces -> metrics, with all artifacts written per ROI.

Flow fields are computed once per frame and shared by every ROI.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional

import cv2
import numpy as np

from . import store
from .amtc import extract_traces
from .config import PipelineConfig
from .errors import ContractError
from .evaluate import align, compute_metrics, load_reference
from .flow import FlowField, FlowParams, estimate_flow
from .media_io import load_manifest, read_frame_sequence, to_gray
from .refine import refine_signal
from .roi import (
    KIND_MOTION,
    RawSignal,
    RoiGrid,
    color_sample,
    make_grid,
    motion_sample,
)
from .spectral import spectrogram


def apply_thread_cap() -> None:
    """Honor VITALTRACE_THREADS as an upper bound on library parallelism."""
    cap = os.environ.get("VITALTRACE_THREADS")
    if cap:
        cv2.setNumThreads(max(1, int(cap)))


def extract_signals(
    manifest_path,
    grids: list[RoiGrid],
    flow_params: FlowParams,
    kind: str = KIND_MOTION,
    axis: str = "y",
    weights=(1.0, 1.0, 1.0),
    flow_sink: Optional[Callable[[int, FlowField], None]] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[RawSignal]:
    """One pass over the sequence, one raw signal per grid."""
    manifest = load_manifest(manifest_path)
    frames = read_frame_sequence(manifest_path)
    first = next(frames)
    for g in grids:
        g.origin_rect.validate_inside(first.width, first.height)
    reference = to_gray(first)
    if kind == KIND_MOTION:
        series = [[0.0] for _ in grids]
    else:
        series = [[color_sample(g, first, None, weights)] for g in grids]
    n_done = 1
    for target in frames:
        fl = estimate_flow(reference, to_gray(target), flow_params)
        if flow_sink is not None:
            flow_sink(target.index, fl)
        for g, out in zip(grids, series):
            if kind == KIND_MOTION:
                out.append(motion_sample(g, fl, axis=axis))
            else:
                out.append(color_sample(g, target, fl, weights))
        n_done += 1
        if progress is not None:
            progress(n_done, manifest.frame_count)
    if n_done < 2:
        raise ContractError("at least 2 frames are required")
    return [
        RawSignal(samples=np.array(s), fs=manifest.fps, kind=kind)
        for s in series
    ]


def run_pipeline(
    cfg: PipelineConfig,
    roi_index: Optional[int] = None,
    disable_detrend: bool = False,
    disable_clip: bool = False,
    dump_flow: bool = False,
    log: Callable[[str], None] = lambda s: None,
) -> Path:
    """Execute the full pipeline; returns the output directory."""
    apply_thread_cap()
    cfg.validate_paths()
    out_root = Path(cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    rois = cfg.rois
    indices = range(len(rois))
    if roi_index is not None:
        if not 0 <= roi_index < len(rois):
            raise ContractError(
                f"roi index {roi_index} out of range (have {len(rois)})"
            )
        indices = [roi_index]
    grids = [make_grid(rois[i], cfg.grid_spacing) for i in indices]

    timings: dict[str, float] = {}
    flow_sink = None
    if dump_flow:
        flow_dir = out_root / "flow"
        flow_dir.mkdir(exist_ok=True)

        def flow_sink(idx: int, fl: FlowField) -> None:
            store.write_matrix_csv(flow_dir / f"u_{idx:06d}.csv", fl.u)
            store.write_matrix_csv(flow_dir / f"v_{idx:06d}.csv", fl.v)

    log("stage: extract")
    t0 = time.perf_counter()
    raw_signals = extract_signals(
        cfg.manifest_path, grids, cfg.flow, kind=cfg.kind, axis=cfg.axis,
        weights=cfg.weights, flow_sink=flow_sink,
    )
    timings["extract_s"] = time.perf_counter() - t0

    reference = None
    if cfg.reference_path is not None:
        reference = load_reference(cfg.reference_path)

    for i, raw in zip(indices, raw_signals):
        roi_dir = out_root / f"roi_{i}"
        roi_dir.mkdir(exist_ok=True)
        store.write_signal(roi_dir / "raw_signal.csv", raw)

        log(f"stage: refine (roi {i})")
        t0 = time.perf_counter()
        refined = refine_signal(
            raw, cfg.refine,
            do_detrend=not disable_detrend, do_clip=not disable_clip,
        )
        timings[f"refine_roi{i}_s"] = time.perf_counter() - t0
        store.write_signal(roi_dir / "refined_signal.csv", refined)

        log(f"stage: spectrogram (roi {i})")
        t0 = time.perf_counter()
        spec = spectrogram(refined, cfg.spectral)
        timings[f"spectrogram_roi{i}_s"] = time.perf_counter() - t0
        store.write_spectrogram(roi_dir, spec, params=cfg.spectral)

        log(f"stage: track (roi {i})")
        t0 = time.perf_counter()
        traces = extract_traces(spec, cfg.amtc)
        timings[f"track_roi{i}_s"] = time.perf_counter() - t0
        for k, trace in enumerate(traces, start=1):
            store.write_trace(roi_dir / f"trace_{k}.csv", trace,
                              lam=cfg.amtc.jump_penalty_lambda)

        if reference is not None and traces:
            log(f"stage: eval (roi {i})")
            lag = 0.0
            if cfg.max_lag_s > 0:
                lag = align(traces[0], reference, cfg.max_lag_s)
            report = compute_metrics(traces[0], reference, lag)
            payload = report.as_dict()
            payload["me_rate_definition"] = "mean absolute relative error"
            payload["params"] = {
                "refine": asdict(cfg.refine),
                "spectral": asdict(cfg.spectral),
                "amtc": asdict(cfg.amtc),
            }
            with open(roi_dir / "eval_report.json", "w") as fh:
                json.dump(payload, fh, indent=2, default=float)
                fh.write("\n")

    meta = {
        "manifest": str(cfg.manifest_path),
        "signal_kind": cfg.kind,
        "axis": cfg.axis,
        "weights": list(cfg.weights),
        "grid_spacing": cfg.grid_spacing,
        "rois": [asdict(r) for r in rois],
        "roi_index": roi_index,
        "disable_detrend": disable_detrend,
        "disable_clip": disable_clip,
        "params": {
            "flow": asdict(cfg.flow),
            "refine": asdict(cfg.refine),
            "spectral": asdict(cfg.spectral),
            "amtc": asdict(cfg.amtc),
        },
    }
    with open(out_root / "run_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")
    # Timings are diagnostic only and vary run to run, so they live apart
    # from the reproducible outputs.
    with open(out_root / "timings.json", "w") as fh:
        json.dump(timings, fh, indent=2, default=float)
        fh.write("\n")
    return out_root
