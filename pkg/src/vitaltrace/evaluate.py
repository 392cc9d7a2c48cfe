"""Trace alignment and accuracy metrics (RMSE, SD of |error|, MeRate).

Reference devices report with their own processing delays, so estimated and
reference traces are synchronized by maximizing Pearson correlation over a
bounded lag before metrics are computed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .amtc import FrequencyTrace
from .errors import ContractError, DataError

MIN_OVERLAP_S = 10.0


@dataclass(frozen=True)
class EvalReport:
    rmse_bpm: float
    sd_abs_error_bpm: float
    me_rate_percent: float
    applied_lag_s: float
    n_samples: int

    def as_dict(self) -> dict:
        return asdict(self)


def _trace_step(trace: FrequencyTrace) -> float:
    t = np.asarray(trace.time_axis, dtype=np.float64)
    if len(t) < 2:
        raise ContractError("trace needs at least 2 samples")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise ContractError("trace time axis must be strictly increasing")
    return float(np.median(steps))


def _overlap_grid(est: FrequencyTrace, ref: FrequencyTrace, lag: float,
                  step: float):
    """Common time grid where est(t) and ref(t + lag) are both defined."""
    et = np.asarray(est.time_axis, dtype=np.float64)
    rt = np.asarray(ref.time_axis, dtype=np.float64)
    lo = max(et[0], rt[0] - lag)
    hi = min(et[-1], rt[-1] - lag)
    if hi - lo < MIN_OVERLAP_S:
        return None
    n = int(np.floor((hi - lo) / step)) + 1
    grid = lo + step * np.arange(n)
    ev = np.interp(grid, et, np.asarray(est.freqs_bpm, dtype=np.float64))
    rv = np.interp(grid + lag, rt, np.asarray(ref.freqs_bpm, dtype=np.float64))
    return ev, rv


def align(est: FrequencyTrace, ref: FrequencyTrace, max_lag_s: float) -> float:
    """Lag (seconds, applied to the reference) maximizing Pearson correlation.

    Ties prefer the smaller |lag|, then the negative one. Both traces are
    linearly resampled to the coarser of the two rates.
    """
    step = max(_trace_step(est), _trace_step(ref))
    n_lags = int(np.floor(max_lag_s / step + 1e-9))
    lags = step * np.arange(-n_lags, n_lags + 1)
    # Order candidates by the tie-break preference and keep strict improvement.
    lags = sorted(lags, key=lambda g: (abs(g), g))
    best_lag = None
    best_r = -np.inf
    any_overlap = False
    for lag in lags:
        pair = _overlap_grid(est, ref, lag, step)
        if pair is None:
            continue
        any_overlap = True
        ev, rv = pair
        es = ev.std()
        rs = rv.std()
        if rs == 0.0:
            raise ContractError("reference trace is constant; correlation undefined")
        if es == 0.0:
            continue
        r = float(np.mean((ev - ev.mean()) * (rv - rv.mean())) / (es * rs))
        if r > best_r:
            best_r = r
            best_lag = lag
    if not any_overlap:
        raise ContractError(
            f"no lag within +-{max_lag_s} s leaves >= {MIN_OVERLAP_S} s overlap"
        )
    if best_lag is None:
        raise ContractError("estimated trace is constant at every candidate lag")
    return float(best_lag)


def compute_metrics(est: FrequencyTrace, ref: FrequencyTrace,
                    lag: float = 0.0) -> EvalReport:
    step = max(_trace_step(est), _trace_step(ref))
    pair = _overlap_grid(est, ref, lag, step)
    if pair is None:
        raise ContractError(
            f"aligned overlap shorter than {MIN_OVERLAP_S} s"
        )
    ev, rv = pair
    if np.any(rv <= 0):
        raise ContractError("reference values must be > 0 for relative error")
    err = ev - rv
    abs_err = np.abs(err)
    return EvalReport(
        rmse_bpm=float(np.sqrt(np.mean(err**2))),
        sd_abs_error_bpm=float(np.std(abs_err)),
        me_rate_percent=float(100.0 * np.mean(abs_err / rv)),
        applied_lag_s=float(lag),
        n_samples=len(ev),
    )


def load_trace_csv(path) -> FrequencyTrace:
    """Load `time_s,freq_bpm[,score_contrib]` or `time_s,value_bpm` CSV."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"trace file not found: {path}")
    times, freqs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"empty trace file: {path}")
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            freqs.append(float(row[1]))
    if len(times) < 2:
        raise DataError(f"trace file {path} has fewer than 2 rows")
    t = np.array(times)
    f = np.array(freqs)
    return FrequencyTrace(
        freqs_bpm=f, time_axis=t, score=float("nan"),
        bins=np.zeros(len(f), dtype=np.intp),
    )


def events_to_rate(event_times_s: np.ndarray, window_s: float = 10.0,
                   step_s: float = 1.0) -> FrequencyTrace:
    """Convert annotated event timestamps (e.g. observed breaths) to a rate
    trace: events counted in a sliding centered window."""
    ev = np.sort(np.asarray(event_times_s, dtype=np.float64))
    if len(ev) < 2:
        raise DataError("need at least 2 events to form a rate trace")
    t0, t1 = ev[0], ev[-1]
    if t1 - t0 <= 0:
        raise DataError("events must span a positive time range")
    grid = np.arange(t0, t1 + step_s / 2, step_s)
    half = window_s / 2.0
    counts = np.searchsorted(ev, grid + half, side="right") - np.searchsorted(
        ev, grid - half, side="left"
    )
    rates = counts * (60.0 / window_s)
    return FrequencyTrace(
        freqs_bpm=rates.astype(np.float64), time_axis=grid,
        score=float("nan"), bins=np.zeros(len(grid), dtype=np.intp),
    )


def load_reference(path) -> FrequencyTrace:
    """Reference import: rate trace CSV (`time_s,value_bpm`) or one
    `event_time_s` per line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"reference file not found: {path}")
    with open(path) as fh:
        first = fh.readline().strip()
    if "," in first:
        return load_trace_csv(path)
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.lower() == "event_time_s":
                continue
            events.append(float(line))
    return events_to_rate(np.array(events))
