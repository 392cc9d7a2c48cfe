"""Dominant-frequency trace extraction by dynamic programming.

The tracker maximizes sum_t M[t, b(t)] - lambda * sum_t |b(t) - b(t-1)| over
all bin paths. The L1 jump penalty lets each DP transition be computed with
two running-maximum scans (one left-to-right, one right-to-left) instead of
an O(F^2) sweep, so full-length spectrograms track in well under a second.
Ties always resolve to the lower bin index, which keeps results reproducible
and testable against brute-force enumeration.

An online variant consumes columns one at a time, revising only the last
`backtrack_len` estimates; anything older is frozen. Multiple traces come from
iterated tracking with a suppression corridor zeroed around each found trace.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .errors import ContractError, TraceExhaustedWarning
from .spectral import Spectrogram


@dataclass(frozen=True)
class AmtcParams:
    jump_penalty_lambda: float = 0.15
    backtrack_len: int = 10
    num_traces: int = 1
    suppression_halfwidth_bins: int = 3

    def __post_init__(self):
        if self.jump_penalty_lambda < 0:
            raise ContractError("jump_penalty_lambda must be >= 0")
        if self.backtrack_len < 1:
            raise ContractError("backtrack_len must be >= 1")
        if self.num_traces < 1:
            raise ContractError("num_traces must be >= 1")
        if self.suppression_halfwidth_bins < 1:
            raise ContractError("suppression_halfwidth_bins must be >= 1")


@dataclass(frozen=True)
class FrequencyTrace:
    """One frequency (a bin center, in bpm) per spectrogram column."""

    freqs_bpm: np.ndarray
    time_axis: np.ndarray
    score: float
    bins: np.ndarray  # bin index per column on the source spectrogram's axis

    def __len__(self) -> int:
        return len(self.freqs_bpm)


def path_score(magnitudes: np.ndarray, bins: np.ndarray, lam: float) -> float:
    """Canonical objective value of one bin path."""
    bins = np.asarray(bins)
    reward = float(magnitudes[np.arange(len(bins)), bins].sum())
    jumps = float(np.abs(np.diff(bins.astype(np.int64))).sum())
    return reward - lam * jumps


def _dp_step(prev: np.ndarray, column: np.ndarray, lam: float):
    """One DP transition: best predecessor per bin under the L1 jump penalty.

    Returns (scores, parents). Ties pick the lowest predecessor bin: the
    left-to-right scan keeps the earlier argmax on equality (>=) and the
    right-to-left scan only overrides on a strict improvement (>).
    """
    f = len(prev)
    ar = np.arange(f)

    # Left scan: lval[b] = max_{b' <= b} prev[b'] - lam*(b - b'), via a running
    # maximum of prev + lam*b'. A tie keeps the earlier record (lower bin).
    g = prev + lam * ar
    run_l = np.maximum.accumulate(g)
    prev_run_l = np.concatenate(([-np.inf], run_l[:-1]))
    new_l = g > prev_run_l
    larg = np.maximum.accumulate(np.where(new_l, ar, -1))
    lval = run_l - lam * ar

    # Right scan, mirrored; >= lets the lower (closer) bin win ties.
    h = (prev - lam * ar)[::-1]
    run_r = np.maximum.accumulate(h)
    prev_run_r = np.concatenate(([-np.inf], run_r[:-1]))
    new_r = h >= prev_run_r
    pos = np.maximum.accumulate(np.where(new_r, np.arange(f), -1))
    rarg = ar[::-1][pos][::-1]
    rval = run_r[::-1] + lam * ar

    # larg[b] <= b <= rarg[b], so preferring the left scan on ties keeps the
    # lower-bin rule.
    use_r = rval > lval
    best = np.where(use_r, rval, lval)
    parents = np.where(use_r, rarg, larg)
    return best + column, parents


def _argmax_lowest(values: np.ndarray) -> int:
    return int(np.argmax(values))  # np.argmax returns the first (lowest) index


def track_trace(spec: Spectrogram, params: AmtcParams) -> FrequencyTrace:
    """Offline DP over the whole spectrogram."""
    m = np.asarray(spec.magnitudes, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ContractError("spectrogram must have at least 1 column")
    if m.shape[1] < 2:
        raise ContractError("spectrogram must have at least 2 frequency bins")
    t_len, f = m.shape
    lam = params.jump_penalty_lambda

    scores = m[0].copy()
    parents = np.empty((t_len, f), dtype=np.intp)
    parents[0] = np.arange(f)
    for t in range(1, t_len):
        scores, parents[t] = _dp_step(scores, m[t], lam)

    bins = np.empty(t_len, dtype=np.intp)
    bins[-1] = _argmax_lowest(scores)
    for t in range(t_len - 1, 0, -1):
        bins[t - 1] = parents[t][bins[t]]
    return FrequencyTrace(
        freqs_bpm=spec.freq_axis_bpm[bins],
        time_axis=np.asarray(spec.time_axis),
        score=path_score(m, bins, lam),
        bins=bins,
    )


class OnlineTracker:
    """Streaming tracker: per new column, the last `backtrack_len` estimates
    are revised to the current DP-optimal suffix; older estimates are frozen."""

    def __init__(self, params: AmtcParams, n_bins: int):
        if n_bins < 2:
            raise ContractError("need at least 2 frequency bins")
        self.params = params
        self.n_bins = n_bins
        self._scores: Optional[np.ndarray] = None
        self._parents: list[np.ndarray] = []
        self._estimates: list[int] = []

    @property
    def estimates(self) -> np.ndarray:
        return np.array(self._estimates, dtype=np.intp)

    def push(self, column: np.ndarray) -> np.ndarray:
        column = np.asarray(column, dtype=np.float64)
        if column.shape != (self.n_bins,):
            raise ContractError(
                f"column has {column.shape} bins, expected {self.n_bins}"
            )
        lam = self.params.jump_penalty_lambda
        if self._scores is None:
            self._scores = column.copy()
            self._parents.append(np.arange(self.n_bins))
        else:
            self._scores, parents = _dp_step(self._scores, column, lam)
            self._parents.append(parents)

        t = len(self._parents) - 1
        self._estimates.append(0)  # placeholder, revised below
        revise_from = max(0, t - self.params.backtrack_len + 1)
        b = _argmax_lowest(self._scores)
        for pos in range(t, revise_from - 1, -1):
            self._estimates[pos] = b
            b = int(self._parents[pos][b])
        return self.estimates


def track_online(
    columns: Iterable[np.ndarray],
    params: AmtcParams,
    freq_axis_bpm: Optional[np.ndarray] = None,
    time_axis: Optional[np.ndarray] = None,
) -> FrequencyTrace:
    """Run the streaming tracker over all columns and wrap the final
    estimates as a FrequencyTrace."""
    cols = [np.asarray(c, dtype=np.float64) for c in columns]
    if not cols:
        raise ContractError("no columns supplied")
    tracker = OnlineTracker(params, n_bins=len(cols[0]))
    for c in cols:
        tracker.push(c)
    bins = tracker.estimates
    m = np.stack(cols)
    if freq_axis_bpm is None:
        freq_axis_bpm = np.arange(m.shape[1], dtype=np.float64)
    if time_axis is None:
        time_axis = np.arange(m.shape[0], dtype=np.float64)
    return FrequencyTrace(
        freqs_bpm=np.asarray(freq_axis_bpm)[bins],
        time_axis=np.asarray(time_axis),
        score=path_score(m, bins, params.jump_penalty_lambda),
        bins=bins,
    )


def suppress_trace(
    spec: Spectrogram, trace: FrequencyTrace, halfwidth: int
) -> Spectrogram:
    """Zero a corridor of +-halfwidth bins around the trace in every column."""
    if len(trace) != spec.n_columns:
        raise ContractError(
            f"trace length {len(trace)} does not match "
            f"{spec.n_columns} spectrogram columns"
        )
    mags = spec.magnitudes.copy()
    for t, b in enumerate(trace.bins):
        lo = max(0, int(b) - halfwidth)
        hi = min(spec.n_bins, int(b) + halfwidth + 1)
        mags[t, lo:hi] = 0.0
    return Spectrogram(
        magnitudes=mags,
        time_axis=spec.time_axis,
        freq_axis_bpm=spec.freq_axis_bpm,
        fs=spec.fs,
    )


def extract_traces(spec: Spectrogram, params: AmtcParams) -> list[FrequencyTrace]:
    """Iteratively track, suppress, and repeat; strongest trace first."""
    traces: list[FrequencyTrace] = []
    current = spec
    for i in range(params.num_traces):
        if not np.any(current.magnitudes > 0):
            warnings.warn(
                f"spectrogram exhausted after {i} of {params.num_traces} traces",
                TraceExhaustedWarning,
            )
            break
        traces.append(track_trace(current, params))
        if i + 1 < params.num_traces:
            current = suppress_trace(
                current, traces[-1], params.suppression_halfwidth_bins
            )
    return traces
