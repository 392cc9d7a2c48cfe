"""CSV/JSON writers and readers for stage artifacts.

Floats are written with shortest round-trip formatting (`repr`) so a staged
pipeline that reloads intermediates reproduces the fused run bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .amtc import FrequencyTrace
from .errors import DataError
from .refine import RefinedSignal
from .roi import RawSignal
from .spectral import Spectrogram


def _fmt(v) -> str:
    return repr(float(v))


def write_signal_csv(path, samples: np.ndarray, fs: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "time_s", "value"])
        for i, v in enumerate(samples):
            w.writerow([i, _fmt(i / fs), _fmt(v)])


def write_signal(path, signal, sidecar: dict | None = None) -> None:
    """Signal CSV plus a JSON sidecar carrying fs and provenance."""
    path = Path(path)
    write_signal_csv(path, signal.samples, signal.fs)
    meta = {"fs": signal.fs}
    if isinstance(signal, RawSignal):
        meta["kind"] = signal.kind
    if isinstance(signal, RefinedSignal):
        meta["provenance"] = signal.provenance
    if sidecar:
        meta.update(sidecar)
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")


def _read_value_rows(path, n_fields: int):
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if row:
                rows.append([float(x) for x in row[:n_fields]])
    if not rows:
        raise DataError(f"no data rows in {path}")
    return np.array(rows)


def read_signal(path, cls=RawSignal):
    """Read a signal CSV written by write_signal (sidecar required for fs)."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise DataError(f"signal sidecar missing: {sidecar}")
    with open(sidecar) as fh:
        meta = json.load(fh)
    rows = _read_value_rows(path, 3)
    samples = rows[:, 2]
    if cls is RawSignal:
        return RawSignal(samples=samples, fs=float(meta["fs"]),
                         kind=meta.get("kind", "motion-vertical"))
    return RefinedSignal(samples=samples, fs=float(meta["fs"]),
                         provenance=meta.get("provenance", {}))


def write_trace(path, trace: FrequencyTrace, lam: float | None = None) -> None:
    """Trace CSV: time_s,freq_bpm,score_contrib per column."""
    contribs = np.zeros(len(trace))
    if lam is not None:
        jumps = np.abs(np.diff(trace.bins.astype(np.int64)))
        contribs = np.concatenate([[0.0], -lam * jumps.astype(np.float64)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "freq_bpm", "score_contrib"])
        for t, f, c in zip(trace.time_axis, trace.freqs_bpm, contribs):
            w.writerow([_fmt(t), _fmt(f), _fmt(c)])


def write_spectrogram(directory, spec: Spectrogram, params=None,
                      prefix: str = "spec") -> None:
    """`<prefix>_meta.json` (axes, fs, params) + `<prefix>.csv` (rows = time)."""
    directory = Path(directory)
    meta = {
        "fs": spec.fs,
        "time_axis": [float(t) for t in spec.time_axis],
        "freq_axis_bpm": [float(f) for f in spec.freq_axis_bpm],
    }
    if params is not None:
        meta["params"] = {k: v for k, v in vars(params).items()}
    with open(directory / f"{prefix}_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")
    with open(directory / f"{prefix}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        for row in spec.magnitudes:
            w.writerow([_fmt(v) for v in row])


def read_spectrogram(directory, prefix: str = "spec") -> Spectrogram:
    directory = Path(directory)
    meta_path = directory / f"{prefix}_meta.json"
    if not meta_path.exists():
        raise DataError(f"spectrogram metadata missing: {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    mags = []
    with open(directory / f"{prefix}.csv", newline="") as fh:
        for row in csv.reader(fh):
            if row:
                mags.append([float(v) for v in row])
    return Spectrogram(
        magnitudes=np.array(mags),
        time_axis=np.array(meta["time_axis"]),
        freq_axis_bpm=np.array(meta["freq_axis_bpm"]),
        fs=float(meta["fs"]),
    )


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(matrix):
            w.writerow([_fmt(v) for v in row])
