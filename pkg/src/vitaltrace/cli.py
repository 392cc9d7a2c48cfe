"""Command line entry points.

`vitaltrace run --config run.toml` executes the whole pipeline; each stage is
also exposed as a subcommand reading and writing the stage file formats, so
staged runs reproduce a fused run exactly.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import store
from .amtc import extract_traces
from .config import load_config
from .errors import VitalTraceError
from .evaluate import align as align_traces
from .evaluate import compute_metrics, load_reference, load_trace_csv
from .flow import estimate_flow
from .media_io import load_manifest, read_frame_sequence, to_gray
from .pipeline import run_pipeline
from .refine import RefinedSignal, refine_signal
from .spectral import spectrogram as compute_spectrogram
from .synth import SynthSpec, generate


@click.group()
def cli():
    """Contact-free breathing/heart-rate estimation from frame sequences."""


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="TOML file with a [synth] table.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth(config_path, out_dir):
    """Generate a synthetic frame sequence with known ground truth."""
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib

    with open(config_path, "rb") as fh:
        raw = tomllib.load(fh)
    table = raw.get("synth", raw)
    table = {k: v for k, v in table.items()}
    if "freq_trace_bpm" in table and isinstance(table["freq_trace_bpm"], list):
        table["freq_trace_bpm"] = [tuple(p) if isinstance(p, list) else p
                                   for p in table["freq_trace_bpm"]]
    spec = SynthSpec(**table)
    result = generate(spec, out_dir)
    click.echo(f"wrote {spec.n_frames} frames to {result.manifest_path.parent}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Override the config's input manifest.")
@click.option("--index", "frame_index", type=int, required=True,
              help="Target frame index (flow is against frame 0).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def flow(config_path, manifest_path, frame_index, out_dir):
    """Estimate flow for one frame and dump u.csv / v.csv."""
    cfg = load_config(config_path)
    mpath = Path(manifest_path) if manifest_path else cfg.manifest_path
    manifest = load_manifest(mpath)
    if not 1 <= frame_index < manifest.frame_count:
        raise click.UsageError(
            f"--index must be in [1, {manifest.frame_count - 1}]"
        )
    frames = read_frame_sequence(mpath)
    reference = to_gray(next(frames))
    target = None
    for f in frames:
        if f.index == frame_index:
            target = to_gray(f)
            break
    field = estimate_flow(reference, target, cfg.flow)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store.write_matrix_csv(out / "u.csv", field.u)
    store.write_matrix_csv(out / "v.csv", field.v)
    click.echo(f"wrote flow for frame {frame_index} to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def extract(config_path):
    """Extract per-ROI raw signals (runs the flow stage internally)."""
    from .pipeline import extract_signals, apply_thread_cap
    from .roi import make_grid

    apply_thread_cap()
    cfg = load_config(config_path)
    cfg.validate_paths()
    grids = [make_grid(r, cfg.grid_spacing) for r in cfg.rois]
    signals = extract_signals(
        cfg.manifest_path, grids, cfg.flow, kind=cfg.kind, axis=cfg.axis,
        weights=cfg.weights,
    )
    out = Path(cfg.output_dir)
    for i, sig in enumerate(signals):
        roi_dir = out / f"roi_{i}"
        roi_dir.mkdir(parents=True, exist_ok=True)
        store.write_signal(roi_dir / "raw_signal.csv", sig)
    click.echo(f"wrote {len(signals)} raw signal(s) under {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--disable-detrend", is_flag=True)
@click.option("--disable-clip", is_flag=True)
def refine(config_path, input_path, output_path, disable_detrend, disable_clip):
    """Refine a raw signal CSV into a standardized signal CSV."""
    cfg = load_config(config_path)
    raw = store.read_signal(input_path)
    refined = refine_signal(raw, cfg.refine, do_detrend=not disable_detrend,
                            do_clip=not disable_clip)
    store.write_signal(output_path, refined)
    click.echo(f"wrote {output_path}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def spectrogram(config_path, input_path, out_dir):
    """Compute the band-restricted spectrogram of a refined signal."""
    cfg = load_config(config_path)
    refined = store.read_signal(input_path, cls=RefinedSignal)
    spec = compute_spectrogram(refined, cfg.spectral)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store.write_spectrogram(out, spec, params=cfg.spectral)
    click.echo(f"wrote spectrogram to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--spec-dir", "spec_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def track(config_path, spec_dir, out_dir):
    """Track frequency trace(s) through a saved spectrogram."""
    cfg = load_config(config_path)
    spec = store.read_spectrogram(spec_dir)
    traces = extract_traces(spec, cfg.amtc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, trace in enumerate(traces, start=1):
        store.write_trace(out / f"trace_{k}.csv", trace,
                          lam=cfg.amtc.jump_penalty_lambda)
    click.echo(f"wrote {len(traces)} trace(s) to {out}")


@cli.command("eval")
@click.option("--est", "est_path", required=True, type=click.Path())
@click.option("--ref", "ref_path", required=True, type=click.Path())
@click.option("--max-lag", "max_lag_s", type=float, default=0.0)
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(est_path, ref_path, max_lag_s, out_path):
    """Align an estimated trace with a reference and report the metrics."""
    import json

    est = load_trace_csv(est_path)
    ref = load_reference(ref_path)
    lag = align_traces(est, ref, max_lag_s) if max_lag_s > 0 else 0.0
    report = compute_metrics(est, ref, lag)
    payload = report.as_dict()
    payload["me_rate_definition"] = "mean absolute relative error"
    text = json.dumps(payload, indent=2, default=float)
    if out_path:
        Path(out_path).write_text(text + "\n")
    click.echo(text)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--roi-index", type=int, default=None)
@click.option("--disable-detrend", is_flag=True)
@click.option("--disable-clip", is_flag=True)
@click.option("--dump-flow", is_flag=True)
def run(config_path, roi_index, disable_detrend, disable_clip, dump_flow):
    """Run the full pipeline from a TOML config."""
    cfg = load_config(config_path)
    stage = {"name": "config"}

    def log(msg: str) -> None:
        if msg.startswith("stage: "):
            stage["name"] = msg[len("stage: "):]
        click.echo(msg, err=True)

    try:
        out = run_pipeline(
            cfg, roi_index=roi_index, disable_detrend=disable_detrend,
            disable_clip=disable_clip, dump_flow=dump_flow, log=log,
        )
    except VitalTraceError as exc:
        exc.args = (f"[{stage['name']}] {exc}",)
        raise
    click.echo(f"pipeline outputs in {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    except VitalTraceError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
