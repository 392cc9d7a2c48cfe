import json

import numpy as np
import pytest

from vitaltrace.cli import main
from vitaltrace.evaluate import load_trace_csv
from vitaltrace.synth import SCENARIO_BREATH, SynthSpec, generate

RUN_TOML = """
[input]
manifest = "video/manifest.json"

[output]
directory = "{out}"

[[roi]]
x0 = 30
y0 = 12
w = 36
h = 20

[flow]
pyramid_levels = 3
iterations_per_level = 50

[spectral]
overlap_fraction = 0.9
fft_points = 1024

[eval]
reference = "video/truth_trace.csv"
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A 30 s synthetic breathing video plus a fused pipeline run."""
    root = tmp_path_factory.mktemp("cli")
    spec = SynthSpec(duration_s=30.0, fps=10.0, width=96, height=72,
                     scenario=SCENARIO_BREATH, freq_trace_bpm=(25.0,),
                     amplitude=2.0, seed=9)
    generate(spec, root / "video")
    config = root / "run.toml"
    config.write_text(RUN_TOML.format(out="out_fused"))
    assert main(["run", "--config", str(config)]) == 0
    return root


class TestRun:
    def test_outputs_exist(self, workspace):
        roi_dir = workspace / "out_fused" / "roi_0"
        for name in ("raw_signal.csv", "refined_signal.csv", "spec.csv",
                     "spec_meta.json", "trace_1.csv"):
            assert (roi_dir / name).exists()
        assert (workspace / "out_fused" / "run_meta.json").exists()

    def test_trace_close_to_truth(self, workspace):
        trace = load_trace_csv(workspace / "out_fused" / "roi_0" / "trace_1.csv")
        assert abs(np.median(trace.freqs_bpm) - 25.0) <= 1.0

    def test_eval_report_written(self, workspace):
        report = json.loads(
            (workspace / "out_fused" / "roi_0" / "eval_report.json").read_text()
        )
        assert report["rmse_bpm"] <= 2.0
        assert report["me_rate_percent"] <= 10.0
        assert report["me_rate_definition"] == "mean absolute relative error"


class TestStagedEqualsFused:
    def test_bit_identical_artifacts(self, workspace):
        cfg_staged = workspace / "staged.toml"
        cfg_staged.write_text(RUN_TOML.format(out="out_staged"))
        out = workspace / "out_staged"
        roi = out / "roi_0"

        assert main(["extract", "--config", str(cfg_staged)]) == 0
        assert main([
            "refine", "--config", str(cfg_staged),
            "--input", str(roi / "raw_signal.csv"),
            "--output", str(roi / "refined_signal.csv"),
        ]) == 0
        assert main([
            "spectrogram", "--config", str(cfg_staged),
            "--input", str(roi / "refined_signal.csv"),
            "--out", str(roi),
        ]) == 0
        assert main([
            "track", "--config", str(cfg_staged),
            "--spec-dir", str(roi), "--out", str(roi),
        ]) == 0

        fused = workspace / "out_fused" / "roi_0"
        for name in ("raw_signal.csv", "refined_signal.csv", "spec.csv",
                     "spec.csv", "trace_1.csv"):
            assert (roi / name).read_bytes() == (fused / name).read_bytes(), name


class TestFlowCommand:
    def test_dumps_flow_matrices(self, workspace):
        out = workspace / "flow_dump"
        code = main(["flow", "--config", str(workspace / "run.toml"),
                     "--index", "1", "--out", str(out)])
        assert code == 0
        u = np.loadtxt(out / "u.csv", delimiter=",")
        assert u.shape == (72, 96)

    def test_index_bounds_checked(self, workspace):
        code = main(["flow", "--config", str(workspace / "run.toml"),
                     "--index", "0", "--out", str(workspace / "x")])
        assert code == 1


class TestEvalCommand:
    def test_metrics_against_truth(self, workspace, capsys):
        code = main([
            "eval",
            "--est", str(workspace / "out_fused" / "roi_0" / "trace_1.csv"),
            "--ref", str(workspace / "video" / "truth_trace.csv"),
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rmse_bpm"] <= 2.0


class TestSynthCommand:
    def test_generates_sequence(self, tmp_path, capsys):
        cfg = tmp_path / "synth.toml"
        cfg.write_text(
            "[synth]\nduration_s = 2.0\nfps = 10.0\nwidth = 96\nheight = 72\n"
            'scenario = "breathing-motion"\namplitude = 2.0\nseed = 1\n'
        )
        code = main(["synth", "--config", str(cfg),
                     "--out", str(tmp_path / "vid")])
        assert code == 0
        assert (tmp_path / "vid" / "manifest.json").exists()
        assert (tmp_path / "vid" / "frame_000000.ppm").exists()


class TestExitCodes:
    def test_usage_error_is_1(self, tmp_path):
        assert main(["run"]) == 1  # missing --config

    def test_unknown_config_key_is_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(
            '[input]\nmanifest = "m.json"\n[output]\ndirectory = "o"\n'
            "[[roi]]\nx0 = 0\ny0 = 0\nw = 32\nh = 32\n"
            "[flow]\nbogus = 1\n"
        )
        assert main(["run", "--config", str(cfg)]) == 1

    def test_missing_manifest_is_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            '[input]\nmanifest = "missing/manifest.json"\n'
            '[output]\ndirectory = "o"\n'
            "[[roi]]\nx0 = 0\ny0 = 0\nw = 32\nh = 32\n"
        )
        assert main(["run", "--config", str(cfg)]) == 2

    def test_error_message_names_stage(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            '[input]\nmanifest = "missing/manifest.json"\n'
            '[output]\ndirectory = "o"\n'
            "[[roi]]\nx0 = 0\ny0 = 0\nw = 32\nh = 32\n"
        )
        main(["run", "--config", str(cfg)])
        assert "[" in capsys.readouterr().err
