import pytest

from vitaltrace.config import MAX_ROIS, PipelineConfig, load_config
from vitaltrace.errors import IngestError, UsageError
from vitaltrace.roi import KIND_COLOR, RoiRect

FULL_TOML = """
[input]
manifest = "video/manifest.json"

[output]
directory = "out"

[[roi]]
x0 = 30
y0 = 12
w = 36
h = 20

[[roi]]
x0 = 36
y0 = 16
w = 24
h = 14

[signal]
kind = "color-weighted"
weights = [1.0, -0.5, 0.0]
grid_spacing = 4.0

[flow]
pyramid_levels = 3
iterations_per_level = 50

[refine]
std_window_s = 2.0

[spectral]
band_lo_bpm = 40.0
band_hi_bpm = 180.0
fft_points = 1024

[amtc]
jump_penalty_lambda = 0.2

[eval]
reference = "video/truth_trace.csv"
max_lag_s = 3.0
"""


class TestLoadConfig:
    def test_full_round(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text(FULL_TOML)
        cfg = load_config(p)
        assert cfg.manifest_path == (tmp_path / "video/manifest.json").resolve()
        assert cfg.output_dir == (tmp_path / "out").resolve()
        assert cfg.rois == [RoiRect(30, 12, 36, 20), RoiRect(36, 16, 24, 14)]
        assert cfg.kind == KIND_COLOR
        assert cfg.weights == (1.0, -0.5, 0.0)
        assert cfg.grid_spacing == 4.0
        assert cfg.flow.pyramid_levels == 3
        assert cfg.flow.iterations_per_level == 50
        assert cfg.refine.std_window_s == 2.0
        assert cfg.spectral.band_hi_bpm == 180.0
        assert cfg.amtc.jump_penalty_lambda == 0.2
        assert cfg.reference_path == (tmp_path / "video/truth_trace.csv").resolve()
        assert cfg.max_lag_s == 3.0

    def test_defaults(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text(
            '[input]\nmanifest = "m.json"\n[output]\ndirectory = "out"\n'
            "[[roi]]\nx0 = 0\ny0 = 0\nw = 32\nh = 32\n"
        )
        cfg = load_config(p)
        assert cfg.kind == "motion-vertical"
        assert cfg.flow.pyramid_levels == 4
        assert cfg.spectral.window_s == 10.0
        assert cfg.amtc.jump_penalty_lambda == 0.15
        assert cfg.reference_path is None

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text(
            '[input]\nmanifest = "m.json"\n[output]\ndirectory = "out"\n'
            "[[roi]]\nx0 = 0\ny0 = 0\nw = 32\nh = 32\n"
            "[flow]\npyramid_depth = 4\n"
        )
        with pytest.raises(UsageError, match="pyramid_depth"):
            load_config(p)

    def test_missing_required_block(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text('[output]\ndirectory = "out"\n')
        with pytest.raises(UsageError):
            load_config(p)

    def test_invalid_toml(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text("not [ valid")
        with pytest.raises(UsageError):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_config(tmp_path / "nope.toml")


class TestPipelineConfig:
    def roi(self):
        return RoiRect(0, 0, 32, 32)

    def test_roi_count_limits(self, tmp_path):
        with pytest.raises(UsageError):
            PipelineConfig(manifest_path=tmp_path, output_dir=tmp_path,
                           rois=[])
        with pytest.raises(UsageError):
            PipelineConfig(manifest_path=tmp_path, output_dir=tmp_path,
                           rois=[self.roi()] * (MAX_ROIS + 1))

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(UsageError):
            PipelineConfig(manifest_path=tmp_path, output_dir=tmp_path,
                           rois=[self.roi()], kind="hue")

    def test_validate_paths(self, tmp_path):
        cfg = PipelineConfig(manifest_path=tmp_path / "m.json",
                             output_dir=tmp_path, rois=[self.roi()])
        with pytest.raises(IngestError):
            cfg.validate_paths()
