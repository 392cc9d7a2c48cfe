"""TOML run configuration: one block per stage, parsed into the stage
parameter dataclasses."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .amtc import AmtcParams
from .errors import DataError, IngestError, UsageError
from .flow import FlowParams
from .refine import RefineParams
from .roi import KIND_COLOR, KIND_MOTION, RoiRect
from .spectral import SpectrogramParams

MAX_ROIS = 3


@dataclass(frozen=True)
class PipelineConfig:
    manifest_path: Path
    output_dir: Path
    rois: list[RoiRect]
    kind: str = KIND_MOTION
    axis: str = "y"
    weights: tuple = (1.0, 1.0, 1.0)
    grid_spacing: float = 5.0
    flow: FlowParams = field(default_factory=FlowParams)
    refine: RefineParams = field(default_factory=RefineParams)
    spectral: SpectrogramParams = field(default_factory=SpectrogramParams)
    amtc: AmtcParams = field(default_factory=AmtcParams)
    reference_path: Optional[Path] = None
    max_lag_s: float = 0.0

    def __post_init__(self):
        if self.kind not in (KIND_MOTION, KIND_COLOR):
            raise UsageError(f"unknown signal kind {self.kind!r}")
        if not self.rois:
            raise UsageError("at least one ROI rectangle is required")
        if len(self.rois) > MAX_ROIS:
            raise UsageError(f"at most {MAX_ROIS} ROI rectangles per run")

    def validate_paths(self) -> None:
        if not Path(self.manifest_path).exists():
            raise IngestError(f"manifest not found: {self.manifest_path}")
        if self.reference_path is not None \
                and not Path(self.reference_path).exists():
            raise DataError(f"reference not found: {self.reference_path}")


def _build(cls, table: dict, block: str):
    valid = set(cls.__dataclass_fields__)
    unknown = set(table) - valid
    if unknown:
        raise UsageError(f"unknown key(s) {sorted(unknown)} in [{block}]")
    return cls(**table)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"config not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid TOML in {path}: {exc}") from exc

    try:
        manifest = raw["input"]["manifest"]
        out_dir = raw["output"]["directory"]
    except KeyError as exc:
        raise UsageError(f"config {path} missing required key {exc}") from exc

    rois = []
    for tbl in raw.get("roi", []):
        rois.append(_build(RoiRect, tbl, "roi"))

    sig = raw.get("signal", {})
    base = path.parent
    return PipelineConfig(
        manifest_path=(base / manifest).resolve(),
        output_dir=(base / out_dir).resolve(),
        rois=rois,
        kind=sig.get("kind", KIND_MOTION),
        axis=sig.get("axis", "y"),
        weights=tuple(sig.get("weights", (1.0, 1.0, 1.0))),
        grid_spacing=float(sig.get("grid_spacing", 5.0)),
        flow=_build(FlowParams, raw.get("flow", {}), "flow"),
        refine=_build(RefineParams, raw.get("refine", {}), "refine"),
        spectral=_build(SpectrogramParams, raw.get("spectral", {}), "spectral"),
        amtc=_build(AmtcParams, raw.get("amtc", {}), "amtc"),
        reference_path=(base / raw["eval"]["reference"]).resolve()
        if "eval" in raw and "reference" in raw["eval"] else None,
        max_lag_s=float(raw.get("eval", {}).get("max_lag_s", 0.0)),
    )
