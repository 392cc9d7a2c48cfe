"""Frame ingestion: JSON manifests, binary P6 PPM codec, luminance conversion."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import DataError, DecodeError, IngestError

BT601_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Frame:
    """One RGB frame. Channel planes are uint8 arrays of shape (height, width)."""

    index: int
    red: np.ndarray
    green: np.ndarray
    blue: np.ndarray

    @property
    def width(self) -> int:
        return self.red.shape[1]

    @property
    def height(self) -> int:
        return self.red.shape[0]

    def __post_init__(self):
        if self.red.shape != self.green.shape or self.red.shape != self.blue.shape:
            raise DataError("channel planes must share one shape")
        if self.red.size == 0:
            raise DataError("frame must be non-empty")


@dataclass(frozen=True)
class GrayFrame:
    """Luminance plane, float64 values in [0, 1], shape (height, width)."""

    luma: np.ndarray

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]


@dataclass(frozen=True)
class SequenceManifest:
    fps: float
    frame_count: int
    width: int
    height: int
    frame_name_pattern: str

    def __post_init__(self):
        if self.fps <= 0:
            raise DataError(f"fps must be > 0, got {self.fps}")
        if self.frame_count < 2:
            raise DataError(f"frame_count must be >= 2, got {self.frame_count}")
        if self.width <= 0 or self.height <= 0:
            raise DataError("frame dimensions must be positive")
        if not re.search(r"%0\d+d", self.frame_name_pattern):
            raise DataError(
                "frame_name_pattern needs one zero-padded integer placeholder, "
                f"e.g. 'frame_%06d.ppm'; got {self.frame_name_pattern!r}"
            )

    def frame_path(self, directory: Path, index: int) -> Path:
        return Path(directory) / (self.frame_name_pattern % index)


def load_manifest(path) -> SequenceManifest:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"manifest not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    try:
        return SequenceManifest(
            fps=float(raw["fps"]),
            frame_count=int(raw["frame_count"]),
            width=int(raw["width"]),
            height=int(raw["height"]),
            frame_name_pattern=str(raw["frame_name_pattern"]),
        )
    except KeyError as exc:
        raise DataError(f"manifest {path} missing key {exc}") from exc


def save_manifest(manifest: SequenceManifest, path) -> None:
    payload = {
        "fps": manifest.fps,
        "frame_count": manifest.frame_count,
        "width": manifest.width,
        "height": manifest.height,
        "frame_name_pattern": manifest.frame_name_pattern,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def decode_frame(data: bytes, index: int = 0) -> Frame:
    """Decode a binary P6 PPM (maxval 255) into a Frame."""
    if not data.startswith(b"P6"):
        got = data[:2].decode("ascii", "replace")
        raise DecodeError(f"expected P6 magic at byte 0, got {got!r}")

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed between tokens.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DecodeError(f"truncated header at byte {pos}")
        fields.append(data[start:pos])
    if pos >= len(data):
        raise DecodeError(f"truncated header at byte {pos}")
    pos += 1  # single whitespace after maxval

    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise DecodeError(f"non-numeric header field before byte {pos}")
    if width <= 0 or height <= 0:
        raise DecodeError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"only maxval 255 supported, got {maxval}")

    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise DecodeError(
            f"payload truncated at byte {pos + len(payload)} "
            f"(need {need} bytes from byte {pos})"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(index=index, red=pixels[:, :, 0].copy(),
                 green=pixels[:, :, 1].copy(), blue=pixels[:, :, 2].copy())


def encode_frame(frame: Frame) -> bytes:
    """Encode a Frame as binary P6 PPM, maxval 255."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    pixels = np.stack([frame.red, frame.green, frame.blue], axis=-1)
    return header + pixels.astype(np.uint8).tobytes()


def read_frame_sequence(manifest_path) -> Iterator[Frame]:
    """Lazily yield frames named by the manifest, in index order."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    directory = manifest_path.parent
    for i in range(manifest.frame_count):
        path = manifest.frame_path(directory, i)
        if not path.exists():
            raise IngestError(f"frame {i} missing: {path}")
        frame = decode_frame(path.read_bytes(), index=i)
        if frame.width != manifest.width or frame.height != manifest.height:
            raise DataError(
                f"frame {i} is {frame.width}x{frame.height}, manifest says "
                f"{manifest.width}x{manifest.height}"
            )
        yield frame


def to_gray(frame: Frame) -> GrayFrame:
    """BT.601 luminance, scaled to [0, 1]."""
    wr, wg, wb = BT601_WEIGHTS
    luma = (wr * frame.red + wg * frame.green + wb * frame.blue) / 255.0
    return GrayFrame(luma=luma)
