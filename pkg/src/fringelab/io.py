"""Array persistence: raw little-endian float32 plus a JSON sidecar header.

``<stem>.f32`` holds ``height * width * channels`` values, channels
interleaved, rows first.  ``<stem>.json`` holds
``{"height", "width", "channels", "pitch_mm"}`` and optional extra keys.
PNG output is for viewing only.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import GradientField, InvalidInputError, RgbImage, ScalarField

RAW_SUFFIX = ".f32"
HEADER_SUFFIX = ".json"
#: viewing copies only, so favour speed over size
PNG_COMPRESS_LEVEL = 1


class DataFileError(InvalidInputError):
    """Missing or malformed data file."""


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: Path | str, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def read_json(path: Path | str):
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"missing file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFileError(f"{path}: malformed JSON ({exc})") from exc


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def save_raw(stem: Path | str, array: np.ndarray, pitch_mm: float | None = None, **extra) -> None:
    stem = Path(str(stem))
    a = np.asarray(array)
    if a.ndim == 2:
        a = a[:, :, None]
    h, w, c = a.shape
    stem.parent.mkdir(parents=True, exist_ok=True)
    Path(str(stem) + RAW_SUFFIX).write_bytes(a.astype("<f4").tobytes(order="C"))
    header = {"height": h, "width": w, "channels": c, "pitch_mm": pitch_mm}
    header.update(extra)
    write_json(str(stem) + HEADER_SUFFIX, header)


def load_raw(stem: Path | str) -> tuple[np.ndarray, dict]:
    """Return the H x W x C float64 array and the header dict."""
    stem = Path(str(stem))
    raw = Path(str(stem) + RAW_SUFFIX)
    header = read_json(str(stem) + HEADER_SUFFIX)
    if not raw.exists():
        raise DataFileError(f"missing file: {raw}")
    try:
        h, w, c = int(header["height"]), int(header["width"]), int(header["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFileError(f"{stem}{HEADER_SUFFIX}: bad header") from exc
    buf = np.frombuffer(raw.read_bytes(), dtype="<f4")
    if buf.size != h * w * c:
        raise DataFileError(f"{raw}: expected {h * w * c} values, found {buf.size}")
    return buf.reshape(h, w, c).astype(np.float64), header


def save_scalar(stem, f: ScalarField, **extra) -> None:
    save_raw(stem, f.data, f.pitch_mm, **extra)


def load_scalar(stem) -> ScalarField:
    a, header = load_raw(stem)
    if a.shape[2] != 1:
        raise DataFileError(f"{stem}: expected 1 channel, found {a.shape[2]}")
    return ScalarField(a[:, :, 0], header.get("pitch_mm"))


def save_rgb(stem, img: RgbImage, png: bool = True, **extra) -> None:
    save_raw(stem, img.data, None, **extra)
    if png:
        save_png(str(stem) + ".png", img.data)


def load_rgb(stem) -> RgbImage:
    a, _ = load_raw(stem)
    if a.shape[2] != 3:
        raise DataFileError(f"{stem}: expected 3 channels, found {a.shape[2]}")
    # float32 rounding can push 1.0 by one ulp
    return RgbImage.clipped(a)


def save_gradient(stem, g: GradientField, **extra) -> None:
    save_raw(stem, g.stacked(), None, units=g.units, **extra)


def load_gradient(stem) -> GradientField:
    a, header = load_raw(stem)
    if a.shape[2] != 2:
        raise DataFileError(f"{stem}: expected 2 channels, found {a.shape[2]}")
    return GradientField(a[:, :, 0], a[:, :, 1], header.get("units", "per-pixel"))


def save_png(path, data: np.ndarray) -> None:
    """8-bit PNG of a [0, 1] image (gray or RGB)."""
    a = np.clip(np.asarray(data, dtype=float), 0.0, 1.0)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.round(a * 255.0).astype(np.uint8)).save(path, compress_level=PNG_COMPRESS_LEVEL)
