"""Core raster types and lossless 8-bit image file I/O.

Intensities are kept as real values in [0, 255] throughout the toolkit;
quantization to 8 bits happens only when a file is written (rounding
half-up). Loaded RGB files are collapsed to gray by channel mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ImageIOError(Exception):
    """Raised when an image file cannot be read or decoded."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GrayImage:
    """Real-valued grayscale raster, canonical intensity range [0, 255].

    ``data`` has shape (height, width); row-major, x = column axis,
    y = row axis. Values must be finite but may be sub-integer.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"gray image needs a 2-D raster, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("gray image intensities must be finite")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def constant(cls, width: int, height: int, value: float = 0.0) -> "GrayImage":
        return cls(np.full((height, width), float(value)))


@dataclass(frozen=True)
class BinaryMask:
    """Boolean raster; true = white/foreground."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.dtype != np.bool_:
            arr = arr.astype(bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask needs a 2-D raster, got shape {arr.shape}")
        object.__setattr__(self, "bits", _frozen(arr))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        """Number of foreground pixels."""
        return int(self.bits.sum())

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.ones((height, width), dtype=bool))


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster, shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"rgb image needs shape (h, w, 3), got {arr.shape}")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half-up to 8-bit integers (127.5 -> 128)."""
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 255.0)
    return np.floor(clipped + 0.5).clip(0, 255).astype(np.uint8)


def load_image(path) -> GrayImage:
    """Load a lossless 8-bit grayscale image file.

    8-bit RGB files are accepted and collapsed by channel mean; anything
    else (16-bit, palette with alpha tricks, truncated files) is rejected.
    """
    p = Path(path)
    if not p.exists():
        raise ImageIOError(f"image file not found: {p}")
    try:
        with Image.open(p) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif mode in ("RGB", "RGBA"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = rgb.mean(axis=2)
            elif mode == "P":
                arr = np.asarray(im.convert("RGB"), dtype=np.float64).mean(axis=2)
            elif mode == "1":
                arr = np.asarray(im.convert("L"), dtype=np.float64)
            else:
                raise ImageIOError(f"unsupported image mode {mode!r} in {p} (need 8-bit gray or RGB)")
    except ImageIOError:
        raise
    except Exception as exc:
        raise ImageIOError(f"cannot decode image {p}: {exc}") from exc
    return GrayImage(arr)


def save_image(img, path) -> None:
    """Write a raster losslessly as an 8-bit file (format from the extension).

    GrayImage intensities are quantized half-up; BinaryMask maps
    true -> 255, false -> 0.
    """
    p = Path(path)
    if isinstance(img, GrayImage):
        pil = Image.fromarray(quantize(img.data), mode="L")
    elif isinstance(img, BinaryMask):
        pil = Image.fromarray(np.where(img.bits, 255, 0).astype(np.uint8), mode="L")
    elif isinstance(img, RgbImage):
        pil = Image.fromarray(img.data, mode="RGB")
    else:
        raise TypeError(f"cannot save object of type {type(img).__name__}")
    try:
        pil.save(p)
    except Exception as exc:
        raise ImageIOError(f"cannot write image {p}: {exc}") from exc
