"""Classical raster operations composed by the segmentation pipeline.

Everything here is pure: inputs are never mutated and outputs are fresh
rasters. Masking, low-pass wavelet residual, contrast normalization and
equalization, local-mean adaptive thresholding, square dilation, plaque
mapping, binarization, and the two presentation overlays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .model import BinaryMask, GrayImage, RgbImage


@dataclass(frozen=True)
class Ellipse:
    """Rotated ellipse in pixel coordinates (angle in radians)."""

    cx: float
    cy: float
    a: float
    b: float
    angle: float = 0.0

    def scaled(self, factor: float) -> "Ellipse":
        return Ellipse(self.cx * factor, self.cy * factor, self.a * factor, self.b * factor, self.angle)

    def mask(self, width: int, height: int) -> "BinaryMask":
        return ellipse_mask(width, height, (self.cx, self.cy), (self.a, self.b), self.angle)


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable stage parameters for the segmentation pipeline.

    ``wavelet_levels`` and ``eta`` carry the standard defaults used by the
    whole pipeline; the adaptive-threshold window/offset, plaque intensity
    cutoff, and dilation radius have no canonical values and are expected
    to be tuned per dataset.
    """

    wavelet_levels: int = 5
    eta: int = 127
    plaque_threshold: float = 200.0
    adapt_window: int = 15
    adapt_offset: float = 2.0
    dilation_radius: int = 1
    binarize_strict: bool = True
    wavelet_basis: str = "haar"

    def __post_init__(self):
        if self.wavelet_levels < 1:
            raise ValueError("wavelet_levels must be >= 1")
        if self.adapt_window < 3 or self.adapt_window % 2 == 0:
            raise ValueError("adapt_window must be an odd integer >= 3")
        if not (0 <= self.eta <= 255):
            raise ValueError("eta must lie in [0, 255]")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")
        if self.wavelet_basis != "haar":
            raise ValueError(f"unsupported wavelet basis {self.wavelet_basis!r}")


def _check_dims(a, b, what: str):
    if a.width != b.width or a.height != b.height:
        raise ValueError(
            f"{what}: dimension mismatch {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def ellipse_mask(
    width: int,
    height: int,
    center: tuple[float, float],
    semi_axes: tuple[float, float],
    angle: float = 0.0,
) -> BinaryMask:
    """Mask of pixels whose centers lie inside or on a rotated ellipse.

    ``center`` is (cx, cy) in pixel coordinates (x = column axis), the
    semi-axes pair is (a, b) before rotation, ``angle`` in radians.
    """
    a, b = semi_axes
    if a < 0 or b < 0:
        raise ValueError("semi-axes must be non-negative")
    cx, cy = center
    px = np.arange(width, dtype=np.float64) + 0.5 - cx
    py = np.arange(height, dtype=np.float64) + 0.5 - cy
    dx, dy = np.meshgrid(px, py)
    ca, sa = np.cos(angle), np.sin(angle)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    # degenerate axes collapse to (near-)exact center alignment
    ae, be = max(a, 1e-12), max(b, 1e-12)
    return BinaryMask((u / ae) ** 2 + (v / be) ** 2 <= 1.0)


def apply_mask(img: GrayImage, mask: BinaryMask) -> GrayImage:
    """Zero every pixel outside the mask."""
    _check_dims(img, mask, "apply_mask")
    return GrayImage(np.where(mask.bits, img.data, 0.0))


def wavelet_residual(img: GrayImage, levels: int, basis: str = "haar") -> GrayImage:
    """Low-frequency residual: reconstruction of the level-``levels``
    wavelet approximation with every detail subband zeroed.

    Uses the orthonormal Haar basis, so the residual equals the blockwise
    mean over 2**levels sized blocks. Dimensions that are not multiples of
    the block size are padded by edge replication and cropped back, which
    perturbs the edge-block means slightly.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if basis != "haar":
        raise ValueError(f"unsupported wavelet basis {basis!r}")
    if img.width == 1 and img.height == 1:
        raise ValueError("cannot decompose a 1x1 image")
    block = 2**levels
    h, w = img.height, img.width
    pad_h = (-h) % block
    pad_w = (-w) % block
    a = np.pad(img.data, ((0, pad_h), (0, pad_w)), mode="edge")
    # analysis: keep only the LL band at each level (orthonormal scaling)
    for _ in range(levels):
        a = (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2]) / 2.0
    # synthesis with zeroed details: each coefficient spreads evenly
    out = np.repeat(np.repeat(a, block, axis=0), block, axis=1) / 2.0**levels
    return GrayImage(out[:h, :w])


def subtract_plaques(img: GrayImage, plaques: BinaryMask) -> GrayImage:
    """Zero the pixels flagged by the plaque mask (clamped subtraction of
    a white mask coincides with zeroing)."""
    _check_dims(img, plaques, "subtract_plaques")
    return GrayImage(np.where(plaques.bits, 0.0, img.data))


def normalize_minmax(img: GrayImage) -> GrayImage:
    """Affine map of [min, max] onto [0, 255]; constant images map to 0."""
    lo = float(img.data.min())
    hi = float(img.data.max())
    if hi == lo:
        return GrayImage(np.zeros_like(img.data))
    return GrayImage((img.data - lo) * (255.0 / (hi - lo)))


def equalize(img: GrayImage) -> GrayImage:
    """256-bin histogram equalization on the rounded intensities.

    The cumulative mapping is normalized so the lowest occupied bin lands
    on 0 (min-CDF convention); a single occupied bin maps to 255. The
    resulting intensity map is monotone non-decreasing.
    """
    r = np.floor(np.clip(img.data, 0.0, 255.0) + 0.5).astype(np.int64)
    hist = np.bincount(r.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    total = int(cdf[-1])
    occupied = np.nonzero(hist)[0]
    cdf_min = int(cdf[occupied[0]])
    if total == cdf_min:
        lut = np.full(256, 255.0)
    else:
        lut = np.floor((cdf - cdf_min) * (255.0 / (total - cdf_min)) + 0.5)
    return GrayImage(lut[r].astype(np.float64))


def adaptive_threshold(img: GrayImage, window: int, offset: float) -> BinaryMask:
    """True where intensity exceeds the window x window local mean
    (edge-replicated) plus ``offset``."""
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    local_mean = ndimage.uniform_filter(img.data, size=window, mode="nearest")
    return BinaryMask(img.data > local_mean + offset)


def dilate(mask: BinaryMask, radius: int) -> BinaryMask:
    """Minkowski dilation by a (2*radius+1) square structuring element."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0 or not mask.bits.any():
        return BinaryMask(mask.bits.copy())
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return BinaryMask(ndimage.binary_dilation(mask.bits, structure=structure))


def plaque_mask(
    basal_sk: GrayImage, vessel: BinaryMask, threshold: float, grow: int
) -> BinaryMask:
    """Hyperdense structures inside the vessel selection, grown by
    ``grow`` pixels of square dilation."""
    _check_dims(basal_sk, vessel, "plaque_mask")
    core = BinaryMask((basal_sk.data > threshold) & vessel.bits)
    return dilate(core, grow)


def binarize(img: GrayImage, eta: float, strict: bool = True) -> BinaryMask:
    """Threshold at eta: strictly above (default) or at-or-above."""
    if strict:
        return BinaryMask(img.data > eta)
    return BinaryMask(img.data >= eta)


def colored_map(pred: BinaryMask, target: BinaryMask) -> RgbImage:
    """Classification map: correct foreground green, spurious foreground
    red, missed foreground white, correct background black."""
    _check_dims(pred, target, "colored_map")
    out = np.zeros((pred.height, pred.width, 3), dtype=np.uint8)
    tp = pred.bits & target.bits
    fp = pred.bits & ~target.bits
    fn = ~pred.bits & target.bits
    out[tp] = (0, 255, 0)
    out[fp] = (255, 0, 0)
    out[fn] = (255, 255, 255)
    return RgbImage(out)


def superpose(binary: BinaryMask, background: GrayImage) -> GrayImage:
    """Background with mask-true pixels forced to white."""
    _check_dims(binary, background, "superpose")
    return GrayImage(np.maximum(background.data, np.where(binary.bits, 255.0, 0.0)))


def replicate_upscale(img: GrayImage, scale: int) -> GrayImage:
    """Nearest-neighbor (pixel replication) integer upscaling."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    return GrayImage(np.repeat(np.repeat(img.data, scale, axis=0), scale, axis=1))
