"""Attention heatmap and inpainting-mask extraction.

Fixations are splatted as clamped Gaussian bumps into a decaying scalar field;
the mask is the thresholded field, dilated by a disk and feathered with a
Gaussian blur so inpainted content blends without seams.

Heatmap cells are kept on a 2^-36 value lattice: every splat contribution and
every decayed field is rounded to that grid, so additions are exact in float64
and accumulation order cannot change the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .gaze import Fixation
from .imaging import encode_png_gray, raster_digest

_GRID = 2.0**36
# quantized kernel underflows to zero past this many sigmas: exp(-r^2/2s^2) < 2^-37
_SPLAT_TRUNC_SIGMAS = math.sqrt(2.0 * 37.0 * math.log(2.0))


@dataclass(frozen=True)
class MaskParams:
    sigma_px: float = 48.0
    decay_lambda: float = 0.8
    threshold_tau: float = 0.5
    dilation_px: int = 8
    feather_sigma_px: float = 12.0

    def __post_init__(self):
        if self.sigma_px <= 0:
            raise ValueError("sigma_px must be > 0")
        if not (0.0 < self.threshold_tau < 1.0):
            raise ValueError("threshold_tau must be in (0, 1)")
        if self.dilation_px < 0:
            raise ValueError("dilation_px must be >= 0")
        if self.feather_sigma_px < 0:
            raise ValueError("feather_sigma_px must be >= 0")
        if self.decay_lambda < 0:
            raise ValueError("decay_lambda must be >= 0")


@dataclass(frozen=True)
class Heatmap:
    values: np.ndarray  # (h, w) float64, each in [0, 1]

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.dtype != np.float64:
            raise ValueError("heatmap values must be (h, w) float64")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("heatmap dimensions must be positive")

    @classmethod
    def zeros(cls, width: int, height: int) -> "Heatmap":
        return cls(values=np.zeros((height, width), dtype=np.float64))

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    def peak(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class AttentionMask:
    alpha: np.ndarray  # (h, w) float64 in [0, 1], feathered

    def __post_init__(self):
        a = self.alpha
        if a.ndim != 2 or a.dtype != np.float64:
            raise ValueError("mask alpha must be (h, w) float64")

    @property
    def width(self) -> int:
        return int(self.alpha.shape[1])

    @property
    def height(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def binary_support(self) -> np.ndarray:
        return self.alpha > 0.0

    @classmethod
    def zeros(cls, width: int, height: int) -> "AttentionMask":
        return cls(alpha=np.zeros((height, width), dtype=np.float64))

    @classmethod
    def full(cls, width: int, height: int) -> "AttentionMask":
        return cls(alpha=np.ones((height, width), dtype=np.float64))


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.rint(values * _GRID) / _GRID


def splat(heatmap: Heatmap, fixation: Fixation, params: MaskParams) -> Heatmap:
    """Add a clamped Gaussian bump centered at the fixation: out = min(1, in + kernel)."""
    h, w = heatmap.values.shape
    cx = fixation.cx * w
    cy = fixation.cy * h
    radius = int(math.ceil(params.sigma_px * _SPLAT_TRUNC_SIGMAS))
    x0 = max(0, int(math.floor(cx)) - radius)
    x1 = min(w, int(math.floor(cx)) + radius + 1)
    y0 = max(0, int(math.floor(cy)) - radius)
    y1 = min(h, int(math.floor(cy)) + radius + 1)
    out = heatmap.values.copy()
    if x0 >= x1 or y0 >= y1:
        return Heatmap(values=out)
    ys = np.arange(y0, y1, dtype=np.float64) - cy
    xs = np.arange(x0, x1, dtype=np.float64) - cx
    d2 = ys[:, None] ** 2 + xs[None, :] ** 2
    kernel = _quantize(np.exp(-d2 / (2.0 * params.sigma_px**2)))
    out[y0:y1, x0:x1] = np.minimum(1.0, out[y0:y1, x0:x1] + kernel)
    return Heatmap(values=out)


def decay(heatmap: Heatmap, dt_ms: float, params: MaskParams) -> Heatmap:
    """Exponential decay: out = in * exp(-lambda * dt / 1000)."""
    if dt_ms < 0:
        raise ValueError("dt_ms must be >= 0")
    factor = math.exp(-params.decay_lambda * dt_ms / 1000.0)
    return Heatmap(values=_quantize(heatmap.values * factor))


def extract_mask(heatmap: Heatmap, params: MaskParams) -> AttentionMask:
    """Threshold, dilate by a Euclidean disk, and feather with a Gaussian blur.

    The blur kernel is separable and truncated at ceil(3 sigma); alpha is
    renormalized against the full kernel weight and pixels whose entire kernel
    footprint lies inside the dilated support are set to exactly 1.
    """
    h, w = heatmap.values.shape
    binary = heatmap.values >= params.threshold_tau
    if not binary.any():
        return AttentionMask.zeros(w, h)

    dil = int(params.dilation_px)
    blur_r = int(math.ceil(3.0 * params.feather_sigma_px)) if params.feather_sigma_px > 0 else 0
    margin = dil + blur_r + 1
    ys, xs = np.nonzero(binary)
    y0 = max(0, int(ys.min()) - margin)
    y1 = min(h, int(ys.max()) + margin + 1)
    x0 = max(0, int(xs.min()) - margin)
    x1 = min(w, int(xs.max()) + margin + 1)
    sub = binary[y0:y1, x0:x1]

    if dil > 0:
        dist = ndimage.distance_transform_edt(~sub)
        support = dist <= dil
    else:
        support = sub

    if blur_r == 0:
        alpha_sub = support.astype(np.float64)
    else:
        # edge-replicate boundaries: the raster edge is not a mask boundary,
        # so support touching the frame keeps full weight there
        offsets = np.arange(-blur_r, blur_r + 1, dtype=np.float64)
        kern = np.exp(-(offsets**2) / (2.0 * params.feather_sigma_px**2))
        kern /= kern.sum()
        blurred = ndimage.correlate1d(support.astype(np.float64), kern, axis=0, mode="nearest")
        blurred = ndimage.correlate1d(blurred, kern, axis=1, mode="nearest")
        full_weight = float(kern.sum()) ** 2
        alpha_sub = np.minimum(blurred / full_weight, 1.0)
        interior = (
            ndimage.minimum_filter(support.astype(np.uint8), size=2 * blur_r + 1, mode="nearest") == 1
        )
        alpha_sub[interior] = 1.0

    alpha = np.zeros((h, w), dtype=np.float64)
    alpha[y0:y1, x0:x1] = alpha_sub
    return AttentionMask(alpha=alpha)


def area_fraction(mask: AttentionMask) -> float:
    """Fraction of pixels with alpha above one half."""
    return float(np.count_nonzero(mask.alpha > 0.5)) / mask.alpha.size


def clip_to_area(mask: AttentionMask, max_fraction: float) -> AttentionMask:
    """Keep only the top-alpha pixels when the mask exceeds the area budget.

    Ties are broken by row-major position so the result is reproducible.
    """
    if area_fraction(mask) <= max_fraction:
        return mask
    total = mask.alpha.size
    keep = int(math.floor(max_fraction * total))
    flat = mask.alpha.ravel()
    order = np.argsort(-flat, kind="stable")
    clipped = np.zeros(total, dtype=np.float64)
    kept = order[:keep]
    clipped[kept] = flat[kept]
    return AttentionMask(alpha=clipped.reshape(mask.alpha.shape))


def mask_to_u8(mask: AttentionMask) -> np.ndarray:
    """Alpha scaled to 8 bits, rounding half away from zero."""
    return np.floor(mask.alpha * 255.0 + 0.5).astype(np.uint8)


def mask_to_png(mask: AttentionMask) -> bytes:
    """8-bit grayscale PNG export for the backend wire protocol."""
    return encode_png_gray(mask_to_u8(mask))


def heatmap_to_png(heatmap: Heatmap) -> bytes:
    """Debug export of the raw field as 8-bit grayscale PNG."""
    gray = np.floor(heatmap.values * 255.0 + 0.5).astype(np.uint8)
    return encode_png_gray(gray)


def mask_hash(mask: AttentionMask) -> str:
    """Canonical digest of the 8-bit mask raster."""
    gray = mask_to_u8(mask)
    return raster_digest(mask.width, mask.height, gray.tobytes())
