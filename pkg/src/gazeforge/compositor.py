"""Masked crossfades between landscapes, and canonical image digests.

All blending uses one rounding rule, half away from zero, evaluated per pixel
in float64 with a fixed operation order, so results are identical across
platforms and match a scalar re-evaluation bit for bit. The hot loop is JIT
compiled (strict IEEE, no fast-math) to hold the real-time frame budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .heatmap import AttentionMask
from .imaging import Image, raster_digest


@dataclass(frozen=True)
class CrossfadePlan:
    src: Image
    dst: Image
    mask: AttentionMask
    n_frames: int = 45

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if (self.src.width, self.src.height) != (self.dst.width, self.dst.height):
            raise ValueError("src and dst dimensions must agree")
        if (self.mask.width, self.mask.height) != (self.src.width, self.src.height):
            raise ValueError("mask dimensions must match the images")


@numba.njit(cache=True)
def _blend_u8(src, dst, weight, out):  # pragma: no cover - exercised via wrappers
    h, w = weight.shape
    for i in range(h):
        for j in range(w):
            m = weight[i, j]
            if m == 0.0:
                out[i, j, 0] = src[i, j, 0]
                out[i, j, 1] = src[i, j, 1]
                out[i, j, 2] = src[i, j, 2]
            else:
                for c in range(3):
                    v = np.floor(src[i, j, c] * (1.0 - m) + dst[i, j, c] * m + 0.5)
                    out[i, j, c] = np.uint8(v)
    return out


def _blend(src: Image, dst: Image, weight: np.ndarray) -> Image:
    out = np.empty_like(src.pixels)
    _blend_u8(src.pixels, dst.pixels, weight, out)
    return Image(pixels=out)


def smoothstep(u: float) -> float:
    return 3.0 * u * u - 2.0 * u * u * u


def frame_at(plan: CrossfadePlan, i: int) -> Image:
    """Frame i of the transition: alpha follows smoothstep, confined to the mask."""
    if not 0 <= i <= plan.n_frames:
        raise ValueError(f"frame index {i} outside 0..{plan.n_frames}")
    u = i / plan.n_frames
    a = smoothstep(u)
    return _blend(plan.src, plan.dst, a * plan.mask.alpha)


def commit(src: Image, dst: Image, mask: AttentionMask) -> Image:
    """Final masked blend; pixels outside the mask keep their source values
    exactly, which enforces mask locality regardless of what the backend did."""
    if (src.width, src.height) != (dst.width, dst.height):
        raise ValueError("src and dst dimensions must agree")
    if (mask.width, mask.height) != (src.width, src.height):
        raise ValueError("mask dimensions must match the images")
    return _blend(src, dst, mask.alpha)


def image_hash(image: Image) -> str:
    """SHA-256 over big-endian width, height, then raw row-major RGB bytes."""
    return raster_digest(image.width, image.height, image.pixels.tobytes())
