"""Shared raster primitives: 8-bit RGB images, deterministic PNG codec, canonical digests.

PNG encoding is done by hand (filter 0 rows, single zlib level-6 IDAT) so the
bytes are reproducible across platforms and library versions; decoding goes
through Pillow, which accepts any valid PNG a remote service may produce.
"""

from __future__ import annotations

import hashlib
import io
import struct
import zlib
from dataclasses import dataclass

import numpy as np

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class Image:
    """Row-major 8-bit RGB raster."""

    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 3 or p.shape[2] != 3:
            raise ValueError("pixels must be an (h, w, 3) array")
        if p.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        if not p.flags["C_CONTIGUOUS"]:
            object.__setattr__(self, "pixels", np.ascontiguousarray(p))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def _encode_png(raster: np.ndarray, color_type: int) -> bytes:
    h, w = raster.shape[:2]
    flat = raster.reshape(h, -1)
    # filter byte 0 prepended to every scanline
    scanlines = np.concatenate([np.zeros((h, 1), dtype=np.uint8), flat], axis=1)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    idat = zlib.compress(scanlines.tobytes(), 6)
    return (
        _PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", idat)
        + _chunk(b"IEND", b"")
    )


def encode_png_rgb(image: Image) -> bytes:
    """Deterministic RGB PNG bytes for an image."""
    return _encode_png(image.pixels, color_type=2)


def encode_png_gray(raster: np.ndarray) -> bytes:
    """Deterministic 8-bit grayscale PNG bytes for an (h, w) uint8 raster."""
    if raster.ndim != 2 or raster.dtype != np.uint8:
        raise ValueError("grayscale raster must be (h, w) uint8")
    return _encode_png(np.ascontiguousarray(raster), color_type=0)


def decode_png_rgb(data: bytes) -> Image:
    """Decode PNG bytes to an RGB image (any valid PNG, via Pillow)."""
    from PIL import Image as PILImage

    with PILImage.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return Image(pixels=arr)


def decode_png_gray(data: bytes) -> np.ndarray:
    """Decode PNG bytes to an (h, w) uint8 grayscale raster."""
    from PIL import Image as PILImage

    with PILImage.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def raster_digest(width: int, height: int, payload: bytes) -> str:
    """SHA-256 over width/height as 4-byte big-endian words followed by raw bytes."""
    h = hashlib.sha256()
    h.update(struct.pack(">II", width, height))
    h.update(payload)
    return h.hexdigest()
