"""Diffusion service abstraction: full-frame generation and masked inpainting.

Two implementations share one request/response contract: MockBackend renders
smooth deterministic color fields entirely in-process (the test and replay
workhorse), and HttpBackend talks to a remote diffusion server over a minimal
JSON wire protocol with PNG payloads.
"""

from __future__ import annotations

import base64
import binascii
import json
import time
from dataclasses import dataclass

import numpy as np

from .compositor import _blend
from .heatmap import AttentionMask, mask_to_png
from .imaging import Image, decode_png_rgb, encode_png_rgb
from .prompts import fnv1a64, splitmix64_next


class BackendError(Exception):
    """kind is one of timeout | unavailable | malformed_response | rejected."""

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail

    RETRYABLE = ("timeout", "unavailable")


@dataclass(frozen=True)
class GenerateRequest:
    prompt: str
    negative: str = ""
    seed: int = 0
    width: int = 768
    height: int = 768
    steps: int = 30

    def __post_init__(self):
        if self.width < 8 or self.height < 8 or self.width % 8 or self.height % 8:
            raise ValueError("width and height must be positive multiples of 8")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class InpaintRequest:
    prompt: str
    source: Image
    mask: AttentionMask
    negative: str = ""
    seed: int = 0
    steps: int = 30
    strength: float = 0.85

    def __post_init__(self):
        if (self.mask.width, self.mask.height) != (self.source.width, self.source.height):
            raise ValueError("mask dimensions must equal source dimensions")
        if not 0.0 < self.strength <= 1.0:
            raise ValueError("strength must be in (0, 1]")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.width % 8 or self.height % 8:
            raise ValueError("width and height must be multiples of 8")

    @property
    def width(self) -> int:
        return self.source.width

    @property
    def height(self) -> int:
        return self.source.height


_LATTICE = 4


def _mock_field(prompt: str, seed: int, width: int, height: int) -> Image:
    """Smooth color field: a seeded 4x4 lattice of colors upsampled bilinearly.

    Bilinear weights use 32-bit fixed point with 8 fractional bits and round
    half away from zero, so the raster is bit-identical everywhere.
    """
    state = seed ^ fnv1a64(prompt.encode("utf-8"))
    cells = np.empty((_LATTICE, _LATTICE, 3), dtype=np.int64)
    for gy in range(_LATTICE):
        for gx in range(_LATTICE):
            for c in range(3):
                state, out = splitmix64_next(state)
                cells[gy, gx, c] = out & 0xFF

    def axis_coords(n: int) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(n, dtype=np.int64)
        if n == 1:
            fp = np.zeros(n, dtype=np.int64)
        else:
            num = idx * (_LATTICE - 1) * 256
            den = n - 1
            fp = (2 * num + den) // (2 * den)  # round half away (all nonnegative)
        i0 = fp >> 8
        frac = fp & 0xFF
        over = i0 >= _LATTICE - 1
        i0 = np.where(over, _LATTICE - 2, i0)
        frac = np.where(over, 256, frac)
        return i0, frac

    ix0, fx = axis_coords(width)
    iy0, fy = axis_coords(height)
    wx1 = fx[None, :, None]
    wx0 = 256 - wx1
    wy1 = fy[:, None, None]
    wy0 = 256 - wy1
    c00 = cells[iy0[:, None], ix0[None, :], :]
    c10 = cells[iy0[:, None], ix0[None, :] + 1, :]
    c01 = cells[iy0[:, None] + 1, ix0[None, :], :]
    c11 = cells[iy0[:, None] + 1, ix0[None, :] + 1, :]
    acc = c00 * wx0 * wy0 + c10 * wx1 * wy0 + c01 * wx0 * wy1 + c11 * wx1 * wy1
    pixels = ((acc + 32768) >> 16).astype(np.uint8)
    return Image(pixels=pixels)


class MockBackend:
    """Deterministic in-process stand-in for the diffusion service."""

    def generate(self, req: GenerateRequest) -> Image:
        return _mock_field(req.prompt, req.seed, req.width, req.height)

    def inpaint(self, req: InpaintRequest) -> Image:
        generated = _mock_field(req.prompt, req.seed, req.width, req.height)
        weight = req.mask.alpha * req.strength
        return _blend(req.source, generated, weight)


def encode_generate_request(req: GenerateRequest) -> bytes:
    body = {
        "prompt": req.prompt,
        "negative_prompt": req.negative,
        "seed": req.seed,
        "width": req.width,
        "height": req.height,
        "steps": req.steps,
    }
    return json.dumps(body, separators=(",", ":")).encode("utf-8")


def encode_inpaint_request(req: InpaintRequest) -> bytes:
    """Wire body with keys in the pinned order; PNGs as padded standard base64."""
    body = {
        "prompt": req.prompt,
        "negative_prompt": req.negative,
        "seed": req.seed,
        "width": req.width,
        "height": req.height,
        "steps": req.steps,
        "strength": req.strength,
        "image_png_b64": base64.b64encode(encode_png_rgb(req.source)).decode("ascii"),
        "mask_png_b64": base64.b64encode(mask_to_png(req.mask)).decode("ascii"),
    }
    return json.dumps(body, separators=(",", ":")).encode("utf-8")


def decode_image_response(data: bytes, expected_width: int, expected_height: int) -> Image:
    """Decode a {"image_png_b64": ...} response and verify dimensions."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise BackendError("malformed_response", f"bad JSON: {exc}") from exc
    if not isinstance(doc, dict) or "image_png_b64" not in doc:
        raise BackendError("malformed_response", "missing image_png_b64")
    try:
        png = base64.b64decode(doc["image_png_b64"], validate=True)
    except (binascii.Error, TypeError) as exc:
        raise BackendError("malformed_response", f"bad base64: {exc}") from exc
    try:
        image = decode_png_rgb(png)
    except Exception as exc:
        raise BackendError("malformed_response", f"bad PNG: {exc}") from exc
    if (image.width, image.height) != (expected_width, expected_height):
        raise BackendError(
            "malformed_response",
            f"dimension mismatch: got {image.width}x{image.height}, "
            f"expected {expected_width}x{expected_height}",
        )
    return image


def decode_inpaint_response(data: bytes, expected_width: int, expected_height: int) -> Image:
    return decode_image_response(data, expected_width, expected_height)


class HttpBackend:
    """Blocking client for a remote diffusion server speaking the wire protocol.

    Timeouts and connect failures are retried at most `retries` times with
    exponential backoff; rejected and malformed responses never are.
    """

    def __init__(
        self,
        base_url: str,
        deadline_s: float = 60.0,
        retries: int = 2,
        bearer_token: str | None = None,
        client=None,
        sleep=time.sleep,
    ):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.deadline_s = deadline_s
        self.retries = retries
        self._sleep = sleep
        headers = {"content-type": "application/json"}
        if bearer_token:
            headers["authorization"] = f"Bearer {bearer_token}"
        self._client = client or httpx.Client(timeout=deadline_s, headers=headers)

    def close(self):
        self._client.close()

    def _post(self, path: str, body: bytes, expected: tuple[int, int]) -> Image:
        import httpx

        attempt = 0
        while True:
            try:
                resp = self._client.post(self.base_url + path, content=body)
            except httpx.TimeoutException as exc:
                err = BackendError("timeout", str(exc))
            except httpx.TransportError as exc:
                err = BackendError("unavailable", str(exc))
            else:
                if resp.status_code == 200:
                    return decode_image_response(resp.content, *expected)
                if 400 <= resp.status_code < 500:
                    raise BackendError("rejected", f"HTTP {resp.status_code}: {resp.text[:200]}")
                err = BackendError("unavailable", f"HTTP {resp.status_code}")
            if attempt >= self.retries:
                raise err
            self._sleep(2.0**attempt)  # 1 s, 2 s
            attempt += 1

    def generate(self, req: GenerateRequest) -> Image:
        return self._post("/v1/generate", encode_generate_request(req), (req.width, req.height))

    def inpaint(self, req: InpaintRequest) -> Image:
        return self._post("/v1/inpaint", encode_inpaint_request(req), (req.width, req.height))
