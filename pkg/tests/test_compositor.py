from __future__ import annotations

import hashlib
import struct

import numpy as np
import pytest

from gazeforge.compositor import CrossfadePlan, commit, frame_at, image_hash, smoothstep
from gazeforge.heatmap import AttentionMask
from gazeforge.imaging import Image

from .oracles import blend_ref


def _rand_image(rng, w=32, h=32):
    return Image(pixels=rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def _rand_mask(rng, w=32, h=32):
    return AttentionMask(alpha=rng.random((h, w)))


def _plan(rng, n_frames=8, w=32, h=32, mask=None):
    return CrossfadePlan(
        src=_rand_image(rng, w, h),
        dst=_rand_image(rng, w, h),
        mask=mask if mask is not None else _rand_mask(rng, w, h),
        n_frames=n_frames,
    )


# ---------------------------------------------------------------------------
# frame_at


def test_frame_zero_is_src():
    plan = _plan(np.random.default_rng(1))
    assert np.array_equal(frame_at(plan, 0).pixels, plan.src.pixels)


def test_final_frame_equals_commit():
    rng = np.random.default_rng(2)
    plan = _plan(rng)
    final = frame_at(plan, plan.n_frames)
    committed = commit(plan.src, plan.dst, plan.mask)
    assert np.array_equal(final.pixels, committed.pixels)


def test_final_frame_reaches_dst_inside_full_mask():
    rng = np.random.default_rng(3)
    plan = _plan(rng, mask=AttentionMask.full(32, 32))
    assert np.array_equal(frame_at(plan, plan.n_frames).pixels, plan.dst.pixels)


def test_midpoint_exact():
    src = Image(pixels=np.full((8, 8, 3), 100, dtype=np.uint8))
    dst = Image(pixels=np.full((8, 8, 3), 200, dtype=np.uint8))
    plan = CrossfadePlan(src=src, dst=dst, mask=AttentionMask.full(8, 8), n_frames=8)
    mid = frame_at(plan, 4)  # u = 0.5, smoothstep = 0.5
    assert (mid.pixels == 150).all()


def test_frame_index_bounds():
    plan = _plan(np.random.default_rng(4))
    with pytest.raises(ValueError):
        frame_at(plan, -1)
    with pytest.raises(ValueError):
        frame_at(plan, plan.n_frames + 1)


def test_locality_outside_mask():
    rng = np.random.default_rng(5)
    alpha = np.zeros((32, 32))
    alpha[8:16, 8:16] = rng.random((8, 8))
    plan = _plan(rng, mask=AttentionMask(alpha=alpha))
    outside = alpha == 0
    for i in range(plan.n_frames + 1):
        frame = frame_at(plan, i)
        assert np.array_equal(frame.pixels[outside], plan.src.pixels[outside])


def test_monotone_envelope_inside_mask():
    rng = np.random.default_rng(6)
    plan = _plan(rng, n_frames=12, mask=AttentionMask.full(32, 32))
    frames = [frame_at(plan, i).pixels.astype(np.int16) for i in range(plan.n_frames + 1)]
    direction = np.sign(plan.dst.pixels.astype(np.int16) - plan.src.pixels.astype(np.int16))
    for a, b in zip(frames, frames[1:]):
        assert ((b - a) * direction >= 0).all()


def test_smoothstep_endpoints_and_monotonicity():
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    us = np.linspace(0, 1, 101)
    vals = [smoothstep(float(u)) for u in us]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# commit


def test_commit_empty_mask_is_src():
    rng = np.random.default_rng(7)
    src, dst = _rand_image(rng), _rand_image(rng)
    out = commit(src, dst, AttentionMask.zeros(32, 32))
    assert np.array_equal(out.pixels, src.pixels)


def test_commit_full_mask_is_dst():
    rng = np.random.default_rng(8)
    src, dst = _rand_image(rng), _rand_image(rng)
    out = commit(src, dst, AttentionMask.full(32, 32))
    assert np.array_equal(out.pixels, dst.pixels)


def test_commit_matches_scalar_oracle():
    rng = np.random.default_rng(9)
    for _ in range(5):
        src, dst, mask = _rand_image(rng), _rand_image(rng), _rand_mask(rng)
        out = commit(src, dst, mask)
        assert np.array_equal(out.pixels, blend_ref(src.pixels, dst.pixels, mask.alpha))


def test_frame_at_matches_scalar_oracle():
    rng = np.random.default_rng(10)
    plan = _plan(rng, n_frames=6)
    for i in range(plan.n_frames + 1):
        a = smoothstep(i / plan.n_frames)
        expected = blend_ref(plan.src.pixels, plan.dst.pixels, a * plan.mask.alpha)
        assert np.array_equal(frame_at(plan, i).pixels, expected)


def test_commit_dimension_mismatch():
    rng = np.random.default_rng(11)
    with pytest.raises(ValueError):
        commit(_rand_image(rng, 32, 32), _rand_image(rng, 16, 16), AttentionMask.zeros(32, 32))


# ---------------------------------------------------------------------------
# image_hash


def test_hash_of_single_black_pixel():
    img = Image(pixels=np.zeros((1, 1, 3), dtype=np.uint8))
    expected = hashlib.sha256(struct.pack(">II", 1, 1) + b"\x00\x00\x00").hexdigest()
    assert image_hash(img) == expected
    assert len(image_hash(img)) == 64


def test_hash_stable_and_sensitive():
    rng = np.random.default_rng(12)
    img = _rand_image(rng)
    assert image_hash(img) == image_hash(Image(pixels=img.pixels.copy()))
    tweaked = img.pixels.copy()
    tweaked[5, 5, 1] ^= 1
    assert image_hash(Image(pixels=tweaked)) != image_hash(img)


def test_hash_distinguishes_shape():
    flat = np.zeros((2, 8, 3), dtype=np.uint8)
    tall = np.zeros((8, 2, 3), dtype=np.uint8)
    assert image_hash(Image(pixels=flat)) != image_hash(Image(pixels=tall))
