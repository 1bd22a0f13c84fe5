from __future__ import annotations

import math

import numpy as np
import pytest

from gazeforge.gaze import Fixation
from gazeforge.heatmap import (
    AttentionMask,
    Heatmap,
    MaskParams,
    area_fraction,
    clip_to_area,
    decay,
    extract_mask,
    mask_hash,
    mask_to_u8,
    splat,
)

from .oracles import mask_support_ref, splat_ref


def _fix(cx, cy):
    return Fixation(cx=cx, cy=cy, start_ms=0, end_ms=200, n=10)


def _params(**kw):
    defaults = dict(sigma_px=8.0, decay_lambda=0.8, threshold_tau=0.5, dilation_px=0, feather_sigma_px=0.0)
    defaults.update(kw)
    return MaskParams(**defaults)


# ---------------------------------------------------------------------------
# splat


def test_splat_kernel_values():
    params = _params()
    heat = splat(Heatmap.zeros(128, 128), _fix(0.5, 0.5), params)  # center lands on pixel (64, 64)
    assert heat.values[64, 64] == 1.0
    assert heat.values[72, 64] == pytest.approx(math.exp(-0.5), abs=1e-9)
    assert heat.values[64, 72] == pytest.approx(math.exp(-0.5), abs=1e-9)


def test_splat_twice_same_centroid_is_clamped_double():
    params = _params()
    once = splat(Heatmap.zeros(128, 128), _fix(0.5, 0.5), params)
    twice = splat(once, _fix(0.5, 0.5), params)
    assert np.array_equal(twice.values, np.minimum(1.0, 2.0 * once.values))


def test_splat_matches_dense_oracle():
    params = _params()
    heat = Heatmap.zeros(128, 128)
    centroids = [(32.0, 64.0), (96.0, 64.0)]
    for cx, cy in centroids:
        heat = splat(heat, _fix(cx / 128, cy / 128), params)
    expected = splat_ref(128, 128, centroids, params.sigma_px)
    assert np.abs(heat.values - expected).max() <= 1e-6


def test_splat_commutes_exactly():
    params = _params(sigma_px=12.0)
    rng = np.random.default_rng(3)
    base = Heatmap.zeros(96, 96)
    for _ in range(3):  # a realistic, already-quantized starting field
        base = splat(base, _fix(float(rng.random()), float(rng.random())), params)
    base = decay(base, 700, params)
    a = _fix(0.3, 0.4)
    b = _fix(0.42, 0.47)
    ab = splat(splat(base, a, params), b, params)
    ba = splat(splat(base, b, params), a, params)
    assert np.array_equal(ab.values, ba.values)


def test_splat_never_decreases_and_stays_in_range():
    params = _params(sigma_px=20.0)
    rng = np.random.default_rng(5)
    heat = Heatmap.zeros(64, 64)
    for _ in range(12):
        nxt = splat(heat, _fix(float(rng.random()), float(rng.random())), params)
        assert (nxt.values >= heat.values).all()
        assert nxt.values.min() >= 0.0 and nxt.values.max() <= 1.0
        heat = nxt


# ---------------------------------------------------------------------------
# decay


def test_decay_zero_dt_is_identity():
    params = _params()
    heat = splat(Heatmap.zeros(64, 64), _fix(0.5, 0.5), params)
    assert np.array_equal(decay(heat, 0, params).values, heat.values)


def test_decay_direct_value():
    params = _params(decay_lambda=0.8)
    heat = Heatmap(values=np.ones((4, 4), dtype=np.float64))
    out = decay(heat, 1000, params)
    assert out.values[0, 0] == pytest.approx(math.exp(-0.8), abs=1e-9)


def test_decay_semigroup():
    params = _params(decay_lambda=0.8)
    rng = np.random.default_rng(11)
    heat = Heatmap(values=np.rint(rng.random((32, 32)) * 2.0**36) / 2.0**36)
    once = decay(heat, 1000, params)
    twice = decay(decay(heat, 500, params), 500, params)
    assert np.abs(once.values - twice.values).max() <= 1e-9


def test_decay_never_increases():
    params = _params(decay_lambda=0.3)
    rng = np.random.default_rng(13)
    heat = Heatmap(values=np.rint(rng.random((32, 32)) * 2.0**36) / 2.0**36)
    out = decay(heat, 37, params)
    assert (out.values <= heat.values).all()
    assert out.values.min() >= 0.0


def test_decay_rejects_negative_dt():
    with pytest.raises(ValueError):
        decay(Heatmap.zeros(4, 4), -1, _params())


# ---------------------------------------------------------------------------
# extract_mask


def test_extract_all_zero_heatmap():
    mask = extract_mask(Heatmap.zeros(64, 64), _params())
    assert not mask.alpha.any()
    assert not mask.binary_support.any()


def test_extract_all_one_heatmap():
    params = _params(dilation_px=4, feather_sigma_px=3.0)
    heat = Heatmap(values=np.ones((64, 64), dtype=np.float64))
    mask = extract_mask(heat, params)
    assert (mask.alpha == 1.0).all()


def test_extract_single_splat_disk_membership():
    params = _params()  # sigma 8, tau 0.5, no dilation, no feather
    heat = splat(Heatmap.zeros(128, 128), _fix(0.5, 0.5), params)
    mask = extract_mask(heat, params)
    ys = np.arange(128)[:, None]
    xs = np.arange(128)[None, :]
    kernel = np.exp(-((xs - 64.0) ** 2 + (ys - 64.0) ** 2) / (2.0 * 64.0))
    expected = kernel >= 0.5  # disk of radius 8 * sqrt(2 ln 2) ~ 9.42 px
    assert np.array_equal(mask.binary_support, expected)
    assert np.array_equal(mask.alpha > 0, expected)
    radius = 8.0 * math.sqrt(2.0 * math.log(2.0))
    assert expected[64, 64 + int(radius)] and not expected[64, 64 + int(radius) + 1]


def test_extract_dilated_feathered_support_matches_oracle():
    params = _params(sigma_px=4.0, dilation_px=3, feather_sigma_px=1.5)
    heat = splat(Heatmap.zeros(48, 48), _fix(0.5, 0.5), params)
    heat = splat(heat, _fix(0.3, 0.6), params)
    mask = extract_mask(heat, params)
    binary = heat.values >= params.threshold_tau
    expected = mask_support_ref(binary, params.dilation_px, params.feather_sigma_px)
    assert np.array_equal(mask.binary_support, expected)


def test_extract_feather_interior_is_exactly_one():
    params = _params(sigma_px=10.0, dilation_px=2, feather_sigma_px=2.0)
    heat = splat(Heatmap.zeros(96, 96), _fix(0.5, 0.5), params)
    mask = extract_mask(heat, params)
    blur_r = int(math.ceil(3 * params.feather_sigma_px))
    binary = heat.values >= params.threshold_tau
    ys, xs = np.nonzero(binary)
    cy, cx = int(ys.mean()), int(xs.mean())
    assert mask.alpha[cy, cx] == 1.0  # deep interior, far beyond the kernel radius
    assert mask.alpha.min() >= 0.0 and mask.alpha.max() <= 1.0
    # off-support pixels beyond dilation + blur radius stay exactly zero
    assert mask.alpha[0, 0] == 0.0
    # boundary ring is feathered: strictly between 0 and 1 somewhere
    ring = mask.alpha[(mask.alpha > 0) & (mask.alpha < 1)]
    assert ring.size > 0


def test_mask_locality_radius():
    # support stays within the analytic radius around the splatted centroids
    params = _params(sigma_px=6.0, dilation_px=2, feather_sigma_px=1.0)
    rng = np.random.default_rng(17)
    centroids = [(float(rng.uniform(0.2, 0.8)), float(rng.uniform(0.2, 0.8))) for _ in range(4)]
    heat = Heatmap.zeros(96, 96)
    for cx, cy in centroids:
        heat = splat(heat, _fix(cx, cy), params)
    mask = extract_mask(heat, params)
    n = len(centroids)
    tau_slack = params.threshold_tau - 1e-9
    blur_r = math.ceil(3 * params.feather_sigma_px)
    radius = (
        params.sigma_px * math.sqrt(2.0 * math.log(n / tau_slack))
        + params.dilation_px
        + math.sqrt(2.0) * blur_r
    )
    ys, xs = np.nonzero(mask.binary_support)
    for y, x in zip(ys, xs):
        dmin = min(math.hypot(x - cx * 96, y - cy * 96) for cx, cy in centroids)
        assert dmin <= radius + 1e-9


def test_single_splat_locality_matches_spec_radius():
    params = _params(sigma_px=8.0, dilation_px=3, feather_sigma_px=1.0)
    heat = splat(Heatmap.zeros(128, 128), _fix(0.5, 0.5), params)
    mask = extract_mask(heat, params)
    # single splat: sigma * sqrt(2 ln(1/tau)) + dilation + 3 * feather (plus
    # sqrt(2) for the square blur footprint and the integer kernel radius)
    radius = (
        params.sigma_px * math.sqrt(2.0 * math.log(1.0 / params.threshold_tau))
        + params.dilation_px
        + math.sqrt(2.0) * math.ceil(3.0 * params.feather_sigma_px)
    )
    ys, xs = np.nonzero(mask.binary_support)
    for y, x in zip(ys, xs):
        assert math.hypot(x - 64.0, y - 64.0) <= radius + 1e-9


# ---------------------------------------------------------------------------
# area_fraction / clipping


def test_area_fraction_empty_and_full():
    assert area_fraction(AttentionMask.zeros(32, 32)) == 0.0
    assert area_fraction(AttentionMask.full(32, 32)) == 1.0


def test_area_fraction_half_plane():
    alpha = np.zeros((128, 128), dtype=np.float64)
    alpha[:, :64] = 1.0
    assert area_fraction(AttentionMask(alpha=alpha)) == 0.5


def test_clip_to_area_keeps_top_alpha():
    alpha = np.linspace(0, 1, 64 * 64, dtype=np.float64).reshape(64, 64)
    mask = AttentionMask(alpha=alpha)
    clipped = clip_to_area(mask, 0.1)
    assert area_fraction(clipped) <= 0.1
    kept = clipped.alpha > 0
    # the kept pixels are exactly the highest-alpha ones
    assert kept.sum() == int(0.1 * 64 * 64)
    assert clipped.alpha[kept].min() >= alpha[~kept].max()


def test_clip_to_area_noop_when_small():
    alpha = np.zeros((64, 64), dtype=np.float64)
    alpha[0, 0] = 1.0
    mask = AttentionMask(alpha=alpha)
    assert clip_to_area(mask, 0.2) is mask


# ---------------------------------------------------------------------------
# exports


def test_mask_u8_rounding_half_away():
    alpha = np.array([[0.0, 0.5, 1.0, 63.5 / 255.0]], dtype=np.float64)
    u8 = mask_to_u8(AttentionMask(alpha=alpha))
    assert u8.tolist() == [[0, 128, 255, 64]]  # halves round away from zero


def test_mask_hash_stable_and_sensitive():
    alpha = np.zeros((8, 8), dtype=np.float64)
    m1 = AttentionMask(alpha=alpha.copy())
    assert mask_hash(m1) == mask_hash(AttentionMask(alpha=alpha.copy()))
    alpha[3, 3] = 1.0
    assert mask_hash(AttentionMask(alpha=alpha)) != mask_hash(m1)
