"""Synthetic scenes, the haze model, and the MSE/SSIM metrics."""

import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity as sk_ssim

from hazetools.image import AirLight, ImageRgb, ScalarMap
from hazetools.synth import (
    SCENE_KINDS,
    SceneSpec,
    holes_mask,
    load_scene,
    make_test_scene,
    mse,
    save_scene,
    ssim,
    synthesize_haze,
    transmission_from_depth,
)

_LUMA = np.array([0.299, 0.587, 0.114])


# --- haze model ------------------------------------------------------------------


def test_transmission_frozen_values():
    depth = ScalarMap(np.array([[0.0, math.log(2.0) / 0.8], [1.0, 2.0]]))
    t = transmission_from_depth(depth, 0.8).data
    assert t[0, 0] == 1.0
    assert t[0, 1] == pytest.approx(0.5, rel=1e-15)
    assert t[1, 0] == pytest.approx(math.exp(-0.8), rel=1e-15)
    assert t[1, 1] == pytest.approx(math.exp(-1.6), rel=1e-15)


def test_synthesis_identity(rng):
    radiance = ImageRgb(rng.random((12, 12, 3)) * 0.8)
    depth = ScalarMap(rng.random((12, 12)) * 3.0)
    spec = SceneSpec(radiance=radiance, depth=depth, beta=0.7,
                     airlight=AirLight((0.9, 0.95, 1.0)))
    hazy, t = synthesize_haze(spec)
    want = (t.data[:, :, None] * radiance.data
            + (1.0 - t.data[:, :, None]) * spec.airlight.rgb)
    np.testing.assert_allclose(hazy.data, want, rtol=1e-12)
    assert hazy.data.min() >= 0.0 and hazy.data.max() <= 1.0


def test_scene_spec_validation():
    img = ImageRgb(np.full((4, 4, 3), 0.5))
    good = ScalarMap(np.ones((4, 4)))
    air = AirLight((0.9, 0.95, 1.0))
    with pytest.raises(ValueError, match="dimensions disagree"):
        SceneSpec(radiance=img, depth=ScalarMap(np.ones((5, 4))), beta=1.0, airlight=air)
    with pytest.raises(ValueError, match="beta"):
        SceneSpec(radiance=img, depth=good, beta=0.0, airlight=air)
    with pytest.raises(ValueError, match="nonnegative"):
        SceneSpec(radiance=img, depth=ScalarMap(-good.data), beta=1.0, airlight=air)


# --- benchmark scenes ----------------------------------------------------------------


def test_scene_determinism():
    a = make_test_scene("steps", 32, seed=5)
    b = make_test_scene("steps", 32, seed=5)
    c = make_test_scene("steps", 32, seed=6)
    assert np.array_equal(a.radiance.data, b.radiance.data)
    assert np.array_equal(a.depth.data, b.depth.data)
    assert not np.array_equal(a.radiance.data, c.radiance.data)


@pytest.mark.parametrize("kind", SCENE_KINDS)
def test_scene_shapes_and_depth_layout(kind):
    spec = make_test_scene(kind, 48)
    assert spec.kind == kind
    assert spec.radiance.shape == (48, 48, 3)
    assert spec.depth.data.shape == (48, 48)
    levels = np.unique(spec.depth.data)
    if kind == "steps":
        np.testing.assert_array_equal(levels, [0.5, 1.0, 2.0])
    elif kind == "occluder":
        np.testing.assert_array_equal(levels, [0.2, 2.5])
    elif kind == "holes":
        np.testing.assert_array_equal(levels, [0.5, 2.5])
    else:
        assert levels.min() == 0.5 and levels.max() == 2.5
        rows = spec.depth.data[:, 0]
        assert np.all(np.diff(rows) >= 0.0)


def test_scene_size_and_kind_validation():
    with pytest.raises(ValueError, match="at least 16"):
        make_test_scene("steps", 15)
    with pytest.raises(ValueError, match="scene kind"):
        make_test_scene("fog", 32)


@pytest.mark.parametrize("kind", SCENE_KINDS)
def test_dark_texel_lattice(kind):
    # every lattice point carries one exactly-zero channel
    spec = make_test_scene(kind, 48)
    lattice = spec.radiance.data[3::6, 3::6, :]
    np.testing.assert_array_equal(lattice.min(axis=2), 0.0)


def test_holes_mask_selects_the_squares():
    size = 48
    spec = make_test_scene("holes", size)
    mask = holes_mask(size)
    side = max(4, size // 10)
    assert int(mask.sum()) == 3 * side * side
    assert np.all(spec.depth.data[mask] == 2.5)
    band = np.zeros_like(mask)
    band[size // 4 : (3 * size) // 4, :] = True
    assert not mask[~band].any()


def test_scene_roundtrip(tmp_path):
    spec = make_test_scene("occluder", 32, beta=0.6)
    path = tmp_path / "scene.json"
    save_scene(spec, path)
    back = load_scene(path)
    assert back.kind == "occluder"
    assert back.beta == 0.6
    np.testing.assert_array_equal(back.airlight.rgb, spec.airlight.rgb)
    dmax = spec.depth.data.max()
    assert np.abs(back.depth.data - spec.depth.data).max() <= 0.5 / 65535.0 * dmax + 1e-9
    assert np.abs(back.radiance.data - spec.radiance.data).max() <= 0.5 / 255.0 + 1e-12


# --- metrics -----------------------------------------------------------------------


def test_mse_frozen_and_containers(rng):
    a = np.zeros((4, 4))
    b = np.full((4, 4), 0.1)
    assert mse(a, b) == pytest.approx(0.01, rel=1e-12)
    assert mse(ScalarMap(a), ScalarMap(b)) == pytest.approx(0.01, rel=1e-12)
    img = ImageRgb(rng.random((4, 4, 3)))
    assert mse(img, img) == 0.0
    with pytest.raises(ValueError, match="shape mismatch"):
        mse(np.zeros((2, 2)), np.zeros((3, 3)))


def test_ssim_identical_is_exactly_one(rng):
    img = ImageRgb(rng.random((16, 16, 3)))
    assert ssim(img, img) == 1.0


def test_ssim_detects_distortion(rng):
    clean = rng.random((24, 24))
    noisy = np.clip(clean + rng.normal(0.0, 0.2, clean.shape), 0.0, 1.0)
    s = ssim(clean, noisy)
    assert s < 0.95
    assert ssim(clean, clean) > s


def test_ssim_minimum_size():
    with pytest.raises(ValueError, match="at least 11"):
        ssim(np.zeros((10, 12)), np.zeros((10, 12)))
    with pytest.raises(ValueError, match="shape mismatch"):
        ssim(np.zeros((12, 12)), np.zeros((12, 13)))


def test_ssim_matches_skimage(rng):
    a = rng.random((32, 32))
    b = np.clip(a + rng.normal(0.0, 0.1, a.shape), 0.0, 1.0)
    want = sk_ssim(a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                   use_sample_covariance=False, data_range=1.0)
    assert ssim(a, b) == pytest.approx(want, abs=1e-4)


def test_ssim_matches_skimage_on_scene():
    spec = make_test_scene("steps", 48)
    hazy, _ = synthesize_haze(spec)
    a = spec.radiance.data @ _LUMA
    b = hazy.data @ _LUMA
    want = sk_ssim(a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                   use_sample_covariance=False, data_range=1.0)
    assert ssim(spec.radiance, hazy) == pytest.approx(want, abs=1e-4)
