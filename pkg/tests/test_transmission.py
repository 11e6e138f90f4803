"""Lower bound, patch initializers, data weights, and the dark-pixel mask."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hazetools.image import AirLight, ImageRgb, ScalarMap
from hazetools.transmission import (
    Initializer,
    dark_pixel_mask,
    initial_transmission,
    lower_bound,
    weight_map,
)

from oracles import dilate_brute, erode_brute


# --- lower bound -------------------------------------------------------------


def test_lower_bound_hand_values():
    img = ImageRgb(np.array([[
        [0.2, 0.4, 0.6],   # ratios (0.4, 0.5, 0.6) -> b = 0.6
        [0.5, 0.8, 1.0],   # equals the air-light   -> b = 0.0
        [1.0, 1.0, 1.0],   # brighter than air-light -> clamped to 0
        [0.0, 0.0, 0.0],   # black                   -> b = 1.0
    ]]))
    air = AirLight((0.5, 0.8, 1.0))
    np.testing.assert_allclose(lower_bound(img, air).data, [[0.6, 0.0, 0.0, 1.0]])


def test_lower_bound_range(rng):
    img = ImageRgb(rng.random((8, 8, 3)))
    b = lower_bound(img, AirLight((0.9, 0.95, 1.0))).data
    assert b.min() >= 0.0 and b.max() <= 1.0


# --- initializers --------------------------------------------------------------


def test_initializer_validation():
    with pytest.raises(ValueError, match="kind"):
        Initializer("median", 5)
    with pytest.raises(ValueError, match="radius"):
        Initializer("dilation", 0)
    assert Initializer().kind == "dilation" and Initializer().radius == 25


@pytest.mark.parametrize("radius", [1, 2, 4])
def test_dilation_initializer_matches_brute(radius, rng):
    b = ScalarMap(rng.random((10, 9)))
    got = initial_transmission(b, Initializer("dilation", radius))
    np.testing.assert_array_equal(got.data, dilate_brute(b.data, radius))


@pytest.mark.parametrize("radius", [1, 3])
def test_opening_initializer_matches_brute(radius, rng):
    b = ScalarMap(rng.random((9, 11)))
    got = initial_transmission(b, Initializer("opening", radius))
    np.testing.assert_array_equal(
        got.data, erode_brute(dilate_brute(b.data, radius), radius))


@given(hnp.arrays(np.float64, (6, 6), elements=st.floats(0, 1)),
       st.sampled_from(["dilation", "opening"]), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_initializers_dominate_bound(b, kind, radius):
    est = initial_transmission(ScalarMap(b), Initializer(kind, radius))
    assert np.all(est.data >= b - 1e-12)


# --- weights -------------------------------------------------------------------


def test_weight_map_frozen_two_pixel_example():
    # gaps (floored 1e-3, 0.1) -> raw (1e6, 1e2); normalized by their mean
    t_init = ScalarMap(np.array([[0.5, 0.5]]))
    bound = ScalarMap(np.array([[0.5, 0.4]]))
    w = weight_map(t_init, bound, gap_floor=1e-3).data
    raw0 = 1.0 / (1e-3 * 1e-3)
    raw1 = 1.0 / (0.1 * 0.1)
    np.testing.assert_allclose(
        w, [[2.0 * raw0 / (raw0 + raw1), 2.0 * raw1 / (raw0 + raw1)]], rtol=1e-15)
    np.testing.assert_allclose(w, [[1.9998, 1.9998e-4]], rtol=1e-3)


def test_weight_map_mean_is_one(rng):
    t_init = ScalarMap(rng.random((7, 7)) * 0.5 + 0.5)
    bound = ScalarMap(rng.random((7, 7)) * 0.5)
    assert weight_map(t_init, bound).data.mean() == pytest.approx(1.0, rel=1e-12)


def test_weight_map_scale_invariance():
    gaps = np.array([[0.01, 0.02], [0.05, 0.4]])
    bound = ScalarMap(np.zeros((2, 2)))
    w1 = weight_map(ScalarMap(gaps), bound).data
    w3 = weight_map(ScalarMap(gaps * 3.0), bound).data
    np.testing.assert_allclose(w3, w1, rtol=1e-12)


def test_weight_map_negative_gap_hits_floor():
    # t_init below the bound counts as a zero gap, same weight as an exact match
    t_init = ScalarMap(np.array([[0.3, 0.5, 0.5]]))
    bound = ScalarMap(np.array([[0.5, 0.5, 0.1]]))
    w = weight_map(t_init, bound).data
    assert w[0, 0] == w[0, 1] > w[0, 2]


def test_weight_map_validation():
    m = ScalarMap(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="gap_floor"):
        weight_map(m, m, gap_floor=0.0)
    with pytest.raises(ValueError, match="dimensions"):
        weight_map(m, ScalarMap(np.zeros((3, 2))))


def test_weight_map_constant_gap_is_all_ones():
    t_init = ScalarMap(np.full((3, 3), 0.8))
    bound = ScalarMap(np.full((3, 3), 0.3))
    np.testing.assert_array_equal(weight_map(t_init, bound).data, np.ones((3, 3)))


# --- dark-pixel mask -------------------------------------------------------------


def test_dark_pixel_mask_spike():
    b = np.full((5, 5), 0.2)
    b[2, 2] = 0.8
    bound = ScalarMap(b)
    t_init = initial_transmission(bound, Initializer("dilation", 1))
    mask = dark_pixel_mask(t_init, bound, tol=0.0)
    expected = np.ones((5, 5), dtype=bool)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        expected[2 + dy, 2 + dx] = False  # arms of the plus sit 0.6 above b
    np.testing.assert_array_equal(mask, expected)
    assert dark_pixel_mask(t_init, bound, tol=np.inf).all()


def test_dark_pixel_mask_shape_check():
    with pytest.raises(ValueError, match="dimensions"):
        dark_pixel_mask(ScalarMap(np.zeros((2, 2))), ScalarMap(np.zeros((2, 3))))
