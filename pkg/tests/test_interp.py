import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqvsc.exceptions import BadBlockSize, BadConfig, ZeroGap
from vqvsc.interp import Interpolator, estimate_block_motion, interpolate_between, reconstruct_midframe

FLOW = Interpolator("block_flow", block_size=8, search_range=4)


def _const(v, h=16, w=16):
    return np.full((3, h, w), v, np.uint8)


def _textured(seed=0, h=32, w=32):
    return np.random.default_rng(seed).integers(0, 256, (3, h, w), dtype=np.uint8)


def test_identical_frames_zero_motion():
    a = _textured()
    assert not estimate_block_motion(a, a, FLOW).any()


def test_shift_right_by_two():
    a = _textured(1)
    b = np.empty_like(a)
    b[:, :, 2:] = a[:, :, :-2]
    b[:, :, :2] = a[:, :, :1]
    field = estimate_block_motion(a, b, FLOW)
    # brute-force SAD oracle on the interior blocks
    interior = field[1:-1, :-1]
    assert np.all(interior[..., 0] == 2)
    assert np.all(interior[..., 1] == 0)


def test_search_range_zero():
    a, b = _textured(2), _textured(3)
    assert not estimate_block_motion(a, b, Interpolator("block_flow", 8, 0)).any()


def test_motion_bounded_by_search_range():
    field = estimate_block_motion(_textured(4), _textured(5), Interpolator("block_flow", 8, 2))
    assert np.abs(field).max() <= 2


@pytest.mark.parametrize("kind", ["hold", "linear_blend", "block_flow"])
def test_equal_endpoints(kind):
    a = _textured(6)
    for f in interpolate_between(a, a, 3, Interpolator(kind)):
        np.testing.assert_array_equal(f, a)


def test_linear_blend_values():
    lb = Interpolator("linear_blend")
    assert np.all(reconstruct_midframe(_const(0), _const(100), lb) == 50)
    frames = interpolate_between(_const(0), _const(100), 3, lb)
    assert [int(f[0, 0, 0]) for f in frames] == [25, 50, 75]


def test_hold_repeats_first():
    frames = interpolate_between(_const(10), _const(200), 2, Interpolator("hold"))
    assert all(np.all(f == 10) for f in frames)


def test_errors():
    with pytest.raises(ZeroGap):
        interpolate_between(_const(0), _const(1), 0, Interpolator())
    with pytest.raises(BadBlockSize):
        estimate_block_motion(_const(0, 12, 12), _const(0, 12, 12), FLOW)
    with pytest.raises(BadConfig):
        Interpolator("optical")
    with pytest.raises(BadConfig):
        Interpolator("block_flow", search_range=-1)


@settings(max_examples=25, deadline=None)
@given(lo=st.integers(0, 255), hi=st.integers(0, 255), g=st.integers(1, 5))
def test_blend_stays_between_endpoints(lo, hi, g):
    for f in interpolate_between(_const(lo), _const(hi), g, Interpolator("linear_blend")):
        assert min(lo, hi) <= f.min() and f.max() <= max(lo, hi)
