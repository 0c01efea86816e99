import numpy as np
import pytest

from vqvsc.channel import ChannelModel, apply_channel, awgn, derive_seed, draw_taps, multipath
from vqvsc.exceptions import BadProfile, EmptyInput


def _signal(n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)


def test_high_snr_awgn():
    x = _signal()
    y = awgn(x, 100.0, seed=1)
    assert np.abs(y - x).max() < 1e-3 * np.sqrt(np.mean(np.abs(x) ** 2))


def test_measured_snr():
    x = _signal(1_000_000) * 3.0
    y = awgn(x, 7.0, seed=2)
    snr = 10 * np.log10(np.mean(np.abs(x) ** 2) / np.mean(np.abs(y - x) ** 2))
    assert abs(snr - 7.0) < 0.1


def test_determinism():
    x = _signal()
    m = ChannelModel("multipath", snr_db=5.0, seed=9)
    a, ta = apply_channel(x, m)
    b, tb = apply_channel(x, m)
    assert a.tobytes() == b.tobytes() and ta.tobytes() == tb.tobytes()
    c, _ = apply_channel(x, m.with_seed(10))
    assert not np.array_equal(a, c)


def test_tap_power_normalised():
    m = ChannelModel()
    assert m.tap_powers().sum() == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    taps = np.array([draw_taps(m, rng) for _ in range(10_000)])
    assert np.mean(np.sum(np.abs(taps) ** 2, axis=1)) == pytest.approx(1.0, rel=0.02)
    np.testing.assert_allclose(np.mean(np.abs(taps) ** 2, axis=0), m.tap_powers(), rtol=0.05)


def test_single_tap_is_flat_fading():
    x = _signal(1000)
    m = ChannelModel("multipath", delays=(0,), powers_db=(0.0,), snr_db=100.0, seed=4)
    y, taps = multipath(x, m)
    assert taps.size == 1
    np.testing.assert_allclose(y, taps[0] * x, atol=1e-3 * abs(taps[0]))


def test_bypass_is_identity():
    x = _signal(100)
    y, _ = apply_channel(x, ChannelModel("bypass"))
    np.testing.assert_array_equal(x, y)


def test_errors():
    with pytest.raises(BadProfile):
        ChannelModel("rayleigh")
    with pytest.raises(BadProfile):
        ChannelModel(delays=(0, 1), powers_db=(0.0,))
    with pytest.raises(BadProfile):
        ChannelModel(delays=(-1,), powers_db=(0.0,))
    with pytest.raises(EmptyInput):
        awgn(np.zeros(0), 5.0, 0)


def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert len({derive_seed(1, k) for k in range(100)}) == 100
    assert derive_seed(1, 2) != derive_seed(2, 1)
