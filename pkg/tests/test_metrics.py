import math

import numpy as np
import pytest

from vqvsc import metrics
from vqvsc.exceptions import DimensionMismatch, TooSmall


def _const(value, h=32, w=32):
    return np.full((3, h, w), value, dtype=np.uint8)


def test_ssim_identity(rng):
    x = rng.integers(0, 256, (3, 32, 32), dtype=np.uint8)
    assert metrics.ssim(x, x) == pytest.approx(1.0, abs=1e-9)


def test_ssim_constant_images():
    # zero variance: only the luminance term survives
    expected = (2 * 100 * 110 + 6.5025) / (100**2 + 110**2 + 6.5025)
    assert expected == pytest.approx(0.99548, abs=1e-4)
    assert metrics.ssim(_const(100), _const(110)) == pytest.approx(expected, abs=1e-9)


def test_ssim_symmetric(rng):
    a = rng.integers(0, 256, (3, 24, 24), dtype=np.uint8)
    b = rng.integers(0, 256, (3, 24, 24), dtype=np.uint8)
    assert metrics.ssim(a, b) == metrics.ssim(b, a)


def test_ms_ssim_identity_and_symmetry(rng):
    a = rng.integers(0, 256, (3, 64, 64), dtype=np.uint8)
    b = rng.integers(0, 256, (3, 64, 64), dtype=np.uint8)
    assert metrics.ms_ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    assert metrics.ms_ssim(a, b) == metrics.ms_ssim(b, a)


def test_ms_ssim_noise_lowers_score():
    rng = np.random.default_rng(3)
    x = rng.integers(30, 220, (3, 64, 64)).astype(np.uint8)
    noisy = np.clip(x.astype(int) + rng.integers(-20, 21, x.shape), 0, 255).astype(np.uint8)
    assert metrics.ms_ssim(x, noisy) < 1.0


@pytest.mark.parametrize("size,scales", [(64, 3), (176, 5), (200, 5), (22, 2), (11, 1)])
def test_scale_count(size, scales):
    assert metrics.ms_ssim_scales(size, size) == scales


def test_ms_ssim_too_small():
    with pytest.raises(TooSmall):
        metrics.ms_ssim(_const(1, 8, 8), _const(1, 8, 8))


def test_psnr_cases():
    x = _const(7, 2, 2)
    assert metrics.psnr(x, x) == math.inf
    assert metrics.psnr(_const(0, 2, 2), _const(255, 2, 2)) == pytest.approx(0.0)
    y = x.copy()
    y[0, 0, 0] = 7 + 248
    z = np.zeros((3, 2, 2), np.uint8)
    w = z.copy()
    w[1, 1, 1] = 255
    # MSE = 255^2 / 12
    assert metrics.psnr(z, w) == pytest.approx(10 * math.log10(12), abs=1e-12)
    assert metrics.psnr(z, w) == pytest.approx(10.79, abs=5e-3)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        metrics.psnr(_const(0, 2, 2), _const(0, 2, 4))
    with pytest.raises(DimensionMismatch):
        metrics.ssim(_const(0, 16, 16), _const(0, 16, 20))
