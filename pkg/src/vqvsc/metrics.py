"""SSIM, MS-SSIM and PSNR on plane-major RGB frames.

All metrics work in float64 on samples in ``[0, 255]`` and average per-plane
scores. Filtering uses an 11x11 Gaussian window (sigma 1.5) in "valid" mode.
"""

import numpy as np
from scipy.signal import convolve2d

from .exceptions import TooSmall
from .validation import check_frame_pair

DATA_RANGE = 255.0
C1 = (0.01 * DATA_RANGE) ** 2
C2 = (0.03 * DATA_RANGE) ** 2
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
MS_SSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])


def _gaussian_kernel(size=WINDOW_SIZE, sigma=WINDOW_SIGMA):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


_KERNEL = _gaussian_kernel()


def _filter(img):
    # separable valid-mode Gaussian
    out = convolve2d(img, _KERNEL[:, None], mode="valid")
    return convolve2d(out, _KERNEL[None, :], mode="valid")


def _ssim_components(x, y):
    """Mean luminance*cs and mean cs maps for one plane."""
    mu_x = _filter(x)
    mu_y = _filter(y)
    sxx = _filter(x * x) - mu_x**2
    syy = _filter(y * y) - mu_y**2
    sxy = _filter(x * y) - mu_x * mu_y
    cs_map = (2.0 * sxy + C2) / (sxx + syy + C2)
    lum_map = (2.0 * mu_x * mu_y + C1) / (mu_x**2 + mu_y**2 + C1)
    return float(np.mean(lum_map * cs_map)), float(np.mean(cs_map))


def _planes(a, b):
    a, b = check_frame_pair(a, b)
    if min(a.shape[1:]) < WINDOW_SIZE:
        raise TooSmall(f"frames must be at least {WINDOW_SIZE}x{WINDOW_SIZE}")
    return a.astype(np.float64), b.astype(np.float64)


def ssim(a, b):
    """Mean SSIM over the three colour planes."""
    a, b = _planes(a, b)
    return float(np.mean([_ssim_components(a[j], b[j])[0] for j in range(3)]))


def _downsample(img):
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    img = img[:h, :w]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def ms_ssim_scales(height, width, max_scales=len(MS_SSIM_WEIGHTS)):
    """Number of dyadic scales whose images still fit one SSIM window."""
    scales = 0
    h, w = height, width
    while scales < max_scales and min(h, w) >= WINDOW_SIZE:
        scales += 1
        h, w = h // 2, w // 2
    return scales


def ms_ssim(a, b):
    """Multi-scale SSIM with the standard five-scale weights.

    Frames too small for five scales use as many as fit, with the leading
    weights renormalised to sum to one. Negative contrast-structure terms are
    clipped at zero before exponentiation.
    """
    a, b = check_frame_pair(a, b)
    n_scales = ms_ssim_scales(a.shape[1], a.shape[2])
    if n_scales == 0:
        raise TooSmall(f"frames must be at least {WINDOW_SIZE}x{WINDOW_SIZE}")
    weights = MS_SSIM_WEIGHTS[:n_scales] / MS_SSIM_WEIGHTS[:n_scales].sum()
    scores = []
    for j in range(3):
        x = a[j].astype(np.float64)
        y = b[j].astype(np.float64)
        value = 1.0
        for s in range(n_scales):
            full, cs = _ssim_components(x, y)
            term = full if s == n_scales - 1 else cs
            value *= max(term, 0.0) ** weights[s]
            if s < n_scales - 1:
                x, y = _downsample(x), _downsample(y)
        scores.append(value)
    return float(np.mean(scores))


def mse(a, b):
    a, b = check_frame_pair(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a, b):
    err = mse(a, b)
    if err == 0.0:
        return float("inf")
    return float(10.0 * np.log10(DATA_RANGE**2 / err))
