"""Gray-mapped QPSK / 16-QAM with max-log soft demapping."""

import numpy as np

from ..exceptions import BadConfig, BadLength, NonPositiveNoise
from ..validation import check_bits

LLR_CLIP = 30.0
BITS_PER_SYMBOL = {"qpsk": 2, "qam16": 4}

# per-axis Gray levels for 16-QAM, indexed by the two axis bits (b_hi, b_lo)
_QAM16_LEVELS = {(0, 0): 3.0, (0, 1): 1.0, (1, 1): -1.0, (1, 0): -3.0}


def _kind(kind):
    key = str(kind).lower()
    if key not in BITS_PER_SYMBOL:
        raise BadConfig(f"unknown modulation {kind!r}; expected one of {tuple(BITS_PER_SYMBOL)}")
    return key


def bits_per_symbol(kind):
    return BITS_PER_SYMBOL[_kind(kind)]


def constellation(kind):
    """All points, indexed by the integer whose MSB is the first mapped bit."""
    k = bits_per_symbol(kind)
    patterns = ((np.arange(1 << k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    return map_symbols(patterns.ravel(), kind), patterns


def map_symbols(bits, kind):
    kind = _kind(kind)
    k = BITS_PER_SYMBOL[kind]
    b = check_bits(bits, multiple=k).reshape(-1, k).astype(np.float64)
    if kind == "qpsk":
        return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2.0)
    # 3 - 2*b_lo flips sign for b_hi: 00->3, 01->1, 11->-1, 10->-3
    i = (1 - 2 * b[:, 0]) * (3 - 2 * b[:, 1])
    q = (1 - 2 * b[:, 2]) * (3 - 2 * b[:, 3])
    return (i + 1j * q) / np.sqrt(10.0)


def demap_llr(symbols, kind, noise_var, gains=None):
    """Max-log LLRs (positive favours 0) for equalised symbols.

    ``noise_var`` is the complex noise variance E|n|^2 before equalisation;
    the effective variance of symbol ``i`` is ``noise_var / |gains[i]|^2``.
    A zero gain yields zero LLRs.
    """
    if noise_var <= 0:
        raise NonPositiveNoise("noise variance must be positive")
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    gains = np.ones_like(symbols) if gains is None else np.asarray(gains, dtype=np.complex128).ravel()
    if gains.size != symbols.size:
        raise BadLength("gains and symbols differ in length")
    points, patterns = constellation(kind)
    d2 = np.abs(symbols[:, None] - points[None, :]) ** 2
    weight = np.abs(gains) ** 2 / noise_var
    k = patterns.shape[1]
    llr = np.empty((symbols.size, k))
    for j in range(k):
        zero = patterns[:, j] == 0
        llr[:, j] = d2[:, ~zero].min(axis=1) - d2[:, zero].min(axis=1)
    llr *= weight[:, None]
    return np.clip(np.nan_to_num(llr), -LLR_CLIP, LLR_CLIP).ravel()


def hard_demap(symbols, kind):
    """Nearest-point bit decisions."""
    points, patterns = constellation(kind)
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    nearest = np.argmin(np.abs(symbols[:, None] - points[None, :]), axis=1)
    return patterns[nearest].ravel()
