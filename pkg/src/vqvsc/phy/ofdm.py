"""64-bin OFDM with cyclic prefix, comb pilots and a known preamble.

Subcarrier ``k`` in -32..31 lives in FFT bin ``k mod 64``. Data occupy the 48
subcarriers in -26..26 other than DC and the pilots at -21, -7, 7, 21, in
ascending order. Pilots carry +1, +1, +1, -1. Every packet starts with one
preamble symbol whose 64 bins all carry a known BPSK value (see
:data:`PREAMBLE`). Transforms are orthonormal.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..exceptions import BadLength, ZeroReference

# bit k of this constant chooses the sign of preamble bin k (1 -> -1)
PREAMBLE_SEED = 0xA5C396E17B2DF048
PREAMBLE = np.array([1.0 - 2.0 * ((PREAMBLE_SEED >> k) & 1) for k in range(64)], dtype=np.complex128)
PILOT_VALUES = np.array([1.0, 1.0, 1.0, -1.0], dtype=np.complex128)
FLAG_THRESHOLD = 1e-6


@dataclass(frozen=True)
class OfdmConfig:
    fft_size: int = 64
    cp_len: int = 16
    pilot_carriers: tuple = (-21, -7, 7, 21)
    used_edge: int = 26

    @property
    def symbol_len(self):
        return self.fft_size + self.cp_len

    @property
    def pilot_bins(self):
        return np.array([k % self.fft_size for k in self.pilot_carriers])

    @property
    def data_bins(self):
        carriers = [
            k
            for k in range(-self.used_edge, self.used_edge + 1)
            if k != 0 and k not in self.pilot_carriers
        ]
        return np.array([k % self.fft_size for k in carriers])

    @property
    def n_data(self):
        return len(self.data_bins)

    @property
    def null_bins(self):
        used = set(self.data_bins) | set(self.pilot_bins)
        return np.array([b for b in range(self.fft_size) if b not in used])


class Demodulated(NamedTuple):
    data: np.ndarray
    pilots: np.ndarray
    preamble: np.ndarray


def _add_cp(time, cfg):
    return np.concatenate([time[..., -cfg.cp_len :], time], axis=-1)


def ofdm_modulate(symbols, cfg=None):
    """Data symbols (multiple of 48) -> time samples, preamble first."""
    cfg = cfg or OfdmConfig()
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    if symbols.size % cfg.n_data:
        raise BadLength(f"{symbols.size} symbols is not a multiple of {cfg.n_data}")
    n_sym = symbols.size // cfg.n_data
    grid = np.zeros((n_sym + 1, cfg.fft_size), dtype=np.complex128)
    grid[0] = PREAMBLE[: cfg.fft_size]
    grid[1:, cfg.data_bins] = symbols.reshape(n_sym, cfg.n_data)
    grid[1:, cfg.pilot_bins] = PILOT_VALUES
    return _add_cp(np.fft.ifft(grid, norm="ortho"), cfg).ravel()


def ofdm_demodulate(samples, cfg=None):
    """Time samples -> (data bins, pilot bins, preamble bins)."""
    cfg = cfg or OfdmConfig()
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    if samples.size == 0 or samples.size % cfg.symbol_len:
        raise BadLength(f"{samples.size} samples is not a positive multiple of {cfg.symbol_len}")
    blocks = samples.reshape(-1, cfg.symbol_len)[:, cfg.cp_len :]
    bins = np.fft.fft(blocks, norm="ortho")
    return Demodulated(bins[1:, cfg.data_bins], bins[1:, cfg.pilot_bins], bins[0])


def estimate_channel_ls(rx_preamble, tx_preamble=None):
    """Per-bin least-squares gain from one known symbol."""
    tx = PREAMBLE if tx_preamble is None else np.asarray(tx_preamble, dtype=np.complex128)
    rx = np.asarray(rx_preamble, dtype=np.complex128)
    if rx.shape != tx.shape:
        raise BadLength("received and reference preambles differ in length")
    if np.any(tx == 0):
        raise ZeroReference("reference preamble has an empty bin")
    return rx / tx


def smooth_channel_estimate(gains, max_delay):
    """Zero the impulse response beyond ``max_delay`` samples.

    The cyclic prefix bounds the useful delay spread, so taps past it are
    pure estimation noise; dropping them cuts the LS noise by ``max_delay/fft``.
    """
    gains = np.asarray(gains, dtype=np.complex128)
    taps = np.fft.ifft(gains)
    taps[max_delay:] = 0.0
    return np.fft.fft(taps)


def equalize(data_bins, gains):
    """Zero-forcing equalisation; returns ``(symbols, flagged)``.

    Bins with ``|gain| < 1e-6`` are flagged and set to zero.
    """
    data_bins = np.asarray(data_bins, dtype=np.complex128)
    gains = np.broadcast_to(np.asarray(gains, dtype=np.complex128), data_bins.shape)
    flagged = np.abs(gains) < FLAG_THRESHOLD
    safe = np.where(flagged, 1.0, gains)
    return np.where(flagged, 0.0, data_bins / safe), flagged
