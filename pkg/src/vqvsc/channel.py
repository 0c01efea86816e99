"""Seeded AWGN and block-fading multipath channels."""

from dataclasses import dataclass

import numpy as np

from .exceptions import BadProfile, EmptyInput


def derive_seed(seed, *keys):
    """Deterministic 64-bit child seed for ``(seed, *keys)``."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ChannelModel:
    """Channel variant, tap profile, SNR (dB) and seed.

    ``kind`` is ``"awgn"``, ``"multipath"`` or ``"bypass"`` (noise-free
    identity). ``snr_db = inf`` disables noise.
    """

    kind: str = "multipath"
    delays: tuple = (0, 1, 2)
    powers_db: tuple = (0.0, -3.0, -6.0)
    snr_db: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("awgn", "multipath", "bypass"):
            raise BadProfile(f"unknown channel kind {self.kind!r}")
        if len(self.delays) != len(self.powers_db) or not self.delays:
            raise BadProfile("delays and powers must be non-empty and equally long")
        if any(d < 0 for d in self.delays):
            raise BadProfile("tap delays must be >= 0")
        if np.isnan(self.snr_db):
            raise BadProfile("SNR must not be NaN")

    def tap_powers(self):
        p = np.power(10.0, np.asarray(self.powers_db, dtype=np.float64) / 10.0)
        total = p.sum()
        if not np.isfinite(total) or total <= 0:
            raise BadProfile("tap powers cannot be normalised")
        return p / total

    def with_seed(self, seed):
        return ChannelModel(self.kind, self.delays, self.powers_db, self.snr_db, seed)


def _complex_normal(rng, shape, var):
    return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _noise(rng, y, snr_db):
    if np.isinf(snr_db) and snr_db > 0:
        return y
    power = float(np.mean(np.abs(y) ** 2))
    return y + _complex_normal(rng, y.shape, power * 10.0 ** (-snr_db / 10.0))


def awgn(x, snr_db, seed):
    """Add circular Gaussian noise at ``snr_db`` below the measured power of ``x``."""
    x = np.asarray(x, dtype=np.complex128)
    if x.size == 0:
        raise EmptyInput("no samples")
    return _noise(np.random.default_rng(seed), x, snr_db)


def draw_taps(model: ChannelModel, rng):
    powers = model.tap_powers()
    taps = np.zeros(max(model.delays) + 1, dtype=np.complex128)
    for d, p in zip(model.delays, powers):
        taps[d] += _complex_normal(rng, (), p)
    return taps


def multipath(x, model: ChannelModel):
    """Block-fading tapped delay line plus AWGN; returns ``(y, taps)``.

    Taps are drawn once from the model's seed and held for the whole input.
    Noise is scaled against the received signal power.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.size == 0:
        raise EmptyInput("no samples")
    rng = np.random.default_rng(model.seed)
    taps = draw_taps(model, rng)
    y = np.convolve(x, taps)[: x.size]
    return _noise(rng, y, model.snr_db), taps


def apply_channel(x, model: ChannelModel):
    """Dispatch on ``model.kind``; returns ``(y, taps)``."""
    x = np.asarray(x, dtype=np.complex128)
    if model.kind == "bypass":
        return x.copy(), np.ones(1, dtype=np.complex128)
    if model.kind == "awgn":
        return awgn(x, model.snr_db, model.seed), np.ones(1, dtype=np.complex128)
    return multipath(x, model)
