from .ldpc import K_INFO, N_CODE, LdpcCode, default_code, ldpc_decode, ldpc_encode
from .modulation import bits_per_symbol, demap_llr, hard_demap, map_symbols
from .ofdm import (
    OfdmConfig,
    equalize,
    estimate_channel_ls,
    ofdm_demodulate,
    ofdm_modulate,
    smooth_channel_estimate,
)

__all__ = [
    "K_INFO",
    "N_CODE",
    "LdpcCode",
    "OfdmConfig",
    "bits_per_symbol",
    "default_code",
    "demap_llr",
    "equalize",
    "estimate_channel_ls",
    "hard_demap",
    "ldpc_decode",
    "ldpc_encode",
    "map_symbols",
    "ofdm_demodulate",
    "ofdm_modulate",
    "smooth_channel_estimate",
]
