"""End-to-end transmitter, channel and receiver.

One container is produced per group of pictures (GOP). Its bits are split
into LDPC blocks; each block is sent as many times as the most-repeated key
frame whose bits it carries (header, mask and bitmap blocks use the largest
count). Transmission round ``r`` is one packet holding every block with more
than ``r`` copies; each packet sees an independent channel draw and the
receiver sums block LLRs across packets before a single decode.
"""

import csv
import dataclasses
import struct
import time
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional

import numpy as np

from . import bitstream, metrics
from .channel import ChannelModel, apply_channel, derive_seed
from .exceptions import BadConfig, VqvscError
from .index_select import compute_bcr, payload_bits, restore_indices, select_indices
from .interp import Interpolator, interpolate_between
from .keyframe import (
    RateModel,
    db_to_linear,
    gaps_from_mask,
    importance_scores,
    predict_rho,
    schedule_retransmissions,
    seam,
    select_keyframes,
)
from .msvq import Codebook, VqConfig, dequantize, extract_features, quantize, reconstruct_frame, train_codebook
from .phy import K_INFO, N_CODE, OfdmConfig, default_code, demap_llr, equalize, estimate_channel_ls
from .phy import bits_per_symbol, map_symbols, ofdm_demodulate, ofdm_modulate, smooth_channel_estimate
from .validation import check_sequence

FALLBACK_LEVEL = 128
BYPASS_NOISE_VAR = 1e-6


def _data_path(name):
    return resources.files("vqvsc").joinpath("data", name)


@dataclass
class ExperimentConfig:
    """Every knob of one experiment; each field maps to a CLI flag."""

    video: str = ""
    width: int = 64
    height: int = 64
    gop: int = 16
    patch_size: int = 4
    dim: int = 16
    transform: str = "identity_patch"
    codebook_size: int = 256
    codebook: str = ""
    interpolator: str = "linear_blend"
    block_size: int = 8
    search_range: int = 4
    metric: str = "one_minus_ssim"
    rate_model: str = ""
    adaptive: bool = True
    retransmit: bool = True
    rho_ref: float = 0.5
    eta: float = 1.0
    modulation: str = "qpsk"
    channel: str = "multipath"
    delays: tuple = (0, 1, 2)
    powers_db: tuple = (0.0, -3.0, -6.0)
    snr_db: float = 10.0
    smooth_estimate: bool = True
    seed: Optional[int] = None
    report: str = ""

    @property
    def vq(self):
        return VqConfig(self.patch_size, self.dim, self.transform, self.codebook_size)

    @property
    def interp(self):
        return Interpolator(self.interpolator, self.block_size, self.search_range)

    def channel_model(self, seed):
        return ChannelModel(self.channel, tuple(self.delays), tuple(self.powers_db), self.snr_db, seed)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _coerce(field_type, value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    name = getattr(field_type, "__name__", str(field_type))
    if name == "bool":
        return text.lower() in ("1", "true", "yes", "on")
    if name == "int":
        return int(text)
    if name == "float":
        return float(text)
    if name == "tuple":
        return tuple(float(x) if any(c in x for c in ".eE") else int(x) for x in text.replace(",", " ").split())
    if "Optional" in name:
        return None if text.lower() in ("", "none") else int(text)
    return text


def config_from_mapping(mapping, base=None):
    base = base or ExperimentConfig()
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    changes = {}
    for key, value in mapping.items():
        name = key.replace("-", "_")
        if name not in types:
            raise BadConfig(f"unknown config key {key!r}")
        changes[name] = _coerce(types[name], value)
    return base.replace(**changes)


def load_config(path, base=None):
    """Read ``key = value`` lines (``#`` comments allowed)."""
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise BadConfig(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return config_from_mapping(mapping, base)


class Resources:
    """Codebook, rate model and code shared by transmitter and receiver."""

    def __init__(self, cfg: ExperimentConfig, training_frames=None):
        self.cfg = cfg
        self.vq = cfg.vq
        self.interp = cfg.interp
        self.codebook = self._codebook(training_frames)
        self.rate_model = RateModel.load(cfg.rate_model or _data_path("default_rate_model.txt"))
        self.code = default_code()

    def _codebook(self, training_frames):
        cfg = self.cfg
        if cfg.codebook:
            book = Codebook.load(cfg.codebook)
        elif self.vq == VqConfig():
            book = Codebook.load(_data_path("default_codebook.txt"))
        elif training_frames is not None:
            book = train_codebook(training_frames, self.vq, seed=cfg.seed or 0)
        else:
            raise BadConfig("non-default VQ settings need a codebook file or training frames")
        if book.size != self.vq.codebook_size or book.dim != self.vq.dim:
            raise BadConfig(f"codebook is {book.size}x{book.dim}, config wants {self.vq.codebook_size}x{self.vq.dim}")
        return book


@dataclass
class EncodedGop:
    container: bytes
    mask: np.ndarray
    beta: np.ndarray
    rho: float
    repeats: np.ndarray
    p: np.ndarray
    header: bitstream.ContainerHeader


@dataclass
class ReceivedGop:
    frames: np.ndarray
    crc_ok: bool
    bit_errors: int
    transmitted_bits: int
    intact_keys: int


@dataclass
class TransmissionRow:
    snr_db: float
    trial: int
    seed: int
    rho: float
    n_keys: int
    repeats: str
    bcr: float
    payload_bits: int
    transmitted_bits: int
    bit_errors: int
    crc_ok: bool
    ms_ssim: float
    ssim: float
    psnr: float
    frame_ms_ssim: str
    wall_time: float = 0.0


CSV_COLUMNS = [f.name for f in dataclasses.fields(TransmissionRow) if f.name != "wall_time"]


def split_gops(seq, gop):
    """Cut into GOPs of ``gop`` frames; a one-frame tail joins the previous GOP."""
    n = seq.shape[0]
    bounds = list(range(0, n, gop)) + [n]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < 2:
        bounds.pop(-2)
    return [seq[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def _ratio(cfg, res, n):
    if cfg.adaptive and np.isfinite(cfg.snr_db):
        return predict_rho(res.rate_model, float(db_to_linear(cfg.snr_db)), n)
    return float(cfg.rho_ref)


def encode_gop(gop, cfg: ExperimentConfig, res: Resources) -> EncodedGop:
    """Transmitter chain up to the container."""
    gop = check_sequence(gop)
    n, _, h, w = gop.shape
    beta = importance_scores(gop, res.interp, cfg.metric)
    rho = _ratio(cfg, res, n)
    v = select_keyframes(beta, rho)
    keys = gop[v.astype(bool)]
    seqs = [quantize(extract_features(k, res.vq), res.codebook) for k in keys]
    s_eta, p = select_indices(seqs, res.codebook, cfg.eta)
    container = bitstream.pack(
        v,
        s_eta,
        p,
        width=w,
        height=h,
        patch_size=res.vq.patch_size,
        channels=res.vq.channels,
        bits=res.vq.bits,
        codebook_id=res.codebook.id,
    )
    enc = EncodedGop(container, v, beta, rho, np.ones(len(keys), dtype=np.int64), p, bitstream.parse_header(container))
    if cfg.adaptive and cfg.retransmit and np.isfinite(cfg.snr_db):
        enc.repeats = schedule_retransmissions(
            beta, v, float(db_to_linear(cfg.snr_db)), cfg.rho_ref, res.rate_model
        )
        reference = encode_gop(gop, fixed_scheme(cfg), res)
        _fit_block_budget(enc, n_blocks(reference.container))
    return enc


def n_blocks(container):
    return -(-len(container) * 8 // K_INFO)


def _fit_block_budget(enc: EncodedGop, budget):
    """Trim extra copies, least important key frame first, until the coded
    block count fits what the fixed-ratio scheme would send."""
    blocks = n_blocks(enc.container)
    key_beta = enc.beta[enc.mask.astype(bool)]
    order = np.argsort(key_beta, kind="stable")
    while block_repeats(enc, blocks).sum() > budget:
        spare = [k for k in order if enc.repeats[k] == enc.repeats.max() and enc.repeats[k] > 1]
        if not spare:
            break
        enc.repeats[spare[0]] -= 1


def _key_frames(s_list, res, h, w):
    return [reconstruct_frame(dequantize(s, res.codebook, res.vq, h, w), res.vq) for s in s_list]


def _fill(keys, v, res):
    fills = []
    for a, b, g in zip(keys[:-1], keys[1:], gaps_from_mask(v)):
        if g > 0:
            fills.extend(interpolate_between(a, b, int(g), res.interp))
    return seam(keys, fills, v)


def decode_container(data, res: Resources, verify_crc=True):
    """Receiver chain from container bytes to frames."""
    parts = bitstream.unpack(data, verify_crc=verify_crc)
    hdr = parts.header
    _check_compatible(hdr, res)
    s_list = restore_indices(parts.s_eta, parts.p, hdr.n_keys, hdr.seq_len)
    keys = _key_frames(s_list, res, hdr.height, hdr.width)
    return _fill(keys, parts.v, res)


def _check_compatible(hdr, res):
    if hdr.codebook_id != res.codebook.id:
        raise BadConfig("container was encoded with a different codebook")
    if (hdr.patch_size, hdr.channels, hdr.bits) != (res.vq.patch_size, res.vq.channels, res.vq.bits):
        raise BadConfig("container geometry does not match the VQ configuration")


def block_repeats(enc: EncodedGop, n_blocks):
    """Copies of each LDPC block, from the key-frame repeat counts."""
    hdr = enc.header
    B, L_s = hdr.bits, hdr.seq_len
    top = int(enc.repeats.max()) if enc.repeats.size else 1
    reps = np.ones(n_blocks, dtype=np.int64)
    control_end = bitstream.HEADER_BYTES * 8 + hdr.n_frames + L_s * (hdr.n_keys - 1)
    reps[: (control_end - 1) // K_INFO + 1] = top
    sent = [L_s] + [int(enc.p[m * L_s : (m + 1) * L_s].sum()) for m in range(hdr.n_keys - 1)]
    start = control_end
    for count, n_idx in zip(enc.repeats, sent):
        stop = start + n_idx * B
        if stop > start:
            first, last = start // K_INFO, (stop - 1) // K_INFO
            reps[first : last + 1] = np.maximum(reps[first : last + 1], count)
        start = stop
    return reps


def _packet_llrs(coded, cfg, model, n0_floor):
    """Modulate, send and soft-demodulate one packet of coded blocks."""
    kind = cfg.modulation
    k = bits_per_symbol(kind)
    ofdm = OfdmConfig()
    bits = coded.ravel()
    symbols = map_symbols(bits, kind)
    n_sym = symbols.size
    pad = (-n_sym) % ofdm.n_data
    if pad:
        symbols = np.concatenate([symbols, map_symbols(np.zeros(pad * k, dtype=np.uint8), kind)])
    y, _ = apply_channel(ofdm_modulate(symbols, ofdm), model)
    demod = ofdm_demodulate(y, ofdm)
    gains = estimate_channel_ls(demod.preamble)
    if cfg.smooth_estimate:
        gains = smooth_channel_estimate(gains, ofdm.cp_len)
    gains = gains[ofdm.data_bins]
    gains = np.broadcast_to(gains, demod.data.shape)
    eq, flagged = equalize(demod.data, gains)
    if model.kind == "bypass" or not np.isfinite(model.snr_db):
        n0 = n0_floor
    else:
        n0 = float(np.mean(np.abs(y) ** 2)) / (1.0 + 10.0 ** (model.snr_db / 10.0))
    g = np.where(flagged, 0.0, gains)
    llr = demap_llr(eq.ravel()[:n_sym], kind, n0, g.ravel()[:n_sym])
    return llr.reshape(coded.shape)


def send_container(enc: EncodedGop, cfg: ExperimentConfig, res: Resources, seed: int):
    """PHY + channel round trip; returns ``(rx_bytes, block_ok, n_info_bits, bit_errors, channel_bits)``."""
    bits = np.unpackbits(np.frombuffer(enc.container, dtype=np.uint8))
    n_info = bits.size
    count = n_blocks(enc.container)
    info = np.zeros(count * K_INFO, dtype=np.uint8)
    info[:n_info] = bits
    info = info.reshape(count, K_INFO)
    coded = res.code.encode(info)
    reps = block_repeats(enc, count)
    llr_sum = np.zeros((count, N_CODE))
    channel_bits = 0
    for r in range(int(reps.max())):
        idx = np.flatnonzero(reps > r)
        model = cfg.channel_model(derive_seed(seed, r))
        llr_sum[idx] += _packet_llrs(coded[idx], cfg, model, BYPASS_NOISE_VAR)
        channel_bits += idx.size * N_CODE
    dec = res.code.decode(llr_sum)
    rx_bits = dec.info.ravel()
    bit_errors = int(np.count_nonzero(rx_bits[:n_info] != bits))
    return np.packbits(rx_bits).tobytes(), dec.parity_ok, n_info, bit_errors, channel_bits


def _intact_prefix(rx, block_ok, res):
    """Key frames recoverable from blocks that passed parity, in order."""
    parts = bitstream.unpack(rx, verify_crc=False)
    hdr = parts.header
    _check_compatible(hdr, res)
    if int(parts.v.sum()) != hdr.n_keys:
        raise VqvscError("mask inconsistent with header")
    L_s, B = hdr.seq_len, hdr.bits
    control_end = bitstream.HEADER_BYTES * 8 + hdr.n_frames + L_s * (hdr.n_keys - 1)
    if not block_ok[: (control_end - 1) // K_INFO + 1].all():
        raise VqvscError("control blocks damaged")
    sent = [L_s] + [int(parts.p[m * L_s : (m + 1) * L_s].sum()) for m in range(hdr.n_keys - 1)]
    start, intact = control_end, 0
    for n_idx in sent:
        stop = start + n_idx * B
        if stop > start and not block_ok[start // K_INFO : (stop - 1) // K_INFO + 1].all():
            break
        intact += 1
        start = stop
    return parts, intact


def _degraded(rx, block_ok, res, n, fallback):
    """Best-effort reconstruction when the container CRC fails."""
    try:
        parts, intact = _intact_prefix(rx, block_ok, res)
    except (VqvscError, ValueError):
        return np.repeat(fallback[None], n, axis=0), 0
    if intact == 0 or parts.v.size != n:
        return np.repeat(fallback[None], n, axis=0), 0
    hdr = parts.header
    s_eta_len = hdr.seq_len + int(parts.p.sum())
    s_list = restore_indices(parts.s_eta[:s_eta_len], parts.p, hdr.n_keys, hdr.seq_len)[:intact]
    keys = _key_frames(s_list, res, hdr.height, hdr.width)
    key_pos = np.flatnonzero(parts.v)
    last = key_pos[intact - 1]
    partial_mask = parts.v[: last + 1]
    head = _fill(keys, partial_mask, res)
    tail = np.repeat(keys[-1][None], n - last - 1, axis=0)
    return np.concatenate([head, tail]), intact


def receive_gop(enc, cfg, res, seed, fallback):
    n = enc.header.n_frames
    rx, block_ok, n_info, bit_errors, channel_bits = send_container(enc, cfg, res, seed)
    try:
        frames = decode_container(rx, res, verify_crc=True)
        return ReceivedGop(frames, True, bit_errors, channel_bits, enc.header.n_keys)
    except (VqvscError, ValueError):
        # CRC failure or a header mangled beyond parsing
        pass
    frames, intact = _degraded(rx, block_ok, res, n, fallback)
    return ReceivedGop(frames, False, bit_errors, channel_bits, intact)


def transmit_video(seq, cfg: ExperimentConfig, res: Optional[Resources] = None, trial=0):
    """Send ``seq`` through the full chain; returns ``(received, row)``."""
    if cfg.seed is None:
        raise BadConfig("a seed is required")
    seq = check_sequence(seq)
    res = res or Resources(cfg, training_frames=seq)
    started = time.perf_counter()
    n_total, _, h, w = seq.shape
    fallback = np.full((3, h, w), FALLBACK_LEVEL, dtype=np.uint8)
    out, rhos, keys, repeats = [], [], 0, []
    pbits = tx_bits = errors = 0
    crc_ok = True
    raw_bits = 0
    for g, gop in enumerate(split_gops(seq, cfg.gop)):
        enc = encode_gop(gop, cfg, res)
        rx = receive_gop(enc, cfg, res, derive_seed(cfg.seed, g), fallback)
        out.append(rx.frames)
        fallback = rx.frames[-1]
        hdr = enc.header
        pbits += hdr.payload_bits(int(enc.p.sum()))
        raw_bits += 3 * h * w * 8 * hdr.n_frames
        tx_bits += rx.transmitted_bits
        errors += rx.bit_errors
        crc_ok &= rx.crc_ok
        keys += hdr.n_keys
        rhos.append(enc.rho)
        repeats.append(" ".join(str(int(r)) for r in enc.repeats))
    received = np.concatenate(out)
    frame_ms = [metrics.ms_ssim(a, b) for a, b in zip(received, seq)]
    frame_ss = [metrics.ssim(a, b) for a, b in zip(received, seq)]
    frame_psnr = [min(metrics.psnr(a, b), 100.0) for a, b in zip(received, seq)]
    row = TransmissionRow(
        snr_db=float(cfg.snr_db),
        trial=trial,
        seed=int(cfg.seed),
        rho=float(np.mean(rhos)),
        n_keys=keys,
        repeats="|".join(repeats),
        bcr=pbits / raw_bits,
        payload_bits=pbits,
        transmitted_bits=tx_bits,
        bit_errors=errors,
        crc_ok=crc_ok,
        ms_ssim=float(np.mean(frame_ms)),
        ssim=float(np.mean(frame_ss)),
        psnr=float(np.mean(frame_psnr)),
        frame_ms_ssim=" ".join(f"{x:.6f}" for x in frame_ms),
        wall_time=time.perf_counter() - started,
    )
    return received, row


def local_reconstruction(seq, cfg: ExperimentConfig, res: Resources):
    """What the receiver would output given an error-free link."""
    seq = check_sequence(seq)
    return np.concatenate([decode_container(encode_gop(g, cfg, res).container, res) for g in split_gops(seq, cfg.gop)])


def _snr_key(snr_db):
    return struct.unpack(">Q", struct.pack(">d", float(snr_db)))[0]


def trial_seed(seed, snr_db, trial):
    return derive_seed(seed, _snr_key(snr_db), trial)


def _run_point(seq, cfg, snr_db, trial, res):
    point = cfg.replace(snr_db=float(snr_db), seed=trial_seed(cfg.seed, snr_db, trial))
    received, row = transmit_video(seq, point, res, trial=trial)
    row.seed = point.seed
    return received, row


def sweep(seq, cfg: ExperimentConfig, snr_list, trials=1, n_jobs=1, res=None):
    """One report row (and reconstructed video) per ``(snr, trial)``, in input order."""
    if cfg.seed is None:
        raise BadConfig("a seed is required")
    snr_list = list(snr_list)
    if not snr_list:
        raise BadConfig("empty SNR list")
    seq = check_sequence(seq)
    res = res or Resources(cfg, training_frames=seq)
    jobs = [(s, t) for s in snr_list for t in range(trials)]
    if n_jobs == 1:
        results = [_run_point(seq, cfg, s, t, res) for s, t in jobs]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(_run_point)(seq, cfg, s, t, res) for s, t in jobs)
    return [r[1] for r in results], [r[0] for r in results]


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(rows: List[TransmissionRow], path, include_timing=False):
    columns = CSV_COLUMNS + (["wall_time"] if include_timing else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in columns])


def fixed_scheme(cfg: ExperimentConfig):
    """Non-adaptive reference: constant ``rho_ref``, no retransmission."""
    return cfg.replace(adaptive=False, retransmit=False)


def bcr_for(enc: EncodedGop):
    hdr = enc.header
    L_eta = hdr.seq_len + int(enc.p.sum())
    return compute_bcr(hdr.n_frames, hdr.n_keys, L_eta, hdr.seq_len, hdr.bits, hdr.width, hdr.height)


def payload_bits_for(enc: EncodedGop):
    hdr = enc.header
    return payload_bits(hdr.n_frames, hdr.n_keys, hdr.seq_len + int(enc.p.sum()), hdr.seq_len, hdr.bits)


__all__ = [
    "CSV_COLUMNS",
    "EncodedGop",
    "ExperimentConfig",
    "Resources",
    "TransmissionRow",
    "decode_container",
    "encode_gop",
    "fixed_scheme",
    "load_config",
    "local_reconstruction",
    "send_container",
    "split_gops",
    "sweep",
    "transmit_video",
    "write_report",
]
