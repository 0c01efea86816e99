"""Bit-exact container for one group of pictures.

Layout (all multi-byte fields big-endian)::

    offset  size  field
    0       4     magic "VQVS"
    4       1     version (1)
    5       4     N, frames in the group
    9       4     M, key frames
    13      2     W
    15      2     H
    17      1     P, patch size
    18      1     c, feature channels
    19      1     B, bits per index
    20      4     L_s, indices per key frame
    24      8     codebook id (FNV-1a 64)
    32      4     CRC-32 (IEEE, reflected) of the payload bytes
    36      ...   payload

The payload is the key-frame mask ``v`` (N bits), the position bitmap ``p``
(L_s*(M-1) bits) and the selected indices ``s_eta`` (B bits each, MSB first),
packed MSB-first and zero-padded to a whole byte. ``len(s_eta)`` is not stored;
it equals ``L_s + popcount(p)``.
"""

import struct
import zlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import BadMagic, BadVersion, CrcMismatch, Inconsistent, Overflow, Truncated

MAGIC = b"VQVS"
VERSION = 1
_HEADER = struct.Struct(">4sBIIHHBBBIQI")
HEADER_BYTES = _HEADER.size


@dataclass(frozen=True)
class ContainerHeader:
    n_frames: int
    n_keys: int
    width: int
    height: int
    patch_size: int
    channels: int
    bits: int
    seq_len: int
    codebook_id: int
    crc32: int = 0

    def payload_bits(self, popcount_p):
        n_sel = self.seq_len + popcount_p
        return self.n_frames + self.seq_len * (self.n_keys - 1) + n_sel * self.bits


class Unpacked(NamedTuple):
    v: np.ndarray
    s_eta: np.ndarray
    p: np.ndarray
    header: ContainerHeader


def _index_bits(values, width):
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _check_header(hdr: ContainerHeader):
    if hdr.n_keys > hdr.n_frames or hdr.n_keys < 1:
        raise Inconsistent(f"M={hdr.n_keys} must be in [1, N={hdr.n_frames}]")
    if not 1 <= hdr.bits <= 16:
        raise Inconsistent(f"B={hdr.bits} outside [1, 16]")
    if hdr.patch_size == 0 or hdr.width % hdr.patch_size or hdr.height % hdr.patch_size:
        raise Inconsistent("patch size does not divide the frame")
    expected = (hdr.width // hdr.patch_size) * (hdr.height // hdr.patch_size) * hdr.channels
    if hdr.seq_len != expected:
        raise Inconsistent(f"L_s={hdr.seq_len} but geometry implies {expected}")


def pack(v, s_eta, p, *, width, height, patch_size, channels, bits, codebook_id) -> bytes:
    v = np.asarray(v, dtype=np.uint8).ravel()
    p = np.asarray(p, dtype=np.uint8).ravel()
    s_eta = np.asarray(s_eta, dtype=np.int64).ravel()
    n, m = v.size, int(v.sum())
    seq_len = (width // patch_size) * (height // patch_size) * channels
    hdr = ContainerHeader(n, m, width, height, patch_size, channels, bits, seq_len, codebook_id)
    _check_header(hdr)
    if p.size != seq_len * (m - 1):
        raise Inconsistent(f"bitmap length {p.size} != L_s*(M-1) = {seq_len * (m - 1)}")
    if s_eta.size != seq_len + int(p.sum()):
        raise Inconsistent(f"len(s_eta)={s_eta.size} != L_s + popcount(p) = {seq_len + int(p.sum())}")
    if s_eta.size and (s_eta.min() < 0 or s_eta.max() >= 1 << bits):
        raise Overflow(f"index does not fit in {bits} bits")
    payload = np.packbits(np.concatenate([v, p, _index_bits(s_eta, bits)])).tobytes()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    head = _HEADER.pack(
        MAGIC, VERSION, n, m, width, height, patch_size, channels, bits, seq_len, codebook_id, crc
    )
    return head + payload


def parse_header(data) -> ContainerHeader:
    data = bytes(data)
    if len(data) < HEADER_BYTES:
        raise Truncated(f"{len(data)} bytes is shorter than the {HEADER_BYTES}-byte header")
    magic, version, *fields = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    hdr = ContainerHeader(*fields)
    _check_header(hdr)
    return hdr


def container_bytes(hdr: ContainerHeader, popcount_p: int) -> int:
    return HEADER_BYTES + (hdr.payload_bits(popcount_p) + 7) // 8


def unpack(data, verify_crc=True) -> Unpacked:
    """Parse a container; trailing bytes after the padded payload are ignored.

    With ``verify_crc=False`` a damaged payload is parsed best-effort, which
    the receiver uses to salvage key frames from intact LDPC blocks.
    """
    data = bytes(data)
    hdr = parse_header(data)
    n, m, L_s, B = hdr.n_frames, hdr.n_keys, hdr.seq_len, hdr.bits
    fixed_bits = n + L_s * (m - 1)
    body = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=HEADER_BYTES))
    if body.size < fixed_bits:
        raise Truncated("payload shorter than the mask and bitmap")
    v = body[:n].copy()
    p = body[n:fixed_bits].copy()
    total = hdr.payload_bits(int(p.sum()))
    if body.size < total:
        raise Truncated(f"payload has {body.size} bits, header implies {total}")
    n_payload_bytes = (total + 7) // 8
    if verify_crc:
        payload = data[HEADER_BYTES : HEADER_BYTES + n_payload_bytes]
        if zlib.crc32(payload) & 0xFFFFFFFF != hdr.crc32:
            raise CrcMismatch("payload CRC does not match header")
        if int(v.sum()) != m:
            raise Inconsistent(f"mask has {int(v.sum())} key frames, header says {m}")
    idx_bits = body[fixed_bits:total].reshape(-1, B).astype(np.int64)
    s_eta = idx_bits @ (1 << np.arange(B - 1, -1, -1))
    return Unpacked(v, s_eta, p, hdr)
