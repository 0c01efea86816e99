"""Cross-key-frame index compression.

The selector sends the first key frame's indices in full and, for every later
key frame, only the positions whose codewords differ enough (cosine similarity
below ``eta``) from the receiver's restored predecessor. A position bitmap
marks which positions were sent.
"""

import numpy as np

from .exceptions import EmptyInput, IndexOutOfRange, LengthMismatch, ZeroDenominator


def embed_rows(s, entries):
    s = np.asarray(s, dtype=np.int64)
    entries = getattr(entries, "entries", entries)
    if s.size and (s.min() < 0 or s.max() >= entries.shape[0]):
        raise IndexOutOfRange("index outside the codebook")
    return entries[s]


def cosine_similarity(prev, cur, entries):
    """Per-position similarity between two index sequences; identical indices score exactly 1."""
    entries = getattr(entries, "entries", entries)
    prev = np.asarray(prev, dtype=np.int64)
    cur = np.asarray(cur, dtype=np.int64)
    a = embed_rows(prev, entries)
    b = embed_rows(cur, entries)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.where((na == 0) | (nb == 0), 1.0, na * nb)
    sim = np.einsum("ij,ij->i", a, b) / denom
    sim[(na == 0) & (nb == 0)] = 1.0
    sim[(na == 0) ^ (nb == 0)] = 0.0
    sim[prev == cur] = 1.0
    return sim


def select_indices(all_s, entries, eta):
    """Return ``(s_eta, p)`` for ``M`` equal-length index sequences."""
    if len(all_s) == 0:
        raise EmptyInput("need at least one index sequence")
    seqs = [np.asarray(s, dtype=np.int64) for s in all_s]
    length = seqs[0].size
    if any(s.size != length for s in seqs):
        raise LengthMismatch("index sequences differ in length")
    selected = [seqs[0]]
    bitmap = []
    reference = seqs[0].copy()
    for cur in seqs[1:]:
        send = cosine_similarity(reference, cur, entries) < eta
        bitmap.append(send.astype(np.uint8))
        selected.append(cur[send])
        # compare the next frame against what the receiver will hold
        reference = np.where(send, cur, reference)
    p = np.concatenate(bitmap) if bitmap else np.zeros(0, dtype=np.uint8)
    return np.concatenate(selected), p


def restore_indices(s_eta, p, M, L_s):
    """Rebuild the ``M`` index sequences from ``s_eta`` and the bitmap ``p``."""
    s_eta = np.asarray(s_eta, dtype=np.int64)
    p = np.asarray(p, dtype=np.uint8).astype(bool)
    if M < 1:
        raise EmptyInput("M must be at least 1")
    if p.size != L_s * (M - 1):
        raise LengthMismatch(f"bitmap length {p.size} != L_s*(M-1) = {L_s * (M - 1)}")
    if s_eta.size != L_s + int(p.sum()):
        raise LengthMismatch(f"s_eta length {s_eta.size} != L_s + popcount(p) = {L_s + int(p.sum())}")
    out = [s_eta[:L_s].copy()]
    pos = L_s
    for m in range(1, M):
        mask = p[(m - 1) * L_s : m * L_s]
        cur = out[-1].copy()
        n_sent = int(mask.sum())
        cur[mask] = s_eta[pos : pos + n_sent]
        pos += n_sent
        out.append(cur)
    return out


def payload_bits(N, M, L_eta, L_s, B):
    """Bits for ``v``, ``s_eta`` and ``p``."""
    return N + L_eta * B + L_s * (M - 1)


def compute_bcr(N, M, L_eta, L_s, B, W, H, channels=3):
    """Transmitted bits over raw 8-bit video bits."""
    denom = channels * H * W * 8 * N
    if denom <= 0:
        raise ZeroDenominator("raw video size must be positive")
    return payload_bits(N, M, L_eta, L_s, B) / denom
