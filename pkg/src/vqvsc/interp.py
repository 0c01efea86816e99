"""Classical frame interpolators.

The same :class:`Interpolator` is used by the transmitter to score frame
importance and by the receiver to fill non-key frames, so the scorer measures
exactly the error the receiver will make.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import BadBlockSize, BadConfig, ZeroGap
from .validation import check_frame_pair, round_half_away, to_uint8

KINDS = ("hold", "linear_blend", "block_flow")


@dataclass(frozen=True)
class Interpolator:
    """Interpolator variant and its block-matching parameters."""

    kind: str = "linear_blend"
    block_size: int = 8
    search_range: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadConfig(f"unknown interpolator kind {self.kind!r}; expected one of {KINDS}")
        if self.block_size <= 0:
            raise BadBlockSize("block size must be positive")
        if self.search_range < 0:
            raise BadConfig("search range must be >= 0")


def _clamped_patch(plane_stack, y0, x0, size):
    """Fetch a ``size`` x ``size`` patch at (y0, x0) with clamped coordinates."""
    _, h, w = plane_stack.shape
    ys = np.clip(np.arange(y0, y0 + size), 0, h - 1)
    xs = np.clip(np.arange(x0, x0 + size), 0, w - 1)
    return plane_stack[:, ys[:, None], xs[None, :]]


def _candidates(search_range):
    """Displacements in tie-break order: |dx|+|dy|, then dy, then dx."""
    r = range(-search_range, search_range + 1)
    cands = [(dx, dy) for dy in r for dx in r]
    cands.sort(key=lambda v: (abs(v[0]) + abs(v[1]), v[1], v[0]))
    return cands


def estimate_block_motion(a, b, kind):
    """Full-search block matching from ``a`` to ``b``.

    Returns an int array of shape ``(H/blk, W/blk, 2)`` holding ``(dx, dy)``:
    the block of ``a`` at ``(y, x)`` best matches ``b`` at ``(y+dy, x+dx)``.
    """
    a, b = check_frame_pair(a, b)
    if kind.kind != "block_flow":
        raise BadConfig("estimate_block_motion requires a block_flow interpolator")
    blk = kind.block_size
    _, h, w = a.shape
    if h % blk or w % blk:
        raise BadBlockSize(f"block size {blk} must divide frame size {h}x{w}")
    af = a.astype(np.int32)
    bf = b.astype(np.int32)
    cands = _candidates(kind.search_range)
    field = np.zeros((h // blk, w // blk, 2), dtype=np.int64)
    for by in range(h // blk):
        for bx in range(w // blk):
            y0, x0 = by * blk, bx * blk
            ref = af[:, y0 : y0 + blk, x0 : x0 + blk]
            best, best_sad = (0, 0), None
            for dx, dy in cands:
                sad = int(np.abs(ref - _clamped_patch(bf, y0 + dy, x0 + dx, blk)).sum())
                # strict < keeps the earliest candidate in tie-break order
                if best_sad is None or sad < best_sad:
                    best, best_sad = (dx, dy), sad
            field[by, bx] = best
    return field


def _flow_blend(k_a, k_b, field, t, blk):
    _, h, w = k_a.shape
    fa = k_a.astype(np.float64)
    fb = k_b.astype(np.float64)
    out = np.empty_like(fa)
    for by in range(h // blk):
        for bx in range(w // blk):
            dx, dy = field[by, bx]
            y0, x0 = by * blk, bx * blk
            ax, ay = round_half_away(t * dx), round_half_away(t * dy)
            bx_, by_ = round_half_away((1.0 - t) * dx), round_half_away((1.0 - t) * dy)
            pa = _clamped_patch(fa, y0 - int(ay), x0 - int(ax), blk)
            pb = _clamped_patch(fb, y0 + int(by_), x0 + int(bx_), blk)
            out[:, y0 : y0 + blk, x0 : x0 + blk] = (1.0 - t) * pa + t * pb
    return out


def interpolate_between(k_a, k_b, g, kind):
    """Return ``g`` frames between ``k_a`` and ``k_b``; frame j sits at t = j/(g+1)."""
    k_a, k_b = check_frame_pair(k_a, k_b)
    if g < 1:
        raise ZeroGap("gap must be at least one frame")
    field = estimate_block_motion(k_a, k_b, kind) if kind.kind == "block_flow" else None
    frames = []
    for j in range(1, g + 1):
        t = j / (g + 1)
        if kind.kind == "hold":
            frames.append(k_a.copy())
        elif kind.kind == "linear_blend":
            frames.append(to_uint8((1.0 - t) * k_a.astype(np.float64) + t * k_b.astype(np.float64)))
        else:
            frames.append(to_uint8(_flow_blend(k_a, k_b, field, t, kind.block_size)))
    return frames


def reconstruct_midframe(f_prev, f_next, kind):
    return interpolate_between(f_prev, f_next, 1, kind)[0]
