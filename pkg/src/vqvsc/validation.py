"""Input validation helpers shared by the estimators and functional API.

Frames are ``uint8`` arrays of shape ``(3, H, W)`` (plane-major RGB) and a
video sequence is a ``uint8`` array of shape ``(N, 3, H, W)``.
"""

import numpy as np

from .exceptions import BadConfig, BadLength, DimensionMismatch, InsufficientFrames


def check_frame(frame, name="frame"):
    arr = np.asarray(frame)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise DimensionMismatch(f"{name} must have shape (3, H, W), got {arr.shape}")
    if arr.shape[1] == 0 or arr.shape[2] == 0:
        raise DimensionMismatch(f"{name} has an empty spatial dimension")
    return arr


def check_frame_pair(a, b):
    a = check_frame(a, "a")
    b = check_frame(b, "b")
    if a.shape != b.shape:
        raise DimensionMismatch(f"frame shapes differ: {a.shape} vs {b.shape}")
    return a, b


def check_sequence(seq, min_frames=2):
    arr = np.asarray(seq)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise DimensionMismatch(f"sequence must have shape (N, 3, H, W), got {arr.shape}")
    if arr.shape[0] < min_frames:
        raise InsufficientFrames(f"need at least {min_frames} frames, got {arr.shape[0]}")
    return arr


def check_patch_divides(height, width, patch):
    if patch <= 0 or height % patch or width % patch:
        raise BadConfig(f"patch size {patch} must divide frame size {height}x{width}")


def check_bits(bits, multiple=1, length=None):
    """Return ``bits`` as a flat ``uint8`` 0/1 array, validating its length."""
    arr = np.asarray(bits).astype(np.uint8, copy=False).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit vector entries must be 0 or 1")
    if length is not None and arr.size != length:
        raise BadLength(f"expected {length} bits, got {arr.size}")
    if arr.size % multiple:
        raise BadLength(f"bit count {arr.size} is not a multiple of {multiple}")
    return arr


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_uint8(x):
    """Round half away from zero and clamp to ``[0, 255]``."""
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)
