"""Raw planar video container.

A file is a plain concatenation of frames. Each frame stores the full R plane,
then G, then B; each plane is row-major 8-bit unsigned samples. Width and
height travel out of band.
"""

import io

import numpy as np

from .exceptions import EmptySequence, InsufficientFrames, TruncatedStream, ZeroFrames
from .validation import check_sequence


def frame_nbytes(width, height):
    return width * height * 3


def read_raw_video(source, width, height):
    """Parse a raw planar stream into an ``(N, 3, H, W)`` uint8 array.

    ``source`` may be ``bytes``-like, a binary file object, or a path.
    """
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    size = frame_nbytes(width, height)
    if size <= 0:
        raise ValueError("width and height must be positive")
    if len(data) == 0:
        raise ZeroFrames("stream is empty")
    if len(data) % size:
        raise TruncatedStream(f"stream length {len(data)} is not a multiple of frame size {size}")
    n = len(data) // size
    if n < 2:
        raise InsufficientFrames(f"need at least 2 frames, stream holds {n}")
    return np.frombuffer(data, dtype=np.uint8).reshape(n, 3, height, width).copy()


def write_raw_video(seq, sink):
    """Write ``seq`` to ``sink`` (binary file object or path); return bytes written."""
    arr = np.asarray(seq)
    if arr.ndim != 4 or arr.shape[0] == 0:
        raise EmptySequence("nothing to write")
    arr = check_sequence(arr, min_frames=1)
    payload = np.ascontiguousarray(arr, dtype=np.uint8).tobytes()
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(payload)
    return len(payload)


def to_bytes(seq):
    buf = io.BytesIO()
    write_raw_video(seq, buf)
    return buf.getvalue()
