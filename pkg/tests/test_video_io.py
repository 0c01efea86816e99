import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqvsc.exceptions import EmptySequence, InsufficientFrames, TruncatedStream, ZeroFrames
from vqvsc.video_io import read_raw_video, write_raw_video


def test_single_frame_rejected():
    data = bytes(range(12))
    with pytest.raises(InsufficientFrames):
        read_raw_video(data, 2, 2)
    assert issubclass(InsufficientFrames, ZeroFrames)


def test_plane_major_layout():
    data = bytes(range(24))
    seq = read_raw_video(data, 2, 2)
    assert seq.shape == (2, 3, 2, 2)
    assert seq[0, 0, 0, 0] == 0
    # R plane row-major, then G, then B
    assert seq[0, 0, 1, 0] == 2
    assert seq[0, 1, 0, 0] == 4
    assert seq[1, 0, 0, 0] == 12


def test_errors():
    with pytest.raises(ZeroFrames):
        read_raw_video(b"", 2, 2)
    with pytest.raises(TruncatedStream):
        read_raw_video(bytes(25), 2, 2)
    with pytest.raises(EmptySequence):
        write_raw_video(np.zeros((0, 3, 2, 2), np.uint8), io.BytesIO())


def test_write_size():
    buf = io.BytesIO()
    assert write_raw_video(np.zeros((2, 3, 2, 2), np.uint8), buf) == 24


def test_file_round_trip(tmp_path, rng):
    seq = rng.integers(0, 256, size=(3, 3, 4, 6), dtype=np.uint8)
    path = tmp_path / "clip.rgb"
    write_raw_video(seq, path)
    np.testing.assert_array_equal(read_raw_video(path, 6, 4), seq)


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 4),
    w=st.integers(1, 5),
    h=st.integers(1, 5),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_bytes(n, w, h, seed):
    data = np.random.default_rng(seed).integers(0, 256, n * w * h * 3, dtype=np.uint8).tobytes()
    buf = io.BytesIO()
    write_raw_video(read_raw_video(data, w, h), buf)
    assert buf.getvalue() == data
