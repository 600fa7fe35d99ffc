"""Raw packed-RGB frame reader."""
import numpy as np
import pytest

from actmap.errors import FormatError
from actmap.frames import (ArrayFrameSource, RawVideoReader, VideoDescriptor, read_descriptor,
                           read_frames, write_raw_video)


def test_known_bytes_roundtrip(tmp_path):
    frames = np.arange(2 * 4 * 4 * 3, dtype=np.uint8).reshape(2, 4, 4, 3)
    path = str(tmp_path / "v.rgb")
    desc = write_raw_video(path, frames)
    back = read_frames(desc, (0, 2))
    np.testing.assert_array_equal(back, frames)
    assert read_descriptor(path) == desc


def test_range_beyond_eof_rejected(tmp_path):
    path = str(tmp_path / "v.rgb")
    desc = write_raw_video(path, np.zeros((3, 2, 2, 3), np.uint8))
    with pytest.raises(FormatError, match="frame range"):
        read_frames(desc, (1, 5))
    with pytest.raises(FormatError):
        read_frames(desc, (2, 2))


def test_frame_offset_property(tmp_path):
    rng = np.random.default_rng(0)
    frames = rng.integers(0, 256, size=(12, 5, 7, 3), dtype=np.uint8)
    path = str(tmp_path / "v.rgb")
    desc = write_raw_video(path, frames)
    raw = np.fromfile(path, np.uint8)
    fb = desc.frame_bytes
    reader = RawVideoReader(desc)
    for k in range(12):
        np.testing.assert_array_equal(reader.read(k, k + 1)[0].ravel(), raw[k * fb:(k + 1) * fb])


def test_size_mismatch_rejected(tmp_path):
    path = str(tmp_path / "v.rgb")
    write_raw_video(path, np.zeros((3, 2, 2, 3), np.uint8))
    bad = VideoDescriptor(path=path, width=2, height=2, fps=30, frame_count=4)
    with pytest.raises(FormatError, match="descriptor implies"):
        RawVideoReader(bad)


def test_missing_sidecar(tmp_path):
    path = str(tmp_path / "naked.rgb")
    np.zeros(12, np.uint8).tofile(path)
    with pytest.raises(FormatError, match="sidecar"):
        RawVideoReader.open(path)


def test_array_source_protocol():
    src = ArrayFrameSource(np.zeros((4, 3, 5, 3), np.uint8), fps=30)
    assert (src.width, src.height, src.frame_count) == (5, 3, 4)
    assert src.read(1, 3).shape == (2, 3, 5, 3)
    with pytest.raises(FormatError):
        src.read(3, 9)
