"""Frame sources: packed-RGB raw video files and in-memory stacks.

A frame source exposes ``width``, ``height``, ``fps``, ``frame_count`` and
``read(f0, f1) -> (T, H, W, 3) uint8``. The raw reader consumes the output
of the documented transcode companion step: frame-major packed 8-bit RGB
(``rgb24``) with a JSON sidecar descriptor next to the file.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import FormatError

SIDECAR_SUFFIX = ".json"


@dataclass(frozen=True)
class VideoDescriptor:
    path: str
    width: int
    height: int
    fps: int
    frame_count: int
    pixel_format: str = "rgb24"

    @property
    def frame_bytes(self) -> int:
        return self.width * self.height * 3

    @property
    def duration_seconds(self) -> float:
        return self.frame_count / self.fps


def write_descriptor(desc: VideoDescriptor) -> str:
    side = desc.path + SIDECAR_SUFFIX
    with open(side, "w") as fh:
        json.dump({k: v for k, v in asdict(desc).items() if k != "path"}, fh, indent=2)
        fh.write("\n")
    return side


def read_descriptor(video_path: str) -> VideoDescriptor:
    side = video_path + SIDECAR_SUFFIX
    try:
        with open(side) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"missing sidecar descriptor {side}")
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad sidecar descriptor {side}: {exc}")
    try:
        desc = VideoDescriptor(path=video_path, width=int(data["width"]), height=int(data["height"]),
                               fps=int(data["fps"]), frame_count=int(data["frame_count"]),
                               pixel_format=str(data.get("pixel_format", "rgb24")))
    except KeyError as exc:
        raise FormatError(f"sidecar descriptor {side} is missing field {exc}")
    if desc.pixel_format != "rgb24":
        raise FormatError(f"unsupported pixel format '{desc.pixel_format}', expected rgb24")
    return desc


class RawVideoReader:
    """Random access into a frame-major packed rgb24 file."""

    def __init__(self, desc: VideoDescriptor):
        self.desc = desc
        size = os.path.getsize(desc.path)
        want = desc.frame_count * desc.frame_bytes
        if size != want:
            raise FormatError(f"{desc.path} is {size} bytes, descriptor implies {want} "
                              f"({desc.frame_count} frames x {desc.frame_bytes} bytes)")

    @classmethod
    def open(cls, video_path: str) -> "RawVideoReader":
        return cls(read_descriptor(video_path))

    @property
    def width(self) -> int:
        return self.desc.width

    @property
    def height(self) -> int:
        return self.desc.height

    @property
    def fps(self) -> int:
        return self.desc.fps

    @property
    def frame_count(self) -> int:
        return self.desc.frame_count

    def read(self, f0: int, f1: int) -> np.ndarray:
        """Frames [f0, f1) as (T, H, W, 3) uint8."""
        if not (0 <= f0 < f1 <= self.desc.frame_count):
            raise FormatError(f"frame range [{f0}, {f1}) outside 0..{self.desc.frame_count} "
                              f"(byte offsets {f0 * self.desc.frame_bytes}..{f1 * self.desc.frame_bytes})")
        count = (f1 - f0) * self.desc.frame_bytes
        data = np.fromfile(self.desc.path, dtype=np.uint8, count=count,
                           offset=f0 * self.desc.frame_bytes)
        if data.size != count:
            raise FormatError(f"short read at byte offset {f0 * self.desc.frame_bytes}: "
                              f"wanted {count} bytes, got {data.size}")
        return data.reshape(f1 - f0, self.desc.height, self.desc.width, 3)


class ArrayFrameSource:
    """In-memory (N, H, W, 3) uint8 stack behind the frame-source protocol."""

    def __init__(self, frames: np.ndarray, fps: int = 30):
        frames = np.asarray(frames)
        if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
            raise FormatError(f"expected (N,H,W,3) uint8 frames, got {frames.shape} {frames.dtype}")
        self._frames = frames
        self.fps = fps

    @property
    def width(self) -> int:
        return self._frames.shape[2]

    @property
    def height(self) -> int:
        return self._frames.shape[1]

    @property
    def frame_count(self) -> int:
        return self._frames.shape[0]

    def read(self, f0: int, f1: int) -> np.ndarray:
        if not (0 <= f0 < f1 <= self.frame_count):
            raise FormatError(f"frame range [{f0}, {f1}) outside 0..{self.frame_count}")
        return self._frames[f0:f1]


def read_frames(desc: VideoDescriptor, frame_range: tuple[int, int]) -> np.ndarray:
    """Convenience wrapper: open, validate and slice in one call."""
    f0, f1 = frame_range
    return RawVideoReader(desc).read(f0, f1)


def write_raw_video(path: str, frames: np.ndarray, fps: int = 30) -> VideoDescriptor:
    """Write an (N,H,W,3) uint8 stack as rgb24 plus sidecar; returns the descriptor."""
    frames = np.ascontiguousarray(frames, np.uint8)
    if frames.ndim != 4 or frames.shape[3] != 3:
        raise FormatError(f"expected (N,H,W,3) frames, got {frames.shape}")
    frames.tofile(path)
    desc = VideoDescriptor(path=str(path), width=frames.shape[2], height=frames.shape[1],
                           fps=fps, frame_count=frames.shape[0])
    write_descriptor(desc)
    return desc
