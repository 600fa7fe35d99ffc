"""Seed-deterministic synthetic scenes and datasets.

Everything here exists so the system can be exercised end to end without
the (private) classroom recordings: separable moving-texture clips for
training, tracking scenes with known motion, noisy hand-detection streams
for the projection filter, and a full 2-minute typing session on disk for
the pipeline smoke test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import VideoDescriptor, write_descriptor
from .geometry import BoundingBox, Detection
from .proposals import RegionInit


def smooth_noise(rng: np.random.Generator, height: int, width: int, blur: int = 7) -> np.ndarray:
    """Box-blurred uniform noise in [0, 1], shape (height, width) float32."""
    raw = rng.random((height + blur, width + blur), np.float32)
    c = np.cumsum(raw, axis=0)
    raw = c[blur:] - c[:-blur]
    c = np.cumsum(raw, axis=1)
    raw = c[:, blur:] - c[:, :-blur]
    lo, hi = raw.min(), raw.max()
    return ((raw - lo) / max(hi - lo, 1e-9)).astype(np.float32)


# -- tracking scenes ----------------------------------------------------------------

def moving_square_scene(n_frames: int, height: int = 120, width: int = 400,
                        square_h: int = 24, square_w: int = 36,
                        start: tuple[float, float] = (20.0, 40.0),
                        velocity: tuple[float, float] = (2.0, 0.0),
                        seed: int = 0) -> tuple[np.ndarray, list[BoundingBox]]:
    """Bright square over dark noise; returns frames and exact per-frame boxes."""
    rng = np.random.default_rng(seed)
    frames = np.empty((n_frames, height, width, 3), np.uint8)
    boxes = []
    x0, y0 = start
    vx, vy = velocity
    for t in range(n_frames):
        x = float(np.clip(x0 + vx * t, 0, width - square_w))
        y = float(np.clip(y0 + vy * t, 0, height - square_h))
        base = (30 + 6 * rng.random((height, width), np.float32))
        xi, yi = int(round(x)), int(round(y))
        base[yi:yi + square_h, xi:xi + square_w] = 200
        frames[t] = np.clip(base, 0, 255).astype(np.uint8)[..., None]
        boxes.append(BoundingBox(x, y, square_w, square_h))
    return frames, boxes


def drifting_keyboard_scene(n_frames: int = 600, height: int = 140, width: int = 240,
                            kb_w: int = 48, kb_h: int = 22, amplitude: float = 10.0,
                            period: int = 450, seed: int = 0) -> tuple[np.ndarray, list[BoundingBox]]:
    """Textured keyboard drifting sinusoidally over a static textured table."""
    rng = np.random.default_rng(seed)
    background = (40 + 50 * smooth_noise(rng, height, width)).astype(np.float32)
    keys = (140 + 90 * smooth_noise(rng, kb_h, kb_w, blur=3)).astype(np.float32)
    cx0, cy0 = width / 2.0, height / 2.0
    frames = np.empty((n_frames, height, width, 3), np.uint8)
    boxes = []
    for t in range(n_frames):
        x = cx0 - kb_w / 2 + amplitude * np.sin(2 * np.pi * t / period)
        y = cy0 - kb_h / 2 + 0.5 * amplitude * np.cos(2 * np.pi * t / period)
        img = background.copy()
        xi, yi = int(round(x)), int(round(y))
        img[yi:yi + kb_h, xi:xi + kb_w] = keys
        frames[t] = np.clip(img, 0, 255).astype(np.uint8)[..., None]
        boxes.append(BoundingBox(x, y, kb_w, kb_h))
    return frames, boxes


# -- classifier dataset ----------------------------------------------------------------

class MovingTextureClips:
    """Lazy dataset of linearly separable clips: moving texture (label 1)
    versus static texture (label 0), both with identical photometric noise.

    Clips are generated on demand from (seed, index) so epochs never hold
    the whole dataset in memory; identical seeds give bit-identical data.
    """

    SIDE = 224
    CHANNEL_GAINS = (0.95, 1.0, 1.05)
    SPEED_RANGE = (1.5, 4.5)

    def __init__(self, n_clips: int, frame_rate: int = 10, seed: int = 0):
        self.n_clips = n_clips
        self.frame_rate = frame_rate
        self.seed = seed

    def __len__(self):
        return self.n_clips

    def labels(self):
        return [i % 2 for i in range(self.n_clips)]

    def load(self, i: int):
        if not 0 <= i < self.n_clips:
            raise IndexError(i)
        label = i % 2
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, i)))
        t_len = 3 * self.frame_rate
        speed = rng.uniform(*self.SPEED_RANGE) if label == 1 else 0.0
        angle = rng.uniform(0, 2 * np.pi)
        vx, vy = speed * np.cos(angle), speed * np.sin(angle)
        dx, dy = vx * (t_len - 1), vy * (t_len - 1)
        canvas_w = self.SIDE + int(abs(dx)) + 4
        canvas_h = self.SIDE + int(abs(dy)) + 4
        canvas = smooth_noise(rng, canvas_h, canvas_w)
        x0 = 2.0 + max(0.0, -dx)
        y0 = 2.0 + max(0.0, -dy)
        gray = np.empty((t_len, self.SIDE, self.SIDE), np.float32)
        for t in range(t_len):
            xi = int(round(x0 + vx * t))
            yi = int(round(y0 + vy * t))
            gray[t] = canvas[yi:yi + self.SIDE, xi:xi + self.SIDE]
        gains = np.asarray(self.CHANNEL_GAINS, np.float32)[:, None, None, None]
        clip = gray[None] * gains
        noise = rng.standard_normal(clip.shape, dtype=np.float32)
        noise *= 0.01
        clip += noise
        return np.clip(clip, 0.0, 1.0, out=clip), label


# -- projection-filter stream -------------------------------------------------------------

def synthetic_hand_detections(n_windows: int = 8, fps: int = 30,
                              frame_w: int = 858, frame_h: int = 480,
                              spurious_rate: float = 8.0,
                              seed: int = 0) -> tuple[list[Detection], list[BoundingBox], int]:
    """Two stationary hands sampled every second plus short-lived uniform
    spurious boxes. Returns (detections, stationary boxes, frame count)."""
    rng = np.random.default_rng(seed)
    hands = [BoundingBox(180, 260, 90, 60), BoundingBox(520, 300, 90, 60)]
    detections: list[Detection] = []
    n_frames = n_windows * 12 * fps
    for s in range(n_windows * 12):
        frame = s * fps
        for b in hands:
            detections.append(Detection(frame, "hand", b, 0.9))
        for _ in range(rng.poisson(spurious_rate)):
            w = float(rng.uniform(30, 110))
            h = float(rng.uniform(25, 80))
            x = float(rng.uniform(0, frame_w - w))
            y = float(rng.uniform(0, frame_h - h))
            detections.append(Detection(frame, "hand", BoundingBox(x, y, w, h),
                                        float(rng.uniform(0.3, 0.9))))
    return detections, hands, n_frames


# -- full typing session on disk --------------------------------------------------------------


@dataclass
class TypingSessionFixture:
    video_path: str
    detections_path: str
    regions_path: str
    width: int
    height: int
    fps: int
    n_frames: int
    keyboard_person: str
    keyboard_boxes: list


def build_typing_session(out_dir, duration_s: int = 120, fps: int = 30,
                         width: int = 192, height: int = 108,
                         pause: tuple[float, float] = (0.4, 0.7),
                         seed: int = 0) -> TypingSessionFixture:
    """Write a raw-video typing session: three students at a table, one
    slowly drifting near-square keyboard whose interior texture scrolls
    while "typing" happens (coherent motion in the moving-texture training
    distribution after letterboxing) and freezes during the pause fraction
    of the session. Exact keyboard detections land every 5 seconds."""
    from . import formats  # local import keeps module load light

    out_dir = str(out_dir)
    rng = np.random.default_rng(seed)
    n_frames = duration_s * fps
    background = (45 + 55 * smooth_noise(rng, height, width)).astype(np.float32)
    kb_w, kb_h = 64, 44
    scroll_range = 40
    keys_canvas = (25 + 215 * smooth_noise(rng, kb_h + scroll_range, kb_w, blur=2)).astype(np.float32)
    cx0 = width / 2.0 - kb_w / 2.0
    cy0 = height * 0.55
    pause_frames = range(int(pause[0] * n_frames), int(pause[1] * n_frames))

    table_y = int(height * 0.45)
    region_w = width // 3
    persons = ["Amara", "Beto", "Carmen"]
    inits = []
    for i, person in enumerate(persons):
        x = i * region_w
        first = BoundingBox(x, table_y, region_w, height - table_y)
        last = BoundingBox(max(0.0, x - 3.0), table_y, region_w, height - table_y)
        inits.append(RegionInit(person, ((0, first), (n_frames - 1, last))))

    video_path = f"{out_dir}/session.rgb"
    boxes = []
    chunk = 300
    scroll_pos = 0.0
    with open(video_path, "wb") as fh:
        for start in range(0, n_frames, chunk):
            stop = min(start + chunk, n_frames)
            block = np.empty((stop - start, height, width, 3), np.uint8)
            for t in range(start, stop):
                x = cx0 + 4.0 * np.sin(2 * np.pi * t / 600.0)
                y = cy0 + 2.0 * np.cos(2 * np.pi * t / 600.0)
                if t not in pause_frames:
                    scroll_pos += 1.0 / 3.0  # ~3.5 px/clip-frame after letterboxing
                tri = scroll_range - abs(scroll_pos % (2 * scroll_range) - scroll_range)
                off = int(round(tri))
                img = background.copy()
                xi, yi = int(round(x)), int(round(y))
                img[yi:yi + kb_h, xi:xi + kb_w] = keys_canvas[off:off + kb_h]
                block[t - start] = np.clip(img, 0, 255).astype(np.uint8)[..., None]
                boxes.append(BoundingBox(x, y, kb_w, kb_h))
            block.tofile(fh)
    write_descriptor(VideoDescriptor(path=video_path, width=width, height=height,
                                     fps=fps, frame_count=n_frames))

    detections = [Detection(f, "keyboard", boxes[f], 0.9) for f in range(0, n_frames, 5 * fps)]
    detections_path = f"{out_dir}/detections.csv"
    formats.write_detections(detections_path, detections)
    regions_path = f"{out_dir}/regions.csv"
    formats.write_region_inits(regions_path, inits)
    return TypingSessionFixture(video_path=video_path, detections_path=detections_path,
                                regions_path=regions_path, width=width, height=height,
                                fps=fps, n_frames=n_frames, keyboard_person="Beto",
                                keyboard_boxes=boxes)
