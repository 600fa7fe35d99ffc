"""Person-attributed 3-second proposals from object evidence and table regions.

Typing: the keyboard track is tiled into 90-frame windows; a window with
enough tracked coverage becomes one proposal at the median keyboard box.
Writing: each stable hand region of a 12-second projection window becomes
four consecutive proposals. Person attribution interpolates the keyframed
student regions and takes the best-overlap region at the window midpoint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clips import resample_indices, resize_letterbox
from .geometry import BoundingBox, intersection_area, iou
from .projection import WINDOW_SECONDS, WindowRegions

PROPOSAL_FRAMES = 90  # 3 seconds at 30 fps
TYPING_PRESENCE_FRACTION = 0.8


@dataclass(frozen=True)
class RegionInit:
    """Keyframed, person-attributed table region; linear between keyframes."""
    person: str
    keyframes: tuple[tuple[int, BoundingBox], ...]

    def __post_init__(self):
        if len(self.keyframes) < 1:
            raise ValueError("region init needs at least one keyframe")
        frames = [f for f, _ in self.keyframes]
        if any(nxt <= prev for prev, nxt in zip(frames, frames[1:])):
            raise ValueError(f"keyframe frames must be strictly increasing, got {frames}")


@dataclass(frozen=True)
class Proposal:
    activity_kind: str  # typing | writing
    person: str
    frame_start: int
    box: BoundingBox
    duration: int = PROPOSAL_FRAMES

    def __post_init__(self):
        if self.duration != PROPOSAL_FRAMES:
            raise ValueError(f"proposals span exactly {PROPOSAL_FRAMES} frames")


def interpolate_region(init: RegionInit, frame: int) -> BoundingBox:
    """Componentwise linear interpolation; clamps outside the keyframe range."""
    frames = [f for f, _ in init.keyframes]
    boxes = [b for _, b in init.keyframes]
    if frame <= frames[0]:
        return boxes[0]
    if frame >= frames[-1]:
        return boxes[-1]
    hi = next(i for i, f in enumerate(frames) if f >= frame)
    lo = hi - 1
    if frames[hi] == frame:
        return boxes[hi]
    t = (frame - frames[lo]) / (frames[hi] - frames[lo])
    a, b = boxes[lo], boxes[hi]
    return BoundingBox(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
                       a.w + t * (b.w - a.w), a.h + t * (b.h - a.h))


def assign_person(evidence: BoundingBox, inits: list[RegionInit], frame: int) -> str | None:
    """Region with maximal IoU wins, requiring IoU > 0; ties break toward the
    larger intersection area, then the lexicographically smaller pseudonym.
    None means background evidence."""
    best_key = None
    best_person = None
    for init in inits:
        region = interpolate_region(init, frame)
        overlap = iou(evidence, region)
        if overlap <= 0.0:
            continue
        key = (-overlap, -intersection_area(evidence, region), init.person)
        if best_key is None or key < best_key:
            best_key = key
            best_person = init.person
    return best_person


def _median_box(boxes: list[BoundingBox]) -> BoundingBox:
    arr = np.array([[b.x, b.y, b.w, b.h] for b in boxes], np.float64)
    x, y, w, h = np.median(arr, axis=0)
    return BoundingBox(float(x), float(y), float(w), float(h))


def generate_typing_proposals(track: list[BoundingBox | None],
                              inits: list[RegionInit]) -> list[Proposal]:
    """One proposal per 90-frame window with a keyboard on >= 80% of frames."""
    proposals = []
    for start in range(0, len(track) - PROPOSAL_FRAMES + 1, PROPOSAL_FRAMES):
        window = [b for b in track[start:start + PROPOSAL_FRAMES] if b is not None]
        if len(window) < TYPING_PRESENCE_FRACTION * PROPOSAL_FRAMES:
            continue
        box = _median_box(window)
        person = assign_person(box, inits, start + PROPOSAL_FRAMES // 2)
        if person is None:
            continue
        proposals.append(Proposal("typing", person, start, box))
    return proposals


def generate_writing_proposals(windows: list[WindowRegions],
                               inits: list[RegionInit], fps: int = 30) -> list[Proposal]:
    """Four consecutive 3-second proposals per person-assigned stable region."""
    proposals = []
    per_window = WINDOW_SECONDS * fps // PROPOSAL_FRAMES
    for window in windows:
        midpoint = window.window_start + WINDOW_SECONDS * fps // 2
        for region in window.regions:
            person = assign_person(region.box, inits, midpoint)
            if person is None:
                continue
            for j in range(per_window):
                proposals.append(Proposal("writing", person,
                                          window.window_start + j * PROPOSAL_FRAMES, region.box))
    return proposals


def crop_clip(frames, proposal: Proposal, frame_rate: int) -> np.ndarray:
    """Proposal pixels: crop, letterbox to 224, resample to 3*frame_rate frames.

    Frame selection commutes with the per-frame spatial ops, so only the
    frames that survive resampling are letterboxed.
    """
    f0 = proposal.frame_start
    f1 = f0 + proposal.duration
    if f0 < 0 or f1 > frames.frame_count:
        raise ValueError(f"proposal span [{f0}, {f1}) outside available frames "
                         f"[0, {frames.frame_count})")
    stack = frames.read(f0, f1)
    rows, cols = proposal.box.pixel_slices(frames.width, frames.height)
    crop = stack[resample_indices(frame_rate)][:, rows, cols].astype(np.float32) / 255.0
    boxed = resize_letterbox(crop)
    return np.ascontiguousarray(boxed.transpose(3, 0, 1, 2))
