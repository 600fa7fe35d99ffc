"""Boxes, detections and overlap arithmetic shared across the pipeline."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, top-left anchored."""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains_point(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def clamped(self, frame_w: int, frame_h: int) -> "BoundingBox":
        """Clip to frame bounds; raises if nothing remains."""
        x0 = min(max(self.x, 0.0), frame_w)
        y0 = min(max(self.y, 0.0), frame_h)
        x1 = min(max(self.x + self.w, 0.0), frame_w)
        y1 = min(max(self.y + self.h, 0.0), frame_h)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            raise ValueError(f"box {self} lies outside a {frame_w}x{frame_h} frame")
        return BoundingBox(x0, y0, x1 - x0, y1 - y0)

    def pixel_slices(self, frame_w: int, frame_h: int) -> tuple[slice, slice]:
        """Integer (rows, cols) slices of the clamped box, at least 1px each."""
        b = self.clamped(frame_w, frame_h)
        x0, y0 = int(round(b.x)), int(round(b.y))
        x1, y1 = int(round(b.x + b.w)), int(round(b.y + b.h))
        x0, y0 = min(x0, frame_w - 1), min(y0, frame_h - 1)
        x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
        return slice(y0, min(y1, frame_h)), slice(x0, min(x1, frame_w))


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class Detection:
    """One object-detector output at a frame."""
    frame: int
    cls: str
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0,1], got {self.score}")
