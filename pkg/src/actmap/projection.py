"""Temporal-projection voting over hand detections.

Hands are sampled one frame per second for 12 seconds; grid cells covered
by a hand box collect votes (at most one per sampled frame) on a
downscaled occupancy grid. Regions that keep at least the vote threshold
are stable; everything else is background noise.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundingBox, Detection

WINDOW_SECONDS = 12
DEFAULT_VOTE_THRESHOLD = 6
DEFAULT_SCALE = 8
DEFAULT_MIN_AREA_FRACTION = 0.001


@dataclass
class OccupancyMap:
    """Vote counts per downscaled grid cell for one 12-second window."""
    frame_w: int
    frame_h: int
    scale: int
    window_start: int
    counts: np.ndarray  # (grid_h, grid_w) int16

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.counts.shape


@dataclass
class StableRegion:
    box: BoundingBox
    support: int  # minimum per-cell vote count across the component


@dataclass
class WindowRegions:
    window_start: int
    regions: list[StableRegion] = field(default_factory=list)


def _grid_cells(box: BoundingBox, scale: int, grid_w: int, grid_h: int):
    """Half-open cell range (x0, x1, y0, y1) covered by a pixel box."""
    x0 = max(int(box.x // scale), 0)
    y0 = max(int(box.y // scale), 0)
    x1 = min(int(np.ceil((box.x + box.w) / scale)), grid_w)
    y1 = min(int(np.ceil((box.y + box.h) / scale)), grid_h)
    return x0, x1, y0, y1


def accumulate_window(detections: list[Detection], window_start: int, fps: int = 30,
                      frame_w: int = 858, frame_h: int = 480,
                      scale: int = DEFAULT_SCALE) -> OccupancyMap:
    """Vote map over the 12 sampled frames window_start + k*fps, k = 0..11.

    Each sampled frame contributes at most one vote per cell no matter how
    many hand boxes cover it.
    """
    grid_w = -(-frame_w // scale)
    grid_h = -(-frame_h // scale)
    counts = np.zeros((grid_h, grid_w), np.int16)
    by_frame: dict[int, list[Detection]] = {}
    for d in detections:
        if d.cls == "hand":
            by_frame.setdefault(d.frame, []).append(d)
    mask = np.empty((grid_h, grid_w), bool)
    for k in range(WINDOW_SECONDS):
        frame = window_start + k * fps
        dets = by_frame.get(frame)
        if not dets:
            continue
        mask[:] = False
        for d in dets:
            x0, x1, y0, y1 = _grid_cells(d.box, scale, grid_w, grid_h)
            mask[y0:y1, x0:x1] = True
        counts += mask
    return OccupancyMap(frame_w, frame_h, scale, window_start, counts)


def extract_stable_regions(occupancy: OccupancyMap,
                           vote_threshold: int = DEFAULT_VOTE_THRESHOLD,
                           min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION) -> list[StableRegion]:
    """Threshold, take 4-connected components, return their bounding boxes.

    Components smaller than min_area_fraction of the frame are dropped.
    A region's support is the smallest vote count across its own cells.
    """
    counts = occupancy.counts
    keep = counts >= vote_threshold
    grid_h, grid_w = keep.shape
    seen = np.zeros_like(keep, bool)
    scale = occupancy.scale
    min_cells = (min_area_fraction * occupancy.frame_w * occupancy.frame_h) / (scale * scale)
    regions: list[StableRegion] = []
    for sy in range(grid_h):
        for sx in range(grid_w):
            if not keep[sy, sx] or seen[sy, sx]:
                continue
            queue = deque([(sy, sx)])
            seen[sy, sx] = True
            cells = []
            while queue:
                y, x = queue.popleft()
                cells.append((y, x))
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < grid_h and 0 <= nx < grid_w and keep[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            if len(cells) < min_cells:
                continue
            ys = [c[0] for c in cells]
            xs = [c[1] for c in cells]
            px0 = min(xs) * scale
            py0 = min(ys) * scale
            px1 = min((max(xs) + 1) * scale, occupancy.frame_w)
            py1 = min((max(ys) + 1) * scale, occupancy.frame_h)
            support = int(min(counts[y, x] for y, x in cells))
            regions.append(StableRegion(BoundingBox(px0, py0, px1 - px0, py1 - py0), support))
    return regions


def project_session(detections: list[Detection], n_frames: int, fps: int = 30,
                    frame_w: int = 858, frame_h: int = 480,
                    vote_threshold: int = DEFAULT_VOTE_THRESHOLD,
                    scale: int = DEFAULT_SCALE,
                    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION) -> list[WindowRegions]:
    """Tile the session into non-overlapping 12-second windows and filter each."""
    window_len = WINDOW_SECONDS * fps
    out = []
    for start in range(0, n_frames, window_len):
        occ = accumulate_window(detections, start, fps, frame_w, frame_h, scale)
        regions = extract_stable_regions(occ, vote_threshold, min_area_fraction)
        out.append(WindowRegions(window_start=start, regions=regions))
    return out


@dataclass
class ReductionStats:
    raw: int
    retained: int

    @property
    def percent_reduction(self) -> float:
        return reduction_percentage(self.raw, self.retained)


def reduction_percentage(raw: int, retained: int) -> float:
    """100 * (1 - retained/raw); 0 when nothing was detected."""
    if raw == 0:
        return 0.0
    return 100.0 * (1.0 - retained / raw)


def reduction_stats(detections: list[Detection], windows: list[WindowRegions],
                    fps: int = 30) -> ReductionStats:
    """How many raw hand boxes have their centre inside a stable region."""
    window_len = WINDOW_SECONDS * fps
    by_start = {w.window_start: w for w in windows}
    raw = 0
    retained = 0
    for d in detections:
        if d.cls != "hand":
            continue
        raw += 1
        window = by_start.get((d.frame // window_len) * window_len)
        if window is None:
            continue
        cx, cy = d.box.center
        if any(r.box.contains_point(cx, cy) for r in window.regions):
            retained += 1
    return ReductionStats(raw=raw, retained=retained)
