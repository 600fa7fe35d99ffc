"""Delimited stage files: detections, tracks, regions, proposals, results.

Every pipeline stage communicates through one of these CSV formats; exact
field names are part of the contract and documented in the README.
"""
from __future__ import annotations

import csv

from .errors import FormatError
from .geometry import BoundingBox, Detection
from .mapdoc import GroundTruthInterval
from .projection import StableRegion, WindowRegions
from .proposals import Proposal, RegionInit

DETECTIONS_FIELDS = ["frame", "class", "x", "y", "w", "h", "score"]
TRACK_FIELDS = ["frame", "x", "y", "w", "h"]
REGION_INIT_FIELDS = ["person", "frame", "x", "y", "w", "h"]
STABLE_REGIONS_FIELDS = ["window_start", "x", "y", "w", "h", "support"]
PROPOSALS_FIELDS = ["kind", "person", "frame_start", "x", "y", "w", "h"]
CLASSIFICATIONS_FIELDS = ["proposal_id", "probability", "label_at_0.5"]
THROUGHPUT_FIELDS = ["batch_size", "clips_per_second", "speed_multiple",
                     "peak_model_memory_bytes", "wall_seconds"]


def _reader(path, fields):
    fh = open(path, newline="")
    reader = csv.DictReader(fh)
    if reader.fieldnames != fields:
        fh.close()
        raise FormatError(f"{path}: header {reader.fieldnames} != {fields}")
    return fh, reader


def read_detections(path) -> list[Detection]:
    fh, reader = _reader(path, DETECTIONS_FIELDS)
    with fh:
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(Detection(frame=int(row["frame"]), cls=row["class"],
                                     box=BoundingBox(float(row["x"]), float(row["y"]),
                                                     float(row["w"]), float(row["h"])),
                                     score=float(row["score"])))
            except ValueError as exc:
                raise FormatError(f"{path}:{line}: {exc}") from exc
        return out


def write_detections(path, detections) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DETECTIONS_FIELDS)
        for d in detections:
            w.writerow([d.frame, d.cls, d.box.x, d.box.y, d.box.w, d.box.h, d.score])


def write_track(path, track) -> None:
    """Per-frame keyboard boxes; frames without a box are omitted."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACK_FIELDS)
        for frame, box in enumerate(track):
            if box is not None:
                w.writerow([frame, box.x, box.y, box.w, box.h])


def read_track(path, n_frames: int) -> list[BoundingBox | None]:
    fh, reader = _reader(path, TRACK_FIELDS)
    with fh:
        track: list[BoundingBox | None] = [None] * n_frames
        for line, row in enumerate(reader, start=2):
            frame = int(row["frame"])
            if not 0 <= frame < n_frames:
                raise FormatError(f"{path}:{line}: frame {frame} outside 0..{n_frames - 1}")
            track[frame] = BoundingBox(float(row["x"]), float(row["y"]),
                                       float(row["w"]), float(row["h"]))
        return track


def write_region_inits(path, inits) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REGION_INIT_FIELDS)
        for init in inits:
            for frame, box in init.keyframes:
                w.writerow([init.person, frame, box.x, box.y, box.w, box.h])


def read_region_inits(path) -> list[RegionInit]:
    fh, reader = _reader(path, REGION_INIT_FIELDS)
    with fh:
        keyframes: dict[str, list[tuple[int, BoundingBox]]] = {}
        for line, row in enumerate(reader, start=2):
            try:
                keyframes.setdefault(row["person"], []).append(
                    (int(row["frame"]), BoundingBox(float(row["x"]), float(row["y"]),
                                                    float(row["w"]), float(row["h"]))))
            except ValueError as exc:
                raise FormatError(f"{path}:{line}: {exc}") from exc
        inits = []
        for person, kfs in keyframes.items():
            try:
                inits.append(RegionInit(person, tuple(sorted(kfs))))
            except ValueError as exc:
                raise FormatError(f"{path}: person '{person}': {exc}") from exc
        return inits


def write_stable_regions(path, windows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STABLE_REGIONS_FIELDS)
        for win in windows:
            for r in win.regions:
                w.writerow([win.window_start, r.box.x, r.box.y, r.box.w, r.box.h, r.support])


def read_stable_regions(path) -> list[WindowRegions]:
    fh, reader = _reader(path, STABLE_REGIONS_FIELDS)
    with fh:
        by_start: dict[int, WindowRegions] = {}
        for line, row in enumerate(reader, start=2):
            try:
                start = int(row["window_start"])
                region = StableRegion(BoundingBox(float(row["x"]), float(row["y"]),
                                                  float(row["w"]), float(row["h"])),
                                      support=int(row["support"]))
            except ValueError as exc:
                raise FormatError(f"{path}:{line}: {exc}") from exc
            by_start.setdefault(start, WindowRegions(window_start=start)).regions.append(region)
        return [by_start[k] for k in sorted(by_start)]


def write_proposals(path, proposals) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROPOSALS_FIELDS)
        for p in proposals:
            w.writerow([p.activity_kind, p.person, p.frame_start,
                        p.box.x, p.box.y, p.box.w, p.box.h])


def read_proposals(path) -> list[Proposal]:
    fh, reader = _reader(path, PROPOSALS_FIELDS)
    with fh:
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(Proposal(row["kind"], row["person"], int(row["frame_start"]),
                                    BoundingBox(float(row["x"]), float(row["y"]),
                                                float(row["w"]), float(row["h"]))))
            except ValueError as exc:
                raise FormatError(f"{path}:{line}: {exc}") from exc
        return out


def write_classifications(path, probabilities, threshold: float = 0.5) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CLASSIFICATIONS_FIELDS)
        for i, p in enumerate(probabilities):
            w.writerow([i, f"{float(p):.6f}", int(p >= threshold)])


def read_classifications(path) -> list[tuple[int, float, int]]:
    fh, reader = _reader(path, CLASSIFICATIONS_FIELDS)
    with fh:
        return [(int(r["proposal_id"]), float(r["probability"]), int(r["label_at_0.5"]))
                for r in reader]


GT_INTERVALS_FIELDS = ["person", "kind", "t_start", "t_end"]


def read_gt_intervals(path) -> list[GroundTruthInterval]:
    """Ground-truth activity intervals in seconds, for TP/FP/FN marking."""
    fh, reader = _reader(path, GT_INTERVALS_FIELDS)
    with fh:
        return [GroundTruthInterval(r["person"], r["kind"],
                                    float(r["t_start"]), float(r["t_end"]))
                for r in reader]


def write_gt_intervals(path, intervals) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GT_INTERVALS_FIELDS)
        for g in intervals:
            w.writerow([g.person, g.kind, g.t_start, g.t_end])


def write_throughput_report(path, reports) -> None:
    """Mirror of the batch-size optimization table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(THROUGHPUT_FIELDS)
        for r in reports:
            w.writerow([r.batch_size, f"{r.clips_per_second:.4f}", f"{r.speed_multiple:.4f}",
                        r.peak_model_memory_bytes, f"{r.wall_seconds:.6f}"])
