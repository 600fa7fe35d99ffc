"""Ground-truth labels, representative 3-second samples and session splits.

A labelled activity interval becomes one training sample: the centred
3-second window is cropped to the label box, letterboxed to 224x224 and
temporally resampled to the model frame rate. Splitting is strictly by
session id.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ShapeError
from .geometry import BoundingBox

log = logging.getLogger(__name__)

ACTIVITIES = ("typing", "no-typing", "writing", "no-writing")
POSITIVE_ACTIVITIES = ("typing", "writing")
SOURCE_FPS = 30
CLIP_SECONDS = 3
CLIP_SIDE = 224

LABELS_FIELDS = ["session_id", "activity", "person", "f0", "f1", "x", "y", "w", "h", "excluded"]
MANIFEST_FIELDS = ["session_id", "split"]
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ActivityLabelRecord:
    """One labelled activity interval at 30 fps; box in source pixels."""
    session_id: str
    activity: str
    person: str  # "Kidx" marks absent-person negatives
    frame_start: int
    frame_end: int
    box: BoundingBox
    excluded: bool = False

    def __post_init__(self):
        if self.activity not in ACTIVITIES:
            raise FormatError(f"unknown activity '{self.activity}'")
        if self.frame_end - self.frame_start < CLIP_SECONDS * SOURCE_FPS:
            raise FormatError(f"record spans {self.frame_end - self.frame_start} frames, "
                              f"minimum is {CLIP_SECONDS * SOURCE_FPS} (3 s at 30 fps)")

    @property
    def label(self) -> int:
        return 1 if self.activity in POSITIVE_ACTIVITIES else 0

    @property
    def kind(self) -> str:
        """The binary task this record belongs to: typing or writing."""
        return "typing" if "typing" in self.activity else "writing"


@dataclass
class SampleClip:
    """Pixels in [0,1], layout C x (3*fr) x 224 x 224."""
    pixels: np.ndarray
    label: int
    source: ActivityLabelRecord | None = None


@dataclass
class DatasetSplit:
    train: list[ActivityLabelRecord] = field(default_factory=list)
    val: list[ActivityLabelRecord] = field(default_factory=list)
    test: list[ActivityLabelRecord] = field(default_factory=list)

    def tally(self, part: str) -> dict[str, int]:
        """Record count per activity for one partition."""
        out = {a: 0 for a in ACTIVITIES}
        for rec in getattr(self, part):
            out[rec.activity] += 1
        return out


# -- geometry / resampling ----------------------------------------------------

def resize_bilinear(stack: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of (T, H, W, C) float32, half-pixel centre convention."""
    t, h, w, c = stack.shape
    if h == out_h and w == out_w:
        return stack.astype(np.float32, copy=False)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0).astype(np.float32)[None, :, None, None]
    wx = (xs - x0).astype(np.float32)[None, None, :, None]
    s = stack.astype(np.float32, copy=False)
    top = s[:, y0][:, :, x0] * (1 - wx) + s[:, y0][:, :, x1] * wx
    bot = s[:, y1][:, :, x0] * (1 - wx) + s[:, y1][:, :, x1] * wx
    return top * (1 - wy) + bot * wy


def resize_letterbox(stack: np.ndarray, target: int = CLIP_SIDE) -> np.ndarray:
    """Scale the longer edge to ``target`` (bilinear), keep aspect, zero-pad square.

    With an odd padding remainder the extra row/column goes to the
    bottom/right band.
    """
    if stack.ndim != 4:
        raise ShapeError(f"letterbox expects (T,H,W,C), got {stack.ndim} axes")
    t, h, w, c = stack.shape
    if h < 1 or w < 1 or t < 1:
        raise ShapeError(f"zero-area crop {stack.shape}")
    scale = target / max(h, w)
    new_h = target if h >= w else max(1, round(h * scale))
    new_w = target if w > h else max(1, round(w * scale))
    resized = resize_bilinear(stack, new_h, new_w)
    out = np.zeros((t, target, target, c), np.float32)
    pad_y = (target - new_h) // 2
    pad_x = (target - new_w) // 2
    out[:, pad_y:pad_y + new_h, pad_x:pad_x + new_w] = resized
    return out


def temporal_resample(clip: np.ndarray, frame_rate: int) -> np.ndarray:
    """Uniform frame selection from a 90-frame 30 fps clip down to 3*fr frames.

    Keeps indices round(i*30/fr) for i = 0..3*fr-1 (half-up rounding).
    """
    if frame_rate not in (10, 20, 30):
        raise ValueError(f"frame rate must be 10, 20 or 30, got {frame_rate}")
    if clip.shape[0] != CLIP_SECONDS * SOURCE_FPS:
        raise ShapeError(f"expected a 90-frame clip, got {clip.shape[0]} frames")
    idx = resample_indices(frame_rate)
    return clip[idx]


def resample_indices(frame_rate: int) -> np.ndarray:
    step = SOURCE_FPS / frame_rate
    return np.floor(np.arange(CLIP_SECONDS * frame_rate) * step + 0.5).astype(np.intp)


def representative_window(record: ActivityLabelRecord) -> tuple[int, int]:
    """The centred 3-second frame window [start, start+90) of a record."""
    span = record.frame_end - record.frame_start
    if span < CLIP_SECONDS * SOURCE_FPS:
        raise ValueError(f"record spans {span} frames, shorter than 3 s")
    mid = (record.frame_start + record.frame_end) // 2
    start = mid - (CLIP_SECONDS * SOURCE_FPS) // 2
    return start, start + CLIP_SECONDS * SOURCE_FPS


def extract_representative_sample(record: ActivityLabelRecord, frames,
                                  frame_rate: int = SOURCE_FPS) -> SampleClip:
    """Centred 3-second sample: crop to the label box, letterbox, resample."""
    f0, f1 = representative_window(record)
    stack = frames.read(f0, f1)
    rows, cols = record.box.pixel_slices(frames.width, frames.height)
    crop = stack[:, rows, cols].astype(np.float32) / 255.0
    boxed = resize_letterbox(crop)
    sampled = temporal_resample(boxed, frame_rate)
    pixels = np.ascontiguousarray(sampled.transpose(3, 0, 1, 2))
    return SampleClip(pixels=pixels, label=record.label, source=record)


# -- files ---------------------------------------------------------------------

def read_labels(path) -> list[ActivityLabelRecord]:
    """Parse the labels file; records flagged excluded are skipped."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LABELS_FIELDS:
            raise FormatError(f"labels header {reader.fieldnames} != {LABELS_FIELDS}")
        for line, row in enumerate(reader, start=2):
            try:
                excluded = row["excluded"].strip().lower() in ("1", "true", "yes")
                rec = ActivityLabelRecord(
                    session_id=row["session_id"], activity=row["activity"], person=row["person"],
                    frame_start=int(row["f0"]), frame_end=int(row["f1"]),
                    box=BoundingBox(float(row["x"]), float(row["y"]),
                                    float(row["w"]), float(row["h"])),
                    excluded=excluded)
            except (KeyError, ValueError, FormatError) as exc:
                raise FormatError(f"{path}:{line}: {exc}") from exc
            if not rec.excluded:
                records.append(rec)
    return records


def write_labels(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_FIELDS)
        for r in records:
            writer.writerow([r.session_id, r.activity, r.person, r.frame_start, r.frame_end,
                             r.box.x, r.box.y, r.box.w, r.box.h, int(r.excluded)])


def read_split_manifest(path) -> dict[str, str]:
    """session_id -> train|val|test; a session may appear only once."""
    mapping: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_FIELDS:
            raise FormatError(f"manifest header {reader.fieldnames} != {MANIFEST_FIELDS}")
        for line, row in enumerate(reader, start=2):
            sid, split = row["session_id"], row["split"]
            if split not in SPLITS:
                raise FormatError(f"{path}:{line}: unknown split '{split}'")
            if sid in mapping:
                raise FormatError(f"{path}:{line}: session '{sid}' listed more than once")
            mapping[sid] = split
    return mapping


def load_split(labels_path, manifest_path) -> DatasetSplit:
    """Partition label records by session membership.

    Sessions missing from the manifest are routed to train with a warning.
    """
    records = read_labels(labels_path)
    mapping = read_split_manifest(manifest_path)
    split = DatasetSplit()
    warned: set[str] = set()
    for rec in records:
        part = mapping.get(rec.session_id)
        if part is None:
            if rec.session_id not in warned:
                log.warning("session '%s' not in split manifest; routing to train", rec.session_id)
                warned.add(rec.session_id)
            part = "train"
        getattr(split, {"train": "train", "val": "val", "test": "test"}[part]).append(rec)
    return split
