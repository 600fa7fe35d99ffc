"""Session orchestration: configs, staged execution, timing reports.

Stages communicate only through the documented files and run in order
(track/project, propose, classify, map). Every stage writes its output
before the next starts, so partial results survive a failure; a failing
stage aborts with its name and cause.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, fields

from . import formats, mapdoc, projection, proposals, report, tracking
from .errors import FormatError, StageError
from .family import load_weights
from .frames import RawVideoReader
from .inference import infer_batched
from .report import StageTiming

CONFIG_SCHEMA = "actcfg/1"


@dataclass
class SessionConfig:
    session_id: str
    video: str
    detections: str
    regions: str
    weights: str
    out_dir: str
    video_url: str = "https://example.org/video"
    gt_intervals: str = ""
    gap_seconds: float = 3.0
    min_duration_seconds: float = 0.0
    threshold: float = 0.5
    vote_threshold: int = 6
    occupancy_scale: int = 8
    min_area_fraction: float = 0.001
    batch_size: int = 16
    one_keyboard_rule: bool = True

    def validate(self):
        for name in ("video", "detections", "regions", "weights"):
            path = getattr(self, name)
            if not os.path.exists(path):
                raise FormatError(f"config field '{name}': no such file {path}")
        if self.gt_intervals and not os.path.exists(self.gt_intervals):
            raise FormatError(f"config field 'gt_intervals': no such file {self.gt_intervals}")


_PATH_FIELDS = ("video", "detections", "regions", "weights", "out_dir", "gt_intervals")


def read_session_config(path) -> SessionConfig:
    """Versioned key=value file; relative paths resolve against the file."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != CONFIG_SCHEMA:
        raise FormatError(f"{path}: first line must be '{CONFIG_SCHEMA}'")
    values: dict[str, str] = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise FormatError(f"{path}: expected 'key = value', got '{ln}'")
        key, _, value = ln.partition("=")
        values[key.strip()] = value.strip()
    known = {f.name: f.type for f in fields(SessionConfig)}
    unknown = set(values) - set(known)
    if unknown:
        raise FormatError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for f in fields(SessionConfig):
        if f.name not in values:
            continue
        raw = values[f.name]
        if f.type == "float":
            kwargs[f.name] = float(raw)
        elif f.type == "int":
            kwargs[f.name] = int(raw)
        elif f.type == "bool":
            kwargs[f.name] = raw.lower() in ("1", "true", "yes")
        else:
            kwargs[f.name] = raw
    missing = [n for n in ("session_id", "video", "detections", "regions", "weights", "out_dir")
               if n not in kwargs]
    if missing:
        raise FormatError(f"{path}: missing required keys {missing}")
    for name in _PATH_FIELDS:
        if kwargs.get(name):
            kwargs[name] = os.path.normpath(os.path.join(base, kwargs[name]))
    return SessionConfig(**kwargs)


def write_session_config(cfg: SessionConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(CONFIG_SCHEMA + "\n")
        for f in fields(SessionConfig):
            fh.write(f"{f.name} = {getattr(cfg, f.name)}\n")


# -- transcode companion -------------------------------------------------------------

TRANSCODE_TEMPLATE = """ffmpeg -i {input} \\
  -vf scale=858:480 \\
  -c:v libx264 \\
  -c:a mp3 -b:a 255k \\
  -b:v 2.5M \\
  -maxrate 2.5M \\
  -bufsize 1.25M \\
  -r 30 \\
  -x264-params \\
  "keyint=30:min-keyint=30:no-scenecut" \\
  {output}"""


def transcode_command(input_path: str, output_path: str) -> str:
    """The standard transcode command with the placeholders substituted."""
    import shlex
    if not input_path or not output_path:
        raise ValueError("input and output paths must be nonempty")
    return TRANSCODE_TEMPLATE.format(input=shlex.quote(input_path),
                                     output=shlex.quote(output_path))


# -- pipeline -------------------------------------------------------------------------


@dataclass
class PipelineResult:
    doc: mapdoc.ActivityMapDoc
    timings: list[StageTiming] = field(default_factory=list)
    outputs: dict = field(default_factory=dict)


class _ProposalClipLoader:
    """Lazy crop-and-resample access for the batched classifier."""

    def __init__(self, frames, props, frame_rate):
        self.frames = frames
        self.props = props
        self.frame_rate = frame_rate

    def __len__(self):
        return len(self.props)

    def load(self, i):
        return proposals.crop_clip(self.frames, self.props[i], self.frame_rate)


def _staged(timings, stage):
    class _Ctx:
        def __enter__(self):
            self.t0 = time.perf_counter()

        def __exit__(self, exc_type, exc, tb):
            if exc is not None:
                raise StageError(stage, exc) from exc
            timings.append(StageTiming(stage, time.perf_counter() - self.t0))
    return _Ctx()


def run_pipeline(cfg: SessionConfig, kind: str) -> PipelineResult:
    """Execute track/project, propose, classify and map for one session."""
    if kind not in ("typing", "writing"):
        raise ValueError(f"kind must be typing or writing, got '{kind}'")
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = lambda name: os.path.join(cfg.out_dir, name)  # noqa: E731
    timings: list[StageTiming] = []
    outputs: dict = {}

    reader = RawVideoReader.open(cfg.video)
    if reader.fps != 30:
        raise FormatError(f"pipeline input must be 30 fps, descriptor says {reader.fps}")
    detections = formats.read_detections(cfg.detections)
    inits = formats.read_region_inits(cfg.regions)
    model = load_weights(cfg.weights)

    if kind == "typing":
        with _staged(timings, "keyboard tracking"):
            track = tracking.track_keyboard(detections, reader, fps=reader.fps)
            outputs["track"] = out("keyboard_track.csv")
            formats.write_track(outputs["track"], track)
        with _staged(timings, "typing proposals"):
            props = proposals.generate_typing_proposals(track, inits)
            outputs["proposals"] = out("proposals.csv")
            formats.write_proposals(outputs["proposals"], props)
    else:
        with _staged(timings, "hand projection filtering"):
            windows = projection.project_session(
                detections, reader.frame_count, fps=reader.fps,
                frame_w=reader.width, frame_h=reader.height,
                vote_threshold=cfg.vote_threshold, scale=cfg.occupancy_scale,
                min_area_fraction=cfg.min_area_fraction)
            outputs["stable_regions"] = out("stable_regions.csv")
            formats.write_stable_regions(outputs["stable_regions"], windows)
        with _staged(timings, "writing proposals"):
            props = proposals.generate_writing_proposals(windows, inits, fps=reader.fps)
            outputs["proposals"] = out("proposals.csv")
            formats.write_proposals(outputs["proposals"], props)

    with _staged(timings, "clip classification"):
        loader = _ProposalClipLoader(reader, props, model.config.frame_rate)
        probs = infer_batched(model, loader, cfg.batch_size)
        outputs["classifications"] = out("classifications.csv")
        formats.write_classifications(outputs["classifications"], probs, cfg.threshold)

    with _staged(timings, "activity map"):
        instances = mapdoc.instances_from_classifications(props, probs, cfg.threshold,
                                                          fps=reader.fps)
        clusters = mapdoc.cluster_instances(instances, cfg.gap_seconds)
        clusters = mapdoc.filter_min_duration(clusters, cfg.min_duration_seconds)
        if kind == "typing" and cfg.one_keyboard_rule:
            clusters = mapdoc.resolve_simultaneous_typing(clusters)
        doc = mapdoc.ActivityMapDoc(
            session_id=cfg.session_id,
            duration_seconds=reader.frame_count / reader.fps,
            video_url=cfg.video_url,
            clusters=clusters,
            parameters={"kind": kind, "gap_seconds": cfg.gap_seconds,
                        "min_duration_seconds": cfg.min_duration_seconds,
                        "threshold": cfg.threshold,
                        "one_keyboard_rule": kind == "typing" and cfg.one_keyboard_rule,
                        "model_depth": model.config.depth,
                        "model_frame_rate": model.config.frame_rate})
        if cfg.gt_intervals:
            gt = formats.read_gt_intervals(cfg.gt_intervals)
            doc.evaluation = mapdoc.evaluate_against_ground_truth(clusters, gt)
        mapdoc.attach_links(doc)
        outputs["map"] = out("actmap.json")
        mapdoc.emit_map(doc, outputs["map"])
        outputs["figure"] = out("activity_map.png")
        report.save_activity_map_figure(doc, outputs["figure"])

    session_seconds = reader.frame_count / reader.fps
    outputs["timing"] = out("timing.txt")
    report.write_timing_report(timings, session_seconds, outputs["timing"])
    return PipelineResult(doc=doc, timings=timings, outputs=outputs)
