"""Command-line interface: one subcommand per pipeline stage.

Delimited outputs land next to matplotlib figures on the report paths
(train, select, sweep, map, run). ACTMAP_OUT sets the default output
directory for subcommands that do not receive an explicit path.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import formats, mapdoc, pipeline, projection, proposals, report, synth, tracking
from .clips import extract_representative_sample, load_split
from .family import ModelConfig, build_model, count_params, load_weights, save_weights
from .frames import RawVideoReader
from .inference import DEFAULT_SWEEP_SIZES, infer_batched, sweep_batch_sizes
from .training import (GridResult, TrainConfig, select_optimal, train_model,
                       write_selection_report)

log = logging.getLogger("actmap")


def _out_path(name: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    base = os.environ.get("ACTMAP_OUT", ".")
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, name)


def _cmd_transcode_cmd(args) -> int:
    print(pipeline.transcode_command(args.input, args.output))
    return 0


def _cmd_track(args) -> int:
    reader = RawVideoReader.open(args.video)
    detections = formats.read_detections(args.detections)
    track = tracking.track_keyboard(detections, reader, fps=reader.fps)
    out = _out_path("keyboard_track.csv", args.out)
    formats.write_track(out, track)
    boxed = sum(1 for b in track if b is not None)
    print(f"tracked {boxed}/{len(track)} frames -> {out}")
    return 0


def _cmd_project(args) -> int:
    reader = RawVideoReader.open(args.video)
    detections = formats.read_detections(args.detections)
    windows = projection.project_session(
        detections, reader.frame_count, fps=reader.fps,
        frame_w=reader.width, frame_h=reader.height,
        vote_threshold=args.vote_threshold, scale=args.scale,
        min_area_fraction=args.min_area_fraction)
    out = _out_path("stable_regions.csv", args.out)
    formats.write_stable_regions(out, windows)
    stats = projection.reduction_stats(detections, windows, fps=reader.fps)
    print(f"{len(windows)} windows, {stats.raw} hand boxes -> {stats.retained} retained "
          f"({stats.percent_reduction:.1f}% reduction) -> {out}")
    return 0


def _cmd_propose(args) -> int:
    reader = RawVideoReader.open(args.video)
    inits = formats.read_region_inits(args.regions)
    if args.kind == "typing":
        if not args.track:
            raise SystemExit("--track is required for typing proposals")
        track = formats.read_track(args.track, reader.frame_count)
        props = proposals.generate_typing_proposals(track, inits)
    else:
        if not args.stable_regions:
            raise SystemExit("--stable-regions is required for writing proposals")
        windows = formats.read_stable_regions(args.stable_regions)
        props = proposals.generate_writing_proposals(windows, inits, fps=reader.fps)
    out = _out_path("proposals.csv", args.out)
    formats.write_proposals(out, props)
    print(f"{len(props)} {args.kind} proposals -> {out}")
    return 0


class _RecordClips:
    """Lazy representative-sample loader over label records."""

    def __init__(self, records, reader, frame_rate):
        self.records = records
        self.reader = reader
        self.frame_rate = frame_rate

    def __len__(self):
        return len(self.records)

    def labels(self):
        return [r.label for r in self.records]

    def load(self, i):
        clip = extract_representative_sample(self.records[i], self.reader, self.frame_rate)
        return clip.pixels, clip.label


def _train_datasets(args, config):
    if args.synthetic:
        train = synth.MovingTextureClips(args.synthetic_train, config.frame_rate, seed=args.seed)
        val = synth.MovingTextureClips(args.synthetic_val, config.frame_rate,
                                       seed=args.seed + 1)
        return train, val
    if not (args.labels and args.manifest and args.video):
        raise SystemExit("either --synthetic or --labels/--manifest/--video are required")
    split = load_split(args.labels, args.manifest)
    reader = RawVideoReader.open(args.video)
    wanted = ("typing", "no-typing") if args.kind == "typing" else ("writing", "no-writing")
    train = [r for r in split.train if r.activity in wanted]
    val = [r for r in split.val if r.activity in wanted]
    return (_RecordClips(train, reader, config.frame_rate),
            _RecordClips(val, reader, config.frame_rate))


def _cmd_train(args) -> int:
    config = ModelConfig(args.depth, args.frame_rate)
    tc = TrainConfig(min_epochs=args.min_epochs, max_epochs=args.max_epochs,
                     patience=args.patience, learning_rate=args.learning_rate,
                     batch_size=args.batch_size, seed=args.seed,
                     horizontal_flip=args.flip)
    train_set, val_set = _train_datasets(args, config)
    model, history = train_model(config, train_set, val_set, tc)
    out = _out_path(f"model_d{args.depth}_fr{args.frame_rate}.actw", args.out)
    save_weights(model, out)
    hist_path = _out_path("training_history.csv", args.history)
    with open(hist_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss", "val_auc"])
        for h in history:
            w.writerow([h.epoch, f"{h.train_loss:.6f}", f"{h.val_loss:.6f}", f"{h.val_auc:.6f}"])
    fig_path = _out_path("training_curve.png", args.figure)
    report.save_training_figure(history, fig_path)
    best = min(history, key=lambda h: h.val_loss)
    print(f"trained A(D={args.depth}, fr={args.frame_rate}), {count_params(model)} params; "
          f"best epoch {best.epoch}: val loss {best.val_loss:.4f}, val AUC {best.val_auc:.3f}")
    print(f"weights -> {out}")
    return 0


def _cmd_select(args) -> int:
    results = []
    with open(args.grid, newline="") as fh:
        for row in csv.DictReader(fh):
            config = ModelConfig(int(row["depth"]), int(row["frame_rate"]))
            results.append(GridResult(
                config=config,
                param_count=int(row.get("param_count") or count_params(build_model(config))),
                val_auc=float(row["val_auc"]),
                test_accuracy=float(row["test_accuracy"]) if row.get("test_accuracy") else None,
                weights_path=row.get("weights_path") or None))
    selection = select_optimal(results)
    out = _out_path("selection.csv", args.out)
    write_selection_report(selection, out)
    fig_path = _out_path("selection.png", args.figure)
    report.save_selection_figure(selection, fig_path)
    c = selection.chosen
    print(f"optimal architecture: D={c.config.depth}, fr={c.config.frame_rate} "
          f"(val AUC {c.val_auc}) -> {out}")
    return 0


def _cmd_infer(args) -> int:
    model = load_weights(args.weights)
    reader = RawVideoReader.open(args.video)
    props = formats.read_proposals(args.proposals)
    loader = pipeline._ProposalClipLoader(reader, props, model.config.frame_rate)
    probs = infer_batched(model, loader, args.batch_size)
    out = _out_path("classifications.csv", args.out)
    formats.write_classifications(out, probs, args.threshold)
    positive = int((probs >= args.threshold).sum())
    print(f"classified {len(props)} proposals ({positive} positive) -> {out}")
    return 0


def _cmd_sweep(args) -> int:
    model = load_weights(args.weights)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    rng = np.random.default_rng(args.seed)
    t_len = 3 * model.config.frame_rate
    clips = [rng.random((3, t_len, 224, 224), np.float32) for _ in range(args.clips)]
    reports, chosen = sweep_batch_sizes(model, clips, sizes=sizes,
                                        repetitions=args.repetitions)
    out = _out_path("throughput.csv", args.out)
    formats.write_throughput_report(out, reports)
    fig_path = _out_path("sweep_curve.png", args.figure)
    report.save_sweep_figure(reports, chosen, fig_path)
    for r in reports:
        marker = "  <- optimal" if r.batch_size == chosen else ""
        print(f"batch {r.batch_size:>3}: {r.speed_multiple:7.2f}x realtime "
              f"({r.clips_per_second:.2f} clips/s){marker}")
    print(f"table -> {out}, curve -> {fig_path}")
    return 0


def _cmd_map(args) -> int:
    props = formats.read_proposals(args.proposals)
    rows = formats.read_classifications(args.classifications)
    probs = np.zeros(len(props))
    for pid, prob, _ in rows:
        probs[pid] = prob
    instances = mapdoc.instances_from_classifications(props, probs, args.threshold)
    clusters = mapdoc.cluster_instances(instances, args.gap_seconds)
    clusters = mapdoc.filter_min_duration(clusters, args.min_duration_seconds)
    one_keyboard = not args.no_one_keyboard
    if one_keyboard:
        clusters = mapdoc.resolve_simultaneous_typing(clusters)
    doc = mapdoc.ActivityMapDoc(
        session_id=args.session_id, duration_seconds=args.duration_seconds,
        video_url=args.video_url, clusters=clusters,
        parameters={"gap_seconds": args.gap_seconds,
                    "min_duration_seconds": args.min_duration_seconds,
                    "threshold": args.threshold, "one_keyboard_rule": one_keyboard})
    if args.gt:
        doc.evaluation = mapdoc.evaluate_against_ground_truth(
            clusters, formats.read_gt_intervals(args.gt))
    mapdoc.attach_links(doc)
    out = _out_path("actmap.json", args.out)
    mapdoc.emit_map(doc, out)
    fig_path = _out_path("activity_map.png", args.figure)
    report.save_activity_map_figure(doc, fig_path)
    print(f"{len(clusters)} clusters -> {out}, figure -> {fig_path}")
    return 0


def _cmd_run(args) -> int:
    cfg = pipeline.read_session_config(args.config)
    result = pipeline.run_pipeline(cfg, args.kind)
    session_seconds = result.doc.duration_seconds
    print(report.render_timing_report(result.timings, session_seconds), end="")
    print(f"map -> {result.outputs['map']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actmap",
        description="Localize typing/writing activity in long session videos "
                    "and build interactive activity maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcode-cmd", help="print the ffmpeg transcode command")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_transcode_cmd)

    p = sub.add_parser("track", help="keyboard track from scheduled detections + KCF")
    p.add_argument("--video", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("project", help="stable hand regions by 12-second projection voting")
    p.add_argument("--video", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out")
    p.add_argument("--vote-threshold", type=int, default=projection.DEFAULT_VOTE_THRESHOLD)
    p.add_argument("--scale", type=int, default=projection.DEFAULT_SCALE)
    p.add_argument("--min-area-fraction", type=float,
                   default=projection.DEFAULT_MIN_AREA_FRACTION)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("propose", help="person-attributed 3-second proposals")
    p.add_argument("--kind", choices=["typing", "writing"], required=True)
    p.add_argument("--video", required=True)
    p.add_argument("--regions", required=True)
    p.add_argument("--track")
    p.add_argument("--stable-regions")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_propose)

    p = sub.add_parser("train", help="train one family member")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--frame-rate", type=int, required=True)
    p.add_argument("--kind", choices=["typing", "writing"], default="typing")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--video")
    p.add_argument("--synthetic", action="store_true",
                   help="train on the built-in moving-texture dataset")
    p.add_argument("--synthetic-train", type=int, default=200)
    p.add_argument("--synthetic-val", type=int, default=50)
    p.add_argument("--min-epochs", type=int, default=50)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flip", action="store_true", help="horizontal-flip augmentation")
    p.add_argument("--out")
    p.add_argument("--history")
    p.add_argument("--figure")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("select", help="pick the optimal architecture from grid results")
    p.add_argument("--grid", required=True,
                   help="CSV with depth,frame_rate,param_count,val_auc[,test_accuracy]")
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("infer", help="classify proposal clips in batches")
    p.add_argument("--weights", required=True)
    p.add_argument("--video", required=True)
    p.add_argument("--proposals", required=True)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("sweep", help="benchmark inference across batch sizes")
    p.add_argument("--weights", required=True)
    p.add_argument("--clips", type=int, default=max(DEFAULT_SWEEP_SIZES))
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_SWEEP_SIZES))
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("map", help="cluster classified proposals into an activity map")
    p.add_argument("--proposals", required=True)
    p.add_argument("--classifications", required=True)
    p.add_argument("--session-id", required=True)
    p.add_argument("--duration-seconds", type=float, required=True)
    p.add_argument("--video-url", default="https://example.org/video")
    p.add_argument("--gap-seconds", type=float, default=mapdoc.DEFAULT_GAP_SECONDS)
    p.add_argument("--min-duration-seconds", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--no-one-keyboard", action="store_true")
    p.add_argument("--gt", help="ground-truth intervals CSV for TP/FP/FN marking")
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("run", help="full pipeline from a session config")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=["typing", "writing"], required=True)
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ACTMAP_LOGLEVEL", "WARNING"),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
