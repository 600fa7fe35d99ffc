"""Stage timing reports and matplotlib figure rendering.

Timing rows follow the end-to-end tables: HH:MM:SS durations and a
realtime multiple "(4 x)" on the total, where the multiple is
session_seconds / wall_seconds shown with at most two significant digits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass
class StageTiming:
    stage: str
    wall_seconds: float

    def __post_init__(self):
        if self.wall_seconds < 0:
            raise ValueError("durations cannot be negative")


def format_hms(seconds: float) -> str:
    total = int(round(seconds))
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}:{total % 60:02d}"


def format_multiple(x: float) -> str:
    """At most two significant digits, no exponent, no trailing zeros."""
    if x <= 0:
        return "0"
    digits = max(0, 1 - int(math.floor(math.log10(abs(x)))))
    s = f"{round(x, digits):.{digits}f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


def realtime_multiple(session_seconds: float, wall_seconds: float) -> float:
    if wall_seconds <= 0:
        return 0.0
    return session_seconds / wall_seconds


def render_timing_report(timings: list[StageTiming], session_seconds: float) -> str:
    """Per-stage rows plus a total row with the realtime multiple."""
    width = max([len(t.stage) for t in timings] + [len("total inference time")]) + 2
    lines = [f"{'stage':<{width}}duration"]
    for t in timings:
        lines.append(f"{t.stage:<{width}}{format_hms(t.wall_seconds)}")
    total = sum(t.wall_seconds for t in timings)
    mult = format_multiple(realtime_multiple(session_seconds, total))
    lines.append(f"{'total inference time':<{width}}{format_hms(total)} ({mult} ×)")
    return "\n".join(lines) + "\n"


def write_timing_report(timings, session_seconds: float, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_timing_report(timings, session_seconds))


# -- figures -------------------------------------------------------------------------

def save_sweep_figure(reports, chosen: int, path) -> None:
    """Inference speed against batch size, optimum marked."""
    sizes = [r.batch_size for r in reports]
    speeds = [r.speed_multiple for r in reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, speeds, "o-")
    best = max(speeds)
    ax.annotate(f"optimal: {chosen}", xy=(chosen, best),
                xytext=(chosen, best * 0.8), arrowprops=dict(arrowstyle="->"))
    ax.set_xscale("log", base=2)
    ax.set_xticks(sizes)
    ax.set_xticklabels([str(s) for s in sizes])
    ax.set_xlabel("batch size (clips)")
    ax.set_ylabel("speed (x realtime)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_training_figure(history, path) -> None:
    """Train/validation loss and validation AUC per epoch."""
    epochs = [h.epoch for h in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [h.train_loss for h in history], label="train loss")
    ax.plot(epochs, [h.val_loss for h in history], label="val loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("BCE loss")
    ax2 = ax.twinx()
    ax2.plot(epochs, [h.val_auc for h in history], "g--", label="val AUC")
    ax2.set_ylabel("validation AUC")
    ax2.set_ylim(0, 1.05)
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_selection_figure(report, path) -> None:
    """Validation AUC per family member, grouped by frame rate."""
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [f"D{r.config.depth}@{r.config.frame_rate}" for r in report.results]
    aucs = [r.val_auc for r in report.results]
    colors = ["tab:green" if r.config == report.chosen.config else "tab:blue"
              for r in report.results]
    ax.bar(range(len(labels)), aucs, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("validation AUC")
    ax.set_ylim(0, 1.0)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


_EVAL_COLORS = {"tp": "tab:green", "fp": "gold", "fn": "tab:red"}


def save_activity_map_figure(doc, path) -> None:
    """Static render of the activity map: one lane per person, bars per cluster."""
    persons = sorted({c.person for c in doc.clusters})
    if doc.evaluation:
        persons = sorted(set(persons) | {g["person"] for g in doc.evaluation.get("fn", [])})
    lane = {p: i for i, p in enumerate(persons)}
    fig, ax = plt.subplots(figsize=(10, 1.2 + 0.6 * max(len(persons), 1)))
    marks = {}
    if doc.evaluation:
        for key in ("tp", "fp"):
            for idx in doc.evaluation.get(key, []):
                marks[idx] = key
    for i, c in enumerate(doc.clusters):
        color = _EVAL_COLORS.get(marks.get(i), "tab:blue")
        ax.barh(lane[c.person], c.t_end - c.t_start, left=c.t_start, height=0.5,
                color=color, edgecolor="black", linewidth=0.4)
    if doc.evaluation:
        for g in doc.evaluation.get("fn", []):
            ax.barh(lane[g["person"]], g["t_end"] - g["t_start"], left=g["t_start"],
                    height=0.2, color=_EVAL_COLORS["fn"], alpha=0.8)
    ax.set_yticks(range(len(persons)))
    ax.set_yticklabels(persons)
    ax.set_xlim(0, max(doc.duration_seconds, 1.0))
    ax.set_xlabel("session time (s)")
    ax.set_title(f"{doc.session_id}: activity map")
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
