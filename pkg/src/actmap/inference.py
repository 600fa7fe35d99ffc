"""Batched classification, batch-size sweeping and memory accounting.

Clip loading runs on a feeder thread ahead of classification through a
bounded queue (decoding is the known bottleneck), so wall times measured
here include loading, matching the end-to-end framing of the stage timing
tables. Speeds are reported as x-realtime: n-times means n*30 source
frames classified per wall second.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass

import numpy as np

from .family import Model, count_params

SOURCE_FPS = 30
CLIP_SECONDS = 3
DEFAULT_SWEEP_SIZES = (1, 2, 4, 8, 16, 32)
QUEUE_DEPTH_BATCHES = 2


@dataclass
class ThroughputReport:
    batch_size: int
    clips_per_second: float
    speed_multiple: float
    peak_model_memory_bytes: int
    wall_seconds: float


class _Feeder(threading.Thread):
    """Stacks clips into batches and keeps a bounded queue ahead of compute."""

    def __init__(self, clips, batch_size: int, out: queue.Queue):
        super().__init__(daemon=True)
        self.clips = clips
        self.batch_size = batch_size
        self.out = out

    def run(self):
        try:
            n = len(self.clips)
            load = self.clips.load if hasattr(self.clips, "load") else self.clips.__getitem__
            for start in range(0, n, self.batch_size):
                stop = min(start + self.batch_size, n)
                batch = np.stack([np.asarray(load(i), np.float32) for i in range(start, stop)])
                self.out.put((start, batch))
            self.out.put(None)
        except BaseException as exc:  # propagate into the consumer
            self.out.put(exc)


def infer_batched(model: Model, clips, batch_size: int) -> np.ndarray:
    """Per-clip probabilities in input order; the final partial batch is
    processed as-is (no padding)."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = len(clips)
    probs = np.empty(n, np.float64)
    if n == 0:
        return probs
    feed: queue.Queue = queue.Queue(maxsize=QUEUE_DEPTH_BATCHES)
    feeder = _Feeder(clips, batch_size, feed)
    feeder.start()
    try:
        while True:
            item = feed.get()
            if item is None:
                break
            if isinstance(item, BaseException):
                raise item
            start, batch = item
            probs[start:start + batch.shape[0]] = model.predict(batch)
    finally:
        feeder.join(timeout=1.0)
    return probs


def memory_estimate(model: Model, batch_size: int) -> int:
    """4 bytes per parameter plus a double-buffered activation footprint."""
    activations = sum(model.activation_volumes())
    return 4 * (count_params(model) + 2 * batch_size * activations)


def choose_from_curve(curve: dict[int, float]) -> int:
    """Argmax of a recorded speed curve; ties go to the smaller batch."""
    return min(curve, key=lambda b: (-curve[b], b))


def sweep_batch_sizes(model: Model, clips, sizes=DEFAULT_SWEEP_SIZES,
                      repetitions: int = 3) -> tuple[list[ThroughputReport], int]:
    """Median-of-repetitions wall time per batch size; returns the full curve
    and the speed-optimal size."""
    sizes = sorted(sizes)
    if len(clips) < max(sizes):
        raise ValueError(f"sweep needs at least {max(sizes)} clips, got {len(clips)}")
    if repetitions < 3:
        raise ValueError("sweep needs at least 3 repetitions")
    n = len(clips)
    reports = []
    for size in sizes:
        walls = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            infer_batched(model, clips, size)
            walls.append(time.perf_counter() - t0)
        wall = float(np.median(walls))
        reports.append(ThroughputReport(
            batch_size=size,
            clips_per_second=n / wall,
            speed_multiple=n * CLIP_SECONDS / wall,
            peak_model_memory_bytes=memory_estimate(model, size),
            wall_seconds=wall,
        ))
    chosen = choose_from_curve({r.batch_size: r.speed_multiple for r in reports})
    return reports, chosen
