"""Training with early stopping, AUC/accuracy metrics, grid selection.

Each family member is fit by Adam on mean BCE; validation loss drives early
stopping (patience applies only after the minimum epoch count) and the
returned weights are the checkpoint with the lowest validation loss. The
grid selector picks the member with the best validation AUC, breaking ties
toward lower frame rate, then lower depth.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .clips import SampleClip
from .errors import FormatError
from .family import Model, ModelConfig, all_configs, build_model
from .nn import Adam, bce_with_logits
from .nn.loss import sigmoid

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    min_epochs: int = 50
    max_epochs: int = 100
    patience: int = 5
    learning_rate: float = 0.001
    batch_size: int = 16
    seed: int = 0
    horizontal_flip: bool = False

    def __post_init__(self):
        if self.min_epochs > self.max_epochs:
            raise ValueError(f"min_epochs {self.min_epochs} > max_epochs {self.max_epochs}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_auc: float


class EarlyStopper:
    """Stop once validation loss has not strictly improved for ``patience``
    consecutive epochs, but never before ``min_epochs`` and never past
    ``max_epochs``. Epochs are 1-based."""

    def __init__(self, min_epochs: int, max_epochs: int, patience: int):
        self.min_epochs = min_epochs
        self.max_epochs = max_epochs
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.stale = 0
        else:
            self.stale += 1
        if epoch >= self.max_epochs:
            return True
        return epoch >= self.min_epochs and self.stale >= self.patience


# -- datasets -----------------------------------------------------------------

class ClipDataset:
    """Adapter that exposes a list of SampleClips through the dataset protocol."""

    def __init__(self, clips: list[SampleClip]):
        self._clips = clips

    def __len__(self):
        return len(self._clips)

    def labels(self):
        return [c.label for c in self._clips]

    def load(self, i: int):
        c = self._clips[i]
        return c.pixels, c.label


def as_dataset(obj):
    if hasattr(obj, "load") and hasattr(obj, "labels"):
        return obj
    return ClipDataset(list(obj))


def _class_counts(dataset) -> tuple[int, int]:
    labels = np.asarray(dataset.labels())
    return int((labels == 0).sum()), int((labels == 1).sum())


# -- metrics --------------------------------------------------------------------

def evaluate_auc(probabilities, labels) -> float:
    """ROC area by the Mann-Whitney rank statistic; ties contribute 1/2."""
    p = np.asarray(probabilities, np.float64)
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"AUC undefined with {n_pos} positive / {n_neg} negative labels")
    sp = np.sort(p)
    lo = np.searchsorted(sp, p, side="left")
    hi = np.searchsorted(sp, p, side="right")
    ranks = (lo + hi + 1) / 2.0  # 1-based average rank
    pos_rank_sum = ranks[y == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def accuracy_at_threshold(probabilities, labels, threshold: float = 0.5) -> float:
    """Percentage of correct predictions; p == threshold predicts positive."""
    p = np.asarray(probabilities, np.float64)
    y = np.asarray(labels)
    if p.size == 0:
        raise ValueError("accuracy undefined on empty input")
    pred = (p >= threshold).astype(int)
    return float((pred == y).mean() * 100.0)


# -- fitting --------------------------------------------------------------------

def _batches(n: int, batch_size: int, order=None):
    idx = np.arange(n) if order is None else order
    for i in range(0, n, batch_size):
        yield idx[i:i + batch_size]


def _load_batch(dataset, indices, rng=None, flip=False):
    xs, ys = [], []
    for i in indices:
        x, y = dataset.load(int(i))
        if flip and rng.random() < 0.5:
            x = x[:, :, :, ::-1]
        xs.append(np.ascontiguousarray(x, np.float32))
        ys.append(y)
    return np.stack(xs), np.asarray(ys)


def _validate(model, dataset, batch_size: int) -> tuple[float, float]:
    loss_sum = 0.0
    probs = np.empty(len(dataset), np.float64)
    labels = np.empty(len(dataset), int)
    for batch in _batches(len(dataset), batch_size):
        x, y = _load_batch(dataset, batch)
        logits = model.forward_logits(x, train=False)
        losses, _ = bce_with_logits(logits, y)
        loss_sum += float(losses.sum())
        probs[batch] = sigmoid(logits)
        labels[batch] = y
    return loss_sum / len(dataset), evaluate_auc(probs, labels)


def fit(model, train_data, val_data, tc: TrainConfig):
    """Adam on mean BCE with early stopping; model is left at the best epoch.

    Works with anything model-shaped (forward_logits / backward_from_logits /
    named_params / copy_weights / load_state). Returns the EpochStats history.
    """
    train_data = as_dataset(train_data)
    val_data = as_dataset(val_data)
    rng = np.random.default_rng(tc.seed)
    optimiser = Adam(learning_rate=tc.learning_rate)
    stopper = EarlyStopper(tc.min_epochs, tc.max_epochs, tc.patience)
    history: list[EpochStats] = []
    best_state = model.copy_weights()
    n = len(train_data)
    for epoch in range(1, tc.max_epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for batch in _batches(n, tc.batch_size, order):
            x, y = _load_batch(train_data, batch, rng, tc.horizontal_flip)
            logits = model.forward_logits(x, train=True)
            losses, grad = bce_with_logits(logits, y)
            loss_sum += float(losses.sum())
            model.backward_from_logits(grad / len(batch))
            optimiser.step(model.named_params())
        val_loss, val_auc = _validate(model, val_data, tc.batch_size)
        history.append(EpochStats(epoch, loss_sum / n, val_loss, val_auc))
        improved = val_loss < stopper.best_loss
        stop = stopper.update(epoch, val_loss)
        if improved:
            best_state = model.copy_weights()
        log.info("epoch %3d  train %.4f  val %.4f  auc %.3f%s",
                 epoch, loss_sum / n, val_loss, val_auc, "  *" if improved else "")
        if stop:
            break
    model.load_state(best_state)
    return history


def train_model(config: ModelConfig, train_set, val_set, tc: TrainConfig) -> tuple[Model, list[EpochStats]]:
    """Build and fit one family member; returns the best-epoch model and history."""
    train_set = as_dataset(train_set)
    val_set = as_dataset(val_set)
    for name, ds in (("training", train_set), ("validation", val_set)):
        neg, pos = _class_counts(ds)
        if neg == 0 or pos == 0:
            raise ValueError(f"{name} set needs both classes, got {neg} negative / {pos} positive")
    model = build_model(config, seed=tc.seed)
    history = fit(model, train_set, val_set, tc)
    return model, history


# -- grid selection ---------------------------------------------------------------

@dataclass
class GridResult:
    config: ModelConfig
    param_count: int
    val_auc: float
    test_accuracy: float | None = None
    weights_path: str | None = None


@dataclass
class SelectionReport:
    results: list[GridResult] = field(default_factory=list)
    chosen: GridResult | None = None


def select_optimal(results) -> SelectionReport:
    """Pick max validation AUC over the full 12-member grid.

    Ties break toward lower frame rate, then lower depth (faster inference
    preferred at equal AUC).
    """
    results = list(results)
    seen = {r.config for r in results}
    missing = [c for c in all_configs() if c not in seen]
    if missing:
        raise ValueError(f"grid is missing configs: "
                         f"{[(c.depth, c.frame_rate) for c in missing]}")
    if len(results) != len(seen):
        raise ValueError("grid contains duplicate configs")
    chosen = min(results, key=lambda r: (-r.val_auc, r.config.frame_rate, r.config.depth))
    ordered = sorted(results, key=lambda r: (r.config.frame_rate, r.config.depth))
    return SelectionReport(results=ordered, chosen=chosen)


SELECTION_FIELDS = ["depth", "frame_rate", "param_count", "val_auc", "test_accuracy",
                    "weights_path", "chosen"]


def write_selection_report(report: SelectionReport, path) -> None:
    """Delimited mirror of the family-optimization table."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SELECTION_FIELDS)
        for r in report.results:
            writer.writerow([r.config.depth, r.config.frame_rate, r.param_count,
                             f"{r.val_auc:.6g}",
                             "" if r.test_accuracy is None else f"{r.test_accuracy:.6g}",
                             r.weights_path or "",
                             int(r.config == report.chosen.config)])
