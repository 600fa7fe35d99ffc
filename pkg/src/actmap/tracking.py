"""Kernelized correlation filter tracking plus the 5-second keyboard schedule.

The tracker is the classic single-channel KCF: grayscale raw-pixel features
under a cosine window, Gaussian kernel ridge regression trained against a
Gaussian response, translation only. Reference defaults are fixed here so
runs are deterministic: padding 2.5, kernel sigma 0.5, response sigma
sqrt(area)/16, interpolation factor 0.075, regularization 1e-4.
"""
from __future__ import annotations

import numpy as np

from .geometry import BoundingBox, Detection

PADDING = 2.5
KERNEL_SIGMA = 0.5
RESPONSE_SIGMA_FACTOR = 1.0 / 16.0
INTERP_FACTOR = 0.075
LAMBDA = 1e-4
DETECT_EVERY_SECONDS = 5


def to_gray(frame: np.ndarray) -> np.ndarray:
    """(H, W, 3) uint8 -> (H, W) float32 in [0, 1]."""
    return frame.astype(np.float32).mean(axis=2) / 255.0


class KcfTracker:
    """Tracks one box by translation; the box size never changes."""

    def __init__(self, frame: np.ndarray, box: BoundingBox):
        gray = to_gray(frame)
        h_img, w_img = gray.shape
        box.clamped(w_img, h_img)  # rejects degenerate boxes early
        if box.w < 1 or box.h < 1:
            raise ValueError(f"degenerate box {box}")
        self.target_w = box.w
        self.target_h = box.h
        self.cx = box.x + box.w / 2.0
        self.cy = box.y + box.h / 2.0
        self.win_w = max(int(np.floor(box.w * PADDING)), 3)
        self.win_h = max(int(np.floor(box.h * PADDING)), 3)
        self.hann = np.outer(np.hanning(self.win_h), np.hanning(self.win_w)).astype(np.float32)
        sigma = np.sqrt(box.w * box.h) * RESPONSE_SIGMA_FACTOR
        ys = np.arange(self.win_h) - self.win_h // 2
        xs = np.arange(self.win_w) - self.win_w // 2
        g = np.exp(-0.5 * (ys[:, None] ** 2 + xs[None, :] ** 2) / sigma ** 2)
        self.yf = np.fft.fft2(np.fft.ifftshift(g))  # peak at (0,0): zero shift
        x = self._features(gray)
        self.template = x
        self.alphaf = self.yf / (np.fft.fft2(self._gaussian_kernel(x, x)) + LAMBDA)

    # -- internals -------------------------------------------------------------

    def _patch(self, gray: np.ndarray) -> np.ndarray:
        """Window around the current centre with replicated borders."""
        ys = np.floor(self.cy) + np.arange(self.win_h) - self.win_h // 2
        xs = np.floor(self.cx) + np.arange(self.win_w) - self.win_w // 2
        ys = np.clip(ys, 0, gray.shape[0] - 1).astype(np.intp)
        xs = np.clip(xs, 0, gray.shape[1] - 1).astype(np.intp)
        return gray[np.ix_(ys, xs)]

    def _features(self, gray: np.ndarray) -> np.ndarray:
        patch = self._patch(gray)
        return (patch - patch.mean()) * self.hann

    @staticmethod
    def _gaussian_kernel(x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Dense Gaussian kernel between cyclic shifts of x and z."""
        xf = np.fft.fft2(x)
        zf = np.fft.fft2(z)
        cross = np.real(np.fft.ifft2(zf * np.conj(xf)))
        d = (np.sum(x * x) + np.sum(z * z) - 2.0 * cross) / x.size
        return np.exp(-np.maximum(d, 0.0) / (KERNEL_SIGMA ** 2))

    def response(self, frame: np.ndarray) -> np.ndarray:
        """Raw correlation response at the current position (peak (0,0) = no shift)."""
        z = self._features(to_gray(frame))
        kf = np.fft.fft2(self._gaussian_kernel(self.template, z))
        return np.real(np.fft.ifft2(self.alphaf * kf))

    # -- tracking ---------------------------------------------------------------

    def update(self, frame: np.ndarray) -> BoundingBox:
        """Advance one frame: move to the response argmax, then adapt the filter."""
        gray = to_gray(frame)
        resp = self.response(frame)
        if float(resp.max() - resp.min()) <= 1e-9:
            dy = dx = 0  # zero-contrast tie: FFT roundoff must not move the box
        else:
            dy, dx = np.unravel_index(int(np.argmax(resp)), resp.shape)
            if dy > self.win_h / 2:
                dy -= self.win_h
            if dx > self.win_w / 2:
                dx -= self.win_w
        self.cx += dx
        self.cy += dy
        h_img, w_img = gray.shape
        self.cx = float(np.clip(self.cx, self.target_w / 2.0, w_img - self.target_w / 2.0))
        self.cy = float(np.clip(self.cy, self.target_h / 2.0, h_img - self.target_h / 2.0))
        x_new = self._features(gray)
        alphaf_new = self.yf / (np.fft.fft2(self._gaussian_kernel(x_new, x_new)) + LAMBDA)
        self.template = (1 - INTERP_FACTOR) * self.template + INTERP_FACTOR * x_new
        self.alphaf = (1 - INTERP_FACTOR) * self.alphaf + INTERP_FACTOR * alphaf_new
        return self.box

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.cx - self.target_w / 2.0, self.cy - self.target_h / 2.0,
                           self.target_w, self.target_h)


def best_keyboard_detection(dets: list[Detection]) -> Detection | None:
    """Highest score wins; ties go to larger area, then stream order."""
    best = None
    for i, d in enumerate(dets):
        key = (-d.score, -d.box.area, i)
        if best is None or key < best[0]:
            best = (key, d)
    return best[1] if best else None


def track_keyboard(detections: list[Detection], frames, fps: int = 30) -> list[BoundingBox | None]:
    """Per-frame keyboard track: trust a detection once per 5 seconds, KCF between.

    At every multiple of 5*fps frames the best keyboard detection (if any)
    re-initialises the tracker; other frames propagate by kcf update. Frames
    before the first adopted detection carry no box.
    """
    by_frame: dict[int, list[Detection]] = {}
    for d in detections:
        if d.cls == "keyboard":
            by_frame.setdefault(d.frame, []).append(d)
    n = frames.frame_count
    track: list[BoundingBox | None] = [None] * n
    tracker: KcfTracker | None = None
    period = DETECT_EVERY_SECONDS * fps
    for f in range(n):
        image = None
        if f % period == 0 and f in by_frame:
            best = best_keyboard_detection(by_frame[f])
            if best is not None:
                image = frames.read(f, f + 1)[0]
                tracker = KcfTracker(image, best.box.clamped(frames.width, frames.height))
                track[f] = tracker.box
                continue
        if tracker is not None:
            image = frames.read(f, f + 1)[0]
            track[f] = tracker.update(image)
    return track
