"""The five layer types of the dyadic architecture family.

Layers carry float32 state and operate on batches in N,C,T,H,W layout
(Dense on N,F). ``forward(x, train=True)`` caches whatever ``backward``
needs; ``backward(grad_out)`` returns the input gradient and stores
parameter gradients on the layer (``.grad_weights`` etc.). Backward
without a cached forward raises ContractError.
"""
from __future__ import annotations

import numpy as np

from ..errors import ContractError, ShapeError
from . import kernels


def _require(cond: bool, msg: str):
    if not cond:
        raise ShapeError(msg)


def _as_f32(x) -> np.ndarray:
    x = np.asarray(x)
    return x if x.dtype == np.float32 else x.astype(np.float32)


class Conv3d:
    """3x3x3 same-padded cross-correlation with bias, stride 1."""

    KSIZE = 3

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = in_channels * 27
        limit = 1.0 / np.sqrt(fan_in)
        self.weights = rng.uniform(-limit, limit, size=(out_channels, in_channels, 3, 3, 3)).astype(np.float32)
        self.bias = np.zeros(out_channels, np.float32)
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def params(self):
        return [("weights", self.weights, "grad_weights"), ("bias", self.bias, "grad_bias")]

    def _check_input(self, x):
        _require(x.ndim == 5, f"conv3d expects N,C,T,H,W input, got {x.ndim} axes")
        _require(x.shape[1] == self.in_channels,
                 f"conv3d channel axis is {x.shape[1]}, layer expects {self.in_channels}")

    @staticmethod
    def _pad(x: np.ndarray) -> np.ndarray:
        n, c, t, h, w = x.shape
        xp = np.zeros((n, c, t + 2, h + 2, w + 2), np.float32)
        xp[:, :, 1:-1, 1:-1, 1:-1] = x
        return xp

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = _as_f32(x)
        self._check_input(x)
        xp = self._pad(x)
        n = x.shape[0]
        out = np.empty((n, self.out_channels) + x.shape[2:], np.float32)
        for i in range(n):
            kernels.conv3d_same(xp[i], self.weights, self.bias, out[i])
        self._cache = xp if train else None
        return out

    def backward(self, grad_out, need_input_grad: bool = True):
        if self._cache is None:
            raise ContractError("conv3d backward without a cached forward input")
        xp = self._cache
        grad_out = _as_f32(grad_out)
        n = xp.shape[0]
        _require(grad_out.shape == (n, self.out_channels) + tuple(d - 2 for d in xp.shape[2:]),
                 f"conv3d grad_out shape {grad_out.shape} does not match forward output")
        dw = np.zeros(self.weights.shape, np.float64)
        for i in range(n):
            kernels.conv3d_weight_grad(xp[i], grad_out[i], dw)
        self.grad_weights = dw.astype(np.float32)
        self.grad_bias = grad_out.sum(axis=(0, 2, 3, 4), dtype=np.float64).astype(np.float32)
        if not need_input_grad:
            return None
        # Input gradient is a same-padded correlation with the channel-transposed,
        # spatially flipped taps, so the fast forward kernel is reused.
        w_t = np.ascontiguousarray(self.weights.transpose(1, 0, 2, 3, 4)[:, :, ::-1, ::-1, ::-1])
        zero_b = np.zeros(self.in_channels, np.float32)
        gp = self._pad(grad_out)
        dx = np.empty((n, self.in_channels) + grad_out.shape[2:], np.float32)
        for i in range(n):
            kernels.conv3d_same(gp[i], w_t, zero_b, dx[i])
        return dx


class BatchNorm3d:
    """Per-channel batch normalisation over the batch and all spatiotemporal axes.

    Normalisation uses the biased batch variance; running_var tracks the
    unbiased estimate (momentum 0.1 blend). Eval mode uses running stats only.
    """

    def __init__(self, channels: int, momentum: float = 0.1, epsilon: float = 1e-5):
        self.channels = channels
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = np.ones(channels, np.float32)
        self.beta = np.zeros(channels, np.float32)
        self.running_mean = np.zeros(channels, np.float32)
        self.running_var = np.ones(channels, np.float32)
        self.grad_gamma = None
        self.grad_beta = None
        self._cache = None

    def param_count(self) -> int:
        return 2 * self.channels

    def params(self):
        return [("gamma", self.gamma, "grad_gamma"), ("beta", self.beta, "grad_beta")]

    def _check_input(self, x):
        _require(x.ndim == 5, f"batchnorm3d expects N,C,T,H,W input, got {x.ndim} axes")
        _require(x.shape[1] == self.channels,
                 f"batchnorm3d channel axis is {x.shape[1]}, layer expects {self.channels}")

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = np.ascontiguousarray(_as_f32(x))
        self._check_input(x)
        shape = (1, self.channels, 1, 1, 1)
        if not train:
            self._cache = None
            istd = 1.0 / np.sqrt(self.running_var.astype(np.float64) + self.epsilon)
            scale = (self.gamma * istd).astype(np.float32)
            shift = (self.beta - self.gamma * istd * self.running_mean).astype(np.float32)
            return x * scale.reshape(shape) + shift.reshape(shape)
        m = x.shape[0] * x.shape[2] * x.shape[3] * x.shape[4]
        sums = np.zeros(self.channels, np.float64)
        sumsq = np.zeros(self.channels, np.float64)
        kernels.channel_moments(x, sums, sumsq)
        mean = sums / m
        var = np.maximum(sumsq / m - mean * mean, 0.0)
        istd = 1.0 / np.sqrt(var + self.epsilon)
        xhat = np.empty_like(x)
        out = np.empty_like(x)
        kernels.bn_normalize(x, mean.astype(np.float32), istd.astype(np.float32),
                             self.gamma, self.beta, xhat, out)
        unbiased = var * (m / (m - 1)) if m > 1 else var
        self.running_mean = ((1 - self.momentum) * self.running_mean + self.momentum * mean).astype(np.float32)
        self.running_var = ((1 - self.momentum) * self.running_var + self.momentum * unbiased).astype(np.float32)
        self._cache = (xhat, istd.astype(np.float32), m)
        return out

    def backward(self, grad_out):
        if self._cache is None:
            raise ContractError("batchnorm3d backward without a cached train-mode forward")
        xhat, istd, m = self._cache
        _require(grad_out.shape == xhat.shape,
                 f"batchnorm3d grad_out shape {grad_out.shape} != forward shape {xhat.shape}")
        grad = np.array(grad_out, np.float32, copy=True, order="C")
        dbeta = np.zeros(self.channels, np.float64)
        dgamma = np.zeros(self.channels, np.float64)
        kernels.bn_grad_reduce(grad, xhat, dbeta, dgamma)
        self.grad_beta = dbeta.astype(np.float32)
        self.grad_gamma = dgamma.astype(np.float32)
        coeff = (self.gamma * istd / m).astype(np.float32)
        kernels.bn_grad_input(grad, xhat, coeff, self.grad_beta, self.grad_gamma)
        return grad


class ReLU:
    """Elementwise max(0, x)."""

    def __init__(self):
        self._mask = None

    def param_count(self) -> int:
        return 0

    def params(self):
        return []

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = np.ascontiguousarray(_as_f32(x))
        if not train:
            self._mask = None
            return np.maximum(x, 0)
        out = np.empty_like(x)
        self._mask = np.empty(x.shape, np.uint8)
        kernels.relu_forward(x, out, self._mask)
        return out

    def backward(self, grad_out):
        if self._mask is None:
            raise ContractError("relu backward without a cached train-mode forward")
        _require(grad_out.shape == self._mask.shape,
                 f"relu grad_out shape {grad_out.shape} != forward shape {self._mask.shape}")
        grad = np.array(grad_out, np.float32, copy=True, order="C")
        kernels.relu_backward(grad, self._mask)
        return grad


class MaxPool3d:
    """Non-overlapping max-pooling; kernel == stride, given as (k_h, k_w, k_t).

    Output extent per axis is floor(input / kernel); remainder cells are
    dropped and receive zero gradient.
    """

    def __init__(self, kernel: tuple[int, int, int]):
        kh, kw, kt = kernel
        _require(kh >= 1 and kw >= 1 and kt >= 1, f"pool kernel must be >= 1, got {kernel}")
        self.kernel = (kh, kw, kt)
        self._cache = None

    def param_count(self) -> int:
        return 0

    def params(self):
        return []

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = _as_f32(x)
        _require(x.ndim == 5, f"maxpool3d expects N,C,T,H,W input, got {x.ndim} axes")
        kh, kw, kt = self.kernel
        n, c, t, h, w = x.shape
        to, ho, wo = t // kt, h // kh, w // kw
        _require(to >= 1 and ho >= 1 and wo >= 1,
                 f"maxpool3d input {x.shape[2:]} smaller than kernel (h,w,t)=({kh},{kw},{kt})")
        out = np.empty((n, c, to, ho, wo), np.float32)
        idx = np.empty((n, c, to, ho, wo), np.uint8) if train else None
        scratch = idx if train else np.empty((c, to, ho, wo), np.uint8)
        for i in range(n):
            kernels.maxpool3d(x[i], kt, kh, kw, out[i], idx[i] if train else scratch)
        self._cache = (idx, x.shape) if train else None
        return out

    def backward(self, grad_out):
        if self._cache is None:
            raise ContractError("maxpool3d backward without a cached train-mode forward")
        idx, in_shape = self._cache
        grad_out = np.ascontiguousarray(_as_f32(grad_out))
        _require(grad_out.shape == idx.shape,
                 f"maxpool3d grad_out shape {grad_out.shape} != forward output {idx.shape}")
        kh, kw, kt = self.kernel
        dx = np.empty(in_shape, np.float32)
        for i in range(grad_out.shape[0]):
            kernels.maxpool3d_grad_full(grad_out[i], idx[i], kt, kh, kw, dx[i])
        return dx


class Dense:
    """Fully connected layer, y = x @ W.T + b."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        limit = 1.0 / np.sqrt(in_features)
        self.weights = rng.uniform(-limit, limit, size=(out_features, in_features)).astype(np.float32)
        self.bias = np.zeros(out_features, np.float32)
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    def param_count(self) -> int:
        return self.weights.size + self.bias.size

    def params(self):
        return [("weights", self.weights, "grad_weights"), ("bias", self.bias, "grad_bias")]

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = _as_f32(x)
        _require(x.ndim == 2, f"dense expects N,F input, got {x.ndim} axes")
        _require(x.shape[1] == self.in_features,
                 f"dense feature axis is {x.shape[1]}, layer expects {self.in_features}")
        self._cache = x if train else None
        return x @ self.weights.T + self.bias

    def backward(self, grad_out):
        if self._cache is None:
            raise ContractError("dense backward without a cached forward input")
        x = self._cache
        grad_out = _as_f32(grad_out)
        _require(grad_out.shape == (x.shape[0], self.out_features),
                 f"dense grad_out shape {grad_out.shape} != (N,{self.out_features})")
        self.grad_weights = grad_out.T @ x
        self.grad_bias = grad_out.sum(axis=0)
        return grad_out @ self.weights
