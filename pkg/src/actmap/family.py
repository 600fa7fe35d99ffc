"""The 12-member dyadic 3D-CNN family: build, count, run, serialize.

A member is identified by (depth, frame_rate). Dyad d holds 2^(d+1)
convolution kernels followed by batch normalisation, ReLU and max-pooling;
the first dyad pools temporally by d_fr = 3*frame_rate/30 so every member
sees 30 frames after its first dyad. The head flattens and projects to a
single logit.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ShapeError
from .nn import BatchNorm3d, Conv3d, Dense, MaxPool3d, ReLU
from .nn.loss import sigmoid

DEPTHS = (1, 2, 3, 4)
FRAME_RATES = (10, 20, 30)
INPUT_SIDE = 224
INPUT_CHANNELS = 3

_WEIGHTS_MAGIC = b"ACTW"
_WEIGHTS_VERSION = 1


def d_fr(frame_rate: int) -> int:
    """Temporal extent of the first dyad's pooling kernel, (3*fr)/30."""
    if frame_rate not in FRAME_RATES:
        raise ValueError(f"unsupported frame rate {frame_rate}, expected one of {FRAME_RATES}")
    return (3 * frame_rate) // 30


@dataclass(frozen=True)
class ModelConfig:
    depth: int
    frame_rate: int

    def __post_init__(self):
        if self.depth not in DEPTHS:
            raise ValueError(f"depth must be in {DEPTHS}, got {self.depth}")
        if self.frame_rate not in FRAME_RATES:
            raise ValueError(f"frame rate must be in {FRAME_RATES}, got {self.frame_rate}")

    @property
    def clip_frames(self) -> int:
        """Temporal length of an input clip: 3 seconds at the config frame rate."""
        return 3 * self.frame_rate

    @property
    def input_shape(self) -> tuple[int, int, int, int]:
        return (INPUT_CHANNELS, self.clip_frames, INPUT_SIDE, INPUT_SIDE)


def all_configs() -> list[ModelConfig]:
    return [ModelConfig(d, fr) for fr in FRAME_RATES for d in DEPTHS]


def dyad_channels(depth: int) -> list[int]:
    """Output channels per dyad: 2^(d+1) for dyad d."""
    return [2 ** (d + 1) for d in range(1, depth + 1)]


def stack_shapes(config: ModelConfig) -> list[tuple[int, int, int, int]]:
    """(C,T,H,W) after each dyad, starting from the input shape."""
    shapes = [config.input_shape]
    c, t, h, w = shapes[0]
    for d, ch in enumerate(dyad_channels(config.depth), start=1):
        kt = d_fr(config.frame_rate) if d == 1 else 3
        c, t, h, w = ch, t // kt, h // 3, w // 3
        shapes.append((c, t, h, w))
    return shapes


def flatten_features(config: ModelConfig) -> int:
    c, t, h, w = stack_shapes(config)[-1]
    return c * t * h * w


class Model:
    """One built family member: dyads plus a single-logit dense head."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.config = config
        self.dyads: list[tuple[Conv3d, BatchNorm3d, ReLU, MaxPool3d]] = []
        in_ch = INPUT_CHANNELS
        for d, out_ch in enumerate(dyad_channels(config.depth), start=1):
            kt = d_fr(config.frame_rate) if d == 1 else 3
            self.dyads.append((
                Conv3d(in_ch, out_ch, rng),
                BatchNorm3d(out_ch),
                ReLU(),
                MaxPool3d((3, 3, kt)),
            ))
            in_ch = out_ch
        self.head = Dense(flatten_features(config), 1, rng)

    # -- forward / backward ------------------------------------------------

    def _check_batch(self, x):
        want = self.config.input_shape
        if x.ndim != 5 or tuple(x.shape[1:]) != want:
            raise ShapeError(f"batch shape {tuple(x.shape)} does not match N x {want} "
                             f"for (D={self.config.depth}, fr={self.config.frame_rate})")

    def forward_logits(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._check_batch(x)
        for conv, bn, relu, pool in self.dyads:
            x = conv.forward(x, train)
            x = bn.forward(x, train)
            x = relu.forward(x, train)
            x = pool.forward(x, train)
        flat = x.reshape(x.shape[0], -1)
        return self.head.forward(flat, train)[:, 0]

    def backward_from_logits(self, grad_logits: np.ndarray):
        """Backpropagate d(loss)/d(logit); parameter gradients land on the layers."""
        g = self.head.backward(np.asarray(grad_logits, np.float32).reshape(-1, 1))
        last = stack_shapes(self.config)[-1]
        g = g.reshape((g.shape[0],) + last)
        for d in range(len(self.dyads) - 1, -1, -1):
            conv, bn, relu, pool = self.dyads[d]
            g = pool.backward(g)
            g = relu.backward(g)
            g = bn.backward(g)
            g = conv.backward(g, need_input_grad=(d > 0))

    def predict(self, batch: np.ndarray) -> np.ndarray:
        """Eval-mode probabilities, one per clip, each in (0,1).

        Clips are pushed through one at a time, so results are bit-identical
        for any batching of the same clips (and peak memory stays flat).
        """
        batch = np.asarray(batch, np.float32)
        if batch.shape[0] == 0:
            return np.zeros(0, np.float64)
        self._check_batch(batch)
        logits = np.empty(batch.shape[0], np.float64)
        for i in range(batch.shape[0]):
            logits[i] = self.forward_logits(batch[i:i + 1], train=False)[0]
        return sigmoid(logits)

    # -- parameters ----------------------------------------------------------

    def named_layers(self):
        for d, (conv, bn, relu, pool) in enumerate(self.dyads, start=1):
            yield f"dyad{d}.conv", conv
            yield f"dyad{d}.bn", bn
            yield f"dyad{d}.relu", relu
            yield f"dyad{d}.pool", pool
        yield "head", self.head

    def named_params(self):
        """(name, param, grad) triples for the optimiser."""
        for lname, layer in self.named_layers():
            for pname, param, grad_attr in layer.params():
                yield f"{lname}.{pname}", param, getattr(layer, grad_attr)

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        """All persistent arrays (learnables plus BN running stats), in a fixed order."""
        out = []
        for d, (conv, bn, _relu, _pool) in enumerate(self.dyads, start=1):
            out += [(f"dyad{d}.conv.weights", conv.weights), (f"dyad{d}.conv.bias", conv.bias),
                    (f"dyad{d}.bn.gamma", bn.gamma), (f"dyad{d}.bn.beta", bn.beta),
                    (f"dyad{d}.bn.running_mean", bn.running_mean),
                    (f"dyad{d}.bn.running_var", bn.running_var)]
        out += [("head.weights", self.head.weights), ("head.bias", self.head.bias)]
        return out

    def copy_weights(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.state_arrays()}

    def load_state(self, state: dict[str, np.ndarray]):
        for name, arr in self.state_arrays():
            src = state[name]
            if src.shape != arr.shape:
                raise FormatError(f"array '{name}' has shape {src.shape}, expected {arr.shape}")
            arr[...] = src

    def activation_volumes(self) -> list[int]:
        """Per-layer output element counts for one sample, conv through head."""
        vols = []
        shapes = stack_shapes(self.config)
        for d in range(1, self.config.depth + 1):
            c_out = shapes[d][0]
            t_in, h_in, w_in = shapes[d - 1][1:]
            conv_vol = c_out * t_in * h_in * w_in
            vols += [conv_vol, conv_vol, conv_vol, int(np.prod(shapes[d]))]
        vols.append(1)
        return vols


def build_model(config: ModelConfig, seed: int = 0) -> Model:
    return Model(config, seed)


def count_params(model: Model) -> int:
    """Total learnable scalars (conv W+b, BN gamma+beta, dense W+b)."""
    return sum(layer.param_count() for _name, layer in model.named_layers())


def save_weights(model: Model, path) -> None:
    """Write config plus all state arrays; little-endian, bit-exact round-trip."""
    with open(path, "wb") as fh:
        fh.write(_WEIGHTS_MAGIC)
        fh.write(struct.pack("<HBB", _WEIGHTS_VERSION, model.config.depth, model.config.frame_rate))
        arrays = model.state_arrays()
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays:
            raw = name.encode()
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, "<f4").tobytes())


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated weight file: wanted {n} bytes at offset {fh.tell() - len(buf)}")
    return buf


def load_weights(path, expect_config: ModelConfig | None = None) -> Model:
    """Rebuild a model from a weight file; optional config cross-check."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != _WEIGHTS_MAGIC:
            raise FormatError("bad magic: not an actmap weight file")
        version, depth, frame_rate = struct.unpack("<HBB", _read_exact(fh, 4))
        if version != _WEIGHTS_VERSION:
            raise FormatError(f"unsupported weight file version {version}")
        try:
            config = ModelConfig(depth, frame_rate)
        except ValueError as exc:
            raise FormatError(f"bad config in weight file: {exc}") from exc
        if expect_config is not None and config != expect_config:
            raise FormatError(f"weight file is for (D={depth}, fr={frame_rate}), "
                              f"expected (D={expect_config.depth}, fr={expect_config.frame_rate})")
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        state: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, nlen).decode()
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(_read_exact(fh, 4 * size), "<f4").reshape(shape)
            state[name] = data.astype(np.float32)
    model = Model(config, seed=0)
    missing = [n for n, _ in model.state_arrays() if n not in state]
    if missing:
        raise FormatError(f"weight file is missing arrays: {missing[:3]}")
    model.load_state(state)
    return model
