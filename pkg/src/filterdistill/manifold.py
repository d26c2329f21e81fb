"""A 1D-code autoencoder over flattened normalized filters.

The encoder is four Leaky-ReLU dense layers followed by a width-1 sigmoid
code layer; the decoder mirrors it and ends in a width-k^2 tanh layer, so
codes live in (0, 1) and decoded values in (-1, 1).

Training is plain minibatch SGD with momentum and hand-derived gradients.
Determinism: initialization and shuffling come from a single PCG64 stream
seeded from the config, weights are quantized to float32 after training so
that the in-memory model and its MKAE round-trip are bitwise identical.

Model file "MKAE v1", little-endian: magic ``MKAE``, u32 version, u32 layer
count, then per layer (u32 in_width, u32 out_width, u8 activation code
{0 leaky_relu, 1 sigmoid, 2 tanh, 3 identity}, weights float32 row-major
with shape (in_width, out_width), biases float32).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    CodeOutOfRange,
    EmptyTrainingSet,
    IoFailure,
    KMismatch,
    TruncatedFile,
    UnsupportedVersion,
)
from .filterbank import BankEntry, Filter, FilterBank

AE_MAGIC = b"MKAE"
AE_VERSION = 1

ACT_LEAKY_RELU = "leaky_relu"
ACT_SIGMOID = "sigmoid"
ACT_TANH = "tanh"
ACT_IDENTITY = "identity"
_ACT_CODES = {ACT_LEAKY_RELU: 0, ACT_SIGMOID: 1, ACT_TANH: 2, ACT_IDENTITY: 3}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}

HIDDEN_WIDTHS = (64, 32, 16, 8)


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0
    leaky_slope: float = 0.01
    momentum: float = 0.9

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class AutoencoderModel:
    layer_specs: list  # [(in_width, out_width, activation), ...]
    weights: list  # per-layer (in_width, out_width) float64 arrays
    biases: list  # per-layer (out_width,) float64 arrays
    k: int
    seed: int = 0
    leaky_slope: float = 0.01

    @property
    def encoder_depth(self) -> int:
        return len(self.layer_specs) // 2

    def _forward(self, x: np.ndarray, start: int, stop: int) -> np.ndarray:
        for spec, w, b in zip(
            self.layer_specs[start:stop], self.weights[start:stop], self.biases[start:stop]
        ):
            x = _activate(x @ w + b, spec[2], self.leaky_slope)
        return x


def _activate(z, activation, slope):
    if activation == ACT_LEAKY_RELU:
        return np.where(z >= 0, z, slope * z)
    if activation == ACT_SIGMOID:
        return 1.0 / (1.0 + np.exp(-z))
    if activation == ACT_TANH:
        return np.tanh(z)
    if activation == ACT_IDENTITY:
        return z
    raise ValueError(f"unknown activation {activation!r}")


def _activate_grad(z, out, activation, slope):
    if activation == ACT_LEAKY_RELU:
        return np.where(z >= 0, 1.0, slope)
    if activation == ACT_SIGMOID:
        return out * (1.0 - out)
    if activation == ACT_TANH:
        return 1.0 - out * out
    if activation == ACT_IDENTITY:
        return np.ones_like(z)
    raise ValueError(f"unknown activation {activation!r}")


def default_layer_specs(k: int):
    d = k * k
    widths = (d,) + HIDDEN_WIDTHS + (1,)
    specs = []
    for i in range(len(widths) - 1):
        act = ACT_SIGMOID if widths[i + 1] == 1 else ACT_LEAKY_RELU
        specs.append((widths[i], widths[i + 1], act))
    rev = widths[::-1]
    for i in range(len(rev) - 1):
        act = ACT_TANH if i == len(rev) - 2 else ACT_LEAKY_RELU
        specs.append((rev[i], rev[i + 1], act))
    return specs


def _init_model(k: int, config: TrainConfig, rng: np.random.Generator):
    specs = default_layer_specs(k)
    weights, biases = [], []
    for fan_in, fan_out, _ in specs:
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return AutoencoderModel(
        layer_specs=specs,
        weights=weights,
        biases=biases,
        k=k,
        seed=config.seed,
        leaky_slope=config.leaky_slope,
    )


def train_autoencoder(filters, config: TrainConfig):
    """Train on a list of NormalizedFilter; returns (model, loss_history).

    loss_history holds the full-dataset mean squared reconstruction error
    after each epoch's updates.
    """
    filters = list(filters)
    if not filters:
        raise EmptyTrainingSet("no filters to train on")
    k = filters[0].k
    for f in filters:
        if f.k != k:
            raise KMismatch("training filters disagree on k")
    data = np.stack([f.flat() for f in filters])
    rng = np.random.Generator(np.random.PCG64(config.seed))
    model = _init_model(k, config, rng)
    n_layers = len(model.layer_specs)
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    d = data.shape[1]
    history = []
    for _ in range(config.epochs):
        perm = rng.permutation(len(data))
        for start in range(0, len(data), config.batch_size):
            batch = data[perm[start : start + config.batch_size]]
            # forward, keeping pre- and post-activation per layer
            acts = [batch]
            zs = []
            x = batch
            for spec, w, b in zip(model.layer_specs, model.weights, model.biases):
                z = x @ w + b
                x = _activate(z, spec[2], model.leaky_slope)
                zs.append(z)
                acts.append(x)
            # backward: L = mean over batch and dims of (out - batch)^2
            grad = 2.0 * (acts[-1] - batch) / (batch.shape[0] * d)
            for li in range(n_layers - 1, -1, -1):
                spec = model.layer_specs[li]
                dz = grad * _activate_grad(zs[li], acts[li + 1], spec[2], model.leaky_slope)
                gw = acts[li].T @ dz
                gb = dz.sum(axis=0)
                grad = dz @ model.weights[li].T
                vel_w[li] = config.momentum * vel_w[li] - config.learning_rate * gw
                vel_b[li] = config.momentum * vel_b[li] - config.learning_rate * gb
                model.weights[li] += vel_w[li]
                model.biases[li] += vel_b[li]
        recon = model._forward(data, 0, n_layers)
        history.append(float(np.mean((recon - data) ** 2)))
    # float32 quantization keeps encode/decode bitwise across MKAE round-trips
    model.weights = [w.astype(np.float32).astype(np.float64) for w in model.weights]
    model.biases = [b.astype(np.float32).astype(np.float64) for b in model.biases]
    return model, history


def encode(model: AutoencoderModel, f) -> float:
    if f.k != model.k:
        raise KMismatch(f"filter k={f.k}, model k={model.k}")
    code = model._forward(f.flat()[None, :], 0, model.encoder_depth)
    return float(code[0, 0])


def decode(model: AutoencoderModel, code: float) -> Filter:
    if not 0.0 <= code <= 1.0:
        raise CodeOutOfRange(f"code {code} outside [0, 1]")
    out = model._forward(
        np.array([[code]], dtype=np.float64), model.encoder_depth, len(model.layer_specs)
    )
    return Filter(out.reshape(model.k, model.k))


def sample_uniform(model: AutoencoderModel, n: int) -> FilterBank:
    if n < 2:
        raise ValueError("n must be >= 2")
    codes = [i / (n - 1) for i in range(n)]
    entries = [BankEntry(0, i, decode(model, c)) for i, c in enumerate(codes)]
    return FilterBank(model.k, entries)


def uniform_codes(n: int):
    return [i / (n - 1) for i in range(n)]


def neighborhood_codes(centers, per_center: int, delta: float):
    """Codes around each center: {c +/- delta, c +/- 2*delta, ...}, clamped
    to [0, 1], deduplicated, ascending."""
    if per_center % 2 != 0:
        raise ValueError("per_center must be even")
    codes = set()
    for c in centers:
        for j in range(1, per_center // 2 + 1):
            for sign in (-1.0, 1.0):
                codes.add(min(1.0, max(0.0, c + sign * j * delta)))
    return sorted(codes)


def sample_around(model: AutoencoderModel, centers, per_center: int, delta: float) -> FilterBank:
    codes = neighborhood_codes(centers, per_center, delta)
    entries = [BankEntry(0, i, decode(model, c)) for i, c in enumerate(codes)]
    return FilterBank(model.k, entries)


# -- MKAE serialization ------------------------------------------------------

_AE_HEADER = struct.Struct("<4sII")
_AE_LAYER = struct.Struct("<IIB")


def model_to_bytes(model: AutoencoderModel) -> bytes:
    out = [_AE_HEADER.pack(AE_MAGIC, AE_VERSION, len(model.layer_specs))]
    for (fan_in, fan_out, act), w, b in zip(model.layer_specs, model.weights, model.biases):
        out.append(_AE_LAYER.pack(fan_in, fan_out, _ACT_CODES[act]))
        out.append(w.astype("<f4").tobytes())
        out.append(b.astype("<f4").tobytes())
    return b"".join(out)


def model_from_bytes(data: bytes) -> AutoencoderModel:
    if len(data) < _AE_HEADER.size:
        raise TruncatedFile("file too short for header")
    magic, version, n_layers = _AE_HEADER.unpack_from(data, 0)
    if magic != AE_MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {AE_MAGIC!r}")
    if version != AE_VERSION:
        raise UnsupportedVersion(f"unsupported version {version}")
    off = _AE_HEADER.size
    specs, weights, biases = [], [], []
    for _ in range(n_layers):
        if len(data) < off + _AE_LAYER.size:
            raise TruncatedFile("layer header truncated")
        fan_in, fan_out, act_code = _AE_LAYER.unpack_from(data, off)
        off += _AE_LAYER.size
        if act_code not in _ACT_NAMES:
            raise TruncatedFile(f"unknown activation code {act_code}")
        need = (fan_in * fan_out + fan_out) * 4
        if len(data) < off + need:
            raise TruncatedFile("layer payload truncated")
        w = np.frombuffer(data, dtype="<f4", count=fan_in * fan_out, offset=off)
        off += fan_in * fan_out * 4
        b = np.frombuffer(data, dtype="<f4", count=fan_out, offset=off)
        off += fan_out * 4
        specs.append((fan_in, fan_out, _ACT_NAMES[act_code]))
        weights.append(w.astype(np.float64).reshape(fan_in, fan_out))
        biases.append(b.astype(np.float64))
    k = int(round(math.sqrt(specs[0][0])))
    if k * k != specs[0][0]:
        raise TruncatedFile(f"first layer width {specs[0][0]} is not a square")
    return AutoencoderModel(layer_specs=specs, weights=weights, biases=biases, k=k)


def save_model(model: AutoencoderModel, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(model_to_bytes(model))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path) -> AutoencoderModel:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return model_from_bytes(data)
