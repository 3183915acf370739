"""The barcode CNN: five conv/pool stages, then a three-layer dense head."""

from dataclasses import asdict, dataclass, field
import json
from pathlib import Path

import numpy as np

from ..errors import ArchitectureError, ShapeError
from .layers import Conv2D, Dense, Flatten, MaxPool2, ReLU, softmax

CHANNELS = (32, 64, 128, 256, 512)


def default_dense_sizes(input_dim, n_classes):
    # wider first hidden layer for the large-input variant
    return (128 if input_dim <= 128 else 256, 64, n_classes)


@dataclass(frozen=True)
class CnnConfig:
    input_dim: int = 128
    n_classes: int = 4
    channels: tuple = CHANNELS
    dense_sizes: tuple = None
    kernel: int = 3
    pool: int = 2

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.dense_sizes is None:
            object.__setattr__(self, "dense_sizes", default_dense_sizes(self.input_dim, self.n_classes))
        object.__setattr__(self, "dense_sizes", tuple(self.dense_sizes))
        if self.kernel != 3 or self.pool != 2:
            raise ArchitectureError("only 3x3 kernels and 2x2 pooling are supported")
        if self.dense_sizes[-1] != self.n_classes:
            raise ArchitectureError("the last dense layer must have n_classes units")


def stage_dims(config):
    """Spatial size after every conv and every pool, as ``[(name, side, channels), ...]``."""
    dims = []
    side = config.input_dim
    for i, ch in enumerate(config.channels, start=1):
        side -= 2
        if side < 1:
            raise ArchitectureError(f"stage {i} conv output collapses to {side} for input {config.input_dim}")
        dims.append((f"conv{i}", side, ch))
        side //= 2
        if side < 1:
            raise ArchitectureError(f"stage {i} pool output collapses to {side} for input {config.input_dim}")
        dims.append((f"pool{i}", side, ch))
    return dims


class CnnModel:
    def __init__(self, config, layers):
        self.config = config
        self.layers = layers

    @property
    def dtype(self):
        return self.parameters()[0].dtype

    def parameters(self):
        return [p for layer in self.layers for p in layer.params().values()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.grads().values()]

    def forward(self, x, train=False):
        if x.ndim == 3:
            x = x[..., None]
        d = self.config.input_dim
        if x.shape[1:] != (d, d, 1):
            raise ShapeError(f"model expects (N, {d}, {d}, 1) images, got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def astype(self, dtype):
        clone = build_cnn(self.config, dtype=dtype)
        for dst, src in zip(clone.parameters(), self.parameters()):
            dst[...] = src
        return clone

    def copy_weights(self):
        return [p.copy() for p in self.parameters()]

    def set_weights(self, weights):
        for dst, src in zip(self.parameters(), weights):
            dst[...] = src


def build_cnn(config, seed=0, dtype=np.float32, zero_head=False):
    """Build the layer stack with He-uniform weights and zero biases."""
    stage_dims(config)
    rng = np.random.default_rng(seed)
    layers = []
    cin = 1
    for ch in config.channels:
        conv = Conv2D(cin, ch, dtype=dtype)
        limit = np.sqrt(6.0 / (9 * cin))
        conv.kernels[...] = rng.uniform(-limit, limit, conv.kernels.shape)
        layers += [conv, ReLU(), MaxPool2()]
        cin = ch
    layers.append(Flatten())
    n_in = stage_dims(config)[-1][1] ** 2 * config.channels[-1]
    for i, n_out in enumerate(config.dense_sizes):
        fc = Dense(n_in, n_out, dtype=dtype)
        last = i == len(config.dense_sizes) - 1
        if not (last and zero_head):
            limit = np.sqrt(6.0 / n_in)
            fc.weights[...] = rng.uniform(-limit, limit, fc.weights.shape)
        layers.append(fc)
        if not last:
            layers.append(ReLU())
        n_in = n_out
    return CnnModel(config, layers)


def predict(model, images, batch_size=64):
    """Class probabilities and argmax labels (ties go to the lowest class)."""
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[..., None]
    chunks = [softmax(model.forward(images[i:i + batch_size])) for i in range(0, images.shape[0], batch_size)]
    probs = np.concatenate(chunks) if chunks else np.zeros((0, model.config.n_classes), dtype=model.dtype)
    return probs, probs.argmax(axis=1)


def save_model(model, path, train_config=None, history=None):
    """Write ``<path>`` (JSON manifest) and ``<path>.weights`` (little-endian float32)."""
    path = Path(path)
    weights_path = path.with_name(path.name + ".weights")
    layers = []
    for layer in model.layers:
        rec = layer.describe()
        rec["params"] = {name: list(p.shape) for name, p in layer.params().items()}
        layers.append(rec)
    manifest = {
        "architecture": asdict(model.config),
        "layers": layers,
        "train_config": train_config,
        "history": history or [],
        "weights_file": weights_path.name,
    }
    with open(weights_path, "wb") as fh:
        for p in model.parameters():
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    path.write_text(json.dumps(manifest, indent=1))
    return path


def load_model(path):
    path = Path(path)
    manifest = json.loads(path.read_text())
    arch = manifest["architecture"]
    config = CnnConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in arch.items()})
    model = build_cnn(config)
    raw = np.fromfile(path.with_name(manifest["weights_file"]), dtype="<f4")
    expected = sum(p.size for p in model.parameters())
    if raw.size != expected:
        raise ShapeError(f"weights file holds {raw.size} values, architecture needs {expected}")
    offset = 0
    for p in model.parameters():
        p[...] = raw[offset:offset + p.size].reshape(p.shape)
        offset += p.size
    return model, manifest
