"""Multi-layer perceptron built from the CNN engine's dense layers."""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np

from ..errors import DataError, ParameterError
from ..nn.layers import Dense, ReLU, softmax, softmax_cross_entropy
from ..nn.optim import Optimizer


@dataclass
class MlpModel:
    layers: list
    hidden_sizes: tuple
    n_classes: int

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def parameters(self):
        return [p for layer in self.layers for p in layer.params().values()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.grads().values()]

    def predict_proba(self, X):
        return softmax(self.forward(X))

    def predict(self, X):
        return self.forward(X).argmax(axis=1)

    def to_dict(self):
        return {
            "kind": "mlp",
            "hidden_sizes": list(self.hidden_sizes),
            "n_in": self.layers[0].weights.shape[0],
            "n_classes": self.n_classes,
        }


def _build(n_in, hidden_sizes, n_classes, rng):
    layers = []
    for n_out in list(hidden_sizes) + [n_classes]:
        fc = Dense(n_in, n_out, dtype=np.float64)
        limit = np.sqrt(6.0 / n_in)
        fc.weights[...] = rng.uniform(-limit, limit, fc.weights.shape)
        layers += [fc, ReLU()]
        n_in = n_out
    return layers[:-1]


def train_mlp(table, train_rows, hidden_sizes=(10, 10, 10), solver="adam", max_iter=200,
              seed=0, learning_rate=1e-3, batch_size=None):
    """ReLU MLP trained for ``max_iter`` epochs of shuffled mini-batches."""
    hidden_sizes = tuple(int(h) for h in hidden_sizes)
    if not hidden_sizes or min(hidden_sizes) < 1:
        raise ParameterError("at least one hidden layer of positive width is required")
    if solver not in ("adam", "sgd"):
        raise ParameterError(f"solver must be 'adam' or 'sgd', got {solver!r}")
    rows = np.asarray(train_rows, dtype=np.int64)
    if rows.size == 0:
        raise DataError("no training rows")
    X = table.values[rows]
    y = table.labels[rows]
    rng = np.random.default_rng(seed)
    model = MlpModel(_build(X.shape[1], hidden_sizes, len(table.class_names), rng),
                     hidden_sizes, len(table.class_names))
    opt = Optimizer(solver, learning_rate)
    params, grads = model.parameters(), model.gradients()
    batch = batch_size or min(200, X.shape[0])
    for _ in range(max_iter):
        order = rng.permutation(X.shape[0])
        for start in range(0, order.size, batch):
            idx = order[start:start + batch]
            _, _, g = softmax_cross_entropy(model.forward(X[idx], train=True), y[idx])
            model.backward(g)
            opt.step(params, grads)
    return model


def save_mlp(model, path):
    """JSON manifest plus a little-endian float32 weights sidecar."""
    path = Path(path)
    weights_path = path.with_name(path.name + ".weights")
    doc = model.to_dict()
    doc["weights_file"] = weights_path.name
    with open(weights_path, "wb") as fh:
        for p in model.parameters():
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    path.write_text(json.dumps(doc, indent=1))
    return path


def load_mlp(path):
    path = Path(path)
    doc = json.loads(path.read_text())
    layers = _build(doc["n_in"], doc["hidden_sizes"], doc["n_classes"], np.random.default_rng(0))
    model = MlpModel(layers, tuple(doc["hidden_sizes"]), doc["n_classes"])
    raw = np.fromfile(path.with_name(doc["weights_file"]), dtype="<f4")
    offset = 0
    for p in model.parameters():
        p[...] = raw[offset:offset + p.size].reshape(p.shape)
        offset += p.size
    return model
