"""Mini-batch training with early stopping, plus a finite-difference gradient check."""

import csv
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DataError, ParameterError
from .layers import softmax_cross_entropy
from .model import predict
from .optim import Optimizer

HISTORY_FIELDS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 5
    optimizer: str = "adam"
    patience: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")

    def to_dict(self):
        return asdict(self)


def _evaluate(model, images, labels, batch_size):
    total, correct = 0.0, 0
    for i in range(0, images.shape[0], batch_size):
        xb, yb = images[i:i + batch_size], labels[i:i + batch_size]
        loss, probs, _ = softmax_cross_entropy(model.forward(xb), yb)
        total += loss * xb.shape[0]
        correct += int(np.sum(probs.argmax(axis=1) == yb))
    n = images.shape[0]
    return total / n, correct / n


def train_cnn(model, images, labels, split, cfg, log=None):
    """Train in place and return ``(model, history)``.

    Early stopping watches validation loss, or training loss when the split
    has no validation rows, and restores the best epoch's weights.
    """
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[..., None]
    labels = np.asarray(labels, dtype=np.int64)
    train_idx = np.asarray(split.train, dtype=np.int64)
    val_idx = np.asarray(split.validation, dtype=np.int64)
    if train_idx.size == 0:
        raise DataError("the training split is empty")
    rng = np.random.default_rng(cfg.seed)
    opt = Optimizer(cfg.optimizer, cfg.learning_rate)
    params, grads = model.parameters(), model.gradients()
    history = []
    best_loss, best_weights, stale = np.inf, model.copy_weights(), 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(train_idx)
        loss_sum, correct = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            logits = model.forward(images[batch], train=True)
            loss, probs, grad = softmax_cross_entropy(logits, labels[batch])
            model.backward(grad)
            opt.step(params, grads)
            loss_sum += loss * batch.size
            correct += int(np.sum(probs.argmax(axis=1) == labels[batch]))
        rec = {"epoch": epoch, "train_loss": loss_sum / order.size, "train_acc": correct / order.size}
        if val_idx.size:
            rec["val_loss"], rec["val_acc"] = _evaluate(model, images[val_idx], labels[val_idx], cfg.batch_size)
        else:
            rec["val_loss"], rec["val_acc"] = None, None
        history.append(rec)
        if log:
            log(rec)
        monitored = rec["val_loss"] if val_idx.size else rec["train_loss"]
        if monitored < best_loss:
            best_loss, best_weights, stale = monitored, model.copy_weights(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.set_weights(best_weights)
    return model, history


def write_history_csv(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for rec in history:
            writer.writerow({k: ("" if rec.get(k) is None else rec[k]) for k in HISTORY_FIELDS})


def grad_check(model, sample, label, eps=1e-3):
    """Largest relative gap between backprop and central-difference gradients.

    Runs on a float64 copy of ``model``; meant for tiny instances since it
    costs two forward passes per parameter.
    """
    m = model.astype(np.float64)
    x = np.asarray(sample, dtype=np.float64)
    x = x.reshape((1,) + x.shape[-2:] + (1,)) if x.ndim < 4 else x
    y = np.array([label])

    def loss_at():
        return softmax_cross_entropy(m.forward(x), y)[0]

    _, _, g = softmax_cross_entropy(m.forward(x, train=True), y)
    m.backward(g)
    worst = 0.0
    for p, dp in zip(m.parameters(), m.gradients()):
        analytic = dp.copy()
        flat = p.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up = loss_at()
            flat[i] = keep - eps
            down = loss_at()
            flat[i] = keep
            numeric = (up - down) / (2 * eps)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
    return worst
