"""Layers for NHWC float tensors with hand-written backward passes.

Tensors are plain numpy arrays; every layer caches what its backward pass
needs during ``forward(x, train=True)``.
"""

import numpy as np

from ..errors import ShapeError


def _im2col(x):
    """(N,H,W,C) -> (N*(H-2)*(W-2), 9*C) with columns ordered (dy, dx, c)."""
    n, h, w, c = x.shape
    win = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(1, 2))  # N,Ho,Wo,C,3,3
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * (h - 2) * (w - 2), 9 * c)


def conv2d(x, kernels, bias):
    """Valid 3x3 cross-correlation, stride 1."""
    if x.ndim != 4 or x.shape[1] < 3 or x.shape[2] < 3:
        raise ShapeError(f"conv2d needs (N, H>=3, W>=3, C) input, got {x.shape}")
    if kernels.shape[:3] != (3, 3, x.shape[3]):
        raise ShapeError(f"kernel shape {kernels.shape} does not match {x.shape[3]} input channels")
    n, h, w, _ = x.shape
    cout = kernels.shape[3]
    out = _im2col(x) @ kernels.reshape(-1, cout)
    out += bias
    return out.reshape(n, h - 2, w - 2, cout)


class Layer:
    def params(self):
        return {}

    def grads(self):
        return {}

    def output_shape(self, shape):
        return shape

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def describe(self):
        return {"type": type(self).__name__}


class Conv2D(Layer):
    def __init__(self, in_channels, out_channels, dtype=np.float32):
        self.kernels = np.zeros((3, 3, in_channels, out_channels), dtype=dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)
        self.d_kernels = np.zeros_like(self.kernels)
        self.d_bias = np.zeros_like(self.bias)
        self._cache = None

    def params(self):
        return {"kernels": self.kernels, "bias": self.bias}

    def grads(self):
        return {"kernels": self.d_kernels, "bias": self.d_bias}

    def output_shape(self, shape):
        h, w, _ = shape
        return (h - 2, w - 2, self.kernels.shape[3])

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[1] < 3 or x.shape[2] < 3:
            raise ShapeError(f"conv2d needs (N, H>=3, W>=3, C) input, got {x.shape}")
        n, h, w, _ = x.shape
        cols = _im2col(x)
        out = cols @ self.kernels.reshape(-1, self.kernels.shape[3])
        out += self.bias
        if train:
            self._cache = (cols, x.shape)
        return out.reshape(n, h - 2, w - 2, -1)

    def backward(self, grad):
        cols, (n, h, w, cin) = self._cache
        self._cache = None
        cout = self.kernels.shape[3]
        g2 = grad.reshape(-1, cout)
        self.d_kernels[...] = (cols.T @ g2).reshape(self.kernels.shape)
        self.d_bias[...] = g2.sum(axis=0, dtype=np.float64)
        del cols
        dcols = (g2 @ self.kernels.reshape(-1, cout).T).reshape(n, h - 2, w - 2, 3, 3, cin)
        dx = np.zeros((n, h, w, cin), dtype=grad.dtype)
        for dy in range(3):
            for dx_ in range(3):
                dx[:, dy:dy + h - 2, dx_:dx_ + w - 2, :] += dcols[:, :, :, dy, dx_, :]
        return dx

    def describe(self):
        return {"type": "Conv2D", "in_channels": self.kernels.shape[2], "out_channels": self.kernels.shape[3]}


class ReLU(Layer):
    def forward(self, x, train=False):
        out = np.maximum(x, 0)
        if train:
            self._out = out
        return out

    def backward(self, grad):
        out, self._out = self._out, None
        return grad * (out > 0)


def maxpool2(x):
    return MaxPool2().forward(x)


class MaxPool2(Layer):
    """2x2 max pooling, stride 2; an odd last row or column is dropped.

    The gradient goes to the first maximum of each window in row-major order.
    """

    def output_shape(self, shape):
        h, w, c = shape
        return (h // 2, w // 2, c)

    def forward(self, x, train=False):
        n, h, w, c = x.shape
        if h < 2 or w < 2:
            raise ShapeError(f"maxpool2 needs H, W >= 2, got {x.shape}")
        ho, wo = h // 2, w // 2
        out = np.maximum(x[:, 0:2 * ho:2, 0:2 * wo:2], x[:, 0:2 * ho:2, 1:2 * wo:2])
        np.maximum(out, x[:, 1:2 * ho:2, 0:2 * wo:2], out=out)
        np.maximum(out, x[:, 1:2 * ho:2, 1:2 * wo:2], out=out)
        if train:
            self._cache = (x, out)
        return out

    def backward(self, grad):
        x, out = self._cache
        self._cache = None
        n, h, w, c = x.shape
        ho, wo = h // 2, w // 2
        dx = np.zeros_like(x, dtype=grad.dtype)
        free = np.ones(out.shape, dtype=bool)
        for dy, dx_ in ((0, 0), (0, 1), (1, 0), (1, 1)):
            hit = x[:, dy:2 * ho:2, dx_:2 * wo:2] == out
            hit &= free
            free &= ~hit
            dx[:, dy:2 * ho:2, dx_:2 * wo:2] = grad * hit
        return dx


class Flatten(Layer):
    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x, train=False):
        if train:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


def dense(x, weights, bias):
    if x.shape[-1] != weights.shape[0] or bias.shape != (weights.shape[1],):
        raise ShapeError(f"dense: input {x.shape}, weights {weights.shape}, bias {bias.shape}")
    return x @ weights + bias


class Dense(Layer):
    def __init__(self, n_in, n_out, dtype=np.float32):
        self.weights = np.zeros((n_in, n_out), dtype=dtype)
        self.bias = np.zeros(n_out, dtype=dtype)
        self.d_weights = np.zeros_like(self.weights)
        self.d_bias = np.zeros_like(self.bias)

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def grads(self):
        return {"weights": self.d_weights, "bias": self.d_bias}

    def output_shape(self, shape):
        if shape != (self.weights.shape[0],):
            raise ShapeError(f"dense layer expects ({self.weights.shape[0]},), got {shape}")
        return (self.weights.shape[1],)

    def forward(self, x, train=False):
        out = dense(x, self.weights, self.bias)
        if train:
            self._x = x
        return out

    def backward(self, grad):
        x, self._x = self._x, None
        self.d_weights[...] = x.T @ grad
        self.d_bias[...] = grad.sum(axis=0, dtype=np.float64)
        return grad @ self.weights.T

    def describe(self):
        return {"type": "Dense", "n_in": self.weights.shape[0], "n_out": self.weights.shape[1]}


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of a softmax head.

    Accepts one sample (``logits`` of shape (k,), integer label) or a batch.
    Returns ``(loss, probs, grad)`` where ``grad`` is d loss / d logits.
    """
    single = logits.ndim == 1
    z = np.atleast_2d(logits)
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if z.shape[-1] < 2:
        raise ShapeError("softmax needs at least two classes")
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True, dtype=np.float64))
    log_p = shifted - log_norm
    probs = np.exp(log_p).astype(z.dtype)
    rows = np.arange(z.shape[0])
    loss = float(-np.mean(log_p[rows, y], dtype=np.float64))
    grad = probs.copy()
    grad[rows, y] -= 1
    grad /= z.shape[0]
    if single:
        return loss, probs[0], grad[0]
    return loss, probs, grad
