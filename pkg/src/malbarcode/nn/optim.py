import numpy as np

from ..errors import ParameterError


def adam_step(param, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8, nesterov=False):
    """One bias-corrected Adam (or NAdam) update, in place on param/m/v."""
    if t < 1:
        raise ParameterError("Adam step counter starts at 1")
    m *= beta1
    m += (1 - beta1) * grad
    v *= beta2
    v += (1 - beta2) * grad * grad
    if nesterov:
        m_hat = beta1 * m / (1 - beta1 ** (t + 1)) + (1 - beta1) * grad / (1 - beta1 ** t)
    else:
        m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    param -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(param.dtype, copy=False)
    return param, m, v


def rmsprop_step(param, grad, v, lr, rho=0.9, eps=1e-8):
    v *= rho
    v += (1 - rho) * grad * grad
    param -= (lr * grad / (np.sqrt(v) + eps)).astype(param.dtype, copy=False)
    return param, v


class Optimizer:
    """Keeps per-parameter state for a list of arrays updated in place."""

    def __init__(self, kind="adam", lr=1e-3):
        if kind not in ("adam", "nadam", "rmsprop", "sgd"):
            raise ParameterError(f"unknown optimizer {kind!r}")
        if lr <= 0:
            raise ParameterError("learning rate must be positive")
        self.kind = kind
        self.lr = lr
        self.t = 0
        self._state = None

    def step(self, params, grads):
        if self._state is None:
            n_slots = {"sgd": 0, "rmsprop": 1}.get(self.kind, 2)
            self._state = [[np.zeros_like(p) for _ in range(n_slots)] for p in params]
        self.t += 1
        for p, g, state in zip(params, grads, self._state):
            if self.kind == "sgd":
                p -= (self.lr * g).astype(p.dtype, copy=False)
            elif self.kind == "rmsprop":
                rmsprop_step(p, g, state[0], self.lr)
            else:
                adam_step(p, g, state[0], state[1], self.t, self.lr, nesterov=self.kind == "nadam")
