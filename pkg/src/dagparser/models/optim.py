"""Plain SGD and AMSGrad over dictionaries of numpy arrays."""
from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

Params = Dict[str, np.ndarray]

EPS = 1e-8


def amsgrad_step(param, grad, m, v, v_hat, alpha=0.001, beta1=0.9, beta2=0.999, eps=EPS) -> Tuple:
    """One AMSGrad update without bias correction; returns new (param, m, v, v_hat).

    Works on floats and on numpy arrays (inputs are not modified).
    """
    m = beta1 * m + (1 - beta1) * grad
    v = beta2 * v + (1 - beta2) * grad * grad
    v_hat = np.maximum(v_hat, v)
    param = param - alpha * m / (np.sqrt(v_hat) + eps)
    return param, m, v, v_hat


def clip_global_norm(grads: Params, threshold: float) -> float:
    """Scale all gradients in place so their joint L2 norm is at most
    ``threshold``; returns the norm before clipping."""
    norm = float(np.sqrt(sum(float(np.vdot(g, g)) for g in grads.values())))
    if threshold > 0 and norm > threshold:
        scale = threshold / norm
        for g in grads.values():
            g *= scale
    return norm


class SGD:
    kind = "sgd"

    def __init__(self, lr: float = 0.1):
        self.lr = lr

    def step(self, params: Params, grads: Params) -> None:
        for name, g in grads.items():
            params[name] -= self.lr * g

    def state_arrays(self) -> Params:
        return {}


class AMSGrad:
    kind = "amsgrad"

    def __init__(self, params: Params, alpha=0.001, beta1=0.9, beta2=0.999, eps=EPS):
        self.alpha, self.beta1, self.beta2, self.eps = alpha, beta1, beta2, eps
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}
        self.v_hat = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            m, v, vh = self.m[name], self.v[name], self.v_hat[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            np.maximum(vh, v, out=vh)
            params[name] -= self.alpha * m / (np.sqrt(vh) + self.eps)

    def state_arrays(self) -> Params:
        out = {}
        for prefix, d in (("m", self.m), ("v", self.v), ("v_hat", self.v_hat)):
            out.update({f"{prefix}:{k}": a for k, a in d.items()})
        return out


def decay(params: Params, rate: float) -> None:
    if rate:
        for p in params.values():
            p *= 1.0 - rate
