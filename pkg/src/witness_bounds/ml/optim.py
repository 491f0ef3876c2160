"""Adam with L2 weight decay, and the cosine-annealing learning-rate schedule."""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: OrderedDict = field(default_factory=OrderedDict)
    v: OrderedDict = field(default_factory=OrderedDict)
    t: int = 0


def adam_step(params, grads, state: AdamState, lr: float, weight_decay: float = 0.0,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8, decoupled: bool = False) -> None:
    """One in-place Adam update of ``params.tensors``.

    With ``decoupled=False`` (default) weight decay is the classic coupled L2
    term: ``weight_decay * theta`` is added to the gradient before the moment
    updates.  ``decoupled=True`` gives the AdamW variant.
    """
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, theta in params.tensors.items():
        g = grads[name]
        if weight_decay and not decoupled:
            g = g + weight_decay * theta
        if name not in state.m:
            state.m[name] = 0.0 * theta
            state.v[name] = 0.0 * theta
        m = state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        v = state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        if weight_decay and decoupled:
            theta *= 1.0 - lr * weight_decay
        theta -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def cosine_lr(epoch: int, lr_max: float, t_max: int = 100, eta_min: float = 0.0) -> float:
    return eta_min + (lr_max - eta_min) * (1.0 + math.cos(math.pi * epoch / t_max)) / 2.0
