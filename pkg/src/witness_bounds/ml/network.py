"""CoherenceNet: a fixed residual MLP with hand-written backpropagation.

Layout (row-vector convention, ``x @ W + b``)::

    fc1 33->128, GELU, LayerNorm
    residual block: h + res2(LeakyReLU(res1(h)))   (128->128->128)
    dropout 0.3
    fc2 128->64, LeakyReLU(0.01), dropout 0.3
    fc3 64->32, SiLU
    head1 32->16, LeakyReLU(0.01)
    head2 16->1, identity (regression) or sigmoid (classification)
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, expit

from ..errors import ShapeMismatch

N_FEATURES = 33
DROPOUT = 0.3
LEAKY_SLOPE = 0.01
LN_EPS = 1e-5

# name -> (fan_in, fan_out) for dense layers
DENSE = OrderedDict(
    [
        ("fc1", (33, 128)),
        ("res1", (128, 128)),
        ("res2", (128, 128)),
        ("fc2", (128, 64)),
        ("fc3", (64, 32)),
        ("head1", (32, 16)),
        ("head2", (16, 1)),
    ]
)
PARAM_SHAPES = OrderedDict()
for _name, (_i, _o) in DENSE.items():
    PARAM_SHAPES[f"{_name}.W"] = (_i, _o)
    PARAM_SHAPES[f"{_name}.b"] = (_o,)
    if _name == "fc1":
        PARAM_SHAPES["ln.gamma"] = (128,)
        PARAM_SHAPES["ln.beta"] = (128,)
N_PARAMS = sum(math.prod(s) for s in PARAM_SHAPES.values())
assert N_PARAMS == 48513


@dataclass
class CoherenceNetParams:
    tensors: OrderedDict
    classification: bool = False

    def __post_init__(self):
        for name, shape in PARAM_SHAPES.items():
            if name not in self.tensors or self.tensors[name].shape != shape:
                raise ShapeMismatch(f"parameter {name} must have shape {shape}")

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self) -> "CoherenceNetParams":
        return CoherenceNetParams(OrderedDict((k, v.copy()) for k, v in self.tensors.items()), self.classification)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.tensors[k].reshape(-1) for k in PARAM_SHAPES])

    @classmethod
    def from_flat(cls, vec, classification: bool = False) -> "CoherenceNetParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != N_PARAMS:
            raise ShapeMismatch(f"expected {N_PARAMS} parameters, got {vec.size}")
        out, pos = OrderedDict(), 0
        for name, shape in PARAM_SHAPES.items():
            n = math.prod(shape)
            out[name] = vec[pos : pos + n].reshape(shape).copy()
            pos += n
        return cls(out, classification)

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.tensors.values())


def init_params(rng: np.random.Generator, classification: bool = False) -> CoherenceNetParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; LayerNorm gain 1, bias 0."""
    t = OrderedDict()
    for name, shape in PARAM_SHAPES.items():
        if name == "ln.gamma":
            t[name] = np.ones(shape)
        elif name == "ln.beta":
            t[name] = np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(DENSE[name.split(".")[0]][0])
            t[name] = rng.uniform(-bound, bound, shape)
    return CoherenceNetParams(t, classification)


def zeros_like_params(classification: bool = False) -> CoherenceNetParams:
    return CoherenceNetParams(OrderedDict((k, np.zeros(s)) for k, s in PARAM_SHAPES.items()), classification)


# -- activations --------------------------------------------------------------

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_grad(x):
    return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * _INV_SQRT2PI * np.exp(-0.5 * x * x)


def leaky_relu(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def leaky_relu_grad(x):
    return np.where(x > 0, 1.0, LEAKY_SLOPE)


def silu(x):
    return x * expit(x)


def silu_grad(x):
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


sigmoid = expit


# -- forward / backward -------------------------------------------------------

def dropout_masks(n: int, rng: np.random.Generator, rate: float = DROPOUT) -> tuple:
    """Inverted-dropout masks for the two dropout sites (scaled by 1 / (1 - rate))."""
    keep = 1.0 - rate
    m1 = (rng.random((n, 128)) >= rate) / keep
    m2 = (rng.random((n, 64)) >= rate) / keep
    return m1, m2


@dataclass
class ForwardCache:
    x: np.ndarray
    z1: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    h: np.ndarray
    r1: np.ndarray
    s1: np.ndarray
    h2: np.ndarray
    d1: np.ndarray
    z3: np.ndarray
    d2: np.ndarray
    z4: np.ndarray
    a4: np.ndarray
    z5: np.ndarray
    a5: np.ndarray
    logits: np.ndarray
    masks: tuple | None = field(default=None, repr=False)


def forward(params: CoherenceNetParams, x, mode: str = "eval", rng: np.random.Generator | None = None, masks=None):
    """Network output for a batch ``x`` of shape (n, 33) (or a single 33-vector).

    ``mode="train"`` applies dropout, with masks either given or drawn from
    ``rng``; ``mode="eval"`` is deterministic.  Returns (output, cache) where
    output has shape (n,) and is a probability for classification nets.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != N_FEATURES:
        raise ShapeMismatch(f"expected input of shape (n, {N_FEATURES}), got {x.shape}")
    p = params.tensors
    n = x.shape[0]
    if mode == "train" and masks is None:
        if rng is None:
            raise ValueError("train mode needs dropout masks or an rng")
        masks = dropout_masks(n, rng)
    elif mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "eval":
        masks = None

    z1 = x @ p["fc1.W"] + p["fc1.b"]
    a1 = gelu(z1)
    mu = a1.mean(axis=1, keepdims=True)
    var = a1.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (a1 - mu) * inv_std
    h = xhat * p["ln.gamma"] + p["ln.beta"]

    r1 = h @ p["res1.W"] + p["res1.b"]
    s1 = leaky_relu(r1)
    h2 = h + s1 @ p["res2.W"] + p["res2.b"]
    d1 = h2 * masks[0] if masks is not None else h2

    z3 = d1 @ p["fc2.W"] + p["fc2.b"]
    a3 = leaky_relu(z3)
    d2 = a3 * masks[1] if masks is not None else a3

    z4 = d2 @ p["fc3.W"] + p["fc3.b"]
    a4 = silu(z4)
    z5 = a4 @ p["head1.W"] + p["head1.b"]
    a5 = leaky_relu(z5)
    logits = (a5 @ p["head2.W"] + p["head2.b"])[:, 0]
    out = sigmoid(logits) if params.classification else logits
    cache = ForwardCache(x, z1, xhat, inv_std, h, r1, s1, h2, d1, z3, d2, z4, a4, z5, a5, logits, masks)
    return (out[0] if single else out), cache


def backward(params: CoherenceNetParams, cache: ForwardCache, dlogits) -> OrderedDict:
    """Gradients of a loss with respect to every parameter, given dL/dlogits (shape (n,))."""
    p = params.tensors
    g = OrderedDict()
    dz6 = np.asarray(dlogits, dtype=np.float64).reshape(-1, 1)
    if dz6.shape[0] != cache.x.shape[0]:
        raise ShapeMismatch("upstream gradient does not match the batch")

    g["head2.W"] = cache.a5.T @ dz6
    g["head2.b"] = dz6.sum(axis=0)
    dz5 = (dz6 @ p["head2.W"].T) * leaky_relu_grad(cache.z5)
    g["head1.W"] = cache.a4.T @ dz5
    g["head1.b"] = dz5.sum(axis=0)
    dz4 = (dz5 @ p["head1.W"].T) * silu_grad(cache.z4)
    g["fc3.W"] = cache.d2.T @ dz4
    g["fc3.b"] = dz4.sum(axis=0)
    dd2 = dz4 @ p["fc3.W"].T
    da3 = dd2 * cache.masks[1] if cache.masks is not None else dd2
    dz3 = da3 * leaky_relu_grad(cache.z3)
    g["fc2.W"] = cache.d1.T @ dz3
    g["fc2.b"] = dz3.sum(axis=0)
    dd1 = dz3 @ p["fc2.W"].T
    dh2 = dd1 * cache.masks[0] if cache.masks is not None else dd1

    # residual block: h2 = h + res2(leaky(res1(h)))
    g["res2.W"] = cache.s1.T @ dh2
    g["res2.b"] = dh2.sum(axis=0)
    dr1 = (dh2 @ p["res2.W"].T) * leaky_relu_grad(cache.r1)
    g["res1.W"] = cache.h.T @ dr1
    g["res1.b"] = dr1.sum(axis=0)
    dh = dh2 + dr1 @ p["res1.W"].T

    g["ln.gamma"] = (dh * cache.xhat).sum(axis=0)
    g["ln.beta"] = dh.sum(axis=0)
    dxhat = dh * p["ln.gamma"]
    da1 = cache.inv_std * (
        dxhat - dxhat.mean(axis=1, keepdims=True) - cache.xhat * (dxhat * cache.xhat).mean(axis=1, keepdims=True)
    )
    dz1 = da1 * gelu_grad(cache.z1)
    g["fc1.W"] = cache.x.T @ dz1
    g["fc1.b"] = dz1.sum(axis=0)
    return OrderedDict((k, g[k]) for k in PARAM_SHAPES)


# -- losses -------------------------------------------------------------------

LOSSES = ("mae", "mse", "bce")
_BCE_CLAMP = 1e-12


def loss_value(kind: str, pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if kind == "mae":
        return float(np.mean(np.abs(pred - target)))
    if kind == "mse":
        return float(np.mean((pred - target) ** 2))
    if kind == "bce":
        q = np.clip(pred, _BCE_CLAMP, 1.0 - _BCE_CLAMP)
        return float(-np.mean(target * np.log(q) + (1.0 - target) * np.log(1.0 - q)))
    raise ValueError(f"unknown loss {kind!r}")


def loss_grad_logits(kind: str, logits, target) -> np.ndarray:
    """dL/dlogits for the mean loss over the batch."""
    n = logits.shape[0]
    if kind == "mae":
        return np.sign(logits - target) / n
    if kind == "mse":
        return 2.0 * (logits - target) / n
    if kind == "bce":
        # sigmoid output followed by BCE collapses to (sigmoid(z) - y)
        return (sigmoid(logits) - target) / n
    raise ValueError(f"unknown loss {kind!r}")


def loss_and_grad(params: CoherenceNetParams, x, y, kind: str, masks=None):
    mode = "train" if masks is not None else "eval"
    out, cache = forward(params, x, mode=mode, masks=masks)
    y = np.asarray(y, dtype=float)
    loss = loss_value(kind, out, y)
    grads = backward(params, cache, loss_grad_logits(kind, cache.logits, y))
    return loss, grads
