"""Full-batch training with grid search, cosine annealing and early stopping."""
from __future__ import annotations

import base64
import json
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..dataset import MEASURE_NAMES, Standardizer, feature_matrix, fit_standardizer
from ..errors import ConfigError, SchemaMismatch
from .network import PARAM_SHAPES, CoherenceNetParams, dropout_masks, forward, init_params, loss_and_grad, loss_value
from .optim import AdamState, adam_step, cosine_lr

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "witness-bounds/coherencenet"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    task: str = "regression"  # or "classification"
    target: str = "c_g"
    lr_grid: tuple = (1e-3, 1e-4)
    wd_grid: tuple = (1e-4, 1e-5)
    max_epochs: int = 100
    patience: int = 30
    t_max: int = 100
    eta_min: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decoupled_weight_decay: bool = False
    seed: int = 42

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.target not in MEASURE_NAMES:
            raise ConfigError(f"unknown target {self.target!r}")
        object.__setattr__(self, "lr_grid", tuple(self.lr_grid))
        object.__setattr__(self, "wd_grid", tuple(self.wd_grid))

    @property
    def loss(self) -> str:
        if self.task == "classification":
            return "bce"
        return "mae" if self.target == "c_l1" else "mse"

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lr_grid"] = list(self.lr_grid)
        d["wd_grid"] = list(self.wd_grid)
        return d


@dataclass
class RunRecord:
    lr: float
    weight_decay: float
    best_epoch: int
    val_metric: float
    epochs_run: int
    history: list = field(default_factory=list)  # (epoch, lr, train_loss, val_metric)


@dataclass
class ModelCheckpoint:
    params: CoherenceNetParams
    standardizer: Standardizer
    config: TrainConfig
    best_epoch: int
    val_metric: float
    lr: float = 0.0
    weight_decay: float = 0.0
    runs: list = field(default_factory=list)

    def predict(self, features) -> np.ndarray:
        out, _ = forward(self.params, self.standardizer.apply(np.atleast_2d(features)), mode="eval")
        return out


def targets(samples: list, config: TrainConfig) -> np.ndarray:
    key = "labels_class" if config.task == "classification" else "labels_regression"
    return np.array([getattr(s, key)[config.target] for s in samples], dtype=float)


def fit_one(x, y, xv, yv, lr: float, wd: float, config: TrainConfig, init: CoherenceNetParams,
            rng: np.random.Generator, val_fn=None):
    """Train one (lr, wd) candidate from ``init``; return (best params, RunRecord).

    One full-batch Adam step per epoch, dropout masks drawn from ``rng``.
    Training stops once the validation metric has failed to improve for
    ``config.patience`` consecutive epochs, and the best-epoch weights are
    returned.  ``val_fn(params, epoch)`` overrides the validation metric.
    """
    params = init.copy()
    state = AdamState()
    kind = config.loss
    if val_fn is None:
        def val_fn(p, epoch):
            return loss_value(kind, forward(p, xv, mode="eval")[0], yv)

    best, best_params, best_epoch, wait = np.inf, params.copy(), -1, 0
    history = []
    epoch = -1
    for epoch in range(config.max_epochs):
        lr_e = cosine_lr(epoch, lr, config.t_max, config.eta_min)
        train_loss, grads = loss_and_grad(params, x, y, kind, dropout_masks(x.shape[0], rng))
        adam_step(params, grads, state, lr_e, wd, config.beta1, config.beta2, config.eps,
                  decoupled=config.decoupled_weight_decay)
        val = float(val_fn(params, epoch))
        history.append((epoch, lr_e, train_loss, val))
        if val < best:
            best, best_params, best_epoch, wait = val, params.copy(), epoch, 0
        else:
            wait += 1
            if wait >= config.patience:
                break
    return best_params, RunRecord(lr, wd, best_epoch, best, epoch + 1, history)


def train(split, config: TrainConfig = TrainConfig(), standardizer: Standardizer | None = None) -> ModelCheckpoint:
    """Grid search over (lr, weight decay); the lowest validation metric wins.

    All candidates share one seeded initialisation; each has its own dropout
    stream.  The standardizer is fitted on the training split only.
    """
    standardizer = standardizer or fit_standardizer(split.train)
    x = standardizer.apply(feature_matrix(split.train))
    xv = standardizer.apply(feature_matrix(split.validation))
    y = targets(split.train, config)
    yv = targets(split.validation, config)
    init = init_params(np.random.default_rng(config.seed), config.task == "classification")
    best, runs = None, []
    grid = [(lr, wd) for lr in config.lr_grid for wd in config.wd_grid]
    for k, (lr, wd) in enumerate(grid):
        rng = np.random.default_rng([config.seed, k + 1])
        params, record = fit_one(x, y, xv, yv, lr, wd, config, init, rng)
        runs.append(record)
        log.info("lr=%g wd=%g: best val %.5f at epoch %d", lr, wd, record.val_metric, record.best_epoch)
        if best is None or record.val_metric < best[1].val_metric:
            best = (params, record)
    params, record = best
    return ModelCheckpoint(params, standardizer, config, record.best_epoch, record.val_metric,
                           record.lr, record.weight_decay, runs)


# -- evaluation ---------------------------------------------------------------

def regression_metrics(pred, y) -> dict:
    pred, y = np.asarray(pred, dtype=float), np.asarray(y, dtype=float)
    return {"mae": float(np.mean(np.abs(pred - y))), "mse": float(np.mean((pred - y) ** 2)), "n": int(y.size)}


def classification_metrics(prob, y, threshold: float = 0.5) -> dict:
    prob, y = np.asarray(prob, dtype=float), np.asarray(y, dtype=int)
    yhat = (prob >= threshold).astype(int)
    tp = int(np.sum((yhat == 1) & (y == 1)))
    tn = int(np.sum((yhat == 0) & (y == 0)))
    fp = int(np.sum((yhat == 1) & (y == 0)))
    fn = int(np.sum((yhat == 0) & (y == 1)))
    return {
        "accuracy": (tp + tn) / max(1, y.size),
        "bce": loss_value("bce", prob, y),
        "tp": tp, "tn": tn, "fp": fp, "fn": fn,
        "n": int(y.size),
    }


def evaluate(checkpoint: ModelCheckpoint, samples: list, task: str | None = None) -> dict:
    config = checkpoint.config
    task = task or config.task
    pred = checkpoint.predict(feature_matrix(samples))
    y = targets(samples, config)
    if task == "classification":
        return classification_metrics(pred, y)
    return regression_metrics(pred, y)


# -- persistence --------------------------------------------------------------

def _b64(a) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _unb64(s: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").copy()


def checkpoint_to_dict(ckpt: ModelCheckpoint, metrics: dict | None = None) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": ckpt.config.to_dict(),
        "classification": ckpt.params.classification,
        "shapes": {k: list(v) for k, v in PARAM_SHAPES.items()},
        "seed": ckpt.config.seed,
        "best_epoch": ckpt.best_epoch,
        "val_metric": ckpt.val_metric,
        "lr": ckpt.lr,
        "weight_decay": ckpt.weight_decay,
        "metrics": metrics or {},
        "standardizer": {"mean": _b64(ckpt.standardizer.mean), "std": _b64(ckpt.standardizer.std)},
        "params": _b64(ckpt.params.flat()),
    }


def save_checkpoint(path, ckpt: ModelCheckpoint, metrics: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint_to_dict(ckpt, metrics), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("format") != CHECKPOINT_FORMAT or d.get("version") != CHECKPOINT_VERSION:
        raise SchemaMismatch(f"not a v{CHECKPOINT_VERSION} checkpoint: {d.get('format')!r} v{d.get('version')!r}")
    if {k: tuple(v) for k, v in d["shapes"].items()} != dict(PARAM_SHAPES):
        raise SchemaMismatch("checkpoint layer shapes do not match this network")
    params = CoherenceNetParams.from_flat(_unb64(d["params"]), bool(d["classification"]))
    std = Standardizer(_unb64(d["standardizer"]["mean"]), _unb64(d["standardizer"]["std"]))
    return ModelCheckpoint(params, std, TrainConfig.from_dict(d["config"]), int(d["best_epoch"]),
                           float(d["val_metric"]), float(d["lr"]), float(d["weight_decay"]))
