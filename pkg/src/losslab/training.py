"""Minibatch trainer: Nesterov SGD, LR schedules, decay, EMA, epoch logging.

Fully deterministic for a fixed (model, dataset, config): shuffling and
dropout masks come from independent child streams of SeedSequence(seed).
The input model is never mutated; train() works on a copy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import Batch
from .losses import LossSpec, compose_loss, evaluation_loss
from .mlp import (
    MlpModel,
    copy_model,
    forward_hidden,
    model_from_params,
    model_scores,
)
from .optim import (
    CosineSchedule,
    WarmupExponentialSchedule,
    ema_init,
    ema_update,
    lr_at,
    sgd_nesterov_step,
    weight_decay_grad,
)

SCHEDULE_KINDS = ("cosine", "warmup_exp")


class TrainingDiverged(RuntimeError):
    """Loss or parameters went non-finite mid-run."""


@dataclass(frozen=True)
class TrainConfig:
    loss: LossSpec
    epochs: int
    batch_size: int
    peak_lr: float
    schedule: str = "cosine"
    warmup_epochs: float = 10.0
    decay_per_epoch: float = 0.975
    momentum: float = 0.9
    weight_decay_product: float = 0.0
    ema_momentum: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.peak_lr <= 0:
            raise ValueError(f"peak_lr must be > 0, got {self.peak_lr}")
        if self.schedule not in SCHEDULE_KINDS:
            raise ValueError(
                f"schedule must be one of {SCHEDULE_KINDS}, got {self.schedule!r}"
            )
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay_product < 0:
            raise ValueError("weight_decay_product must be >= 0")
        if self.ema_momentum is not None and not 0.0 <= self.ema_momentum < 1.0:
            raise ValueError(f"ema_momentum must be in [0, 1), got {self.ema_momentum}")


@dataclass
class EpochRecord:
    epoch: int  # 1-based
    lr: float  # lr of the last step in this epoch
    train_loss: float
    train_acc: float
    holdout_acc: float | None = None


@dataclass
class TrainResult:
    model: MlpModel
    ema_model: MlpModel | None
    log: list = field(default_factory=list)


def _top1_acc(scores: np.ndarray, labels: np.ndarray) -> float:
    # argmax takes the first maximum, i.e. ties resolve to the lower index
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def _build_schedule(config: TrainConfig, steps_per_epoch: int):
    if config.schedule == "cosine":
        return CosineSchedule(config.peak_lr)
    return WarmupExponentialSchedule(
        config.peak_lr,
        config.warmup_epochs,
        config.decay_per_epoch,
        steps_per_epoch,
    )


def loss_and_grads(
    model: MlpModel,
    spec: LossSpec,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator | None = None,
):
    """Forward + backward through the whole network.

    Returns (value, grads) with grads in model.params() order.
    """
    acts = forward_hidden(model, X)
    H = acts[-1]
    res = compose_loss(spec, model.final, H, y, rng=rng)
    if res.grad_weights is not None:
        g_wf, g_bf, g_h = res.grad_weights, res.grad_bias, res.grad_features
    else:
        G = res.grad_logits
        g_wf = G.T @ H
        g_bf = G.sum(axis=0)
        g_h = G @ model.final.weights

    nh = len(model.hidden_weights)
    g_hidden_w = [None] * nh
    g_hidden_b = [None] * nh
    delta = g_h
    for i in range(nh - 1, -1, -1):
        delta = delta * (acts[i + 1] > 0)  # ReLU subgradient, 0 at the kink
        g_hidden_w[i] = delta.T @ acts[i]
        g_hidden_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.hidden_weights[i]

    grads = []
    for i in range(nh):
        grads.append(g_hidden_w[i])
        grads.append(g_hidden_b[i])
    grads.append(g_wf)
    grads.append(g_bf)
    return res.value, grads


def train(
    model: MlpModel,
    dataset: Batch,
    config: TrainConfig,
    holdout: Batch | None = None,
) -> TrainResult:
    if dataset.num_classes != model.num_classes:
        raise ValueError(
            f"dataset has {dataset.num_classes} classes, model {model.num_classes}"
        )
    model = copy_model(model)
    spec = config.loss

    ss = np.random.SeedSequence(config.seed)
    shuffle_ss, dropout_ss = ss.spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)

    n = dataset.n
    steps_per_epoch = max(1, -(-n // config.batch_size))  # ceil
    total_steps = max(1, config.epochs * steps_per_epoch)
    schedule = _build_schedule(config, steps_per_epoch)

    params = model.params()
    velocity = [np.zeros_like(p) for p in params]
    decay_idx = set(model.weight_param_indices())
    ema = ema_init(params, config.ema_momentum) if config.ema_momentum is not None else None

    log = []
    step = 0
    lr = 0.0
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            lr = float(lr_at(schedule, step, total_steps))
            value, grads = loss_and_grads(
                model, spec, dataset.features[idx], dataset.labels[idx], dropout_rng
            )
            if not np.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss at step {step} (kind {spec.kind!r}, lr {lr:g})"
                )
            if config.weight_decay_product > 0.0 and lr > 0.0:
                # product-form decay; skipped on lr=0 steps (no-op updates)
                for i in decay_idx:
                    grads[i] = grads[i] + weight_decay_grad(
                        params[i], config.weight_decay_product, lr
                    )
            params, velocity = sgd_nesterov_step(
                params, grads, velocity, lr, config.momentum
            )
            if not all(np.all(np.isfinite(p)) for p in params):
                raise TrainingDiverged(
                    f"non-finite parameters after step {step} (kind {spec.kind!r})"
                )
            model = model_from_params(model, params)
            if ema is not None:
                ema_update(ema, params)
            step += 1

        log.append(_epoch_record(model, spec, dataset, holdout, epoch, lr))

    ema_model = model_from_params(model, ema.shadow) if ema is not None else None
    return TrainResult(model=model, ema_model=ema_model, log=log)


def _epoch_record(model, spec, dataset, holdout, epoch, lr) -> EpochRecord:
    from .mlp import penultimate_features

    h = penultimate_features(model, dataset.features)
    loss = evaluation_loss(spec, model.final, h, dataset.labels)
    acc = _top1_acc(model_scores(model, spec, dataset.features), dataset.labels)
    hold = None
    if holdout is not None:
        hold = _top1_acc(model_scores(model, spec, holdout.features), holdout.labels)
    return EpochRecord(epoch, lr, float(loss), acc, hold)


def write_log_csv(log, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "lr", "train_loss", "train_acc", "holdout_acc"])
        for rec in log:
            w.writerow(
                [
                    rec.epoch,
                    "%.10g" % rec.lr,
                    "%.10g" % rec.train_loss,
                    "%.10g" % rec.train_acc,
                    "" if rec.holdout_acc is None else "%.10g" % rec.holdout_acc,
                ]
            )


def read_log_csv(path) -> list:
    out = []
    with open(path) as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["epoch", "lr", "train_loss", "train_acc", "holdout_acc"]:
            raise ValueError(f"{path}: unexpected log header {header}")
        for row in r:
            out.append(
                EpochRecord(
                    int(row[0]),
                    float(row[1]),
                    float(row[2]),
                    float(row[3]),
                    None if row[4] == "" else float(row[4]),
                )
            )
    return out
