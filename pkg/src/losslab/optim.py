"""SGD with Nesterov momentum, LR schedules, product-form weight decay, EMA.

The momentum update is the "implementation" variant:

    v <- mu * v - eta * g
    p <- p + mu * v - eta * g

Weight decay is parameterized by the product lambda_tilde = lr * decay, so
its gradient contribution is (lambda_tilde / eta) * p and the per-step
shrink applied to the parameter is lambda_tilde * p regardless of where the
schedule currently is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sgd_nesterov_step(params, grads, velocity, lr, momentum):
    """One Nesterov step over parallel lists of arrays.

    Returns (new_params, new_velocity) as fresh arrays.
    """
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {momentum}")
    if len(params) != len(grads) or len(params) != len(velocity):
        raise ValueError("params, grads, velocity must have equal length")
    new_v = []
    new_p = []
    for p, g, v in zip(params, grads, velocity):
        if p.shape != g.shape or p.shape != v.shape:
            raise ValueError(f"shape mismatch {p.shape} / {g.shape} / {v.shape}")
        v2 = momentum * v - lr * g
        new_v.append(v2)
        new_p.append(p + momentum * v2 - lr * g)
    return new_p, new_v


def weight_decay_grad(param: np.ndarray, weight_decay_product: float, lr: float):
    """Gradient contribution of decay parameterized as lambda_tilde = lr*decay.

    Adding (lambda_tilde / lr) * p to the gradient makes the plain SGD part
    of the update shrink p by exactly lambda_tilde * p per step.
    """
    if weight_decay_product < 0:
        raise ValueError(
            f"weight_decay_product must be >= 0, got {weight_decay_product}"
        )
    if lr <= 0:
        raise ValueError(f"lr must be > 0 to apply product-form decay, got {lr}")
    return (weight_decay_product / lr) * param


@dataclass(frozen=True)
class CosineSchedule:
    """peak * 0.5 * (1 + cos(pi * step / total_steps)), no restarts."""

    peak_lr: float


@dataclass(frozen=True)
class WarmupExponentialSchedule:
    """Linear 0 -> peak over warmup_epochs, then *decay_per_epoch each epoch.

    The decay is a staircase on whole epochs elapsed past warmup.
    """

    peak_lr: float
    warmup_epochs: float = 10.0
    decay_per_epoch: float = 0.975
    steps_per_epoch: int = 1


def lr_at(schedule, step: int, total_steps: int) -> float:
    if total_steps <= 0:
        raise ValueError(f"total_steps must be > 0, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if isinstance(schedule, CosineSchedule):
        return schedule.peak_lr * 0.5 * (1.0 + np.cos(np.pi * step / total_steps))
    if isinstance(schedule, WarmupExponentialSchedule):
        warm = schedule.warmup_epochs * schedule.steps_per_epoch
        if step < warm:
            return schedule.peak_lr * step / warm
        epochs_past = np.floor((step - warm) / schedule.steps_per_epoch)
        return schedule.peak_lr * schedule.decay_per_epoch**epochs_past
    raise TypeError(f"unknown schedule {type(schedule).__name__}")


@dataclass
class EmaState:
    """Exponential moving average of a parameter list."""

    shadow: list
    momentum: float

    def __post_init__(self):
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"ema momentum must be in [0, 1), got {self.momentum}")


def ema_init(params, momentum: float) -> EmaState:
    return EmaState([np.array(p, copy=True) for p in params], momentum)


def ema_update(state: EmaState, params) -> None:
    """shadow <- m * shadow + (1 - m) * params, in place."""
    if len(params) != len(state.shadow):
        raise ValueError("param list length changed under EMA")
    m = state.momentum
    for s, p in zip(state.shadow, params):
        s *= m
        s += (1.0 - m) * p
