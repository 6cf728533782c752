"""Small research stack: classification objectives, an MLP trainer, and
representation / calibration / transfer analysis tools."""

from .losses import (
    DegenerateInputError,
    FinalLayer,
    LossResult,
    LossSpec,
    PenaltySpec,
    compose_loss,
    cosine_softmax_xent,
    dropout_xent,
    eval_scores,
    extra_final_l2_penalty,
    label_smoothing_xent,
    logit_norm_xent,
    logit_penalty_xent,
    sigmoid_bias_init,
    sigmoid_xent,
    softmax_xent,
    squared_error_loss,
)

__all__ = [
    "DegenerateInputError",
    "FinalLayer",
    "LossResult",
    "LossSpec",
    "PenaltySpec",
    "compose_loss",
    "cosine_softmax_xent",
    "dropout_xent",
    "eval_scores",
    "extra_final_l2_penalty",
    "label_smoothing_xent",
    "logit_norm_xent",
    "logit_penalty_xent",
    "sigmoid_bias_init",
    "sigmoid_xent",
    "softmax_xent",
    "squared_error_loss",
]

__version__ = "0.1.0"
