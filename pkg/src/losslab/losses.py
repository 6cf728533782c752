"""Classification objectives with exact analytic gradients.

Nine training objectives over a linear final layer: plain softmax
cross-entropy, label smoothing, penultimate-layer dropout, an extra L2
penalty on the final weight matrix, a logit magnitude penalty, logit
normalization, cosine softmax, sigmoid cross-entropy, and squared error
on logits. Each returns the batch-mean value together with the gradient
of that value; everything is plain numpy and deterministic (dropout takes
an explicit seed or Generator).

Conventions used throughout:

* ``logits`` is ``(K,)`` for a single example or ``(n, K)`` for a batch;
  ``target`` is an int or an ``(n,)`` int array of class indices.
* ``value`` is the mean per-example loss. ``grad_logits`` is the gradient
  of that mean with respect to the score matrix the objective consumes
  (so batching divides per-example rows by n).
* Objectives that do not factor through ``W x + b`` alone (cosine softmax,
  dropout, the extra final-layer L2) also return total gradients with
  respect to the final-layer weights/bias and the input features.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

NORM_EPS = 1e-12

LOSS_KINDS = (
    "softmax",
    "label_smoothing",
    "dropout",
    "extra_final_l2",
    "logit_penalty",
    "logit_norm",
    "cosine_softmax",
    "sigmoid",
    "squared_error",
)

PENALTY_KINDS = ("logit_penalty", "extra_final_l2")


class DegenerateInputError(ValueError):
    """A vector that must be normalized has (near-)zero norm."""


@dataclass(frozen=True)
class FinalLayer:
    """Linear classification head: scores = weights @ x + bias."""

    weights: np.ndarray  # (K, M)
    bias: np.ndarray  # (K,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2d (K, M), got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(
                f"bias shape {b.shape} does not match {w.shape[0]} classes"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("final layer has non-finite entries")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class PenaltySpec:
    """Additive regularizer attached to a base objective."""

    kind: str  # "logit_penalty" or "extra_final_l2"
    value: float

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError(f"penalty value must be finite and >= 0, got {self.value}")


@dataclass(frozen=True)
class LossSpec:
    """A base objective plus optional additive penalties.

    Only the fields relevant to ``kind`` are read; constructing a spec with
    out-of-range values for its own kind raises immediately so config typos
    fail fast rather than training quietly with defaults.
    """

    kind: str
    alpha: float = 0.1  # label_smoothing
    keep_prob: float = 0.7  # dropout
    lambda_final: float = 8e-4  # extra_final_l2
    beta: float = 6e-4  # logit_penalty
    temperature: float = 0.05  # logit_norm / cosine_softmax
    kappa: float = 1.0  # squared_error: weight on the target term
    target_magnitude: float = 1.0  # squared_error: desired target logit
    loss_scale: float = 1.0  # squared_error: overall multiplier
    extra_penalties: tuple[PenaltySpec, ...] = ()

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "label_smoothing" and not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.kind == "dropout" and not 0.0 < self.keep_prob <= 1.0:
            raise ValueError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        if self.kind == "extra_final_l2" and self.lambda_final < 0:
            raise ValueError(f"lambda_final must be >= 0, got {self.lambda_final}")
        if self.kind == "logit_penalty" and self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.kind in ("logit_norm", "cosine_softmax") and self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.kind == "squared_error":
            if self.kappa <= 0:
                raise ValueError(f"kappa must be > 0, got {self.kappa}")
            if self.loss_scale <= 0:
                raise ValueError(f"loss_scale must be > 0, got {self.loss_scale}")
        object.__setattr__(self, "extra_penalties", tuple(self.extra_penalties))


@dataclass
class LossResult:
    """Value and gradients of one objective evaluation.

    ``grad_weights``/``grad_bias``/``grad_features`` are populated exactly
    when the objective involves the final layer beyond a plain matmul
    (cosine softmax, dropout, extra final-layer L2); they are total
    gradients of ``value``.
    """

    value: float
    grad_logits: np.ndarray
    grad_weights: np.ndarray | None = None
    grad_bias: np.ndarray | None = None
    grad_features: np.ndarray | None = None


# ---------------------------------------------------------------------------
# numerically careful primitives


def logsumexp_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise log(sum(exp(l))) with max subtraction."""
    m = np.max(logits, axis=-1, keepdims=True)
    return (m + np.log(np.sum(np.exp(logits - m), axis=-1, keepdims=True)))[..., 0]


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    m = np.max(logits, axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)) without overflow on large |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bias_init(num_classes: int) -> float:
    """Bias so an all-zero-logit sigmoid model starts near chance mass 1/K."""
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    return -float(np.log(num_classes))


def _as_batch(logits, target):
    """Normalize inputs to (n, K) float64 and (n,) int64; remember if 1d."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
        squeeze = True
    elif arr.ndim == 2:
        squeeze = False
    else:
        raise ValueError(f"logits must be 1d or 2d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("logits contain non-finite entries")
    t = np.asarray(target, dtype=np.int64).reshape(-1)
    if squeeze and t.shape != (1,):
        raise ValueError("single logit row needs a single target")
    if t.shape != (arr.shape[0],):
        raise ValueError(
            f"target shape {t.shape} does not match batch of {arr.shape[0]}"
        )
    K = arr.shape[1]
    if np.any(t < 0) or np.any(t >= K):
        raise ValueError(f"target out of range for {K} classes")
    return arr, t, squeeze


def _one_hot(t: np.ndarray, num_classes: int) -> np.ndarray:
    y = np.zeros((t.shape[0], num_classes))
    y[np.arange(t.shape[0]), t] = 1.0
    return y


def _pack(values: np.ndarray, grad_rows: np.ndarray, squeeze: bool, **extra) -> LossResult:
    grad = grad_rows[0] if squeeze else grad_rows
    return LossResult(value=float(np.mean(values)), grad_logits=grad, **extra)


# ---------------------------------------------------------------------------
# logit-space objectives


def softmax_xent(logits, target) -> LossResult:
    """Mean cross-entropy -l_t + logsumexp(l); gradient (p - onehot)/n."""
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    values = logsumexp_rows(L) - L[np.arange(n), t]
    g = (softmax_rows(L) - _one_hot(t, K)) / n
    return _pack(values, g, squeeze)


def label_smoothing_xent(logits, target, alpha: float) -> LossResult:
    """Smoothed cross-entropy in the 1/(1-alpha) scaling.

    Per example: -l_t + logsumexp(l)/(1-alpha) - alpha/((1-alpha) K) * sum(l).
    alpha=0 reduces exactly to softmax_xent.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    c = 1.0 / (1.0 - alpha)
    values = -L[np.arange(n), t] + c * logsumexp_rows(L) - alpha * c / K * L.sum(axis=1)
    g = (c * softmax_rows(L) - _one_hot(t, K) - alpha * c / K) / n
    return _pack(values, g, squeeze)


def logit_penalty_xent(logits, target, beta: float) -> LossResult:
    """Softmax cross-entropy plus beta * ||l||^2 per example."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    values = logsumexp_rows(L) - L[np.arange(n), t] + beta * np.sum(L * L, axis=1)
    g = (softmax_rows(L) - _one_hot(t, K) + 2.0 * beta * L) / n
    return _pack(values, g, squeeze)


def logit_norm_xent(logits, target, temperature: float) -> LossResult:
    """Cross-entropy on direction-only logits l / (tau * ||l||).

    Gradient chains through the normalization:
    dL/dl = (g - (l.g / r^2) l) / (tau r) with r = ||l|| and g the softmax
    cross-entropy gradient at the normalized logits.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    r = np.linalg.norm(L, axis=1, keepdims=True)
    if np.any(r <= NORM_EPS):
        raise DegenerateInputError("logit vector norm is ~0; cannot normalize")
    U = L / (temperature * r)
    values = logsumexp_rows(U) - U[np.arange(n), t]
    g = softmax_rows(U) - _one_hot(t, K)  # dL/dU per example
    coef = np.sum(L * g, axis=1, keepdims=True) / (r * r)
    grad = (g - coef * L) / (temperature * r) / n
    return _pack(values, grad, squeeze)


def sigmoid_xent(logits, target) -> LossResult:
    """One-vs-all sigmoid cross-entropy: -l_t + sum_k softplus(l_k)."""
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    values = -L[np.arange(n), t] + softplus(L).sum(axis=1)
    g = (sigmoid(L) - _one_hot(t, K)) / n
    return _pack(values, g, squeeze)


def squared_error_loss(
    logits,
    target,
    kappa: float = 1.0,
    target_magnitude: float = 1.0,
    loss_scale: float = 1.0,
) -> LossResult:
    """Squared error on logits against (M at the target, 0 elsewhere).

    Per example: loss_scale/K * (kappa*(l_t - M)^2 + sum_{k != t} l_k^2).
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if loss_scale <= 0:
        raise ValueError(f"loss_scale must be > 0, got {loss_scale}")
    L, t, squeeze = _as_batch(logits, target)
    n, K = L.shape
    rows = np.arange(n)
    lt = L[rows, t]
    sq_off = np.sum(L * L, axis=1) - lt * lt
    values = loss_scale / K * (kappa * (lt - target_magnitude) ** 2 + sq_off)
    g = 2.0 * loss_scale / K * L
    g[rows, t] = 2.0 * loss_scale / K * kappa * (lt - target_magnitude)
    return _pack(values, g / n, squeeze)


# ---------------------------------------------------------------------------
# objectives that see the final layer directly


def extra_final_l2_penalty(layer: FinalLayer, lambda_final: float) -> LossResult:
    """(lambda/2) ||W||_F^2 on the final weight matrix; bias exempt."""
    if lambda_final < 0:
        raise ValueError(f"lambda_final must be >= 0, got {lambda_final}")
    w = layer.weights
    value = 0.5 * lambda_final * float(np.sum(w * w))
    return LossResult(
        value=value,
        grad_logits=np.zeros(layer.num_classes),
        grad_weights=lambda_final * w,
        grad_bias=np.zeros(layer.num_classes),
    )


def _check_features(layer: FinalLayer, features) -> tuple[np.ndarray, bool]:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
        squeeze = True
    elif X.ndim == 2:
        squeeze = False
    else:
        raise ValueError(f"features must be 1d or 2d, got shape {X.shape}")
    if X.shape[1] != layer.feature_dim:
        raise ValueError(
            f"features have dim {X.shape[1]}, layer expects {layer.feature_dim}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite entries")
    return X, squeeze


def cosine_scores(layer: FinalLayer, features) -> np.ndarray:
    """sim(W_k, x)/tau is applied by the caller; this returns raw cosines."""
    X, squeeze = _check_features(layer, features)
    xn = np.linalg.norm(X, axis=1, keepdims=True)
    wn = np.linalg.norm(layer.weights, axis=1, keepdims=True)
    if np.any(xn <= NORM_EPS):
        raise DegenerateInputError("feature vector norm is ~0; cosine undefined")
    if np.any(wn <= NORM_EPS):
        raise DegenerateInputError("class weight vector norm is ~0; cosine undefined")
    S = (X / xn) @ (layer.weights / wn).T
    return S[0] if squeeze else S


def cosine_softmax_xent(
    layer: FinalLayer, features, target, temperature: float
) -> LossResult:
    """Softmax cross-entropy on z_k = sim(W_k, x)/tau + b_k.

    grad_logits is with respect to z. Weight and feature gradients chain
    through the cosine:
      ds_k/dx   = W_k/(||W_k|| ||x||) - s_k x/||x||^2
      ds_k/dW_k = x/(||W_k|| ||x||) - s_k W_k/||W_k||^2
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    X, squeeze = _check_features(layer, features)
    t = np.asarray(target, dtype=np.int64).reshape(-1)
    n = X.shape[0]
    K = layer.num_classes
    if t.shape != (n,):
        raise ValueError(f"target shape {t.shape} does not match batch of {n}")
    if np.any(t < 0) or np.any(t >= K):
        raise ValueError(f"target out of range for {K} classes")

    xn = np.linalg.norm(X, axis=1, keepdims=True)  # (n, 1)
    wn = np.linalg.norm(layer.weights, axis=1, keepdims=True)  # (K, 1)
    if np.any(xn <= NORM_EPS):
        raise DegenerateInputError("feature vector norm is ~0; cosine undefined")
    if np.any(wn <= NORM_EPS):
        raise DegenerateInputError("class weight vector norm is ~0; cosine undefined")
    Xh = X / xn
    Wh = layer.weights / wn
    S = Xh @ Wh.T  # (n, K) cosines
    Z = S / temperature + layer.bias

    rows = np.arange(n)
    values = logsumexp_rows(Z) - Z[rows, t]
    G = (softmax_rows(Z) - _one_hot(t, K)) / n  # dL/dZ

    GS = G / temperature  # dL/dS
    # dL/dx_i = sum_k GS_ik (Wh_k / ||x_i|| - S_ik x_i / ||x_i||^2)
    grad_x = (GS @ Wh) / xn - (np.sum(GS * S, axis=1, keepdims=True) / (xn * xn)) * X
    # dL/dW_k = sum_i GS_ik (Xh_i / ||W_k|| - S_ik W_k / ||W_k||^2)
    col = np.sum(GS * S, axis=0)[:, None]  # (K, 1)
    grad_w = (GS.T @ Xh) / wn - col * layer.weights / (wn * wn)
    grad_b = G.sum(axis=0)

    return LossResult(
        value=float(np.mean(values)),
        grad_logits=G[0] if squeeze else G,
        grad_weights=grad_w,
        grad_bias=grad_b,
        grad_features=grad_x[0] if squeeze else grad_x,
    )


def dropout_xent(
    layer: FinalLayer,
    features,
    target,
    keep_prob: float,
    n_samples: int = 1,
    *,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> LossResult:
    """Softmax cross-entropy with Bernoulli(keep_prob) feature masking.

    Inverted scaling: x_tilde = x * mask / keep_prob, logits = W x_tilde + b.
    Gradients are pathwise through the sampled masks and averaged over
    ``n_samples`` independent mask draws. keep_prob=1 reduces to
    softmax_xent on W x + b. Deterministic given seed or rng.
    """
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if rng is None:
        if seed is None:
            raise ValueError("dropout needs an explicit seed or rng")
        rng = np.random.default_rng(seed)

    X, squeeze = _check_features(layer, features)
    t = np.asarray(target, dtype=np.int64).reshape(-1)
    n, M = X.shape
    K = layer.num_classes
    if t.shape != (n,):
        raise ValueError(f"target shape {t.shape} does not match batch of {n}")
    if np.any(t < 0) or np.any(t >= K):
        raise ValueError(f"target out of range for {K} classes")

    Y = _one_hot(t, K)
    rows = np.arange(n)
    value_acc = 0.0
    g_logits = np.zeros((n, K))
    g_w = np.zeros_like(layer.weights)
    g_b = np.zeros(K)
    g_x = np.zeros_like(X)

    # chunk the mask-sample axis so huge n_samples stays in modest memory
    chunk = max(1, int(4_000_000 / max(1, n * M)))
    done = 0
    while done < n_samples:
        s = min(chunk, n_samples - done)
        masks = rng.random((s, n, M)) < keep_prob
        Xt = X[None, :, :] * masks / keep_prob  # (s, n, M)
        Z = Xt @ layer.weights.T + layer.bias  # (s, n, K)
        lse = logsumexp_rows(Z)  # (s, n)
        picked = Z[:, rows, t]  # (s, n)
        value_acc += float(np.sum(np.mean(lse - picked, axis=1)))
        G = (softmax_rows(Z) - Y[None, :, :]) / n  # (s, n, K)
        g_logits += G.sum(axis=0)
        g_b += G.sum(axis=(0, 1))
        g_w += np.einsum("snk,snm->km", G, Xt)
        g_x += np.sum((G @ layer.weights) * masks, axis=0) / keep_prob
        done += s

    inv = 1.0 / n_samples
    g_logits *= inv
    g_w *= inv
    g_b *= inv
    g_x *= inv
    return LossResult(
        value=value_acc * inv,
        grad_logits=g_logits[0] if squeeze else g_logits,
        grad_weights=g_w,
        grad_bias=g_b,
        grad_features=g_x[0] if squeeze else g_x,
    )


# ---------------------------------------------------------------------------
# composition


def _forward_logits(layer: FinalLayer, X: np.ndarray) -> np.ndarray:
    return X @ layer.weights.T + layer.bias


def compose_loss(
    spec: LossSpec,
    layer: FinalLayer,
    features,
    target,
    *,
    n_samples: int = 1,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> LossResult:
    """Evaluate a LossSpec (base + extra penalties) at (layer, features).

    The composed value is base + sum of penalty terms. A logit penalty
    attaches to the score vector the base consumes (temperature-scaled
    cosine scores for cosine_softmax, clean logits for a dropout base);
    an extra final-layer L2 adds lambda*W to the weight gradient. Results
    carry total weight/bias/feature gradients whenever the spec involves
    cosine softmax, dropout, or an extra final-layer L2.
    """
    X, squeeze = _check_features(layer, features)
    t = np.asarray(target, dtype=np.int64).reshape(-1)
    n = X.shape[0]

    base_kind = spec.kind
    penalties = list(spec.extra_penalties)
    if base_kind == "extra_final_l2":
        # the "extra L2" objective is plain softmax plus its own penalty
        base_kind = "softmax"
        penalties.insert(0, PenaltySpec("extra_final_l2", spec.lambda_final))

    beta = 0.0
    lam = 0.0
    for p in penalties:
        if p.kind == "logit_penalty":
            beta += p.value
        else:
            lam += p.value

    if base_kind == "cosine_softmax":
        if beta > 0.0:
            # fold the penalty into dL/dZ, then chain once
            xn = np.linalg.norm(X, axis=1, keepdims=True)
            wn = np.linalg.norm(layer.weights, axis=1, keepdims=True)
            if np.any(xn <= NORM_EPS) or np.any(wn <= NORM_EPS):
                raise DegenerateInputError("zero-norm vector; cosine undefined")
            Xh, Wh = X / xn, layer.weights / wn
            S = Xh @ Wh.T
            Z = S / spec.temperature + layer.bias
            rows = np.arange(n)
            base_vals = logsumexp_rows(Z) - Z[rows, t]
            G = (softmax_rows(Z) - _one_hot(t, layer.num_classes)) / n
            G = G + 2.0 * beta * Z / n
            GS = G / spec.temperature
            grad_x = (GS @ Wh) / xn - (
                np.sum(GS * S, axis=1, keepdims=True) / (xn * xn)
            ) * X
            col = np.sum(GS * S, axis=0)[:, None]
            grad_w = (GS.T @ Xh) / wn - col * layer.weights / (wn * wn)
            res = LossResult(
                value=float(np.mean(base_vals))
                + beta * float(np.mean(np.sum(Z * Z, axis=1))),
                grad_logits=G,
                grad_weights=grad_w,
                grad_bias=G.sum(axis=0),
                grad_features=grad_x,
            )
        else:
            res = cosine_softmax_xent(layer, X, t, spec.temperature)
        if lam > 0.0:
            res.value += 0.5 * lam * float(np.sum(layer.weights**2))
            res.grad_weights = res.grad_weights + lam * layer.weights
        return _squeeze_result(res, squeeze)

    if base_kind == "dropout":
        res = dropout_xent(
            layer, X, t, spec.keep_prob, n_samples=n_samples, seed=seed, rng=rng
        )
        if beta > 0.0:
            # penalty on the clean logits keeps the term deterministic
            L = _forward_logits(layer, X)
            q = 2.0 * beta * L / n
            res.value += beta * float(np.mean(np.sum(L * L, axis=1)))
            res.grad_weights = res.grad_weights + q.T @ X
            res.grad_bias = res.grad_bias + q.sum(axis=0)
            res.grad_features = res.grad_features + q @ layer.weights
        if lam > 0.0:
            res.value += 0.5 * lam * float(np.sum(layer.weights**2))
            res.grad_weights = res.grad_weights + lam * layer.weights
        return _squeeze_result(res, squeeze)

    # bases that factor through logits = W x + b
    L = _forward_logits(layer, X)
    if base_kind == "softmax":
        res = softmax_xent(L, t)
    elif base_kind == "label_smoothing":
        res = label_smoothing_xent(L, t, spec.alpha)
    elif base_kind == "logit_penalty":
        res = logit_penalty_xent(L, t, spec.beta)
    elif base_kind == "logit_norm":
        res = logit_norm_xent(L, t, spec.temperature)
    elif base_kind == "sigmoid":
        res = sigmoid_xent(L, t)
    elif base_kind == "squared_error":
        res = squared_error_loss(
            L, t, spec.kappa, spec.target_magnitude, spec.loss_scale
        )
    else:  # pragma: no cover
        raise AssertionError(base_kind)

    G = res.grad_logits
    if beta > 0.0:
        res.value += beta * float(np.mean(np.sum(L * L, axis=1)))
        G = G + 2.0 * beta * L / n
        res.grad_logits = G

    if lam > 0.0:
        # direct parameter gradients are needed once W is penalized
        res.value += 0.5 * lam * float(np.sum(layer.weights**2))
        res.grad_weights = G.T @ X + lam * layer.weights
        res.grad_bias = G.sum(axis=0)
        res.grad_features = G @ layer.weights
    return _squeeze_result(res, squeeze)


def _squeeze_result(res: LossResult, squeeze: bool) -> LossResult:
    if squeeze:
        if res.grad_logits.ndim == 2:
            res.grad_logits = res.grad_logits[0]
        if res.grad_features is not None and res.grad_features.ndim == 2:
            # weight/bias grads keep their natural shapes; only row grads drop
            if res.grad_features.shape[0] == 1:
                res.grad_features = res.grad_features[0]
    return res


def eval_scores(spec: LossSpec, layer: FinalLayer, features) -> np.ndarray:
    """Deterministic evaluation-time score matrix for a spec.

    Dropout evaluates with the mask off; logit_norm reports the normalized
    logits; cosine_softmax reports sim/tau + b; everything else reports the
    raw logits W x + b.
    """
    X, squeeze = _check_features(layer, features)
    base = "softmax" if spec.kind == "extra_final_l2" else spec.kind
    if base == "cosine_softmax":
        S = cosine_scores(layer, X)
        Z = S / spec.temperature + layer.bias
    elif base == "logit_norm":
        L = _forward_logits(layer, X)
        r = np.linalg.norm(L, axis=1, keepdims=True)
        if np.any(r <= NORM_EPS):
            raise DegenerateInputError("logit vector norm is ~0; cannot normalize")
        Z = L / (spec.temperature * r)
    else:
        Z = _forward_logits(layer, X)
    return Z[0] if squeeze else Z


def evaluation_loss(spec: LossSpec, layer: FinalLayer, features, target) -> float:
    """Deterministic loss for logging: dropout specs evaluate mask-off."""
    if spec.kind == "dropout":
        spec = replace(spec, kind="softmax")
    return compose_loss(spec, layer, features, target).value
