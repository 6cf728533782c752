"""L2-regularized multinomial logistic regression probe on frozen features.

Objective (sum form, bias unregularized):

    J(W, b) = sum_i CE(softmax(W x_i + b), y_i) + (lambda / 2) ||W||_F^2

minimized by full-batch gradient descent with Armijo backtracking. The
regularization path sweeps 45 log-spaced lambdas ascending with warm
starts, picks the best validation accuracy (ties to the larger lambda),
then refits on the full training set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .calibration import top1_predictions
from .losses import logsumexp_rows, softmax_rows

DEFAULT_GRID = tuple(np.logspace(-6.0, 5.0, 45))


@dataclass(frozen=True)
class ProbeConfig:
    lambda_grid: tuple = DEFAULT_GRID
    val_fraction: float = 0.1
    max_iterations: int = 2000
    tolerance: float = 1e-4  # on the joint (W, b) gradient norm
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda_grid must be strictly increasing")
        if grid[0] < 0:
            raise ValueError("lambdas must be >= 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in (0,1), got {self.val_fraction}")
        if self.max_iterations < 1 or self.tolerance <= 0:
            raise ValueError("need max_iterations >= 1 and tolerance > 0")
        object.__setattr__(self, "lambda_grid", grid)


@dataclass
class LogRegFit:
    weights: np.ndarray  # (K, d)
    bias: np.ndarray  # (K,)
    converged: bool
    grad_norm: float
    objective: float
    n_iter: int
    objective_trace: list = field(default_factory=list)


@dataclass
class ProbeResult:
    best_lambda: float
    lambda_grid: tuple
    val_accuracy: np.ndarray  # per grid point
    weight_norms: np.ndarray  # ||W||_F per grid point at the sweep optimum
    test_accuracy: float
    weights: np.ndarray
    bias: np.ndarray


def _objective_and_grads(W, b, X, y, lam):
    Z = X @ W.T + b
    n = X.shape[0]
    rows = np.arange(n)
    value = float(np.sum(logsumexp_rows(Z) - Z[rows, y])) + 0.5 * lam * float(
        np.sum(W * W)
    )
    G = softmax_rows(Z)
    G[rows, y] -= 1.0
    gW = G.T @ X + lam * W
    gb = G.sum(axis=0)
    return value, gW, gb


def fit_logreg(
    features,
    labels,
    lam: float,
    num_classes: int | None = None,
    init_weights=None,
    init_bias=None,
    tolerance: float = 1e-4,
    max_iterations: int = 2000,
) -> LogRegFit:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("features must be (n, d) with matching labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite entries")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    K = num_classes if num_classes is not None else int(y.max()) + 1
    d = X.shape[1]
    W = np.zeros((K, d)) if init_weights is None else np.array(init_weights, dtype=np.float64)
    b = np.zeros(K) if init_bias is None else np.array(init_bias, dtype=np.float64)
    if W.shape != (K, d) or b.shape != (K,):
        raise ValueError(f"init shapes {W.shape}/{b.shape} do not match ({K},{d})")

    value, gW, gb = _objective_and_grads(W, b, X, y, lam)
    trace = [value]
    step = 1.0
    it = 0
    gn = float(np.sqrt(np.sum(gW * gW) + np.sum(gb * gb)))
    while gn > tolerance and it < max_iterations:
        # Armijo backtracking on f(theta - t g)
        accepted = False
        while step > 1e-20:
            W2 = W - step * gW
            b2 = b - step * gb
            v2, gW2, gb2 = _objective_and_grads(W2, b2, X, y, lam)
            if v2 <= value - 1e-4 * step * gn * gn:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # stalled at float precision
        W, b, value, gW, gb = W2, b2, v2, gW2, gb2
        gn = float(np.sqrt(np.sum(gW * gW) + np.sum(gb * gb)))
        trace.append(value)
        step *= 2.0  # regrow, next backtrack trims if needed
        it += 1

    converged = gn <= tolerance
    if not converged:
        warnings.warn(
            f"logreg did not converge in {it} iterations "
            f"(grad norm {gn:.3e} > {tolerance:g})",
            RuntimeWarning,
        )
    return LogRegFit(W, b, converged, gn, value, it, trace)


def probe_accuracy(W, b, X, y) -> float:
    return float(np.mean(top1_predictions(X @ W.T + b) == np.asarray(y)))


def stratified_split(labels, val_fraction: float, seed: int):
    """(train_idx, val_idx): seeded per-class split, train side never empty."""
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for k in np.unique(y):
        idx = np.where(y == k)[0]
        idx = rng.permutation(idx)
        # nonzero fractions take at least one row, capped so train survives
        n_val = int(round(val_fraction * idx.size))
        if val_fraction > 0:
            n_val = max(1, n_val)
        n_val = min(n_val, idx.size - 1)
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    train_idx = np.concatenate(train_idx)
    val_idx = np.concatenate(val_idx)
    if val_idx.size == 0:
        raise ValueError("validation split is empty; raise val_fraction")
    return np.sort(train_idx), np.sort(val_idx)


def sweep_and_retrain(
    features_train,
    labels_train,
    features_test,
    labels_test,
    config: ProbeConfig = ProbeConfig(),
    num_classes: int | None = None,
) -> ProbeResult:
    X = np.asarray(features_train, dtype=np.float64)
    y = np.asarray(labels_train, dtype=np.int64).reshape(-1)
    Xt = np.asarray(features_test, dtype=np.float64)
    yt = np.asarray(labels_test, dtype=np.int64).reshape(-1)
    K = num_classes if num_classes is not None else int(max(y.max(), yt.max())) + 1

    tr, va = stratified_split(y, config.val_fraction, config.seed)
    if np.unique(y[tr]).size < K:
        raise ValueError("a class is missing from the probe training split")

    grid = config.lambda_grid
    val_acc = np.zeros(len(grid))
    norms = np.zeros(len(grid))
    W, b = None, None
    fits = []
    for i, lam in enumerate(grid):
        fit = fit_logreg(
            X[tr], y[tr], lam, K,
            init_weights=W, init_bias=b,
            tolerance=config.tolerance,
            max_iterations=config.max_iterations,
        )
        W, b = fit.weights, fit.bias
        fits.append(fit)
        val_acc[i] = probe_accuracy(W, b, X[va], y[va])
        norms[i] = float(np.linalg.norm(W))

    # ties go to the larger lambda: scan ascending, keep >=
    best_i = 0
    for i in range(len(grid)):
        if val_acc[i] >= val_acc[best_i]:
            best_i = i
    best_lambda = grid[best_i]

    final = fit_logreg(
        X, y, best_lambda, K,
        init_weights=fits[best_i].weights, init_bias=fits[best_i].bias,
        tolerance=config.tolerance, max_iterations=config.max_iterations,
    )
    return ProbeResult(
        best_lambda=best_lambda,
        lambda_grid=grid,
        val_accuracy=val_acc,
        weight_norms=norms,
        test_accuracy=probe_accuracy(final.weights, final.bias, Xt, yt),
        weights=final.weights,
        bias=final.bias,
    )
