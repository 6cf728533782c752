"""Prediction-level evaluation: probabilities, accuracy, NLL, ECE, and
post-hoc temperature scaling.

Probabilities come from softmax rows for every loss kind except sigmoid,
whose per-class sigmoids are renormalized by the row sum. ECE uses 15
equal-width right-closed bins on (0, 1]; confidence 0 lands in bin 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import sigmoid, softmax_rows

PROB_CLAMP = 1e-12


@dataclass
class ProbabilityBatch:
    probs: np.ndarray  # (n, K)
    source: str  # "softmax" | "sigmoid_normalized"

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ValueError(f"probs must be 2d, got {self.probs.shape}")
        if self.source not in ("softmax", "sigmoid_normalized"):
            raise ValueError(f"unknown source {self.source!r}")
        if np.any(self.probs < 0) or np.any(self.probs > 1):
            raise ValueError("probabilities outside [0, 1]")
        if np.any(np.abs(self.probs.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("probability rows do not sum to 1")


@dataclass
class CalibrationBin:
    lower: float
    upper: float
    count: int
    accuracy: float | None
    mean_confidence: float | None


@dataclass
class CalibrationReport:
    nll: float
    ece: float
    temperature: float | None = None
    bins: list = field(default_factory=list)


def probs_from_logits(logits, loss_kind: str) -> ProbabilityBatch:
    L = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    if not np.all(np.isfinite(L)):
        raise ValueError("logits contain non-finite entries")
    if loss_kind == "sigmoid":
        s = sigmoid(L)
        denom = s.sum(axis=1, keepdims=True)
        if np.any(denom <= 0):  # unreachable for finite logits, kept as a guard
            raise ValueError("sigmoid row sum is zero")
        return ProbabilityBatch(s / denom, "sigmoid_normalized")
    return ProbabilityBatch(softmax_rows(L), "softmax")


def top1_predictions(scores) -> np.ndarray:
    # first maximum wins, i.e. ties resolve to the lower class index
    return np.argmax(np.atleast_2d(scores), axis=1)


def topk_accuracy(scores, labels, k: int) -> float:
    S = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    n, K = S.shape
    if y.shape != (n,):
        raise ValueError(f"{y.shape[0]} labels for {n} rows")
    if not 1 <= k <= K:
        raise ValueError(f"k must be in [1, {K}], got {k}")
    # stable sort on -scores: equal scores keep ascending class order
    order = np.argsort(-S, axis=1, kind="stable")
    hits = (order[:, :k] == y[:, None]).any(axis=1)
    return float(np.mean(hits))


def _as_probs(probs) -> np.ndarray:
    if isinstance(probs, ProbabilityBatch):
        return probs.probs
    return np.atleast_2d(np.asarray(probs, dtype=np.float64))


def nll(probs, labels) -> float:
    P = _as_probs(probs)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.shape != (P.shape[0],):
        raise ValueError(f"{y.shape[0]} labels for {P.shape[0]} rows")
    picked = np.clip(P[np.arange(P.shape[0]), y], PROB_CLAMP, None)
    return float(np.mean(-np.log(picked)))


def ece(probs, labels, n_bins: int = 15) -> CalibrationReport:
    P = _as_probs(probs)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = P.shape[0]
    if y.shape != (n,):
        raise ValueError(f"{y.shape[0]} labels for {n} rows")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    conf = P.max(axis=1)
    correct = top1_predictions(P) == y
    # right-closed bins on (0, 1]; conf 0 goes to the first bin
    idx = np.clip(np.ceil(conf * n_bins).astype(int) - 1, 0, n_bins - 1)

    bins = []
    total = 0.0
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        lo, hi = b / n_bins, (b + 1) / n_bins
        if count == 0:
            bins.append(CalibrationBin(lo, hi, 0, None, None))
            continue
        acc = float(np.mean(correct[mask]))
        mc = float(np.mean(conf[mask]))
        total += count / n * abs(acc - mc)
        bins.append(CalibrationBin(lo, hi, count, acc, mc))
    return CalibrationReport(nll=nll(P, y), ece=float(total), bins=bins)


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fit_temperature(
    logits, labels, loss_kind: str = "softmax", tol: float = 1e-6
) -> tuple[float, CalibrationReport]:
    """Golden-section search for T minimizing NLL of probs(logits / T).

    The search runs on log T over [-5, 5]; NLL in log T is unimodal for
    fixed logits. Returns (T, post-scaling report with temperature set).
    """
    L = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.shape != (L.shape[0],):
        raise ValueError(f"{y.shape[0]} labels for {L.shape[0]} rows")

    def f(u: float) -> float:
        v = nll(probs_from_logits(L / math.exp(u), loss_kind), y)
        if not math.isfinite(v):
            raise RuntimeError(f"non-finite NLL at log T = {u:g}")
        return v

    a, b = -5.0, 5.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    u = (a + b) / 2.0
    T = math.exp(u)
    report = ece(probs_from_logits(L / T, loss_kind), y)
    report.temperature = T
    return T, report
