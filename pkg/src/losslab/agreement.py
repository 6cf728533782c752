"""Cross-model prediction agreement, average-linkage clustering, ensembling.

Agreement variants:
  same_top1                        equal predictions
  both_correct_or_both_incorrect   matching correctness indicator
  agree_on_mutual_errors           equal predictions among shared mistakes
                                   (NaN when there are no shared mistakes)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AGREEMENT_VARIANTS = (
    "same_top1",
    "both_correct_or_both_incorrect",
    "agree_on_mutual_errors",
)


@dataclass
class AgreementMatrix:
    models: list
    agree: np.ndarray  # (m, m), NaN where undefined
    variant: str


def _pair_agreement(pi, pj, y, variant: str) -> float:
    if variant == "same_top1":
        return float(np.mean(pi == pj))
    if variant == "both_correct_or_both_incorrect":
        return float(np.mean((pi == y) == (pj == y)))
    mutual = (pi != y) & (pj != y)
    if not mutual.any():
        return float("nan")
    return float(np.mean(pi[mutual] == pj[mutual]))


def agreement_matrix(predictions, labels, variant: str = "same_top1",
                     names=None) -> AgreementMatrix:
    if variant not in AGREEMENT_VARIANTS:
        raise ValueError(f"variant must be one of {AGREEMENT_VARIANTS}, got {variant!r}")
    preds = [np.asarray(p, dtype=np.int64).reshape(-1) for p in predictions]
    if not preds:
        raise ValueError("need at least one prediction vector")
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    for i, p in enumerate(preds):
        if p.shape != y.shape:
            raise ValueError(f"prediction {i} has length {p.shape[0]}, labels {y.shape[0]}")
    m = len(preds)
    if names is None:
        names = [str(i) for i in range(m)]
    if len(names) != m:
        raise ValueError(f"{len(names)} names for {m} prediction vectors")
    A = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            A[i, j] = A[j, i] = _pair_agreement(preds[i], preds[j], y, variant)
    return AgreementMatrix(list(names), A, variant)


def linkage_dendrogram(distance) -> np.ndarray:
    """Agglomerative average-linkage merges.

    Returns an (m-1, 3) array of (cluster_a, cluster_b, height): leaves are
    0..m-1 and the merge at row r creates cluster m+r, as in the usual
    linkage encoding. Average linkage updates by cluster-size weighting:
    d(A+B, C) = (|A| d(A,C) + |B| d(B,C)) / (|A| + |B|).
    """
    D = np.asarray(distance, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance must be square, got {D.shape}")
    m = D.shape[0]
    if m < 2:
        raise ValueError("need at least 2 items to cluster")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    if np.max(np.abs(D - D.T)) > 1e-12:
        raise ValueError("distance matrix is not symmetric")
    if np.max(np.abs(np.diag(D))) > 1e-12:
        raise ValueError("distance diagonal must be zero")

    D = D.copy()
    ids = list(range(m))  # current cluster id per active slot
    sizes = [1] * m
    active = list(range(m))  # slot indices still alive
    merges = np.zeros((m - 1, 3))
    for r in range(m - 1):
        # smallest pairwise distance among active slots; ties -> lowest pair
        best = None
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                i, j = active[ai], active[aj]
                d = D[i, j]
                if best is None or d < best[0] - 1e-15:
                    best = (d, i, j)
        d, i, j = best
        a, b = sorted((ids[i], ids[j]))
        merges[r] = (a, b, d)
        # merged cluster reuses slot i; average-linkage update
        ni, nj = sizes[i], sizes[j]
        for k in active:
            if k in (i, j):
                continue
            D[i, k] = D[k, i] = (ni * D[i, k] + nj * D[j, k]) / (ni + nj)
        sizes[i] = ni + nj
        ids[i] = m + r
        active.remove(j)
    return merges


def ensemble_modal(predictions) -> np.ndarray:
    """Per-example most frequent prediction; ties go to the lowest class."""
    preds = [np.asarray(p, dtype=np.int64).reshape(-1) for p in predictions]
    if not preds:
        raise ValueError("need at least one prediction vector")
    n = preds[0].shape[0]
    for i, p in enumerate(preds):
        if p.shape[0] != n:
            raise ValueError(f"prediction {i} has length {p.shape[0]}, expected {n}")
    stacked = np.stack(preds)  # (m, n)
    hi = int(stacked.max()) + 1
    out = np.empty(n, dtype=np.int64)
    for col in range(n):
        out[col] = np.argmax(np.bincount(stacked[:, col], minlength=hi))
    return out
