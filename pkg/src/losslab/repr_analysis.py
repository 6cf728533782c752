"""Representation metrics: CKA, class separation, sparsity, AVH, spectra,
cosine-distance densities.

All functions are pure and operate on plain (n, d) matrices; labels are int
vectors in [0, K). The optimized class-separation computation reduces the
pairwise sums to per-class means (O(nd + Kd)); tests hold it against a
literal double loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import NORM_EPS, DegenerateInputError, FinalLayer

SEPARATION_INDEXES = ("cosine", "cosine_mean_subtracted", "euclidean")
SPECTRUM_MODES = ("activations", "weights", "class_centroids")


def _check_matrix(X, min_rows=1) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2d matrix, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix contains non-finite entries")
    return X


def _check_labels(labels, n, num_classes=None, require_all=True):
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.shape != (n,):
        raise ValueError(f"{y.shape[0]} labels for {n} rows")
    k = num_classes if num_classes is not None else int(y.max()) + 1
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels out of range for {k} classes")
    counts = np.bincount(y, minlength=k)
    # per-class statistics divide by counts; per-example ones do not care
    if require_all and np.any(counts == 0):
        raise ValueError(f"empty classes {np.where(counts == 0)[0].tolist()}")
    return y, k, counts


def linear_cka(X, Y) -> float:
    """Linear CKA in the feature-space form.

    ||Yc' Xc||_F^2 / (||Xc' Xc||_F ||Yc' Yc||_F), columns mean-centered.
    """
    X = _check_matrix(X, min_rows=2)
    Y = _check_matrix(Y, min_rows=2)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    num = np.sum((Yc.T @ Xc) ** 2)
    dx = np.linalg.norm(Xc.T @ Xc)
    dy = np.linalg.norm(Yc.T @ Yc)
    if dx <= NORM_EPS or dy <= NORM_EPS:
        raise DegenerateInputError("constant representation has no CKA")
    return float(num / (dx * dy))


def one_hot_matrix(labels, num_classes=None) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    k = num_classes if num_classes is not None else int(y.max()) + 1
    out = np.zeros((y.shape[0], k))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def _normalize_rows(X) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms <= NORM_EPS):
        raise DegenerateInputError("zero-norm row; cosine distance undefined")
    return X / norms


def class_separation_r2(
    X, labels, index: str = "cosine", num_classes: int | None = None
) -> float:
    """One minus within-class over overall mean pairwise distance.

    Pair sums include self-pairs. Classes are weighted 1/(K N_k^2) in the
    numerator and class pairs 1/(K^2 N_j N_k) in the denominator, so the
    whole thing reduces to per-class means:

        cosine:    1 - mean_k(1 - ||m_k||^2) / (1 - ||mean_k m_k||^2)
        euclidean: 1 - mean_k 2(q_k - ||m_k||^2) / 2(mean q_k - ||mean m_k||^2)

    with m_k the class mean (of row-normalized X for cosine indexes) and
    q_k the class mean of squared row norms.
    """
    if index not in SEPARATION_INDEXES:
        raise ValueError(f"index must be one of {SEPARATION_INDEXES}, got {index!r}")
    X = _check_matrix(X)
    y, k, counts = _check_labels(labels, X.shape[0], num_classes)

    if index == "cosine_mean_subtracted":
        X = X - X.mean(axis=0)
    if index in ("cosine", "cosine_mean_subtracted"):
        Xn = _normalize_rows(X)
        means = np.zeros((k, X.shape[1]))
        np.add.at(means, y, Xn)
        means /= counts[:, None]
        within = float(np.mean(1.0 - np.sum(means**2, axis=1)))
        grand = means.mean(axis=0)
        overall = 1.0 - float(np.sum(grand**2))
    else:
        means = np.zeros((k, X.shape[1]))
        np.add.at(means, y, X)
        means /= counts[:, None]
        sq = np.zeros(k)
        np.add.at(sq, y, np.sum(X**2, axis=1))
        q = sq / counts
        within = float(np.mean(2.0 * (q - np.sum(means**2, axis=1))))
        grand = means.mean(axis=0)
        overall = 2.0 * (float(np.mean(q)) - float(np.sum(grand**2)))

    if overall <= NORM_EPS:
        raise DegenerateInputError("all rows coincide; separation undefined")
    return float(1.0 - within / overall)


def sparsity_profile(activations) -> np.ndarray:
    """Per layer, the fraction of entries strictly greater than zero."""
    if not activations:
        raise ValueError("need at least one layer")
    out = []
    for i, a in enumerate(activations):
        a = np.asarray(a)
        if a.size == 0:
            raise ValueError(f"layer {i} is empty")
        out.append(float(np.mean(a > 0)))
    return np.array(out)


def angular_visual_hardness(layer: FinalLayer, features, labels) -> np.ndarray:
    """arccos(sim to own class row) over the sum of arccos to all rows."""
    X = _check_matrix(np.atleast_2d(features))
    y, k, _ = _check_labels(labels, X.shape[0], layer.num_classes, require_all=False)
    xn = np.linalg.norm(X, axis=1, keepdims=True)
    wn = np.linalg.norm(layer.weights, axis=1, keepdims=True)
    if np.any(xn <= NORM_EPS) or np.any(wn <= NORM_EPS):
        raise DegenerateInputError("zero-norm vector; angles undefined")
    S = np.clip((X / xn) @ (layer.weights / wn).T, -1.0, 1.0)
    A = np.arccos(S)  # (n, K) angles
    denom = A.sum(axis=1)
    if np.any(denom <= NORM_EPS):
        raise DegenerateInputError("all angles zero; AVH undefined")
    return A[np.arange(X.shape[0]), y] / denom


def singular_spectrum(X, mode: str = "activations", labels=None) -> np.ndarray:
    """Descending singular values; activations/centroids are mean-centered."""
    if mode not in SPECTRUM_MODES:
        raise ValueError(f"mode must be one of {SPECTRUM_MODES}, got {mode!r}")
    X = _check_matrix(X)
    if mode == "class_centroids":
        if labels is None:
            raise ValueError("class_centroids mode needs labels")
        y, k, counts = _check_labels(labels, X.shape[0])
        if k < 2:
            raise ValueError("need at least 2 classes for centroids")
        cent = np.zeros((k, X.shape[1]))
        np.add.at(cent, y, X)
        X = cent / counts[:, None]
    if mode in ("activations", "class_centroids"):
        X = X - X.mean(axis=0)
    s = np.linalg.svd(X, compute_uv=False)
    return np.sort(s)[::-1]


@dataclass
class DensityResult:
    grid: np.ndarray
    within: np.ndarray
    between: np.ndarray
    bandwidth: float


def pairwise_cosine_distances(X, labels):
    """(within, between) lists of 1 - cos over unordered pairs, no self-pairs."""
    X = _check_matrix(X, min_rows=2)
    y, _, _ = _check_labels(labels, X.shape[0], require_all=False)
    Xn = _normalize_rows(X)
    D = 1.0 - Xn @ Xn.T
    iu, ju = np.triu_indices(X.shape[0], k=1)
    same = y[iu] == y[ju]
    return D[iu, ju][same], D[iu, ju][~same]


def gaussian_kde_curve(samples, bandwidth: float, grid) -> np.ndarray:
    """Plain Gaussian KDE with an absolute bandwidth (the kernel sigma)."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise ValueError("no samples to smooth")
    grid = np.asarray(grid, dtype=np.float64)
    z = (grid[:, None] - samples[None, :]) / bandwidth
    return np.exp(-0.5 * z * z).sum(axis=1) / (
        samples.size * bandwidth * np.sqrt(2.0 * np.pi)
    )


def cosine_distance_density(
    X, labels, bandwidth: float, grid_points: int = 512
) -> DensityResult:
    """Gaussian KDE of within/between-class cosine distances on [0, 2]."""
    within, between = pairwise_cosine_distances(X, labels)
    grid = np.linspace(0.0, 2.0, grid_points)
    return DensityResult(
        grid=grid,
        within=gaussian_kde_curve(within, bandwidth, grid),
        between=gaussian_kde_curve(between, bandwidth, grid),
        bandwidth=bandwidth,
    )
