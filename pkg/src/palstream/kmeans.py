"""Lloyd-style k-means over D-dimensional points.

The codec drives this in 3-dimensional RGB space, but nothing here is
image-specific.  Points are an ``(N, D)`` float array; cluster membership uses
0-based center indices.  The iteration alternates nearest-center assignment
(ties broken toward the lowest center index) with per-cluster mean updates and
stops once the largest centroid displacement falls to ``tolerance`` or
``max_iterations`` is reached.  All arithmetic is float64 and every step is
deterministic given the seed, so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InfeasibleError

__all__ = ["KmeansConfig", "Clustering", "init_centers", "assign", "update_centers", "run"]


@dataclass(frozen=True)
class KmeansConfig:
    k: int
    max_iterations: int = 50
    tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ContractError(f"k must be at least 1, got {self.k}")
        if self.max_iterations < 1:
            raise ContractError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if self.tolerance < 0:
            raise ContractError(f"tolerance must be nonnegative, got {self.tolerance}")


@dataclass(eq=False)
class Clustering:
    """Result of a k-means run.

    ``sse`` is the sum over points of squared Euclidean distance to the
    assigned center, consistent with ``centers`` and ``membership`` as
    returned.  ``sse_history`` holds the SSE recorded after every assignment
    step and is non-increasing.
    """

    centers: np.ndarray
    membership: np.ndarray
    sse: float
    iterations: int
    sse_history: list[float] = field(default_factory=list)


def _as_points(data: np.ndarray) -> np.ndarray:
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ContractError(f"points must be a nonempty (N, D) array, got shape {pts.shape}")
    return pts


def init_centers(data: np.ndarray, cfg: KmeansConfig) -> np.ndarray:
    """Pick ``cfg.k`` distinct points uniformly at random as initial centers.

    Sampling is without replacement over the distinct point values, so the
    returned centers are always pairwise distinct.  The same seed always
    yields the same selection.
    """
    pts = _as_points(data)
    distinct = np.unique(pts, axis=0)
    if cfg.k > len(distinct):
        raise InfeasibleError(
            f"cannot place {cfg.k} distinct centers: data has only {len(distinct)} distinct points"
        )
    rng = np.random.default_rng(cfg.seed)
    chosen = rng.choice(len(distinct), size=cfg.k, replace=False)
    return distinct[chosen]


def assign(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Return for each point the index of its nearest center.

    Ties break toward the lowest center index.  Distances are computed as
    explicit coordinate differences (never via the expanded dot-product form)
    so that exactly equidistant points tie exactly.
    """
    pts = _as_points(data)
    ctr = np.asarray(centers, dtype=np.float64)
    if ctr.ndim != 2 or ctr.shape[0] < 1:
        raise ContractError(f"centers must be a nonempty (K, D) array, got shape {ctr.shape}")
    if ctr.shape[1] != pts.shape[1]:
        raise ContractError(f"dimension mismatch: points are {pts.shape[1]}-d, centers are {ctr.shape[1]}-d")
    membership = np.empty(len(pts), dtype=np.int64)
    # Chunked so the (chunk, K, D) distance tensor stays around ~50 MB.
    chunk = max(1, (1 << 21) // len(ctr))
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        d2 = ((block[:, None, :] - ctr[None, :, :]) ** 2).sum(axis=2)
        membership[start : start + chunk] = np.argmin(d2, axis=1)
    return membership


def update_centers(data: np.ndarray, membership: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Move each center to the mean of its assigned points.

    A cluster that received no points keeps its previous center unchanged,
    which keeps the iteration deterministic.
    """
    pts = _as_points(data)
    m = np.asarray(membership)
    if m.shape != (len(pts),):
        raise ContractError(f"membership must have one entry per point, got shape {m.shape}")
    k = len(centers)
    if len(m) and (m.min() < 0 or m.max() >= k):
        raise ContractError(f"membership indices must lie in [0, {k - 1}]")
    counts = np.bincount(m, minlength=k).astype(np.float64)
    new = np.array(centers, dtype=np.float64, copy=True)
    occupied = counts > 0
    for d in range(pts.shape[1]):
        sums = np.bincount(m, weights=pts[:, d], minlength=k)
        new[occupied, d] = sums[occupied] / counts[occupied]
    return new


def _sse_of(pts: np.ndarray, centers: np.ndarray, membership: np.ndarray) -> float:
    return float(((pts - centers[membership]) ** 2).sum())


def run(data: np.ndarray, cfg: KmeansConfig) -> Clustering:
    """Run Lloyd's iteration to convergence and return a consistent clustering.

    A final assignment pass against the converged centers guarantees that the
    returned membership is the true nearest-center assignment, so re-running
    :func:`assign` on the result is a fixed point.
    """
    pts = _as_points(data)
    centers = init_centers(pts, cfg)
    history: list[float] = []
    membership = np.zeros(len(pts), dtype=np.int64)
    iterations = 0
    for _ in range(cfg.max_iterations):
        membership = assign(pts, centers)
        history.append(_sse_of(pts, centers, membership))
        new_centers = update_centers(pts, membership, centers)
        displacement = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        iterations += 1
        if displacement <= cfg.tolerance:
            break
    membership = assign(pts, centers)
    sse = _sse_of(pts, centers, membership)
    history.append(sse)
    return Clustering(centers=centers, membership=membership, sse=sse, iterations=iterations, sse_history=history)
