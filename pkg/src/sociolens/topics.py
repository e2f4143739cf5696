"""Topic discovery over precomputed post embeddings.

Clustering is seeded k-means (k-means++ initialization, Lloyd refinement);
the 2D semantic map is plain mean-centered PCA computed by power iteration,
so the whole module is deterministic per seed with no solver dependencies.
Embeddings arrive with the posts — nothing here runs a language model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "TopicModel",
    "kmeans",
    "project_2d",
    "fit_topics",
    "nearest_claims",
    "cosine_similarities",
]

_LLOYD_MAX_ITER = 100
_POWER_MAX_ITER = 10_000
_POWER_TOL = 1e-9
# Fixed seed for the projection's power iteration: the 2-D map must depend
# only on the embeddings, not on the clustering seed.
_PROJECTION_SEED = 0x2DA


@dataclass(slots=True)
class TopicModel:
    k: int
    centroids: np.ndarray  # (k, dim)
    assignment: dict[str, int]  # post id -> topic index
    labels: dict[int, str] = field(default_factory=dict)  # topic index -> label_id
    projection: dict[str, tuple[float, float]] = field(default_factory=dict)

    def members_of(self, topic: int) -> list[str]:
        return sorted(pid for pid, t in self.assignment.items() if t == topic)


def _as_matrix(vectors: Sequence[Sequence[float]]) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("embeddings must be a 2D array of shape (n, dim)")
    if not np.isfinite(mat).all():
        raise ValueError("embeddings must be finite")
    return mat


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest centroid per point (ties -> lowest index) and squared distances."""
    # |p - c|^2 = |p|^2 - 2 p.c + |c|^2 ; argmin over c. Computed blockwise to
    # bound memory at ~8MB per block for large corpora.
    n = points.shape[0]
    assign = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n, dtype=np.float64)
    cc = (centroids ** 2).sum(axis=1)
    block = max(1, 1_000_000 // max(1, centroids.shape[0]))
    for start in range(0, n, block):
        chunk = points[start:start + block]
        d2 = (chunk ** 2).sum(axis=1)[:, None] - 2.0 * chunk @ centroids.T + cc[None, :]
        a = np.argmin(d2, axis=1)
        assign[start:start + block] = a
        dist2[start:start + block] = np.maximum(d2[np.arange(len(a)), a], 0.0)
    return assign, dist2


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    dist2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = float(dist2.sum())
        if total <= 0.0:
            # All remaining points coincide with a chosen centroid; fall back
            # to uniform choice (pre-condition guarantees k distinct points).
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=dist2 / total))
        centroids[i] = points[idx]
        dist2 = np.minimum(dist2, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    embeddings: Sequence[Sequence[float]], k: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded k-means. Returns (assignment (n,), centroids (k, dim)).

    k-means++ initialization, then Lloyd iterations until the assignment is
    fixed or 100 rounds. Clusters that empty out are refilled with the point
    farthest from its centroid. Requires at least k distinct embeddings.
    """
    points = _as_matrix(embeddings)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    distinct = np.unique(points, axis=0).shape[0]
    if distinct < k:
        raise ValueError(f"need at least {k} distinct embedded posts, have {distinct}")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    assign, dist2 = _nearest(points, centroids)

    for _ in range(_LLOYD_MAX_ITER):
        for c in range(k):
            mask = assign == c
            if mask.any():
                centroids[c] = points[mask].mean(axis=0)
            else:
                far = int(np.argmax(dist2))
                centroids[c] = points[far]
                assign[far] = c
                dist2[far] = 0.0
        new_assign, dist2 = _nearest(points, centroids)
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign

    # Make the member-mean invariant exact for the returned pair.
    for c in range(k):
        mask = assign == c
        if mask.any():
            centroids[c] = points[mask].mean(axis=0)
    return assign, centroids


def inertia(points: np.ndarray, assign: np.ndarray, centroids: np.ndarray) -> float:
    diff = points - centroids[assign]
    return float((diff ** 2).sum())


def _dominant_axis(centered: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Top principal axis of mean-centered data by power iteration.

    Returns (unit vector, variance along it); the zero vector when the data
    has no variance left.
    """
    n, dim = centered.shape
    total = float((centered ** 2).sum())
    if total <= n * 1e-18:
        return np.zeros(dim), 0.0
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    for _ in range(_POWER_MAX_ITER):
        w = centered.T @ (centered @ v)  # C v up to the 1/n factor
        norm = np.linalg.norm(w)
        if norm <= 0.0:
            return np.zeros(dim), 0.0
        w /= norm
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < _POWER_TOL:
            v = w
            break
        v = w
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    variance = float(((centered @ v) ** 2).sum()) / n
    return v, variance


def project_2d(embeddings: Sequence[Sequence[float]]) -> np.ndarray:
    """Mean-centered PCA onto the top two principal axes. Returns (n, 2).

    Power iteration with deflation; each axis's sign is fixed by making its
    largest-magnitude loading positive. Data with no variance projects to
    the origin; rank-1 data gets a zero second coordinate.
    """
    points = _as_matrix(embeddings)
    if points.shape[0] < 2:
        raise ValueError("need at least 2 embedded posts to project")
    centered = points - points.mean(axis=0)

    rng = np.random.default_rng(_PROJECTION_SEED)
    axis1, _ = _dominant_axis(centered, rng)
    coords1 = centered @ axis1
    deflated = centered - np.outer(coords1, axis1)
    axis2, _ = _dominant_axis(deflated, rng)
    coords2 = deflated @ axis2
    return np.column_stack([coords1, coords2])


def fit_topics(
    embeddings: Mapping[str, Sequence[float]], k: int, seed: int
) -> TopicModel:
    """Cluster and project a post-id -> embedding mapping into a TopicModel.

    Post ids are processed in sorted order so results are reproducible
    regardless of mapping iteration order. Label ids are assigned by the
    caller's registry afterwards.
    """
    ids = sorted(embeddings)
    if not ids:
        raise ValueError("no embedded posts to cluster")
    points = _as_matrix([embeddings[pid] for pid in ids])
    assign, centroids = kmeans(points, k, seed)
    if len(ids) >= 2:
        planar = project_2d(points)
    else:
        planar = np.zeros((1, 2))
    return TopicModel(
        k=k,
        centroids=centroids,
        assignment={pid: int(assign[i]) for i, pid in enumerate(ids)},
        projection={pid: (float(planar[i, 0]), float(planar[i, 1])) for i, pid in enumerate(ids)},
    )


def cosine_similarities(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine similarity of each row against the query (zero rows score 0)."""
    qnorm = float(np.linalg.norm(query))
    if qnorm <= 0.0:
        raise ValueError("query vector has zero norm")
    norms = np.linalg.norm(matrix, axis=1)
    dots = matrix @ query
    sims = np.zeros(matrix.shape[0], dtype=np.float64)
    nz = norms > 0
    sims[nz] = dots[nz] / (norms[nz] * qnorm)
    return np.clip(sims, -1.0, 1.0)


def nearest_claims(
    embeddings: Mapping[str, Sequence[float]],
    query: Sequence[float],
    k: int,
) -> list[tuple[str, float]]:
    """Exact top-k posts by cosine similarity to the query, ties by post id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    ids = sorted(embeddings)
    if not ids:
        return []
    matrix = _as_matrix([embeddings[pid] for pid in ids])
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != matrix.shape[1]:
        raise ValueError(
            f"query dimension {q.shape} does not match corpus dimension {matrix.shape[1]}"
        )
    sims = cosine_similarities(matrix, q)
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [(ids[i], float(sims[i])) for i in order[:k]]
