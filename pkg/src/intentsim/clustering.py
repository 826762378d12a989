"""Seeded k-means over embedding vectors.

Initialization is k-means++ driven by a ``random.Random(seed)`` stream, so
runs are reproducible for a given (vectors, k, seed). Zero vectors (empty
texts) are excluded: their assignment slot is -1 and they contribute
nothing to the objective. Empty clusters are repaired deterministically by
reseeding the centroid to the worst-fit point (ties break to the lowest
input index).

The per-iteration objective is recorded; outside of repair iterations the
objective must never increase, and a violation raises immediately rather
than returning a silently broken clustering.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .embedding import cosine_similarity
from .errors import ClusteringError


@dataclass
class Clustering:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray  # per input; -1 marks an excluded zero vector
    objective: float
    iterations_run: int
    objective_history: list[float] = field(default_factory=list)
    repaired_iterations: list[int] = field(default_factory=list)


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip tiny negatives from cancellation.
    sq = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(sq, 0.0)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: random.Random) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=float)
    first = rng.randrange(n)
    centroids[0] = points[first]
    closest_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = float(np.sum(closest_sq))
        if total <= 0.0:
            # All remaining points coincide with a centroid; any choice works.
            choice = rng.randrange(n)
        else:
            target = rng.random() * total
            cumulative = np.cumsum(closest_sq)
            choice = int(np.searchsorted(cumulative, target, side="right"))
            choice = min(choice, n - 1)
        centroids[i] = points[choice]
        closest_sq = np.minimum(closest_sq, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def kmeans_cluster(
    vectors,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding on the non-zero vectors."""
    matrix = np.asarray(vectors, dtype=float)
    if matrix.ndim != 2:
        raise ClusteringError("vectors must form a 2-D array")
    if k < 1:
        raise ClusteringError("k must be >= 1")
    nonzero_mask = np.any(matrix != 0.0, axis=1)
    points = matrix[nonzero_mask]
    index_map = np.flatnonzero(nonzero_mask)
    if points.shape[0] < k:
        raise ClusteringError(
            f"fewer points than clusters: {points.shape[0]} non-zero vectors for k={k}"
        )
    rng = random.Random(seed)
    centroids = _kmeans_pp_init(points, k, rng)
    labels = np.zeros(points.shape[0], dtype=int)
    history: list[float] = []
    repaired: list[int] = []
    objective = float("inf")
    iterations = 0
    for iteration in range(max_iter):
        iterations = iteration + 1
        sq = _squared_distances(points, centroids)
        labels = np.argmin(sq, axis=1)
        point_cost = sq[np.arange(points.shape[0]), labels]
        # Repair empty clusters by stealing the worst-fit point, repeating
        # until every cluster has at least one member.
        repaired_now = False
        stolen: set[int] = set()
        empties = [c for c in range(k) if not np.any(labels == c)]
        while empties:
            cluster = empties[0]
            candidates = [i for i in range(points.shape[0]) if i not in stolen]
            if not candidates:
                break
            worst = max(candidates, key=lambda i: (point_cost[i], -i))
            stolen.add(worst)
            centroids[cluster] = points[worst]
            sq = _squared_distances(points, centroids)
            labels = np.argmin(sq, axis=1)
            labels[worst] = cluster
            point_cost = sq[np.arange(points.shape[0]), labels]
            repaired_now = True
            empties = [c for c in range(k) if not np.any(labels == c)]
        if repaired_now:
            repaired.append(iteration)
        update_labels = labels
        for cluster in range(k):
            members = points[update_labels == cluster]
            if members.shape[0]:
                centroids[cluster] = members.mean(axis=0)
        sq = _squared_distances(points, centroids)
        labels = np.argmin(sq, axis=1)
        new_objective = float(np.sum(sq[np.arange(points.shape[0]), labels]))
        history.append(new_objective)
        if not repaired_now and new_objective > objective + 1e-9:
            raise ClusteringError(
                f"objective increased at iteration {iteration}: {objective} -> {new_objective}"
            )
        improved = objective - new_objective
        objective = new_objective
        # Converge only once assignments are stable as well: at that fixed
        # point the centroids are exactly the means of their members and
        # every point already sits on its nearest centroid.
        if improved < tol and np.array_equal(labels, update_labels):
            break
    assignments = np.full(matrix.shape[0], -1, dtype=int)
    assignments[index_map] = labels
    return Clustering(
        k=k,
        centroids=centroids,
        assignments=assignments,
        objective=objective,
        iterations_run=iterations,
        objective_history=history,
        repaired_iterations=repaired,
    )


def label_cluster(members: list[tuple[int, str, np.ndarray]], centroid: np.ndarray) -> tuple[str, int]:
    """Pick the member text most aligned with the centroid (the medoid).

    ``members`` are (record_id, text, vector); exact similarity ties go to
    the earliest record id. Returns (text, record_id).
    """
    if not members:
        raise ClusteringError("cannot label an empty cluster")
    best: tuple[str, int] | None = None
    best_sim = -2.0
    for record_id, text, vector in sorted(members, key=lambda m: m[0]):
        sim = cosine_similarity(vector, centroid)
        if sim > best_sim:
            best_sim = sim
            best = (text, record_id)
    assert best is not None
    return best


def silhouette_score(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over all points (plain O(n^2) formulation)."""
    n = points.shape[0]
    if n < 2:
        return 0.0
    distances = np.sqrt(_squared_distances(points, points))
    scores = []
    for i in range(n):
        own = labels[i]
        same = labels == own
        same[i] = False
        if not np.any(same):
            scores.append(0.0)
            continue
        a = float(np.mean(distances[i, same]))
        b = float("inf")
        for other in np.unique(labels):
            if other == own:
                continue
            mask = labels == other
            if np.any(mask):
                b = min(b, float(np.mean(distances[i, mask])))
        if not np.isfinite(b):
            scores.append(0.0)
            continue
        denom = max(a, b)
        scores.append(0.0 if denom == 0.0 else (b - a) / denom)
    return float(np.mean(scores))


def scan_k(
    vectors,
    seed: int,
    k_min: int = 2,
    k_max: int = 10,
    sample_cap: int = 2000,
) -> tuple[int, dict[int, float]]:
    """Silhouette sweep over k; returns (best k, score per k).

    Large inputs are subsampled deterministically to keep the O(n^2)
    silhouette affordable.
    """
    matrix = np.asarray(vectors, dtype=float)
    nonzero = matrix[np.any(matrix != 0.0, axis=1)]
    n = nonzero.shape[0]
    if n < 3:
        raise ClusteringError("need at least 3 non-zero vectors to scan k")
    if n > sample_cap:
        rng = random.Random(seed)
        idx = sorted(rng.sample(range(n), sample_cap))
        sample = nonzero[idx]
    else:
        sample = nonzero
    scores: dict[int, float] = {}
    upper = min(k_max, sample.shape[0] - 1)
    for k in range(k_min, upper + 1):
        result = kmeans_cluster(sample, k, seed)
        scores[k] = silhouette_score(sample, result.assignments)
    best = max(scores.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    return best, scores
