"""Exact k-nearest-neighbor classification under pluggable dissimilarities.

Supported dissimilarity kinds, all compared as squared norms internally:

* ``euclidean``              ||x - z||^2
* ``transformed-labeled``    ||x - W z||^2   (labeled side mapped once, at build)
* ``transformed-query``      ||W x - z||^2   (query mapped at lookup time)
* ``both-sides``             ||L x - L z||^2 (hook for external Mahalanobis maps)

Search is brute force with full sorting; ties break toward the lower
labeled index. Majority votes tie-break toward the label of the nearest
neighbor within the tied label set, which degrades to the 1-NN rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._arrays import as_matrix, as_int_vector, as_vector, frozen, pairwise_sq_dists, query_chunks
from .transform import TransformModel, MOVE_LABELED, MOVE_QUERY

EUCLIDEAN = "euclidean"
TRANSFORMED_LABELED = "transformed-labeled"
TRANSFORMED_QUERY = "transformed-query"
BOTH_SIDES = "both-sides"
KINDS = (EUCLIDEAN, TRANSFORMED_LABELED, TRANSFORMED_QUERY, BOTH_SIDES)


@dataclass(frozen=True)
class Dissimilarity:
    """A dissimilarity kind plus its matrix, if the kind uses one.

    ``squared`` controls reported values only; neighbor order is identical
    either way.
    """

    kind: str
    matrix: np.ndarray | None = None
    squared: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == EUCLIDEAN:
            if self.matrix is not None:
                raise ValueError("euclidean dissimilarity takes no matrix")
        else:
            m = self.matrix
            if m is None or m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{self.kind} requires a square matrix")
            if not np.isfinite(m).all():
                raise ValueError("dissimilarity matrix contains non-finite entries")
            frozen(m)

    @classmethod
    def euclidean(cls, squared: bool = True) -> "Dissimilarity":
        return cls(EUCLIDEAN, None, squared)

    @classmethod
    def transformed_labeled(cls, w, squared: bool = True) -> "Dissimilarity":
        return cls(TRANSFORMED_LABELED, as_matrix(w, "W"), squared)

    @classmethod
    def transformed_query(cls, w, squared: bool = True) -> "Dissimilarity":
        return cls(TRANSFORMED_QUERY, as_matrix(w, "W"), squared)

    @classmethod
    def both_sides(cls, l, squared: bool = True) -> "Dissimilarity":
        return cls(BOTH_SIDES, as_matrix(l, "L"), squared)

    def map_labeled(self, points: np.ndarray) -> np.ndarray:
        if self.kind in (TRANSFORMED_LABELED, BOTH_SIDES):
            return points @ self.matrix.T
        return points

    def map_query(self, points: np.ndarray) -> np.ndarray:
        if self.kind in (TRANSFORMED_QUERY, BOTH_SIDES):
            return points @ self.matrix.T
        return points


@dataclass(frozen=True)
class KnnModel:
    """Labeled points ready for lookup (already mapped for the labeled side)."""

    labeled_points: np.ndarray
    labels: np.ndarray
    k: int
    dissimilarity: Dissimilarity

    def __post_init__(self):
        if self.labeled_points.ndim != 2:
            raise ValueError("labeled_points must be a matrix")
        if self.labels.shape != (self.labeled_points.shape[0],):
            raise ValueError("labels length must match labeled point count")
        if not 1 <= self.k <= self.labeled_points.shape[0]:
            raise ValueError(f"k must be in [1, {self.labeled_points.shape[0]}], got {self.k}")
        frozen(self.labeled_points)
        frozen(self.labels)

    @property
    def n(self) -> int:
        return self.labeled_points.shape[0]

    @property
    def d(self) -> int:
        return self.labeled_points.shape[1]


def build_knn_model(labeled_points, labels, k: int, dissimilarity: Dissimilarity) -> KnnModel:
    """Construct a KnnModel, applying the labeled-side transformation once."""
    pts = as_matrix(labeled_points, "labeled_points")
    y = as_int_vector(labels, "labels")
    if dissimilarity.kind != EUCLIDEAN and dissimilarity.matrix.shape[0] != pts.shape[1]:
        raise ValueError(
            f"dissimilarity matrix is {dissimilarity.matrix.shape[0]}-dimensional, "
            f"points are {pts.shape[1]}-dimensional")
    return KnnModel(dissimilarity.map_labeled(pts), y, int(k), dissimilarity)


def knn_from_transform(model: TransformModel, labeled_points, labels, k: int,
                       squared: bool = True) -> KnnModel:
    """Bridge a fitted TransformModel to a ready-to-query KnnModel."""
    if model.direction == MOVE_LABELED:
        dis = Dissimilarity.transformed_labeled(model.w, squared)
    elif model.direction == MOVE_QUERY:
        dis = Dissimilarity.transformed_query(model.w, squared)
    else:  # unreachable given TransformModel validation
        raise ValueError(f"unknown direction {model.direction!r}")
    return build_knn_model(labeled_points, labels, k, dis)


def _query_matrix(model: KnnModel, queries) -> np.ndarray:
    q = as_matrix(queries, "queries")
    want = model.dissimilarity.matrix.shape[0] if model.dissimilarity.kind in (
        TRANSFORMED_QUERY, BOTH_SIDES) else model.d
    if q.shape[1] != want:
        raise ValueError(f"queries have dimension {q.shape[1]}, model expects {want}")
    return model.dissimilarity.map_query(q)


def neighbor_index_matrix(model: KnnModel, queries, k: int | None = None) -> np.ndarray:
    """(n_queries, k) labeled indices, each row sorted by dissimilarity then index."""
    k = model.k if k is None else int(k)
    if not 1 <= k <= model.n:
        raise ValueError(f"k must be in [1, {model.n}], got {k}")
    q = _query_matrix(model, queries)
    out = np.empty((q.shape[0], k), dtype=np.int64)
    for lo, hi in query_chunks(q.shape[0], model.n):
        d2 = pairwise_sq_dists(q[lo:hi], model.labeled_points)
        out[lo:hi] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def neighbors(model: KnnModel, query) -> list[tuple[int, float]]:
    """The model's k nearest labeled objects for one query, with dissimilarity values."""
    q = _query_matrix(model, np.atleast_2d(as_vector(query, "query")))
    d2 = pairwise_sq_dists(q, model.labeled_points)[0]
    idx = np.argsort(d2, kind="stable")[: model.k]
    vals = d2[idx] if model.dissimilarity.squared else np.sqrt(d2[idx])
    return [(int(i), float(v)) for i, v in zip(idx, vals)]


def majority_vote(neighbor_labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Row-wise majority with ties broken by the nearest neighbor among tied labels.

    ``neighbor_labels`` rows must already be ordered by non-decreasing
    dissimilarity.
    """
    q, _ = neighbor_labels.shape
    rows = np.arange(q)[:, None]
    counts = np.zeros((q, n_classes), dtype=np.int64)
    np.add.at(counts, (rows, neighbor_labels), 1)
    top = counts.max(axis=1)
    in_tied_set = counts[rows, neighbor_labels] == top[:, None]
    first = in_tied_set.argmax(axis=1)
    return neighbor_labels[np.arange(q), first]


def classify_batch(model: KnnModel, queries) -> np.ndarray:
    """Predicted class id per query row."""
    idx = neighbor_index_matrix(model, queries)
    n_classes = int(model.labels.max()) + 1
    return majority_vote(model.labels[idx], n_classes)


def classify(model: KnnModel, query) -> int:
    """Predicted class id for a single query vector."""
    return int(classify_batch(model, np.atleast_2d(as_vector(query, "query")))[0])


def evaluate(model: KnnModel, queries, true_labels) -> float:
    """Fraction of queries whose prediction matches the true label."""
    y = as_int_vector(true_labels, "true_labels")
    q = as_matrix(queries, "queries")
    if q.shape[0] == 0:
        raise ValueError("queries must be non-empty")
    if y.shape[0] != q.shape[0]:
        raise ValueError("true_labels length must match query count")
    preds = classify_batch(model, q)
    return float(np.mean(preds == y))
