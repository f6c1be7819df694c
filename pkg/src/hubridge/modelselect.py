"""Cross-validated grid search over the ridge weight and the classification k.

Every fold refits the whole training pipeline on its own training side:
per-fold centering, target selection, and the transform. Validation points
never influence the fit they are scored against. The winning cell is the
highest mean validation accuracy, ties broken toward larger lambda and then
smaller k (prefer the more regularized, simpler model).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._arrays import as_int_vector
from .datamodel import Dataset
from .knn import Dissimilarity, build_knn_model, knn_from_transform, majority_vote, neighbor_index_matrix
from .targets import select_targets, indicator_matrix
from .transform import (MOVE_LABELED, MOVE_QUERY, SOLVER_PAPER, SOLVERS,
                        fit_move_labeled, fit_move_query)


class FoldError(ValueError):
    """Folds cannot be formed (class smaller than the fold count)."""


@dataclass(frozen=True)
class CvConfig:
    """Grid-search configuration. ``direction`` None means plain Euclidean k-NN."""

    lambda_grid: tuple[float, ...]
    k_grid: tuple[int, ...]
    n_folds: int
    seed: int
    direction: str | None
    k_targets: int = 1
    solver: str = SOLVER_PAPER

    def __post_init__(self):
        if not self.lambda_grid or not self.k_grid:
            raise ValueError("grids must be non-empty")
        if any(l < 0 for l in self.lambda_grid):
            raise ValueError("lambda values must be non-negative")
        if any(k < 1 for k in self.k_grid):
            raise ValueError("k values must be positive")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if self.direction not in (None, MOVE_LABELED, MOVE_QUERY):
            raise ValueError(f"direction must be None, {MOVE_LABELED!r} or {MOVE_QUERY!r}")
        if self.k_targets < 1:
            raise ValueError("k_targets must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")


@dataclass(frozen=True)
class CvCell:
    """Mean and spread of validation accuracy for one (lambda, k) cell."""

    lam: float
    k: int
    mean_accuracy: float
    std_accuracy: float

    def to_json_dict(self) -> dict:
        return {"lambda": self.lam, "k": self.k,
                "mean_accuracy": self.mean_accuracy,
                "std_accuracy": self.std_accuracy}


@dataclass(frozen=True)
class CvResult:
    """Grid-search outcome: the winning cell, the full table, and the folds used."""

    best_lambda: float
    best_k: int
    table: tuple[CvCell, ...]
    folds: tuple[tuple[int, ...], ...]

    def to_json_dict(self) -> dict:
        return {"version": 1, "best_lambda": self.best_lambda, "best_k": self.best_k,
                "table": [c.to_json_dict() for c in self.table],
                "folds": [list(f) for f in self.folds]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))


def make_folds(indices, labels, n_folds: int, seed: int) -> list[np.ndarray]:
    """Stratified folds over `indices`; per-class counts differ by at most 1."""
    idx = as_int_vector(indices, "indices")
    labs = as_int_vector(labels, "labels")
    if labs.shape != idx.shape:
        raise ValueError("labels must align with indices")
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for c in np.unique(labs):
        members = idx[labs == c]
        if members.size < n_folds:
            raise FoldError(
                f"class {int(c)} has {members.size} member(s); need >= {n_folds} folds")
        perm = rng.permutation(members)
        start = int(rng.integers(n_folds))
        for t, member in enumerate(perm):
            folds[(start + t) % n_folds].append(int(member))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def _accuracy_rows(neighbor_labels: np.ndarray, truth: np.ndarray,
                   k_grid: tuple[int, ...], n_classes: int) -> np.ndarray:
    """Accuracy per k, reusing one sorted neighbor-label matrix."""
    out = np.empty(len(k_grid))
    for ki, k in enumerate(k_grid):
        preds = majority_vote(neighbor_labels[:, :k], n_classes)
        out[ki] = float(np.mean(preds == truth))
    return out


def grid_search(dataset: Dataset, train_indices, config: CvConfig) -> CvResult:
    """Cross-validate (lambda, k) on the given training rows of `dataset`."""
    tr = as_int_vector(train_indices, "train_indices")
    labs = dataset.labels[tr]
    folds = make_folds(tr, labs, config.n_folds, config.seed)
    n_lam, n_k = len(config.lambda_grid), len(config.k_grid)
    max_k = max(config.k_grid)
    n_classes = dataset.class_count
    acc = np.zeros((n_lam, n_k, config.n_folds))

    for f, val_idx in enumerate(folds):
        fit_idx = np.sort(np.concatenate([folds[g] for g in range(config.n_folds) if g != f]))
        if max_k > fit_idx.size:
            raise ValueError(
                f"k={max_k} exceeds the fold training size {fit_idx.size}")
        x_fit = dataset.features[fit_idx]
        y_fit = dataset.labels[fit_idx]
        x_val = dataset.features[val_idx]
        y_val = dataset.labels[val_idx]
        mu = x_fit.mean(axis=0)
        x_fit = x_fit - mu
        x_val = x_val - mu

        if config.direction is None:
            model = build_knn_model(x_fit, y_fit, max_k, Dissimilarity.euclidean())
            nbr = y_fit[neighbor_index_matrix(model, x_val, max_k)]
            row = _accuracy_rows(nbr, y_val, config.k_grid, n_classes)
            acc[:, :, f] = row[None, :]
            continue

        assignment = select_targets(dataset, fit_idx, config.k_targets)
        jj = indicator_matrix(assignment, fit_idx.size)
        for li, lam in enumerate(config.lambda_grid):
            if config.direction == MOVE_LABELED:
                tm = fit_move_labeled(x_fit.T, jj, lam, config.solver)
            else:
                tm = fit_move_query(x_fit.T, jj, lam)
            km = knn_from_transform(tm, x_fit, y_fit, max_k)
            nbr = y_fit[neighbor_index_matrix(km, x_val, max_k)]
            acc[li, :, f] = _accuracy_rows(nbr, y_val, config.k_grid, n_classes)

    mean_acc = acc.mean(axis=2)
    std_acc = acc.std(axis=2, ddof=1)
    table = tuple(
        CvCell(lam=float(lam), k=int(k),
               mean_accuracy=float(mean_acc[li, ki]),
               std_accuracy=float(std_acc[li, ki]))
        for li, lam in enumerate(config.lambda_grid)
        for ki, k in enumerate(config.k_grid))
    best = max(table, key=lambda c: (c.mean_accuracy, c.lam, -c.k))
    return CvResult(best_lambda=best.lam, best_k=best.k, table=table,
                    folds=tuple(tuple(int(i) for i in f) for f in folds))
