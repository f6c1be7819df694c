"""Per-object regression targets: same-class nearest neighbors in the training set.

Targets are selected with the plain Euclidean metric on the features as
given (before any learned transformation). All indices in a
TargetAssignment are positions within the training list that produced it,
so they align directly with the columns of the feature matrix handed to
the transform solvers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._arrays import as_int_vector, pairwise_sq_dists
from .datamodel import Dataset


class TargetSelectionError(ValueError):
    """Target selection is impossible (e.g. a training class is a singleton)."""


@dataclass(frozen=True)
class TargetAssignment:
    """Ordered target lists, one per training object.

    targets_of[i] holds train-local indices sorted by non-decreasing
    Euclidean distance to object i; ties broken by lower index.
    """

    targets_of: tuple[tuple[int, ...], ...]
    k_targets: int

    def __post_init__(self):
        if self.k_targets < 0:
            raise ValueError("k_targets must be non-negative")
        for i, t in enumerate(self.targets_of):
            if i in t:
                raise ValueError(f"object {i} lists itself as a target")

    def to_json_dict(self) -> dict:
        return {"k_targets": self.k_targets,
                "targets": [list(t) for t in self.targets_of]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TargetAssignment":
        return cls(tuple(tuple(int(j) for j in t) for t in doc["targets"]),
                   int(doc["k_targets"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path) -> "TargetAssignment":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def select_targets(dataset: Dataset, train, k_targets: int) -> TargetAssignment:
    """Pick each training object's k nearest same-class training objects.

    Classes with fewer than ``k_targets + 1`` training members contribute
    all available same-class objects instead of failing; classes with a
    single training member are rejected (no same-class target exists).
    """
    if k_targets < 0:
        raise ValueError("k_targets must be non-negative")
    tr = as_int_vector(train, "train")
    feats = dataset.features[tr]
    labs = dataset.labels[tr]
    m = tr.size
    targets: list[tuple[int, ...]] = [()] * m
    if k_targets == 0:
        return TargetAssignment(tuple(targets), 0)

    for c in np.unique(labs):
        members = np.flatnonzero(labs == c)
        if members.size < 2:
            raise TargetSelectionError(
                f"training class {dataset.label_names[int(c)]!r} has a single member; "
                "cannot select same-class targets")
        d2 = pairwise_sq_dists(feats[members], feats[members])
        np.fill_diagonal(d2, np.inf)
        order = np.argsort(d2, axis=1, kind="stable")
        take = min(k_targets, members.size - 1)
        for row, i in enumerate(members):
            targets[int(i)] = tuple(int(members[j]) for j in order[row, :take])
    return TargetAssignment(tuple(targets), k_targets)


def indicator_matrix(assignment: TargetAssignment, n: int) -> sp.csr_matrix:
    """Sparse 0/1 matrix J with J[i, j] = 1 iff j is a target of i."""
    rows, cols = [], []
    if len(assignment.targets_of) > n:
        raise ValueError(f"assignment covers {len(assignment.targets_of)} objects, n={n}")
    for i, t in enumerate(assignment.targets_of):
        for j in t:
            if not 0 <= j < n:
                raise ValueError(f"target index {j} out of range [0, {n})")
            rows.append(i)
            cols.append(j)
    data = np.ones(len(rows), dtype=np.float64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))
