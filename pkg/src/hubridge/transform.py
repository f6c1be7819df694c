"""Closed-form ridge solvers for the labeled-object and query transformations.

Both directions minimize a sum of squared pair residuals plus a Frobenius
penalty and reduce to a single symmetric positive-definite solve:

* move-labeled: pull each target z toward its owner x_i by learning W in
  the dissimilarity ||x - W z||. Solver ``paper`` uses the Gram matrix
  X X^T; solver ``exact`` uses X diag(c) X^T where c_j counts how many
  times object j serves as a target. The two coincide exactly when every
  object is a target exactly once.
* move-query: map queries toward fixed labeled objects, ||W x - z||. This
  is the same regression with inputs and responses exchanged; it is solved
  exactly (the effective multiplicities are the target-list sizes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ._arrays import as_matrix, frozen

MOVE_LABELED = "move-labeled"
MOVE_QUERY = "move-query"
DIRECTIONS = (MOVE_LABELED, MOVE_QUERY)

SOLVER_PAPER = "paper"
SOLVER_EXACT = "exact"
SOLVERS = (SOLVER_PAPER, SOLVER_EXACT)


class SingularSystemError(ValueError):
    """The regularized Gram matrix is numerically singular (needs lambda > 0)."""


@dataclass(frozen=True)
class TransformModel:
    """A learned d x d linear map with its fitting configuration."""

    w: np.ndarray
    direction: str
    lam: float
    solver: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1]:
            raise ValueError("W must be square")
        if not np.isfinite(self.w).all():
            raise ValueError("W contains non-finite entries")
        frozen(self.w)

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def to_json_dict(self) -> dict:
        return {"version": 1, "direction": self.direction, "lambda": self.lam,
                "solver": self.solver, "d": self.d, "W": self.w.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TransformModel":
        if doc.get("version") != 1:
            raise ValueError(f"unsupported TransformModel version {doc.get('version')!r}")
        return cls(as_matrix(doc["W"], "W"), doc["direction"],
                   float(doc["lambda"]), doc["solver"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path) -> "TransformModel":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _check_inputs(x: np.ndarray, j, lam: float) -> sp.csr_matrix:
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    n = x.shape[1]
    jj = sp.csr_matrix(j)
    if jj.shape != (n, n):
        raise ValueError(f"indicator matrix must be {n}x{n}, got {jj.shape}")
    if jj.nnz and (jj.data.min() < 0 or jj.data.max() > 1):
        raise ValueError("indicator matrix entries must be 0 or 1")
    return jj


def _solve_against_gram(gram: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Solve W (gram + lam I) = b via Cholesky on the symmetric system."""
    g = gram.copy()
    g[np.diag_indices_from(g)] += lam
    try:
        cf = scipy.linalg.cho_factor(g, lower=False, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(
            "Gram matrix plus lambda*I is numerically singular; "
            "use lambda > 0") from e
    return scipy.linalg.cho_solve(cf, b.T, check_finite=False).T


def fit_move_labeled(x, j, lam: float, solver: str = SOLVER_PAPER) -> TransformModel:
    """Fit W for the move-labeled dissimilarity ||query - W labeled||.

    Parameters
    ----------
    x : (d, n) matrix whose columns are the training objects.
    j : (n, n) 0/1 indicator, row i marking the targets of object i.
    lam : ridge weight; must be positive when the Gram matrix is singular.
    solver : ``paper`` for the plain-Gram closed form, ``exact`` for the
        target-multiplicity-weighted true minimizer.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}")
    xm = as_matrix(x, "x")
    jj = _check_inputs(xm, j, lam)
    b = xm @ (jj @ xm.T)
    if solver == SOLVER_PAPER:
        gram = xm @ xm.T
    else:
        c = np.asarray(jj.sum(axis=0)).ravel()
        gram = (xm * c[None, :]) @ xm.T
    w = _solve_against_gram(gram, b, lam)
    return TransformModel(w, MOVE_LABELED, float(lam), solver)


def fit_move_query(x, j, lam: float) -> TransformModel:
    """Fit W for the move-query dissimilarity ||W query - labeled|| (exact minimizer)."""
    xm = as_matrix(x, "x")
    jj = _check_inputs(xm, j, lam)
    b = xm @ (jj.T @ xm.T)
    r = np.asarray(jj.sum(axis=1)).ravel()
    gram = (xm * r[None, :]) @ xm.T
    w = _solve_against_gram(gram, b, lam)
    return TransformModel(w, MOVE_QUERY, float(lam), SOLVER_EXACT)


def transform_points(model: TransformModel, points) -> np.ndarray:
    """Map each row x through the model: x -> W x."""
    p = as_matrix(points, "points")
    if p.shape[1] != model.d:
        raise ValueError(f"points have dimension {p.shape[1]}, W expects {model.d}")
    return p @ model.w.T


def regression_objective(x, j, w: np.ndarray, lam: float, direction: str) -> float:
    """Value of the fitted objective: sum of squared pair residuals + lam ||W||_F^2."""
    xm = as_matrix(x, "x")
    jj = _check_inputs(xm, j, lam)
    rows, cols = jj.nonzero()
    if direction == MOVE_LABELED:
        resid = xm[:, rows] - w @ xm[:, cols]
    elif direction == MOVE_QUERY:
        resid = w @ xm[:, rows] - xm[:, cols]
    else:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    return float((resid ** 2).sum() + lam * (w ** 2).sum())


def solver_disagreement(x, j, lam: float) -> float:
    """Relative Frobenius gap between the paper closed form and the exact minimizer.

    Zero exactly when every object serves as a target exactly once.
    """
    w_paper = fit_move_labeled(x, j, lam, SOLVER_PAPER).w
    w_exact = fit_move_labeled(x, j, lam, SOLVER_EXACT).w
    denom = np.linalg.norm(w_exact)
    if denom == 0:
        return float(np.linalg.norm(w_paper - w_exact))
    return float(np.linalg.norm(w_paper - w_exact) / denom)
