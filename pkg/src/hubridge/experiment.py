"""End-to-end experiment protocol: preprocess, split, cross-validate, fit, score.

One run covers several random splits. Per split and method it reports test
accuracy, the skewness of the 10-occurrence distribution (test rows as
queries), the chosen hyperparameters, and the training wall-clock time.
The timed region is target selection plus the closed-form solve only;
loading, preprocessing and cross-validation are excluded so the number
reflects the solver, not the protocol around it.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import (Dataset, Split, column_mean_sd, dataset_from_arrays,
                        fit_pca, apply_pca, load_dataset, split as make_split, subset)
from .hubness import DEFAULT_HUBNESS_K, nk_counts, skewness
from .knn import Dissimilarity, build_knn_model, knn_from_transform, evaluate
from .modelselect import CvConfig, grid_search
from .targets import select_targets, indicator_matrix
from .transform import (MOVE_LABELED, MOVE_QUERY, SOLVER_PAPER, SOLVERS,
                        fit_move_labeled, fit_move_query, solver_disagreement)

EUCLIDEAN_METHOD = "euclidean"
METHODS = (EUCLIDEAN_METHOD, MOVE_LABELED, MOVE_QUERY)

DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)
DEFAULT_K_GRID = (1, 3, 5, 7, 9)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one benchmark run needs, serializable to a single JSON file."""

    dataset_path: str
    fmt: str = "dense-csv"
    center: bool = True
    zscore: bool = False
    pca_dim: int | None = None
    methods: tuple[str, ...] = METHODS
    n_splits: int = 4
    train_fraction: float = 0.7
    seeds: tuple[int, ...] = (1, 2, 3, 4)
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    cv_folds: int = 5
    k_targets: int = 1
    solver: str = SOLVER_PAPER
    hubness_k: int = DEFAULT_HUBNESS_K
    out_dir: str | None = None

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValueError("n_splits must be >= 1")
        if len(self.seeds) != self.n_splits:
            raise ValueError("seeds must provide one seed per split")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown method(s) {sorted(unknown)}; expected {METHODS}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")

    def to_json_dict(self) -> dict:
        return {"version": 1, "dataset": self.dataset_path, "format": self.fmt,
                "center": self.center, "zscore": self.zscore, "pca_dim": self.pca_dim,
                "methods": list(self.methods), "n_splits": self.n_splits,
                "train_fraction": self.train_fraction, "seeds": list(self.seeds),
                "lambda_grid": list(self.lambda_grid), "k_grid": list(self.k_grid),
                "cv_folds": self.cv_folds, "k_targets": self.k_targets,
                "solver": self.solver, "hubness_k": self.hubness_k,
                "out_dir": self.out_dir}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        if doc.get("version") != 1:
            raise ValueError(f"unsupported config version {doc.get('version')!r}")
        return cls(dataset_path=doc["dataset"], fmt=doc.get("format", "dense-csv"),
                   center=bool(doc.get("center", True)),
                   zscore=bool(doc.get("zscore", False)),
                   pca_dim=doc.get("pca_dim"),
                   methods=tuple(doc.get("methods", METHODS)),
                   n_splits=int(doc.get("n_splits", 4)),
                   train_fraction=float(doc.get("train_fraction", 0.7)),
                   seeds=tuple(int(s) for s in doc["seeds"]),
                   lambda_grid=tuple(float(v) for v in doc.get("lambda_grid", DEFAULT_LAMBDA_GRID)),
                   k_grid=tuple(int(v) for v in doc.get("k_grid", DEFAULT_K_GRID)),
                   cv_folds=int(doc.get("cv_folds", 5)),
                   k_targets=int(doc.get("k_targets", 1)),
                   solver=doc.get("solver", SOLVER_PAPER),
                   hubness_k=int(doc.get("hubness_k", DEFAULT_HUBNESS_K)),
                   out_dir=doc.get("out_dir"))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True))


@dataclass(frozen=True)
class MethodSplitResult:
    """Scores for one (method, split) pair."""

    method: str
    split_seed: int
    accuracy: float
    n10_skewness: float
    training_seconds: float
    lam: float
    k: int
    solver_gap: float | None = None

    def to_json_dict(self) -> dict:
        return {"method": self.method, "split_seed": self.split_seed,
                "accuracy": self.accuracy, "n10_skewness": self.n10_skewness,
                "training_seconds": self.training_seconds, "lambda": self.lam,
                "k": self.k, "solver_gap": self.solver_gap}


@dataclass(frozen=True)
class MethodAggregate:
    method: str
    mean_accuracy: float
    sd_accuracy: float
    mean_skewness: float
    sd_skewness: float
    mean_training_seconds: float

    def to_json_dict(self) -> dict:
        return {"method": self.method, "mean_accuracy": self.mean_accuracy,
                "sd_accuracy": self.sd_accuracy, "mean_skewness": self.mean_skewness,
                "sd_skewness": self.sd_skewness,
                "mean_training_seconds": self.mean_training_seconds}


TIMING_FIELDS = ("training_seconds", "mean_training_seconds")


@dataclass(frozen=True)
class ExperimentReport:
    """All rows plus per-method aggregates for one configuration."""

    config: ExperimentConfig
    rows: tuple[MethodSplitResult, ...]
    aggregates: tuple[MethodAggregate, ...]

    def to_json_dict(self) -> dict:
        return {"version": 1, "config": self.config.to_json_dict(),
                "rows": [r.to_json_dict() for r in self.rows],
                "aggregates": [a.to_json_dict() for a in self.aggregates]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def render_table(self) -> str:
        header = (f"{'method':<14} {'seed':>6} {'accuracy':>9} "
                  f"{'N10 skew':>9} {'train[s]':>9} {'lambda':>9} {'k':>3}")
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(f"{r.method:<14} {r.split_seed:>6d} {r.accuracy:>9.4f} "
                         f"{r.n10_skewness:>9.3f} {r.training_seconds:>9.4f} "
                         f"{r.lam:>9.4g} {r.k:>3d}")
        lines.append("")
        lines.append(f"{'method':<14} {'mean acc':>9} {'sd acc':>8} "
                     f"{'mean skew':>10} {'sd skew':>8} {'mean train[s]':>14}")
        for a in self.aggregates:
            lines.append(f"{a.method:<14} {a.mean_accuracy:>9.4f} {a.sd_accuracy:>8.4f} "
                         f"{a.mean_skewness:>10.3f} {a.sd_skewness:>8.3f} "
                         f"{a.mean_training_seconds:>14.4f}")
        return "\n".join(lines) + "\n"

    def save(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        json_path = out / "report.json"
        text_path = out / "report.txt"
        json_path.write_text(self.to_json())
        text_path.write_text(self.render_table())
        return json_path, text_path


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def preprocess(dataset: Dataset, train_rows=None, *, center: bool = True,
               zscore: bool = False, pca_dim: int | None = None) -> Dataset:
    """Train-fitted preprocessing applied to every row of the dataset.

    Statistics (means, scales, principal components) come from
    ``train_rows`` only; ``None`` fits on all rows. Order: z-score, center,
    PCA.
    """
    rows = np.arange(dataset.n) if train_rows is None else np.asarray(train_rows)
    feats = dataset.features
    if zscore:
        mean, sd = column_mean_sd(feats[rows])
        feats = (feats - mean) / sd
    if center:
        feats = feats - feats[rows].mean(axis=0)
    if pca_dim is not None:
        train_ds = dataset_from_arrays(feats[rows], dataset.labels[rows],
                                       name=dataset.name,
                                       label_names=dataset.label_names)
        pca = fit_pca(train_ds, pca_dim)
        feats = apply_pca(pca, feats)
    return Dataset(np.ascontiguousarray(feats), dataset.labels.copy(),
                   dataset.class_count, dataset.name, dataset.label_names)


def fit_timed(train_ds: Dataset, method: str, lam: float, k_targets: int,
              solver: str):
    """Select targets and fit the transform, timing exactly that region."""
    local = np.arange(train_ds.n)
    t0 = time.perf_counter()
    assignment = select_targets(train_ds, local, k_targets)
    jj = indicator_matrix(assignment, train_ds.n)
    x = train_ds.features.T
    if method == MOVE_LABELED:
        tm = fit_move_labeled(x, jj, lam, solver)
    else:
        tm = fit_move_query(x, jj, lam)
    elapsed = time.perf_counter() - t0
    return tm, jj, elapsed


def _run_method(pre: Dataset, sp: Split, method: str,
                config: ExperimentConfig) -> MethodSplitResult:
    x_test = pre.features[sp.test_indices]
    y_test = pre.labels[sp.test_indices]
    train_ds = subset(pre, sp.train_indices)

    lam_grid = (0.0,) if method == EUCLIDEAN_METHOD else config.lambda_grid
    direction = None if method == EUCLIDEAN_METHOD else method
    cv = grid_search(pre, sp.train_indices,
                     CvConfig(lambda_grid=lam_grid, k_grid=config.k_grid,
                              n_folds=config.cv_folds, seed=sp.seed,
                              direction=direction, k_targets=config.k_targets,
                              solver=config.solver))

    gap = None
    if method == EUCLIDEAN_METHOD:
        training_seconds = 0.0
        km = build_knn_model(train_ds.features, train_ds.labels, cv.best_k,
                             Dissimilarity.euclidean())
    else:
        tm, jj, training_seconds = fit_timed(train_ds, method, cv.best_lambda,
                                             config.k_targets, config.solver)
        km = knn_from_transform(tm, train_ds.features, train_ds.labels, cv.best_k)
        if method == MOVE_LABELED:
            gap = solver_disagreement(train_ds.features.T, jj, cv.best_lambda)

    accuracy = evaluate(km, x_test, y_test)
    counts = nk_counts(km, x_test, config.hubness_k)
    return MethodSplitResult(method=method, split_seed=sp.seed, accuracy=accuracy,
                             n10_skewness=skewness(counts),
                             training_seconds=training_seconds,
                             lam=cv.best_lambda, k=cv.best_k, solver_gap=gap)


def _aggregate(rows: tuple[MethodSplitResult, ...],
               methods: tuple[str, ...]) -> tuple[MethodAggregate, ...]:
    out = []
    for m in methods:
        mine = [r for r in rows if r.method == m]
        if not mine:
            continue
        accs = np.array([r.accuracy for r in mine])
        skews = np.array([r.n10_skewness for r in mine])
        secs = np.array([r.training_seconds for r in mine])
        sd = float(accs.std(ddof=1)) if len(mine) > 1 else 0.0
        sd_skew = float(skews.std(ddof=1)) if len(mine) > 1 else 0.0
        out.append(MethodAggregate(method=m, mean_accuracy=float(accs.mean()),
                                   sd_accuracy=sd, mean_skewness=float(skews.mean()),
                                   sd_skewness=sd_skew,
                                   mean_training_seconds=float(secs.mean())))
    return tuple(out)


def run_experiment(config: ExperimentConfig,
                   dataset: Dataset | None = None) -> ExperimentReport:
    """Run the full protocol; pass `dataset` to skip re-loading from disk."""
    if dataset is None:
        dataset = load_dataset(config.dataset_path, config.fmt)
    rows: list[MethodSplitResult] = []
    try:
        for seed in config.seeds:
            sp = make_split(dataset, config.train_fraction, seed)
            pre = preprocess(dataset, sp.train_indices, center=config.center,
                             zscore=config.zscore, pca_dim=config.pca_dim)
            for method in config.methods:
                try:
                    rows.append(_run_method(pre, sp, method, config))
                except Exception as e:
                    raise RuntimeError(
                        f"method {method!r} failed on split seed {seed}: {e}") from e
    except Exception:
        if rows and config.out_dir:  # keep whatever finished
            partial = ExperimentReport(config=config, rows=tuple(rows),
                                       aggregates=_aggregate(tuple(rows), config.methods))
            partial.save(Path(config.out_dir) / "partial")
        raise
    report = ExperimentReport(config=config, rows=tuple(rows),
                              aggregates=_aggregate(tuple(rows), config.methods))
    if config.out_dir:
        report.save(config.out_dir)
    return report
