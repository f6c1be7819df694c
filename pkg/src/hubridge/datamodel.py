"""Dataset representation, file ingestion, preprocessing and train/test splitting.

Feature files come in two shapes: ``dense-csv`` (one object per line,
``v1,v2,...,vd,label``) and ``sparse-pairs`` (``label idx:val idx:val ...``
with 1-based indices, densified on load). Labels are remapped to contiguous
integer ids in first-appearance order; the original tokens are kept on the
dataset for reporting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._arrays import as_matrix, as_vector, as_int_vector, frozen

DENSE_CSV = "dense-csv"
SPARSE_PAIRS = "sparse-pairs"
FORMATS = (DENSE_CSV, SPARSE_PAIRS)


class DatasetFormatError(ValueError):
    """A feature file could not be parsed under its declared format."""


class PreprocessError(ValueError):
    """A preprocessing step is undefined for the given data (e.g. constant column)."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    """Immutable labeled point set.

    features : (n, d) float64 matrix, rows are objects.
    labels : (n,) int64, values in [0, class_count); every class occurs.
    label_names : original label token per class id.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str
    label_names: tuple[str, ...]

    def __post_init__(self):
        f = self.features
        y = self.labels
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        if not np.isfinite(f).all():
            raise ValueError("features contain non-finite values")
        if y.shape != (f.shape[0],):
            raise ValueError("labels length must match feature row count")
        if self.class_count < 1:
            raise ValueError("class_count must be positive")
        if y.min() < 0 or y.max() >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")
        present = np.bincount(y, minlength=self.class_count)
        if (present == 0).any():
            missing = int(np.flatnonzero(present == 0)[0])
            raise ValueError(f"class id {missing} has no members")
        if len(self.label_names) != self.class_count:
            raise ValueError("label_names length must equal class_count")
        frozen(f)
        frozen(y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


def dataset_from_arrays(features, labels, name: str = "",
                        label_names: tuple[str, ...] | None = None) -> Dataset:
    """Build a Dataset from in-memory arrays with dense integer labels."""
    f = as_matrix(np.array(features, dtype=np.float64, copy=True), "features")
    y = as_int_vector(np.array(labels, copy=True), "labels")
    if y.size == 0:
        raise ValueError("labels must be non-empty")
    class_count = int(y.max()) + 1 if y.size else 0
    if label_names is None:
        label_names = tuple(str(c) for c in range(class_count))
    return Dataset(f, y, class_count, name, tuple(label_names))


def subset(dataset: Dataset, indices) -> Dataset:
    """Row subset as a new Dataset. Every class must survive the selection."""
    idx = as_int_vector(indices, "indices")
    f = np.array(dataset.features[idx], copy=True)
    y = np.array(dataset.labels[idx], copy=True)
    return Dataset(f, y, dataset.class_count, dataset.name, dataset.label_names)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _finite_or_raise(value: float, row: int, col: int) -> float:
    if not np.isfinite(value):
        raise DatasetFormatError(
            f"row {row}, column {col}: non-finite value {value!r}")
    return value


def _parse_dense_csv(lines: list[tuple[int, str]]):
    rows, tokens = [], []
    width = None
    for lineno, line in lines:
        fields = line.split(",")
        if len(fields) < 2:
            raise DatasetFormatError(
                f"row {lineno}: expected 'v1,...,vd,label', got {len(fields)} field(s)")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DatasetFormatError(
                f"row {lineno}: expected {width} fields, got {len(fields)}")
        values = []
        for col, tok in enumerate(fields[:-1], start=1):
            try:
                v = float(tok)
            except ValueError:
                raise DatasetFormatError(
                    f"row {lineno}, column {col}: cannot parse {tok.strip()!r} as a number") from None
            values.append(_finite_or_raise(v, lineno, col))
        rows.append(values)
        tokens.append(fields[-1].strip())
    return np.array(rows, dtype=np.float64), tokens


def _parse_sparse_pairs(lines: list[tuple[int, str]]):
    entries, tokens = [], []
    d = 0
    for lineno, line in lines:
        fields = line.split()
        tokens.append(fields[0])
        row = {}
        for col, tok in enumerate(fields[1:], start=1):
            part = tok.split(":")
            if len(part) != 2:
                raise DatasetFormatError(
                    f"row {lineno}, pair {col}: expected 'idx:val', got {tok!r}")
            try:
                idx = int(part[0])
                v = float(part[1])
            except ValueError:
                raise DatasetFormatError(
                    f"row {lineno}, pair {col}: cannot parse {tok!r}") from None
            if idx < 1:
                raise DatasetFormatError(
                    f"row {lineno}, pair {col}: index {idx} is not 1-based")
            if idx in row:
                raise DatasetFormatError(
                    f"row {lineno}, pair {col}: duplicate index {idx}")
            row[idx] = _finite_or_raise(v, lineno, col)
            d = max(d, idx)
        entries.append(row)
    if d == 0:
        raise DatasetFormatError("no feature indices found in sparse-pairs file")
    features = np.zeros((len(entries), d), dtype=np.float64)
    for i, row in enumerate(entries):
        for idx, v in row.items():
            features[i, idx - 1] = v
    return features, tokens


def load_dataset(path, fmt: str) -> Dataset:
    """Load a feature file; labels are remapped to dense ids in first-appearance order."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    text = path.read_text()
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise DatasetFormatError(f"{path}: file contains no data rows")

    if fmt == DENSE_CSV:
        features, tokens = _parse_dense_csv(lines)
    else:
        features, tokens = _parse_sparse_pairs(lines)

    id_of: dict[str, int] = {}
    labels = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        if tok not in id_of:
            id_of[tok] = len(id_of)
        labels[i] = id_of[tok]
    names = tuple(id_of)
    return Dataset(features, labels, len(names), path.stem, names)


def bundled_dataset_path(name: str) -> Path:
    """Path to a dataset file shipped with the package (e.g. ``iris``)."""
    from importlib.resources import files
    p = files("hubridge").joinpath("data", f"{name}.csv")
    return Path(str(p))


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

def center(dataset: Dataset) -> tuple[Dataset, np.ndarray]:
    """Subtract the per-column mean; returns the centered dataset and the mean."""
    mean = dataset.features.mean(axis=0)
    out = dataset.features - mean
    return (Dataset(out, dataset.labels.copy(), dataset.class_count,
                    dataset.name, dataset.label_names), mean)


def column_mean_sd(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and sample standard deviation; rejects constant columns."""
    mean = features.mean(axis=0)
    if features.shape[0] < 2:
        raise PreprocessError("z-scoring needs at least 2 rows")
    sd = features.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd == 0.0)
    if bad.size:
        raise PreprocessError(
            f"column {int(bad[0])} is constant; z-score is undefined")
    return mean, sd


def zscore(dataset: Dataset) -> Dataset:
    """Standardize each column to mean 0 and sample standard deviation 1."""
    mean, sd = column_mean_sd(dataset.features)
    out = (dataset.features - mean) / sd
    return Dataset(out, dataset.labels.copy(), dataset.class_count,
                   dataset.name, dataset.label_names)


@dataclass(frozen=True)
class PcaModel:
    """Thin-SVD principal components: ``mean`` (d,), ``components`` (d, r) orthonormal."""

    mean: np.ndarray
    components: np.ndarray
    r: int

    def __post_init__(self):
        if self.components.shape != (self.mean.shape[0], self.r):
            raise ValueError("components must be d x r with d = len(mean)")
        frozen(self.mean)
        frozen(self.components)

    def to_json_dict(self) -> dict:
        return {"version": 1, "mean": self.mean.tolist(),
                "components": self.components.tolist(), "r": self.r}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PcaModel":
        if doc.get("version") != 1:
            raise ValueError(f"unsupported PcaModel version {doc.get('version')!r}")
        return cls(as_vector(doc["mean"], "mean"),
                   as_matrix(doc["components"], "components"), int(doc["r"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def fit_pca(dataset: Dataset, r: int) -> PcaModel:
    """Fit principal components via thin SVD of the centered feature matrix.

    Components are ordered by non-increasing explained variance; the sign of
    each component is fixed so its largest-magnitude entry is positive.
    """
    n, d = dataset.features.shape
    if not 1 <= r <= min(n, d):
        raise ValueError(f"r must be in [1, min(n, d)] = [1, {min(n, d)}], got {r}")
    mean = dataset.features.mean(axis=0)
    _, _, vt = np.linalg.svd(dataset.features - mean, full_matrices=False)
    components = vt[:r].T.copy()
    anchor = np.abs(components).argmax(axis=0)
    signs = np.sign(components[anchor, np.arange(r)])
    signs[signs == 0] = 1.0
    components *= signs
    return PcaModel(mean.copy(), components, r)


def apply_pca(model: PcaModel, points) -> np.ndarray:
    """Project points onto the model's components: (points - mean) @ components."""
    p = as_matrix(points, "points")
    if p.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"points have dimension {p.shape[1]}, model expects {model.mean.shape[0]}")
    return (p - model.mean) @ model.components


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    """Disjoint train/test index partition with its generating parameters."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    train_fraction: float

    def __post_init__(self):
        if np.intersect1d(self.train_indices, self.test_indices).size:
            raise ValueError("train and test indices overlap")
        frozen(self.train_indices)
        frozen(self.test_indices)

    def to_json_dict(self) -> dict:
        return {"version": 1, "seed": self.seed,
                "train_fraction": self.train_fraction,
                "train_indices": self.train_indices.tolist(),
                "test_indices": self.test_indices.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Split":
        if doc.get("version") != 1:
            raise ValueError(f"unsupported Split version {doc.get('version')!r}")
        return cls(as_int_vector(doc["train_indices"], "train_indices"),
                   as_int_vector(doc["test_indices"], "test_indices"),
                   int(doc["seed"]), float(doc["train_fraction"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path) -> "Split":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _allocate_train_counts(class_sizes: np.ndarray, fraction: float, total: int) -> np.ndarray:
    """Largest-remainder allocation of `total` train slots, at least 1 per class."""
    ideal = fraction * class_sizes
    counts = np.clip(np.floor(ideal).astype(np.int64), 1, class_sizes)
    remainder = ideal - np.floor(ideal)
    while counts.sum() < total:
        room = counts < class_sizes
        order = np.lexsort((np.arange(len(counts)), -remainder))
        grew = False
        for c in order:
            if room[c]:
                counts[c] += 1
                grew = True
                if counts.sum() == total:
                    break
        if not grew:  # no capacity left; cannot happen when total <= n
            raise ValueError("cannot allocate train slots")
    while counts.sum() > total:
        shrinkable = counts > 1
        order = np.lexsort((np.arange(len(counts)), remainder))
        shrank = False
        for c in order:
            if shrinkable[c]:
                counts[c] -= 1
                shrank = True
                if counts.sum() == total:
                    break
        if not shrank:
            raise ValueError(
                "train size is smaller than the number of classes; cannot stratify")
    return counts


def split(dataset: Dataset, train_fraction: float, seed: int) -> Split:
    """Stratified random train/test split, reproducible from the seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    sizes = dataset.class_sizes()
    small = np.flatnonzero(sizes < 2)
    if small.size:
        c = int(small[0])
        raise ValueError(
            f"class {dataset.label_names[c]!r} has {int(sizes[c])} member(s); need >= 2")
    n = dataset.n
    total = int(round(train_fraction * n))
    if total < dataset.class_count:
        raise ValueError(
            f"train partition of size {total} cannot contain all "
            f"{dataset.class_count} classes")
    counts = _allocate_train_counts(sizes, train_fraction, total)

    rng = np.random.default_rng(seed)
    train_parts = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == c)
        perm = rng.permutation(members)
        train_parts.append(perm[: counts[c]])
    train = np.sort(np.concatenate(train_parts))
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    test = np.flatnonzero(mask)
    return Split(train, test, int(seed), float(train_fraction))
