"""Monte-Carlo checks of the spatial-centrality bias behind hub formation.

For data z ~ N(0, s^2 I_d), the squared norm has standard deviation
sigma = s^2 sqrt(2d). Fix two data points whose squared norms differ by
gamma * sigma; for any zero-mean query distribution the expected squared
distances to them differ by exactly gamma * s^2 * sqrt(2d). The simulator
constructs such a pair explicitly and estimates the difference from fresh
query draws, so the estimate is unbiased and the standard error is pure
Monte-Carlo noise.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
import scipy.stats

from .hubness import nk_counts
from .knn import Dissimilarity, build_knn_model

_DRAW_CHUNK = 16384


class PairConstructionError(ValueError):
    """No data point with the required squared norm exists (too negative)."""


@dataclass(frozen=True)
class CentralityExperiment:
    """Configuration for one simulated pair-of-points experiment.

    ``gamma`` is the squared-norm gap in units of sigma. Queries default to
    N(0, I); ``query_std`` rescales them and ``query_shift`` moves their
    mean along the z2 - z1 direction (breaking the zero-mean assumption).
    """

    d: int
    s: float
    gamma: float
    n_queries: int
    seed: int
    query_std: float = 1.0
    query_shift: float = 0.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.n_queries < 1:
            raise ValueError("n_queries must be >= 1")
        if self.query_std <= 0:
            raise ValueError("query_std must be positive")


@dataclass(frozen=True)
class CentralityResult:
    """Monte-Carlo estimate vs. the closed-form value."""

    delta_hat: float
    delta_theory: float
    std_error: float


def squared_norm_std(d: int, s: float) -> float:
    """Standard deviation of ||z||^2 for z ~ N(0, s^2 I_d): s^2 sqrt(2d)."""
    return s * s * math.sqrt(2.0 * d)


def theoretical_delta(d: int, s: float, gamma: float) -> float:
    """Expected squared-distance difference gamma * s^2 * sqrt(2d)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if s <= 0:
        raise ValueError("s must be positive")
    return gamma * s * s * math.sqrt(2.0 * d)


def _conditioned_pair(rng: np.random.Generator, d: int, s: float,
                      gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample z1 ~ N(0, s^2 I); construct z2 with ||z2||^2 = ||z1||^2 + gamma*sigma."""
    z1 = rng.normal(0.0, s, size=d)
    target = float(z1 @ z1) + gamma * squared_norm_std(d, s)
    if target < 0.0:
        raise PairConstructionError(
            f"required squared norm {target:.6g} is negative (gamma={gamma}, d={d})")
    direction = rng.normal(0.0, 1.0, size=d)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise PairConstructionError("degenerate direction draw")
    z2 = direction * (math.sqrt(target) / norm)
    return z1, z2


def simulate_delta(exp: CentralityExperiment) -> CentralityResult:
    """Estimate E||x - z2||^2 - E||x - z1||^2 over n_queries fresh draws of x."""
    rng = np.random.default_rng(exp.seed)
    z1, z2 = _conditioned_pair(rng, exp.d, exp.s, exp.gamma)

    shift = np.zeros(exp.d)
    if exp.query_shift != 0.0:
        axis = z2 - z1
        norm = float(np.linalg.norm(axis))
        if norm > 0.0:
            shift = (exp.query_shift / norm) * axis

    total = 0.0
    total_sq = 0.0
    remaining = exp.n_queries
    while remaining > 0:
        m = min(_DRAW_CHUNK, remaining)
        x = rng.normal(0.0, exp.query_std, size=(m, exp.d)) + shift
        diffs = ((x - z2) ** 2).sum(axis=1) - ((x - z1) ** 2).sum(axis=1)
        total += float(diffs.sum())
        total_sq += float((diffs ** 2).sum())
        remaining -= m

    n = exp.n_queries
    mean = total / n
    if n > 1:
        var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
        std_error = math.sqrt(var / n)
    else:
        std_error = 0.0
    return CentralityResult(delta_hat=mean,
                            delta_theory=theoretical_delta(exp.d, exp.s, exp.gamma),
                            std_error=std_error)


def hub_tendency_demo(d: int, s_data: float, n_data: int, n_queries: int,
                      seed: int) -> float:
    """Rank correlation between closeness-to-origin and 10-occurrence counts.

    Samples data from N(0, s_data^2 I) and queries from N(0, I); positive
    values mean central points hog the neighbor lists, which is the
    expected regime once d is large.
    """
    if n_data < 20:
        raise ValueError("n_data must be >= 20")
    rng = np.random.default_rng(seed)
    data = rng.normal(0.0, s_data, size=(n_data, d))
    queries = rng.normal(0.0, 1.0, size=(n_queries, d))
    model = build_knn_model(data, np.zeros(n_data, dtype=np.int64), k=1,
                            dissimilarity=Dissimilarity.euclidean())
    counts = nk_counts(model, queries, k=min(10, n_data))
    closeness = -np.linalg.norm(data, axis=1)
    if np.ptp(counts) == 0 or np.ptp(closeness) == 0:
        return 0.0
    rho = scipy.stats.spearmanr(closeness, counts).statistic
    return float(rho)
