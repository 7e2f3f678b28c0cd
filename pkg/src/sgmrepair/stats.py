"""Accuracy metrics, distance histograms and two-sample comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSampleError
from .tokenize import identifiers, tokenize


@dataclass
class DistanceSample:
    values: list[float]
    label: str = ""

    def __post_init__(self):
        self.values = [float(v) for v in self.values]
        bad = [v for v in self.values if not 0.0 <= v <= 1.0]
        if bad:
            raise ValueError(f"distance values must lie in [0, 1], got {bad[:3]}")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    z_statistic: float
    p_value: float
    wasserstein: float

    __test__ = False  # keep pytest from collecting this

    def to_dict(self):
        return {"z_statistic": self.z_statistic, "p_value": self.p_value,
                "wasserstein": self.wasserstein}


def _tokens(x):
    return tokenize(x) if isinstance(x, str) else list(x)


def exact_match(candidate, target) -> bool:
    return _tokens(candidate) == _tokens(target)


def topk_accuracy(candidates: Sequence[Sequence], targets: Sequence, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidates) != len(targets):
        raise ValueError("need one candidate list per target")
    if not targets:
        return 0.0
    hits = sum(any(exact_match(c, t) for c in cands[:k])
               for cands, t in zip(candidates, targets))
    return hits / len(targets)


def _values(sample):
    return sample.values if isinstance(sample, DistanceSample) else [float(v) for v in sample]


def wasserstein_1d(a, b) -> float:
    """Area between the two empirical CDFs."""
    u = np.sort(np.asarray(_values(a), dtype=np.float64))
    v = np.sort(np.asarray(_values(b), dtype=np.float64))
    if u.size == 0 or v.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([u, v])
    grid.sort(kind="mergesort")
    widths = np.diff(grid)
    cdf_u = np.searchsorted(u, grid[:-1], side="right") / u.size
    cdf_v = np.searchsorted(v, grid[:-1], side="right") / v.size
    return float(np.sum(np.abs(cdf_u - cdf_v) * widths))


def two_sample_z(a, b) -> TestResult:
    """Unpooled two-sample z test (sample variances) plus the W1 distance."""
    x = np.asarray(_values(a), dtype=np.float64)
    y = np.asarray(_values(b), dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise DegenerateSampleError("each sample needs at least two values")
    se2 = x.var(ddof=1) / x.size + y.var(ddof=1) / y.size
    if se2 <= 0.0:
        raise DegenerateSampleError("both samples have zero variance")
    z = float((x.mean() - y.mean()) / math.sqrt(se2))
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return TestResult(z, min(1.0, max(0.0, p)), wasserstein_1d(x, y))


def histogram(sample, bins: int = 50) -> list[tuple[float, float, int]]:
    """Equal-width bins over [0, 1]; the last bin is closed on the right."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts = [0] * bins
    for v in _values(sample):
        idx = min(int(math.floor(v * bins)), bins - 1)
        counts[max(idx, 0)] += 1
    return [(i / bins, (i + 1) / bins, c) for i, c in enumerate(counts)]


def percent_improvement(base: float, new: float) -> float:
    if base == 0:
        raise ValueError("baseline value must be nonzero")
    return round(100.0 * (new - base) / base, 2)


def new_identifier_count(source, output) -> int:
    return len(identifiers(_tokens(output)) - identifiers(_tokens(source)))
