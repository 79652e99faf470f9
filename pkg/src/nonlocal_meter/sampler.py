"""Seeded coincidence-count sampling.

Random numbers come from Philox4x64-10 (numpy's ``Philox`` bit generator)
keyed with ``(master seed, stream id)`` and starting from counter 0.  The
counter's top word selects a partition, so partitions of one stream never
overlap.  Each shot consumes one double from ``Generator.random`` and is
assigned to a category by inverting the cumulative distribution in the
declared label order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

PROB_SUM_TOL = 1e-10
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not 0 <= self.stream <= _MASK64:
            raise ValueError(f"stream id must be a non-negative 64-bit integer, got {self.stream}")

    def generator(self, partition: int = 0) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        counter = np.array([0, 0, 0, partition], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class CountTable:
    labels: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise ValueError("labels and counts differ in length")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.labels, self.counts))

    def __getitem__(self, label: str) -> int:
        return self.counts[self.labels.index(label)]

    def __add__(self, other: "CountTable") -> "CountTable":
        if self.labels != other.labels:
            raise ValueError("cannot merge tables with different categories")
        return CountTable(self.labels, tuple(a + b for a, b in zip(self.counts, other.counts)))

    @classmethod
    def zeros(cls, labels: Sequence[str]) -> "CountTable":
        return cls(tuple(labels), (0,) * len(labels))


def _check_distribution(probs: Mapping[str, float]) -> tuple[tuple[str, ...], np.ndarray]:
    labels = tuple(probs)
    p = np.array([float(probs[k]) for k in labels])
    if len(p) == 0:
        raise ValueError("empty distribution")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"probabilities must be finite and non-negative: {dict(probs)}")
    if abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
    return labels, p


def categorical(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Map uniforms in [0, 1) to category indices by CDF inversion.

    Zero-probability categories are never returned.
    """
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, u, side="right")
    # u can exceed cdf[-1] when the sum rounds below 1
    last = int(np.flatnonzero(p > 0)[-1])
    return np.minimum(idx, last)


def sample_counts(probs: Mapping[str, float], shots: int, seed: SeedSpec, partition: int = 0) -> CountTable:
    labels, p = _check_distribution(probs)
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if shots == 0:
        return CountTable.zeros(labels)
    u = seed.generator(partition).random(shots)
    counts = np.bincount(categorical(u, p), minlength=len(labels))
    return CountTable(labels, tuple(int(c) for c in counts))


def sample_counts_partitioned(
    probs: Mapping[str, float], shots: int, seed: SeedSpec, partitions: int, workers: int | None = None
) -> CountTable:
    """Split *shots* over *partitions* disjoint sub-streams and sum the tables.

    The total depends on the partition plan but never on ``workers``.
    """
    if partitions < 1:
        raise ValueError("need at least one partition")
    base, extra = divmod(shots, partitions)
    sizes = [base + (k < extra) for k in range(partitions)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        tables = list(pool.map(lambda k: sample_counts(probs, sizes[k], seed, partition=k), range(partitions)))
    total = tables[0]
    for t in tables[1:]:
        total = total + t
    return total


@dataclass(frozen=True)
class Comparison:
    z: dict[str, float]
    max_abs_z: float
    exact_violations: tuple[str, ...]

    def ok(self, threshold: float = 4.0) -> bool:
        return not self.exact_violations and self.max_abs_z <= threshold


def compare_counts(table: CountTable, expected: Mapping[str, float]) -> Comparison:
    """Per-category binomial z-scores of *table* against *expected*.

    Categories with p in {0, 1} have zero variance; they are checked for exact
    agreement and reported in ``exact_violations`` instead.
    """
    if set(table.labels) != set(expected):
        raise ValueError(f"category mismatch: {table.labels} vs {tuple(expected)}")
    n = table.total
    z: dict[str, float] = {}
    bad = []
    for label, count in zip(table.labels, table.counts):
        p = float(expected[label])
        mean = n * p
        var = n * p * (1 - p)
        if var == 0:
            z[label] = 0.0
            if count != mean:
                bad.append(label)
        else:
            z[label] = float((count - mean) / np.sqrt(var))
    return Comparison(z, max((abs(v) for v in z.values()), default=0.0), tuple(bad))
