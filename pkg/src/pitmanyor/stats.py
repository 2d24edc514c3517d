"""Partition statistics of a sample: distinct values, multiplicities, occupancy."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PartitionSummary:
    """Sufficient statistics of a sample for Pitman-Yor posteriors.

    ``distinct`` holds the distinct values in order of first appearance and
    ``mult`` their multiplicities; ``occupancy[l-1]`` is the number of distinct
    values seen at least ``l`` times.
    """

    n: int
    distinct: np.ndarray
    mult: np.ndarray
    occupancy: np.ndarray

    @property
    def K(self) -> int:
        return len(self.distinct)

    def Z(self, l: int) -> int:
        """Occupancy count Z_{n,l}; zero beyond the largest multiplicity."""
        if l < 1:
            raise ValueError("occupancy index starts at 1")
        return int(self.occupancy[l - 1]) if l <= len(self.occupancy) else 0

    def sparse_occupancy(self):
        """Pairs (l, Z_l) with Z_l > 0."""
        return [(l + 1, int(z)) for l, z in enumerate(self.occupancy) if z > 0]


def as_dataset(values) -> np.ndarray:
    data = np.asarray(values, dtype=float).ravel()
    if data.size < 1:
        raise ConfigError("dataset must contain at least one value")
    if not np.all(np.isfinite(data)):
        raise ConfigError("dataset values must be finite")
    return data


def occupancy_from_mult(mult) -> np.ndarray:
    mult = np.asarray(mult, dtype=np.int64)
    counts = np.bincount(mult)
    # Z_l = #(mult >= l), l = 1..max(mult)
    return np.cumsum(counts[::-1])[::-1][1:]


def summarize(values) -> PartitionSummary:
    data = as_dataset(values)
    uniq, first, inverse, counts = np.unique(
        data, return_index=True, return_inverse=True, return_counts=True
    )
    order = np.argsort(first, kind="stable")
    distinct = uniq[order]
    mult = counts[order].astype(np.int64)
    return PartitionSummary(
        n=int(data.size), distinct=distinct, mult=mult, occupancy=occupancy_from_mult(mult)
    )


def summary_from_counts(mult, distinct=None) -> PartitionSummary:
    """Summary from block sizes alone; locations default to 0..K-1."""
    mult = np.asarray(mult, dtype=np.int64)
    if mult.size < 1 or np.any(mult < 1):
        raise ConfigError("multiplicities must be positive")
    if distinct is None:
        distinct = np.arange(mult.size, dtype=float)
    return PartitionSummary(
        n=int(mult.sum()),
        distinct=np.asarray(distinct, dtype=float),
        mult=mult,
        occupancy=occupancy_from_mult(mult),
    )


def ptilde(summary: PartitionSummary, f) -> float:
    """Average of f over the distinct observed values."""
    return float(np.mean(f(summary.distinct)))


def empirical(values, f) -> float:
    """Average of f over the raw sample."""
    return float(np.mean(f(as_dataset(values))))


def read_dataset_csv(path) -> np.ndarray:
    """Read a one-column CSV; a non-numeric first row is treated as a header."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                rows.append(float(row[0]))
            except ValueError:
                if i == 0:
                    continue
                raise ConfigError(f"{path}: non-numeric value {row[0]!r} on line {i + 1}")
    return as_dataset(rows)
