"""External clustering-quality scores against ground truth: ARI and NMI."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts between two labelings of the same points."""

    counts: np.ndarray  # (|U|, |V|) int64
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    n: int


def contingency(truth, pred) -> ContingencyTable:
    """Exact co-occurrence table; label values may be arbitrary integers."""
    truth = np.asarray(truth, dtype=np.int64).ravel()
    pred = np.asarray(pred, dtype=np.int64).ravel()
    if truth.shape != pred.shape:
        raise ValueError(
            f"label vectors differ in length: {truth.shape[0]} vs {pred.shape[0]}"
        )
    if truth.size < 1:
        raise ValueError("label vectors must be nonempty")
    _, ti = np.unique(truth, return_inverse=True)
    _, pi = np.unique(pred, return_inverse=True)
    nu = ti.max() + 1
    nv = pi.max() + 1
    counts = np.bincount(ti * nv + pi, minlength=nu * nv).reshape(nu, nv)
    return ContingencyTable(
        counts=counts,
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        n=int(truth.size),
    )


def _pairs(x) -> int:
    """Sum over choose(x_i, 2) in exact integer arithmetic."""
    arr = np.asarray(x, dtype=object).ravel()
    return int(sum(int(v) * (int(v) - 1) // 2 for v in arr))


def ari(truth, pred) -> float:
    """Adjusted Rand index over pair counts; symmetric, in [-1, 1].

    Degenerate labelings without any distinguishing pairs (both constant,
    or a single point) score 1.0, with a warning.
    """
    table = contingency(truth, pred)
    index = _pairs(table.counts)
    sum_a = _pairs(table.row_marginals)
    sum_b = _pairs(table.col_marginals)
    total = table.n * (table.n - 1) // 2
    if total == 0:
        warnings.warn("single point: ARI is trivially 1", RuntimeWarning, stacklevel=2)
        return 1.0
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        # Both labelings are all-one-cluster or all-singletons: identical
        # partitions by construction.
        warnings.warn(
            "degenerate labelings: ARI is trivially 1", RuntimeWarning, stacklevel=2
        )
        return 1.0
    return float((index - expected) / (max_index - expected))


def _entropy(marginals: np.ndarray, n: int) -> float:
    p = marginals[marginals > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(truth, pred, average: str = "arithmetic") -> float:
    """Normalized mutual information, in [0, 1].

    Normalized by the arithmetic mean of the two label entropies by
    default ("geometric" is available for sensitivity checks). Two
    constant labelings score 1; if the normalizer vanishes otherwise,
    the score is 0.
    """
    if average not in ("arithmetic", "geometric"):
        raise ValueError(f"unknown average {average!r}")
    table = contingency(truth, pred)
    hu = _entropy(table.row_marginals, table.n)
    hv = _entropy(table.col_marginals, table.n)
    if hu == 0.0 and hv == 0.0:
        return 1.0

    nz = table.counts > 0
    pij = table.counts[nz] / table.n
    outer = (
        table.row_marginals[:, None] * table.col_marginals[None, :]
    )[nz] / (table.n * table.n)
    mi = float((pij * np.log(pij / outer)).sum())

    denom = (hu + hv) / 2.0 if average == "arithmetic" else np.sqrt(hu * hv)
    if denom == 0.0:
        return 0.0
    # Clip tiny negative MI from rounding.
    return float(min(max(mi, 0.0) / denom, 1.0))
