"""Target rank correlations between assumption columns.

Rank reordering against a correlated Gaussian score matrix
(Iman-Conover): marginals are preserved exactly because each output
column is a permutation of the input column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import norm_ppf
from .rng import RandomSource

PSD_TOL = -1e-10


class CorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationSpec:
    """Square symmetric matrix of target Spearman coefficients."""

    matrix: tuple  # tuple of tuples, row major

    @staticmethod
    def identity(k: int) -> "CorrelationSpec":
        return CorrelationSpec(tuple(tuple(1.0 if i == j else 0.0 for j in range(k))
                                     for i in range(k)))

    @staticmethod
    def from_pairs(k: int, pairs) -> "CorrelationSpec":
        """Expand {(i, j): rho} into a full matrix, zeros elsewhere."""
        m = np.eye(k)
        for (i, j), rho in pairs.items():
            m[i, j] = rho
            m[j, i] = rho
        return CorrelationSpec(tuple(tuple(row) for row in m))

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    @property
    def size(self) -> int:
        return len(self.matrix)

    def is_identity(self) -> bool:
        return np.array_equal(self.as_array(), np.eye(self.size))


def validate_correlation(spec: CorrelationSpec) -> None:
    """Raise CorrelationError unless symmetric, unit-diagonal, in-range, PSD."""
    m = spec.as_array()
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise CorrelationError("correlation matrix must be square")
    k = m.shape[0]
    if not np.allclose(np.diag(m), 1.0, rtol=0, atol=0):
        raise CorrelationError("correlation matrix diagonal must be 1")
    if not np.array_equal(m, m.T):
        raise CorrelationError("correlation matrix must be symmetric")
    if np.any(np.abs(m) > 1.0):
        bad = np.argwhere(np.abs(m) > 1.0)[0]
        raise CorrelationError(
            f"correlation entry ({bad[0]},{bad[1]}) = {m[bad[0], bad[1]]} outside [-1, 1]")
    eigenvalues = np.linalg.eigvalsh(m)
    if eigenvalues.min() < PSD_TOL:
        raise CorrelationError(
            f"correlation matrix is not positive semi-definite "
            f"(most negative eigenvalue {eigenvalues.min():.3e})")


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T = m; tolerant of zero eigenvalues."""
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


def _ranks(col: np.ndarray) -> np.ndarray:
    # ordinal ranks; ties broken by position, which is fine for scores
    return np.argsort(np.argsort(col, kind="stable"), kind="stable")


def induce_rank_correlation(columns: np.ndarray, spec: CorrelationSpec,
                            src: RandomSource, stream_offset: int = 0) -> np.ndarray:
    """Reorder each column so pairwise Spearman correlations approach spec.

    Every output column is a permutation of the matching input column.
    Gaussian scores are drawn from src at assumption indices
    stream_offset .. stream_offset + k - 1.
    """
    columns = np.asarray(columns, dtype=float)
    n, k = columns.shape
    if spec.size != k:
        raise CorrelationError(f"spec is {spec.size}x{spec.size}, data has {k} columns")
    validate_correlation(spec)
    if n < 10 * k:
        raise CorrelationError(f"need at least {10 * k} trials for {k} columns, got {n}")

    # Spearman target -> Pearson target for the normal scores.
    target = 2.0 * np.sin(np.pi * spec.as_array() / 6.0)
    np.fill_diagonal(target, 1.0)

    u = src.uniform_block(np.arange(n), np.arange(stream_offset, stream_offset + k))
    z = norm_ppf(u)
    z = (z - z.mean(axis=0)) / z.std(axis=0)
    # Remove the sample correlation of the scores, then impose the target.
    sample = (z.T @ z) / n
    l_sample = np.linalg.cholesky(sample)
    scores = z @ np.linalg.inv(l_sample).T @ _psd_sqrt(target).T

    out = np.empty_like(columns)
    for j in range(k):
        ranks = _ranks(scores[:, j])
        out[:, j] = np.sort(columns[:, j])[ranks]
    return out
