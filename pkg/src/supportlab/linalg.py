"""Measurement matrices and subset projection primitives.

Everything downstream reduces to one question: how much of an observation
vector lives inside the span of a chosen set of matrix columns?  This module
owns that question.  It provides the measurement-matrix container, a modified
Gram-Schmidt orthonormalizer that tolerates dependent columns, the projection
energy ``norm(P_J y)^2`` and the incremental gain of adding one more column
to an existing span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateColumnError, GuardExceededError

# Columns whose residual norm falls below DROP_TOL times their original norm
# are treated as linearly dependent on the columns already accepted.
DROP_TOL = 1e-10

# Refuse to materialize matrices above this entry count (~400 MB of float64).
DEFAULT_ENTRY_GUARD = 50_000_000

__all__ = [
    "DROP_TOL",
    "DEFAULT_ENTRY_GUARD",
    "MeasMatrix",
    "ColumnSpan",
    "gen_matrix",
    "orthonormal_columns",
    "column_span",
    "projection_energy",
    "residual_correlation_gain",
]


@dataclass(frozen=True)
class MeasMatrix:
    """An m-by-n measurement matrix with rows = measurements.

    The entries array is frozen on construction; estimators cache Gram
    products per matrix and silent mutation would invalidate them.
    """

    m: int
    n: int
    entries: np.ndarray

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"matrix dimensions must be positive, got {self.m}x{self.n}")
        a = np.asarray(self.entries, dtype=np.float64)
        if a.shape != (self.m, self.n):
            raise ValueError(f"entries shape {a.shape} does not match ({self.m}, {self.n})")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        # Sanity check on the entry scale.  The ensemble this package studies
        # has per-entry variance 1/m; for matrices large enough that the
        # empirical variance concentrates, reject anything wildly off scale.
        if a.size >= 10_000:
            v = float(np.var(a)) * self.m
            if not (0.8 <= v <= 1.2):
                raise ValueError(
                    f"entry variance {v / self.m:.3g} is far from the expected 1/m = {1 / self.m:.3g}"
                )
        if a is not self.entries:
            object.__setattr__(self, "entries", a)
        self.entries.setflags(write=False)

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


def gen_matrix(m: int, n: int, rng: np.random.Generator,
               max_entries: int = DEFAULT_ENTRY_GUARD) -> MeasMatrix:
    """Draw an m-by-n matrix with i.i.d. N(0, 1/m) entries.

    The 1/m column-energy normalization keeps measurement power per sample
    fixed as m grows, which is the convention every threshold formula in
    ``theory`` assumes.
    """
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be positive, got m={m}, n={n}")
    if m * n > max_entries:
        raise GuardExceededError(
            f"m*n = {m * n} exceeds the entry guard {max_entries}; "
            "raise max_entries explicitly if this size is intended"
        )
    entries = rng.standard_normal((m, n)) / math.sqrt(m)
    return MeasMatrix(m=m, n=n, entries=entries)


@dataclass(frozen=True)
class ColumnSpan:
    """Orthonormal basis for the span of a column subset.

    ``indices`` are the accepted columns in increasing order and ``basis`` is
    an m-by-r matrix with orthonormal columns, r <= len(indices).  r drops
    below len(indices) exactly when the subset is numerically rank deficient;
    ``dropped`` records which input columns contributed nothing new.
    """

    indices: tuple[int, ...]
    basis: np.ndarray
    dropped: tuple[int, ...] = ()

    def __post_init__(self):
        self.basis.setflags(write=False)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def project(self, y: np.ndarray) -> np.ndarray:
        """Orthogonal projection of y onto the span."""
        q = self.basis
        return q @ (q.T @ y)


def orthonormal_columns(cols: np.ndarray, drop_tol: float = DROP_TOL):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Returns (basis, kept, dropped): an orthonormal basis of the column space
    of ``cols`` plus the positions (into the input) of the columns that were
    kept and those judged dependent.  A column is dropped when its residual
    against the basis built so far is below ``drop_tol`` times its original
    norm (columns that are exactly zero are dropped unconditionally).

    Two projection passes per column cost a second pass of flops but keep the
    basis orthonormal to working precision even for badly conditioned inputs,
    which the projection-energy identity tests rely on.
    """
    m, t = cols.shape
    basis = np.empty((m, min(m, t)), dtype=np.float64)
    kept: list[int] = []
    dropped: list[int] = []
    r = 0
    for j in range(t):
        v = cols[:, j].astype(np.float64, copy=True)
        orig = math.sqrt(float(v @ v))
        if orig == 0.0:
            dropped.append(j)
            continue
        for _ in range(2):
            if r:
                q = basis[:, :r]
                v -= q @ (q.T @ v)
        norm = math.sqrt(float(v @ v))
        if norm <= drop_tol * orig or r == m:
            dropped.append(j)
            continue
        basis[:, r] = v / norm
        kept.append(j)
        r += 1
    return basis[:, :r].copy(), kept, dropped


def _canonical_subset(n: int, J: Iterable[int]) -> tuple[int, ...]:
    idx = tuple(sorted(int(j) for j in J))
    if len(set(idx)) != len(idx):
        raise ValueError(f"column subset contains duplicates: {idx}")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"column index out of range for n={n}: {idx}")
    return idx


def column_span(A: MeasMatrix, J: Sequence[int]) -> ColumnSpan:
    """Orthonormal basis for span{a_j : j in J}.

    J may come in any order and is canonicalized to increasing order; the
    basis itself depends only on the set.  An empty J gives the trivial
    zero-dimensional span.
    """
    idx = _canonical_subset(A.n, J)
    if not idx:
        return ColumnSpan(indices=(), basis=np.zeros((A.m, 0)))
    basis, kept, dropped = orthonormal_columns(A.entries[:, idx])
    return ColumnSpan(
        indices=idx,
        basis=basis,
        dropped=tuple(idx[p] for p in dropped),
    )


def projection_energy(A: MeasMatrix, J: Sequence[int], y: np.ndarray) -> float:
    """norm(P_J y)^2, the energy of y captured by the span of columns J.

    This is the score the exhaustive estimator maximizes.  Computed through
    an orthonormal basis, so rank-deficient subsets are handled for free: a
    dependent column simply contributes no basis vector and no energy.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.m,):
        raise ValueError(f"observation shape {y.shape} does not match m={A.m}")
    span = column_span(A, J)
    coef = span.basis.T @ y
    return float(coef @ coef)


def residual_correlation_gain(A: MeasMatrix, K: Sequence[int], i: int, y: np.ndarray) -> float:
    """Energy gained by adjoining column i to the span of columns K.

    Equals |a_i' P_K_perp y|^2 / (a_i' P_K_perp a_i): the squared correlation
    of y with the part of a_i not already explained by K, normalized by that
    part's energy.  Satisfies

        projection_energy(A, K + [i], y) - projection_energy(A, K, y)

    exactly (up to rounding), which is the identity the tests lean on.

    Raises DegenerateColumnError when a_i' P_K_perp a_i <= 1e-12, i.e. when
    column i already lies in span(K) and the gain is 0/0.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.m,):
        raise ValueError(f"observation shape {y.shape} does not match m={A.m}")
    i = int(i)
    if i < 0 or i >= A.n:
        raise ValueError(f"column index {i} out of range for n={A.n}")
    idx = _canonical_subset(A.n, K)
    if i in idx:
        raise ValueError(f"column {i} is already in the conditioning set {idx}")
    span = column_span(A, idx)
    a = A.entries[:, i].astype(np.float64, copy=True)
    if span.rank:
        # two passes, same discipline as the orthonormalizer
        a -= span.project(a)
        a -= span.project(a)
    den = float(a @ a)
    if den <= 1e-12:
        raise DegenerateColumnError(
            f"column {i} is numerically inside span{idx}; residual energy {den:.3e}"
        )
    num = float(a @ y)
    return num * num / den
