"""Support estimators and the exhaustive-search failure certificate.

Two estimators are provided:

* ``ml_estimate``: exhaustive search over all k-subsets for the one whose
  column span captures the most observation energy.  Optimal for this noise
  model, and exponentially expensive, so a subset guard refuses problems
  whose enumeration would be catastrophic.
* ``mc_estimate``: rank columns by |a_j' y| and keep the k best.  Linear
  time, and the classical cheap baseline the threshold curves in ``theory``
  describe.

The exhaustive search is organized around one instance-level precompute
(the Gram matrix A'A and the correlation vector A'y) plus batched Cholesky
solves over chunks of subsets, with a QR fallback and a per-subset
re-orthogonalization rescue for anything numerically suspicious.  The slow
robust path and the fast path agree to rounding on sane subsets; the fast
path exists only because desk-scale sweeps score billions of subsets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import GuardExceededError
from .linalg import DROP_TOL, MeasMatrix, column_span, projection_energy
from .model import ProblemInstance, SparseSignal

# Hard refusal above this many subsets (~160 MB just for the score array).
DEFAULT_SUBSET_GUARD = 20_000_000

# Subset tables up to this many rows are built once and cached per (n, k).
_TABLE_LIMIT = 2_000_000

# Streaming chunk: number of subsets scored per batched linear-algebra call.
_CHUNK = 16_384

# Two scores within this relative window of the maximum count as tied.
TIE_REL_TOL = 1e-12

__all__ = [
    "DEFAULT_SUBSET_GUARD",
    "TIE_REL_TOL",
    "EstimatorKind",
    "SupportEstimate",
    "CertificateReport",
    "ml_estimate",
    "mc_estimate",
    "ml_failure_certificate",
    "is_exact_recovery",
]


class EstimatorKind(str, Enum):
    ML = "ml"
    MC = "mc"


@dataclass(frozen=True)
class SupportEstimate:
    """The support an estimator chose, plus its scores.

    ``energy`` is the projection energy of the chosen subset (exhaustive
    estimator only); ``correlations`` are the selected |a_j' y| values in
    support order (correlation estimator only).  ``tie`` records whether the
    decision was degenerate: some other candidate scored within TIE_REL_TOL
    (relatively) of the winner, so the reported support is the tie-break
    choice, not a unique optimum.
    """

    kind: EstimatorKind
    support: tuple[int, ...]
    energy: float | None = None
    correlations: np.ndarray | None = None
    tie: bool = False

    def __post_init__(self):
        sup = self.support
        if len(sup) == 0:
            raise ValueError("estimate support must be nonempty")
        if any(b <= a for a, b in zip(sup, sup[1:])):
            raise ValueError(f"estimate support must be strictly increasing: {sup}")
        if self.energy is not None and not (self.energy >= 0.0):
            raise ValueError(f"projection energy must be nonnegative, got {self.energy}")
        if self.correlations is not None:
            c = np.asarray(self.correlations, dtype=np.float64)
            if c.shape != (len(sup),) or np.any(c < 0):
                raise ValueError("correlations must be one nonnegative value per support entry")
            if c is not self.correlations:
                object.__setattr__(self, "correlations", c)
            self.correlations.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of the exhaustive-failure certificate.

    When ``fired`` is true, swapping true column ``witness_in`` for off-support
    column ``witness_out`` raises the subset score by ``margin`` (> 0 beyond
    rounding tolerance), so exhaustive search cannot return the true support.
    """

    fired: bool
    witness_in: int | None = None
    witness_out: int | None = None
    margin: float | None = None


# ---------------------------------------------------------------------------
# subset enumeration


@lru_cache(maxsize=8)
def _subset_table(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) in lexicographic order, one row each."""
    table = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
        count=math.comb(n, k) * k,
    ).reshape(-1, k)
    table.setflags(write=False)
    return table


def _iter_subset_chunks(n: int, k: int):
    """Yield (offset, rows) covering all k-subsets in lexicographic order."""
    total = math.comb(n, k)
    if total <= _TABLE_LIMIT:
        yield 0, _subset_table(n, k)
        return
    combos = itertools.combinations(range(n), k)
    offset = 0
    while offset < total:
        want = min(_CHUNK, total - offset)
        rows = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, want)),
            dtype=np.intp,
            count=want * k,
        ).reshape(want, k)
        yield offset, rows
        offset += want


def _subset_at_rank(n: int, k: int, rank: int) -> tuple[int, ...]:
    """The rank-th k-subset in lexicographic order."""
    if math.comb(n, k) <= _TABLE_LIMIT:
        return tuple(int(v) for v in _subset_table(n, k)[rank])
    combo = next(itertools.islice(itertools.combinations(range(n), k), rank, None))
    return combo


# ---------------------------------------------------------------------------
# batched subset scoring


def _gram_energies(Gflat, Ay, colnorm, subsets, n, ydot):
    """Score subsets through Cholesky factors of their Gram blocks.

    Energy of subset J is b' G_J^{-1} b with b = (A' y)_J, computed by a
    Cholesky factorization fused with the forward substitution.  Both are
    hand-vectorized across the whole chunk: the blocks are tiny (k <= a few
    dozen), so the chunk axis carries all the parallelism, and everything is
    kept in flat contiguous arrays per (row, col) slot of the factor because
    strided slices of an (L, k, k) cube cost more than the arithmetic does.

    ``suspicious`` marks subsets whose factorization hit a pivot below the
    dependent-column threshold (rank deficient, not positive definite) or
    whose score ended out of bounds; callers must rescue those robustly.
    """
    L, k = subsets.shape
    cols = np.ascontiguousarray(subsets.T)
    scaled = cols * n
    suspicious = np.zeros(L, dtype=bool)
    low = [[None] * k for _ in range(k)]
    z = [None] * k
    energies = np.zeros(L)
    for i in range(k):
        d = Gflat[scaled[i] + cols[i]]
        for p in range(i):
            d -= low[i][p] * low[i][p]
        fl = DROP_TOL * colnorm[cols[i]]
        bad = d <= fl * fl
        if bad.any():
            suspicious |= bad
            d[bad] = 1.0  # placeholder pivot; these rows get recomputed anyway
        inv = 1.0 / np.sqrt(d)
        for j in range(i + 1, k):
            acc = Gflat[scaled[j] + cols[i]]
            for p in range(i):
                acc -= low[j][p] * low[i][p]
            low[j][i] = acc * inv
        acc = Ay[cols[i]]
        for p in range(i):
            acc -= low[i][p] * z[p]
        zi = acc * inv
        z[i] = zi
        energies += zi * zi
    suspicious |= ~np.isfinite(energies) | (energies > ydot * (1.0 + 1e-9))
    return energies, suspicious


def _mgs_energies(entries, colnorm, subsets, y):
    """Score subsets by batched modified Gram-Schmidt over their columns.

    Used when k >= m, where the Gram blocks are singular by construction.
    This is the robust orthonormalization itself (two projection passes,
    dependent columns dropped by zeroing them out) run across the whole
    chunk at once, so rank-deficient subsets need no per-subset rescue:
    a dropped column simply contributes no basis vector and no energy.
    """
    L, k = subsets.shape
    rows = np.ascontiguousarray(entries.T)
    basis: list[np.ndarray] = []
    energies = np.zeros(L)
    for j in range(k):
        picked = subsets[:, j]
        v = rows[picked].astype(np.float64, copy=True)
        for _ in range(2):
            for q in basis:
                v -= np.einsum("lm,lm->l", v, q)[:, None] * q
        nrm2 = np.einsum("lm,lm->l", v, v)
        fl = DROP_TOL * colnorm[picked]
        inv = np.zeros(L)
        keep = nrm2 > fl * fl
        inv[keep] = 1.0 / np.sqrt(nrm2[keep])
        v *= inv[:, None]
        basis.append(v)
        coef = v @ y
        energies += coef * coef
    return energies, np.zeros(L, dtype=bool)


def _score_all_subsets(A: MeasMatrix, y: np.ndarray, k: int) -> np.ndarray:
    """Projection energy of every k-subset, lexicographic order."""
    n, m = A.n, A.m
    ydot = float(y @ y)
    colnorm = np.linalg.norm(A.entries, axis=0)
    use_gram = k < m
    if use_gram:
        Gflat = np.ascontiguousarray(A.entries.T @ A.entries).ravel()
        Ay = A.entries.T @ y
    energies = np.empty(math.comb(n, k))
    for offset, rows in _iter_subset_chunks(n, k):
        if use_gram:
            vals, suspicious = _gram_energies(Gflat, Ay, colnorm, rows, n, ydot)
        else:
            vals, suspicious = _mgs_energies(A.entries, colnorm, rows, y)
        if suspicious.any():
            for p in np.nonzero(suspicious)[0]:
                vals[p] = projection_energy(A, [int(v) for v in rows[p]], y)
        energies[offset:offset + len(rows)] = vals
    return energies


def ml_estimate(instance: ProblemInstance,
                guard: int = DEFAULT_SUBSET_GUARD) -> SupportEstimate:
    """Exhaustive maximum-energy support search.

    Scores all C(n, k) subsets and returns the one capturing the most
    observation energy.  Ties (scores within TIE_REL_TOL of the maximum,
    relatively) are broken toward the lexicographically smallest subset and
    flagged on the returned estimate; with fully degenerate geometry, for
    example m <= k, every subset scores norm(y)^2 and the flag plus the
    deterministic tie-break make success a pure 1-in-C(n, k) lottery.

    Raises GuardExceededError when C(n, k) exceeds ``guard``.
    """
    k = instance.k
    n = instance.n
    total = math.comb(n, k)
    if total > guard:
        raise GuardExceededError(
            f"C({n}, {k}) = {total} subsets exceeds the search guard {guard}"
        )
    energies = _score_all_subsets(instance.matrix, instance.y, k)
    best = float(energies.max())
    tie_floor = best * (1.0 - TIE_REL_TOL)
    tied = np.nonzero(energies >= tie_floor)[0]
    winner = int(tied[0])
    support = _subset_at_rank(n, k, winner)
    return SupportEstimate(
        kind=EstimatorKind.ML,
        support=support,
        energy=projection_energy(instance.matrix, support, instance.y),
        tie=tied.size > 1,
    )


def mc_estimate(instance: ProblemInstance) -> SupportEstimate:
    """Keep the k columns most correlated with the observation.

    Ranks |a_j' y| descending with index-ascending tie-break (stable sort on
    the negated magnitudes), which makes the output deterministic even for
    exactly tied correlations; the tie flag reports whether the cut between
    rank k and rank k+1 fell on such a tie.
    """
    A, y, k = instance.matrix, instance.y, instance.k
    corr = np.abs(A.entries.T @ y)
    order = np.argsort(-corr, kind="stable")
    chosen = np.sort(order[:k])
    tie = k < A.n and bool(corr[order[k - 1]] == corr[order[k]])
    return SupportEstimate(
        kind=EstimatorKind.MC,
        support=tuple(int(j) for j in chosen),
        correlations=corr[chosen],
        tie=tie,
    )


def ml_failure_certificate(instance: ProblemInstance) -> CertificateReport:
    """Sound certificate that exhaustive search must miss the true support.

    For each true column i, with K the remaining k-1 true columns, compare
    the incremental gain of re-adding i against the gain of every off-support
    column j over the same K.  If some swap strictly wins (beyond a rounding
    margin of 1e-12 * norm(y)^2), the swapped subset outscores the truth and
    exhaustive search cannot return it.  One-sided by construction: it never
    fires on instances the exhaustive estimator gets right, but it can stay
    silent on failures it cannot see with single swaps.

    Columns numerically inside the span of K (squared residual norm at or
    below 1e-12) carry a 0/0 gain; they are scored as zero, which keeps the
    certificate sound: such a column cannot strictly dominate, and a truth
    column that adds nothing can still be beaten by a real positive gain.
    In particular m <= k-1 makes every gain zero and the certificate silent.
    """
    A, y = instance.matrix, instance.y
    support = instance.signal.support
    in_set = np.zeros(A.n, dtype=bool)
    in_set[list(support)] = True
    ydot = float(y @ y)
    margin = 1e-12 * ydot
    best: tuple[float, int, int] | None = None
    for i in support:
        keep = [j for j in support if j != i]
        span = column_span(A, keep)
        resid = A.entries - span.basis @ (span.basis.T @ A.entries)
        num = resid.T @ y
        den = np.einsum("ij,ij->j", resid, resid)
        gains = np.where(den > 1e-12, num ** 2 / np.where(den > 1e-12, den, 1.0), 0.0)
        checked = np.nonzero(~in_set)[0]
        gain_true = float(gains[i])
        gains_out = gains[checked]
        j_best = int(checked[np.argmax(gains_out)])
        lead = float(gains_out.max() - gain_true)
        if lead > margin and (best is None or lead > best[0]):
            best = (lead, int(i), j_best)
    if best is None:
        return CertificateReport(fired=False)
    return CertificateReport(fired=True, witness_in=best[1], witness_out=best[2],
                             margin=best[0])


def is_exact_recovery(estimate: SupportEstimate, truth: SparseSignal) -> bool:
    """Whether the estimated support equals the true one, as sets.

    Raises ValueError on dimension mismatch (different k, or estimate indices
    outside the truth's coordinate range): comparing such pairs silently
    would hide a wiring bug in the harness.
    """
    if estimate.k != truth.k:
        raise ValueError(
            f"estimate has {estimate.k} indices but the signal has {truth.k}"
        )
    if estimate.support[-1] >= truth.n or estimate.support[0] < 0:
        raise ValueError(
            f"estimate support {estimate.support} out of range for n={truth.n}"
        )
    return estimate.support == truth.support
