"""Sparse signals and noisy measurement instances.

A signal here is k nonzero values placed on a support of size k inside an
n-vector.  Signal strength is parameterized by two dimensionless knobs:

* ``snr``: total signal energy per measurement, norm(x)^2 / m, and
* ``mar``: the energy of the weakest nonzero relative to the per-entry
  average, min_j |x_j|^2 / (norm(x)^2 / k), always in (0, 1].

``make_signal`` inverts that parameterization with a two-level magnitude
profile (one deliberately weak entry, the rest equal), which pins the worst
case entry exactly at the requested ``mar`` instead of leaving it to chance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .linalg import MeasMatrix, gen_matrix

__all__ = [
    "SparseSignal",
    "ProblemInstance",
    "make_signal",
    "mar_of",
    "snr_of",
    "synthesize",
]


@dataclass(frozen=True)
class SparseSignal:
    """A k-sparse vector stored as (support, values).

    support is strictly increasing, values[i] sits at coordinate support[i],
    and every value is nonzero: the support is exact, not an upper bound.
    """

    n: int
    support: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"signal length must be positive, got n={self.n}")
        if len(self.support) == 0:
            raise ValueError("support must be nonempty")
        sup = tuple(int(j) for j in self.support)
        if any(b <= a for a, b in zip(sup, sup[1:])):
            raise ValueError(f"support must be strictly increasing, got {sup}")
        if sup[0] < 0 or sup[-1] >= self.n:
            raise ValueError(f"support index out of range for n={self.n}: {sup}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (len(sup),):
            raise ValueError(f"values shape {vals.shape} does not match support size {len(sup)}")
        if not np.all(np.isfinite(vals)) or np.any(vals == 0.0):
            raise ValueError("signal values must be finite and nonzero")
        object.__setattr__(self, "support", sup)
        if vals is not self.values:
            object.__setattr__(self, "values", vals)
        self.values.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.support)

    def dense(self) -> np.ndarray:
        """The full n-vector (a fresh writable copy)."""
        x = np.zeros(self.n)
        x[list(self.support)] = self.values
        return x


def mar_of(signal: SparseSignal) -> float:
    """min |x_j|^2 over the support, relative to the mean per-entry energy."""
    sq = signal.values ** 2
    return float(sq.min() * signal.k / sq.sum())


def snr_of(signal: SparseSignal, m: int) -> float:
    """Total signal energy per measurement for an m-row acquisition."""
    if m < 1:
        raise ValueError(f"measurement count must be positive, got m={m}")
    return float((signal.values ** 2).sum() / m)


def make_signal(n: int, k: int, m: int, snr: float, mar: float,
                rng: np.random.Generator,
                sign_rule: Literal["random", "all_positive"] = "random") -> SparseSignal:
    """Draw a signal hitting the requested (snr, mar) exactly.

    The support is uniform over k-subsets of range(n).  Magnitudes follow a
    two-level profile: one entry (at a uniformly random position within the
    support) carries energy mar * E / k where E = m * snr, and the remaining
    k - 1 entries split the rest equally.  Signs are i.i.d. uniform under
    ``sign_rule="random"`` and all +1 under ``"all_positive"``.

    For k = 1 the single entry is the minimum, so mar must be 1.
    """
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if m < 1:
        raise ValueError(f"measurement count must be positive, got m={m}")
    if not (snr > 0):
        raise ValueError(f"snr must be positive, got {snr}")
    if not (0 < mar <= 1):
        raise ValueError(f"mar must lie in (0, 1], got {mar}")
    if k == 1 and mar != 1:
        raise ValueError("k = 1 forces mar = 1; any other value is unsatisfiable")
    if sign_rule not in ("random", "all_positive"):
        raise ValueError(f"unknown sign rule {sign_rule!r}")

    energy = m * snr
    support = np.sort(rng.choice(n, size=k, replace=False))
    sq = np.empty(k)
    if k == 1:
        sq[0] = energy
    else:
        small = mar * energy / k
        big = (energy - small) / (k - 1)
        # mar <= 1 guarantees small <= big; keep the weak entry's slot random
        # so it is not always the lowest support index.
        sq[:] = big
        sq[int(rng.integers(k))] = small
    mags = np.sqrt(sq)
    if sign_rule == "random":
        mags *= rng.choice((-1.0, 1.0), size=k)
    return SparseSignal(n=n, support=tuple(int(j) for j in support), values=mags)


@dataclass(frozen=True)
class ProblemInstance:
    """One realized experiment: y = A x + d with everything retained.

    nominal_snr / nominal_mar are the knobs the instance was generated at;
    they agree with the realized values recomputed from the signal because
    the magnitude profile is exact, and construction double-checks that.
    seed_key, when present, records the derivation path of the generator
    that produced the randomness, for replay.
    """

    matrix: MeasMatrix
    signal: SparseSignal
    noise: np.ndarray
    y: np.ndarray
    nominal_snr: float
    nominal_mar: float
    seed_key: tuple[int, ...] | None = None

    def __post_init__(self):
        A, sig = self.matrix, self.signal
        if sig.n != A.n:
            raise ValueError(f"signal length {sig.n} does not match matrix n={A.n}")
        d = np.asarray(self.noise, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if d.shape != (A.m,) or y.shape != (A.m,):
            raise ValueError("noise/observation length does not match m")
        resid = y - (A.entries[:, list(sig.support)] @ sig.values + d)
        scale = max(1.0, float(np.abs(y).max()))
        if float(np.abs(resid).max()) > 1e-12 * scale:
            raise ValueError("observation is inconsistent with matrix, signal and noise")
        for name, nominal, realized in (
            ("snr", self.nominal_snr, snr_of(sig, A.m)),
            ("mar", self.nominal_mar, mar_of(sig)),
        ):
            if abs(nominal - realized) > 1e-9 * max(1.0, abs(nominal)):
                raise ValueError(
                    f"nominal {name}={nominal} disagrees with realized value {realized}"
                )
        if d is not self.noise:
            object.__setattr__(self, "noise", d)
        if y is not self.y:
            object.__setattr__(self, "y", y)
        self.noise.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def m(self) -> int:
        return self.matrix.m

    @property
    def k(self) -> int:
        return self.signal.k


def synthesize(signal: SparseSignal, m: int, rng: np.random.Generator,
               noiseless: bool = False,
               seed_key: tuple[int, ...] | None = None) -> ProblemInstance:
    """Draw a measurement matrix and noise for ``signal`` and observe it.

    Noise is unit-variance Gaussian per measurement.  ``noiseless=True``
    substitutes d = 0; that hook exists for oracle tests that need the clean
    subspace geometry, and the sweep harness never uses it.
    """
    A = gen_matrix(m, signal.n, rng)
    if noiseless:
        d = np.zeros(m)
    else:
        d = rng.standard_normal(m)
    y = A.entries[:, list(signal.support)] @ signal.values + d
    return ProblemInstance(
        matrix=A,
        signal=signal,
        noise=d,
        y=y,
        nominal_snr=snr_of(signal, m),
        nominal_mar=mar_of(signal),
        seed_key=seed_key,
    )
