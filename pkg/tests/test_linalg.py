"""Projection and residual-gain primitives."""

import math

import numpy as np
import pytest

from supportlab import (
    DegenerateColumnError,
    MeasMatrix,
    column_span,
    gen_matrix,
    projection_energy,
    residual_correlation_gain,
)
from supportlab.linalg import orthonormal_columns


def rng_for(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# matrix generation


def test_gen_matrix_shape_and_scaling():
    A = gen_matrix(100, 100, rng_for(1))
    assert A.entries.shape == (100, 100)
    # entries are N(0, 1/m): at m=n=100 the empirical mean of 10k draws
    # has standard error 1/sqrt(m * 10000) = 0.001, so +-0.01 is a 10 sigma net
    assert abs(A.entries.mean()) < 0.01
    assert abs(A.entries.var() * 100 - 1.0) < 0.1


def test_gen_matrix_deterministic_for_fixed_seed():
    A = gen_matrix(30, 17, rng_for(42))
    B = gen_matrix(30, 17, rng_for(42))
    assert np.array_equal(A.entries, B.entries)


def test_gen_matrix_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        gen_matrix(0, 5, rng_for())
    with pytest.raises(ValueError):
        gen_matrix(5, 0, rng_for())


def test_gen_matrix_entry_guard():
    with pytest.raises(Exception) as exc:
        gen_matrix(10_000, 10_000, rng_for(), max_entries=1_000_000)
    assert "guard" in str(exc.value).lower() or "entries" in str(exc.value).lower()


def test_meas_matrix_is_read_only():
    A = gen_matrix(5, 4, rng_for(3))
    with pytest.raises(ValueError):
        A.entries[0, 0] = 7.0


def test_meas_matrix_rejects_nonfinite():
    bad = np.ones((3, 3))
    bad[1, 2] = np.nan
    with pytest.raises(ValueError):
        MeasMatrix(3, 3, bad)


# ---------------------------------------------------------------------------
# projection energy


def test_projection_empty_set_is_zero():
    A = gen_matrix(6, 4, rng_for(5))
    y = rng_for(6).standard_normal(6)
    assert projection_energy(A, [], y) == 0.0


def test_projection_full_span_recovers_norm():
    # n >= m and generic columns: the span is all of R^m
    A = gen_matrix(4, 9, rng_for(7))
    y = rng_for(8).standard_normal(4)
    e = projection_energy(A, range(9), y)
    assert math.isclose(e, float(y @ y), rel_tol=1e-9)


def test_projection_single_column_on_itself():
    A = gen_matrix(10, 3, rng_for(9))
    a1 = A.entries[:, 1]
    e = projection_energy(A, [1], a1)
    assert math.isclose(e, float(a1 @ a1), rel_tol=1e-10)


def test_projection_energy_bounded_and_monotone():
    A = gen_matrix(8, 12, rng_for(11))
    y = rng_for(12).standard_normal(8)
    ynorm = float(y @ y)
    prev = 0.0
    # growing a nested chain of supports can only increase captured energy
    for size in range(1, 9):
        e = projection_energy(A, range(size), y)
        assert e <= ynorm * (1 + 1e-12)
        assert e >= prev - 1e-12 * ynorm
        prev = e


def test_projection_energy_order_invariant():
    A = gen_matrix(7, 10, rng_for(13))
    y = rng_for(14).standard_normal(7)
    e1 = projection_energy(A, [2, 5, 8], y)
    e2 = projection_energy(A, [8, 2, 5], y)
    assert math.isclose(e1, e2, rel_tol=1e-12)


def test_projection_energy_matches_lstsq():
    rng = rng_for(15)
    for _ in range(25):
        m = int(rng.integers(3, 9))
        n = int(rng.integers(2, 12))
        A = gen_matrix(m, n, rng)
        k = int(rng.integers(1, min(m, n) + 1))
        J = sorted(rng.choice(n, size=k, replace=False).tolist())
        y = rng.standard_normal(m)
        sub = A.entries[:, J]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        ref = float(np.sum((sub @ coef) ** 2))
        assert math.isclose(projection_energy(A, J, y), ref, abs_tol=1e-9)


def test_projection_handles_duplicate_directions():
    # two proportional columns: rank is 1, projection must not blow up
    entries = np.zeros((5, 3))
    entries[:, 0] = [1.0, 2.0, 0.0, 0.0, 1.0]
    entries[:, 1] = 2.0 * entries[:, 0]
    entries[:, 2] = [0.0, 0.0, 3.0, 0.0, 0.0]
    A = MeasMatrix(5, 3, entries)
    y = np.array([1.0, 0.0, 1.0, 1.0, 0.0])
    both = projection_energy(A, [0, 1], y)
    one = projection_energy(A, [0], y)
    assert math.isclose(both, one, rel_tol=1e-10)


def test_column_span_rejects_bad_indices():
    A = gen_matrix(5, 4, rng_for(17))
    with pytest.raises(ValueError):
        column_span(A, [0, 4])
    with pytest.raises(ValueError):
        column_span(A, [-1])
    with pytest.raises(ValueError):
        column_span(A, [1, 1])


def test_column_span_reconstructs_independent_columns():
    A = gen_matrix(9, 6, rng_for(19))
    span = column_span(A, [0, 2, 5])
    assert span.rank == 3
    assert span.dropped == ()
    for j in (0, 2, 5):
        a = A.entries[:, j]
        resid = a - span.project(a)
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(a)


def test_orthonormal_columns_basis_quality():
    rng = rng_for(21)
    cols = rng.standard_normal((12, 5))
    basis, kept, dropped = orthonormal_columns(cols)
    assert kept == [0, 1, 2, 3, 4] and dropped == []
    gram = basis.T @ basis
    assert np.max(np.abs(gram - np.eye(5))) < 1e-10


# ---------------------------------------------------------------------------
# residual correlation gain


def test_gain_empty_conditioning_set():
    A = gen_matrix(10, 4, rng_for(23))
    i = 2
    ai = A.entries[:, i]
    g = residual_correlation_gain(A, [], i, ai)
    assert math.isclose(g, float(ai @ ai), rel_tol=1e-10)


def test_gain_equals_projection_difference():
    # the gain of adding column i on top of K is the projection-energy increment
    rng = rng_for(25)
    for trial in range(20):
        A = gen_matrix(10, 5, rng)
        y = rng.standard_normal(10)
        K = [0, 3]
        for i in (1, 2, 4):
            g = residual_correlation_gain(A, K, i, y)
            inc = projection_energy(A, K + [i], y) - projection_energy(A, K, y)
            assert math.isclose(g, inc, abs_tol=1e-9)


def test_gain_zero_when_y_already_explained():
    A = gen_matrix(8, 4, rng_for(27))
    K = [0, 1]
    span = column_span(A, K)
    y = span.project(rng_for(28).standard_normal(8))
    for i in (2, 3):
        g = residual_correlation_gain(A, K, i, y)
        assert abs(g) <= 1e-9


def test_gain_degenerate_column_raises():
    entries = rng_for(29).standard_normal((6, 4))
    entries[:, 3] = entries[:, 0]
    A = MeasMatrix(6, 4, entries / math.sqrt(6))
    y = rng_for(30).standard_normal(6)
    with pytest.raises(DegenerateColumnError):
        residual_correlation_gain(A, [0], 3, y)


def test_gain_rejects_i_inside_k():
    A = gen_matrix(6, 4, rng_for(31))
    y = rng_for(32).standard_normal(6)
    with pytest.raises(ValueError):
        residual_correlation_gain(A, [1, 2], 2, y)
