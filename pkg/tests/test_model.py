"""Signal construction, SNR/MAR accounting, instance synthesis."""

import math

import numpy as np
import pytest

from supportlab import (
    SparseSignal,
    make_signal,
    mar_of,
    gen_matrix,
    snr_of,
    synthesize,
)


def rng_for(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# SparseSignal and the two ratios


def test_signal_validation():
    SparseSignal(5, (0, 3), (1.0, -2.0))
    with pytest.raises(ValueError):
        SparseSignal(5, (3, 0), (1.0, 2.0))  # support must be sorted
    with pytest.raises(ValueError):
        SparseSignal(5, (0, 5), (1.0, 2.0))  # out of range
    with pytest.raises(ValueError):
        SparseSignal(5, (0, 1), (1.0, 0.0))  # zero on-support value
    with pytest.raises(ValueError):
        SparseSignal(5, (0, 1), (1.0,))  # length mismatch


def test_mar_examples():
    assert mar_of(SparseSignal(3, (0, 1, 2), (1.0, 1.0, 1.0))) == pytest.approx(1.0)
    # squares 9 and 16, total 25, k=2: min / (total/k) = 9 / 12.5
    assert mar_of(SparseSignal(4, (1, 3), (3.0, 4.0))) == pytest.approx(0.72)
    assert mar_of(SparseSignal(2, (0, 1), (-2.0, 2.0))) == pytest.approx(1.0)


def test_mar_is_scale_free():
    sig = SparseSignal(6, (0, 2, 5), (1.0, -2.0, 0.5))
    scaled = SparseSignal(6, (0, 2, 5), (7.0, -14.0, 3.5))
    assert mar_of(sig) == pytest.approx(mar_of(scaled), rel=1e-12)
    assert 0.0 < mar_of(sig) <= 1.0


def test_snr_examples():
    sig = SparseSignal(4, (0, 1), (2.0, 6.0))  # energy 40
    assert snr_of(sig, 10) == pytest.approx(4.0)
    # scaling values by c multiplies snr by c^2
    scaled = SparseSignal(4, (0, 1), (6.0, 18.0))
    assert snr_of(scaled, 10) == pytest.approx(36.0)


# ---------------------------------------------------------------------------
# make_signal


def test_make_signal_flat_profile():
    sig = make_signal(5, 2, 10, 1.0, 1.0, rng_for(1))
    squares = np.sort(np.array(sig.values) ** 2)
    assert np.allclose(squares, [5.0, 5.0])
    assert snr_of(sig, 10) == pytest.approx(1.0)
    assert mar_of(sig) == pytest.approx(1.0)


def test_make_signal_tilted_profile():
    sig = make_signal(20, 5, 10, 10.0, 0.5, rng_for(2))
    squares = np.sort(np.array(sig.values) ** 2)
    # total energy m*snr = 100; small slot mar*E/k = 10; the rest split evenly
    assert squares[0] == pytest.approx(10.0)
    assert np.allclose(squares[1:], 22.5)
    assert mar_of(sig) == pytest.approx(0.5, rel=1e-12)
    assert snr_of(sig, 10) == pytest.approx(10.0, rel=1e-12)


def test_make_signal_k1():
    sig = make_signal(5, 1, 8, 2.0, 1.0, rng_for(3))
    assert sig.values[0] ** 2 == pytest.approx(16.0)
    assert mar_of(sig) == pytest.approx(1.0)


def test_make_signal_small_slot_varies():
    # the below-average coordinate lands on a random slot, not always the first
    seen = set()
    for seed in range(40):
        sig = make_signal(10, 4, 5, 1.0, 0.4, rng_for(seed))
        squares = np.array(sig.values) ** 2
        seen.add(int(np.argmin(squares)))
    assert len(seen) > 1


def test_make_signal_sign_rule():
    sig = make_signal(12, 6, 5, 1.0, 0.7, rng_for(4), sign_rule="all_positive")
    assert all(v > 0 for v in sig.values)
    signs = set()
    for seed in range(30):
        s = make_signal(12, 6, 5, 1.0, 0.7, rng_for(seed))
        signs.update(np.sign(s.values).tolist())
    assert signs == {-1.0, 1.0}


def test_make_signal_support_uniform():
    # every k-subset should be equally likely; check per-index inclusion
    n, k, draws = 6, 2, 50_000
    rng = rng_for(5)
    counts = np.zeros(n)
    for _ in range(draws):
        sig = make_signal(n, k, 4, 1.0, 1.0, rng)
        counts[list(sig.support)] += 1
    p = k / n
    se = math.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(counts / draws - p) < 3 * se + 1e-12)


def test_make_signal_parameter_validation():
    with pytest.raises(ValueError):
        make_signal(5, 2, 10, 1.0, 0.0, rng_for())
    with pytest.raises(ValueError):
        make_signal(5, 2, 10, 1.0, 1.5, rng_for())
    with pytest.raises(ValueError):
        make_signal(5, 1, 10, 1.0, 0.5, rng_for())  # k=1 forces mar == 1
    with pytest.raises(ValueError):
        make_signal(5, 6, 10, 1.0, 1.0, rng_for())
    with pytest.raises(ValueError):
        make_signal(5, 2, 10, -1.0, 1.0, rng_for())


def test_make_signal_small_never_exceeds_large():
    rng = rng_for(6)
    for _ in range(50):
        mar = float(rng.uniform(0.05, 1.0))
        sig = make_signal(15, 5, 8, 2.0, mar, rng)
        squares = np.sort(np.array(sig.values) ** 2)
        assert squares[0] <= squares[-1] + 1e-12
        assert mar_of(sig) == pytest.approx(mar, rel=1e-9)


# ---------------------------------------------------------------------------
# synthesize


def test_synthesize_noiseless_single_column():
    rng = rng_for(7)
    sig = make_signal(6, 1, 9, 3.0, 1.0, rng)
    inst = synthesize(sig, 9, rng, noiseless=True)
    j = sig.support[0]
    expect = sig.values[0] * inst.matrix.entries[:, j]
    assert np.allclose(inst.y, expect, rtol=0, atol=1e-12)
    assert not inst.noise.any()


def test_synthesize_deterministic():
    a = synthesize(make_signal(8, 3, 5, 2.0, 0.8, rng_for(8)), 5, rng_for(9))
    b = synthesize(make_signal(8, 3, 5, 2.0, 0.8, rng_for(8)), 5, rng_for(9))
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.matrix.entries, b.matrix.entries)


def test_synthesize_realized_snr_near_nominal():
    # E ||Ax||^2 / m = snr under the 1/m column scaling; average over instances
    m, snr, runs = 200, 4.0, 500
    rng = rng_for(10)
    acc = 0.0
    for _ in range(runs):
        sig = make_signal(30, 5, m, snr, 1.0, rng)
        inst = synthesize(sig, m, rng, noiseless=True)
        acc += float(inst.y @ inst.y) / m
    assert abs(acc / runs - snr) < 0.1 * snr


def test_synthesize_noise_changes_y():
    rng = rng_for(11)
    sig = make_signal(10, 2, 12, 5.0, 1.0, rng)
    noisy = synthesize(sig, 12, rng_for(12))
    clean = synthesize(sig, 12, rng_for(12), noiseless=True)
    assert np.array_equal(noisy.matrix.entries, clean.matrix.entries)
    assert not np.allclose(noisy.y, clean.y)
    assert np.allclose(noisy.y, clean.y + noisy.noise)


def test_instance_consistency_guard():
    rng = rng_for(13)
    sig = make_signal(7, 2, 6, 1.0, 1.0, rng)
    inst = synthesize(sig, 6, rng)
    with pytest.raises(Exception):
        type(inst)(
            matrix=inst.matrix,
            signal=inst.signal,
            noise=inst.noise,
            y=inst.y + 1.0,  # breaks y = Ax + d
            nominal_snr=inst.nominal_snr,
            nominal_mar=inst.nominal_mar,
            seed_key=inst.seed_key,
        )
