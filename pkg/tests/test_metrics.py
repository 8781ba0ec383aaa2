import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from coofdm.metrics import (
    count_ber,
    erfcinv,
    estimate_sinr,
    evm,
    per_subcarrier_q,
    q_ceiling_db,
    q_factor_db,
    q_from_counts,
)
from coofdm.modulation import demap_symbols, get_constellation, map_bits


def test_q_reference_points():
    assert q_factor_db(1e-3) == pytest.approx(9.80, abs=0.005)
    # BER of a unit-Q Gaussian decision: 0.5 erfc(1/sqrt 2)
    assert q_factor_db(0.5 * math.erfc(1 / math.sqrt(2))) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("x", [1.999, 1.5, 1.0 + 1e-9, 1.0, 0.9, 0.5, 0.2, 1e-2, 2e-3, 1e-4, 1e-6,
                               1e-9, 1e-12, 1e-15, 1e-20, 1e-50, 1e-100, 1e-200, 1e-300, 5e-3])
def test_erfcinv_matches_mpmath(x):
    # 1 - x must stay exact, hence the working precision
    with mpmath.workdps(400):
        ref = float(mpmath.erfinv(1 - mpmath.mpf(x)))
    assert erfcinv(x) == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_erfcinv_domain():
    for x in (0.0, 2.0, -1.0, 3.0):
        with pytest.raises(ValueError):
            erfcinv(x)


@given(st.floats(1e-12, 0.49), st.floats(1e-12, 0.49))
def test_q_monotone_in_ber(a, b):
    if a < b:
        # BERs a few ulp apart map to the same double; strictness needs a resolvable gap
        if b > a * (1 + 1e-9):
            assert q_factor_db(a) > q_factor_db(b)
        else:
            assert q_factor_db(a) >= q_factor_db(b)


def test_q_edges():
    assert q_factor_db(0.0) == math.inf
    with pytest.raises(ValueError, match="no Q-factor"):
        q_factor_db(0.5)
    assert q_from_counts(600, 1000) == -math.inf


def test_error_free_count_reports_ceiling():
    n = 200_000
    assert q_from_counts(0, n) == pytest.approx(q_factor_db(1 / (2 * n)))
    assert q_ceiling_db(n) > q_ceiling_db(n // 10)
    assert math.isfinite(q_from_counts(0, n))


def test_count_ber():
    tx = np.array([0, 1, 1, 0, 1, 0, 0, 0], dtype=np.uint8)
    rx = tx.copy()
    rx[[1, 6]] ^= 1
    assert count_ber(tx, rx) == (0.25, 2, 8)
    with pytest.raises(ValueError, match="length"):
        count_ber(tx, rx[:-1])
    with pytest.raises(ValueError, match="no bits"):
        count_ber([], [])


def test_aggregate_is_bit_weighted_mean_of_subcarriers(rng):
    tx = rng.integers(0, 2, (50, 210, 4), dtype=np.uint8)
    rx = tx.copy()
    flips = rng.random(tx.shape) < np.linspace(0, 0.05, 210)[None, :, None]
    rx[flips] ^= 1
    ber, _, _ = count_ber(tx, rx)
    per_sc_ber = np.count_nonzero(tx != rx, axis=(0, 2)) / (50 * 4)
    assert ber == pytest.approx(per_sc_ber.mean(), rel=1e-12)
    q = per_subcarrier_q(tx, rx)
    assert len(q) == 210
    assert q[0] == pytest.approx(q_ceiling_db(200))
    assert q[-1] < q[10]


def test_per_subcarrier_shape_checks(rng):
    with pytest.raises(ValueError, match="expected"):
        per_subcarrier_q(np.zeros((4, 4)), np.zeros((4, 4)))
    with pytest.raises(ValueError, match="shape"):
        per_subcarrier_q(np.zeros((2, 4, 2)), np.zeros((2, 4, 1)))


def test_evm_cases(rng):
    s = map_bits(rng.integers(0, 2, 4000, dtype=np.uint8), get_constellation("QAM16"))
    assert evm(s, s) == 0.0
    assert estimate_sinr(s, s) == math.inf
    assert evm(s, -s) == pytest.approx(200.0)
    with pytest.raises(ValueError, match="zero power"):
        evm(np.zeros(3), np.ones(3))


def test_sinr_estimate_recovers_injected_noise():
    rng = np.random.default_rng(5)
    c = get_constellation("QPSK")
    s = map_bits(rng.integers(0, 2, 2 * 10 ** 6, dtype=np.uint8), c)
    sigma = math.sqrt(10 ** (-20 / 10) / 2)
    r = s + sigma * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
    assert estimate_sinr(s, r) == pytest.approx(20.0, abs=0.1)


def test_qpsk_awgn_ber_matches_theory():
    rng = np.random.default_rng(9)
    c = get_constellation("QPSK")
    bits = rng.integers(0, 2, 2 * 10 ** 6, dtype=np.uint8)
    s = map_bits(bits, c)
    snr_db = 7.0
    sigma = math.sqrt(10 ** (-snr_db / 10) / 2)
    r = s + sigma * (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size))
    ber, _, _ = count_ber(bits, demap_symbols(r, c))
    # per-quadrature Q of Gray QPSK equals sqrt(SNR)
    assert q_factor_db(ber) == pytest.approx(snr_db, abs=0.05)
