"""Error counting and quality figures (BER, Q-factor, EVM, SINR)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class QualityReport:
    ber: float
    q_factor_db: float
    n_bits_counted: int
    n_errors: int
    evm_percent: float
    per_subcarrier_q: list = field(default_factory=list, repr=False)
    q_is_ceiling: bool = False

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop("per_subcarrier_q")
        return row


def count_ber(tx_bits, rx_bits) -> tuple[float, int, int]:
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.shape != rx.shape:
        raise ValueError(f"bit sequences differ in length ({tx.size} vs {rx.size})")
    if tx.size == 0:
        raise ValueError("no bits to count")
    n_err = int(np.count_nonzero(tx != rx))
    return n_err / tx.size, n_err, int(tx.size)


def erfcinv(x: float) -> float:
    """Inverse complementary error function on (0, 2).

    Bisection on ``math.erfc`` brackets the root, then Newton steps on
    ``log(erfc(y))`` polish it, which keeps relative accuracy for tiny ``x``.
    """
    if not 0.0 < x < 2.0:
        raise ValueError("erfcinv is defined on (0, 2)")
    if x > 1.0:
        return -erfcinv(2.0 - x)
    if x == 1.0:
        return 0.0
    lo, hi = 0.0, 27.3
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if math.erfc(mid) > x:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    log_x = math.log(x)
    for _ in range(4):
        e = math.erfc(y)
        if e <= 0.0:
            break
        # d/dy log(erfc(y)) = -2/sqrt(pi) * exp(-y^2) / erfc(y)
        slope = -2.0 / math.sqrt(math.pi) * math.exp(-y * y) / e
        y -= (math.log(e) - log_x) / slope
    return y


def q_factor_db(ber: float) -> float:
    """20*log10(sqrt(2) * erfcinv(2*BER)); +inf for an error-free count."""
    if ber <= 0:
        return math.inf
    if ber >= 0.5:
        raise ValueError(f"BER {ber} >= 0.5 has no Q-factor (inverted or random decisions)")
    return 20 * math.log10(math.sqrt(2) * erfcinv(2 * ber))


def q_ceiling_db(n_bits: int) -> float:
    """Finite Q reported for an error-free count: the Q of BER = 1/(2 n_bits)."""
    return q_factor_db(1.0 / (2 * n_bits))


def q_from_counts(n_errors: int, n_bits: int) -> float:
    if n_errors == 0:
        return q_ceiling_db(n_bits)
    ber = n_errors / n_bits
    if ber >= 0.5:
        return -math.inf
    return q_factor_db(ber)


def per_subcarrier_q(tx_bits, rx_bits) -> list:
    """Q-factor per data subcarrier from ``[symbols, subcarriers, bits]`` arrays."""
    tx = np.asarray(tx_bits)
    rx = np.asarray(rx_bits)
    if tx.shape != rx.shape:
        raise ValueError(f"bit arrays differ in shape ({tx.shape} vs {rx.shape})")
    if tx.ndim != 3:
        raise ValueError("expected [symbols, subcarriers, bits] arrays")
    errors = np.count_nonzero(tx != rx, axis=(0, 2))
    n_bits = tx.shape[0] * tx.shape[2]
    return [q_from_counts(int(e), n_bits) for e in errors]


def evm(tx_symbols, rx_symbols) -> float:
    """RMS error vector magnitude in percent of the reference RMS."""
    tx = np.asarray(tx_symbols).ravel()
    rx = np.asarray(rx_symbols).ravel()
    if tx.shape != rx.shape:
        raise ValueError("symbol arrays differ in length")
    ref = np.sqrt(np.mean(np.abs(tx) ** 2))
    if ref == 0:
        raise ValueError("reference symbols have zero power")
    return 100.0 * np.sqrt(np.mean(np.abs(rx - tx) ** 2)) / ref


def estimate_sinr(tx_symbols, rx_symbols) -> float:
    e = evm(tx_symbols, rx_symbols) / 100.0
    if e == 0:
        return math.inf
    return -20 * math.log10(e)
