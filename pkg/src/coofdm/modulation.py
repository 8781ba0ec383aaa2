"""Bit sources and constellation mapping.

Gray labelling used throughout (bit 0 is the most significant bit of a label):

QPSK      b0 -> I, b1 -> Q, with 0 -> +1 and 1 -> -1, scaled by 1/sqrt(2).
16-QAM    b0 b1 -> I, b2 b3 -> Q, each pair mapped 00 -> +3, 01 -> +1,
          11 -> -1, 10 -> -3, scaled by 1/sqrt(10).

Point ``i`` of a constellation carries the label whose integer value is ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import K, PRBS19_MASK, PRBS19_TAPS

PRBS19_PERIOD = (1 << 19) - 1

_PAM2 = {(0,): 1.0, (1,): -1.0}
_PAM4 = {(0, 0): 3.0, (0, 1): 1.0, (1, 1): -1.0, (1, 0): -3.0}


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power constellation with Gray bit labels."""

    name: str
    points: np.ndarray = field(repr=False)
    bit_labels: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))


def _build(name: str, axis_bits: int, pam: dict, scale: float) -> Constellation:
    order = 1 << (2 * axis_bits)
    labels = np.array(
        [[(i >> (2 * axis_bits - 1 - b)) & 1 for b in range(2 * axis_bits)] for i in range(order)],
        dtype=np.uint8,
    )
    points = np.array(
        [pam[tuple(lab[:axis_bits])] + 1j * pam[tuple(lab[axis_bits:])] for lab in labels]
    ) / scale
    return Constellation(name, points, labels)


QPSK = _build("QPSK", 1, _PAM2, np.sqrt(2.0))
QAM16 = _build("QAM16", 2, _PAM4, np.sqrt(10.0))

_BY_NAME = {"QPSK": QPSK, "QAM16": QAM16, "16QAM": QAM16, "16-QAM": QAM16}


def get_constellation(name: str) -> Constellation:
    try:
        return _BY_NAME[name.upper()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; expected QPSK or QAM16") from None


@dataclass(frozen=True)
class PrbsState:
    """State of the 19-bit Fibonacci LFSR (x^19 + x^18 + x^17 + x^14 + 1).

    The register is read out from bit 18 and shifted left; feedback enters
    bit 0.
    """

    register: int = PRBS19_MASK
    taps: tuple = PRBS19_TAPS

    def __post_init__(self):
        if not 0 < self.register <= PRBS19_MASK:
            raise ValueError("PRBS register must be a non-zero 19-bit value")


def prbs_generate(state: PrbsState, n: int) -> tuple[np.ndarray, PrbsState]:
    """Return ``n`` PRBS19 bits and the state to continue the stream from."""
    if state.register == 0:
        raise ValueError("all-zero PRBS seed locks the register")
    if n < 0:
        raise ValueError("n must be non-negative")
    bits, reg = K.lfsr(int(state.register), int(n))
    return np.asarray(bits, dtype=np.uint8), PrbsState(int(reg), state.taps)


def seed_to_prbs_state(seed: int) -> PrbsState:
    """Deterministic non-zero register from an arbitrary integer seed."""
    reg = (int(seed) * 0x9E3779B1 + 0x5A5A5) % PRBS19_MASK
    return PrbsState(reg + 1)


def map_bits(bits, c: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = c.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"{bits.size} bits is not a multiple of {k} bits/symbol for {c.name}")
    weights = 1 << np.arange(k - 1, -1, -1)
    idx = bits.reshape(-1, k) @ weights
    return c.points[idx]


def decide(symbols, c: Constellation) -> np.ndarray:
    """Indices of the nearest constellation points (ties go to the lowest index)."""
    s = np.ascontiguousarray(np.asarray(symbols, dtype=np.complex128).ravel())
    return np.asarray(K.nearest(s, c.points))


def demap_symbols(symbols, c: Constellation) -> np.ndarray:
    """Hard-decision demapping to a flat bit array."""
    return c.bit_labels[decide(symbols, c)].ravel()
