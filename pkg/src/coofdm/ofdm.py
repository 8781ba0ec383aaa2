"""OFDM framing, dispersion compensation and one-tap channel estimation.

Frame layout (rows are OFDM symbols, in transmission order)::

    preamble[0] ... preamble[P-1]  payload[0] ... payload[T-1]

Preamble symbols carry known QPSK on every active bin.  Payload symbols carry
data on the data bins and known QPSK pilots on the pilot bins.  All known
sequences come from fixed seeds so transmitter and receiver agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .fiber import FiberParams, SampledWaveform, angular_grid, dispersion_phase
from .modulation import QPSK

PREAMBLE_SEED = 0x0FD11
PILOT_SEED = 0x0FD12


@dataclass(frozen=True)
class OfdmConfig:
    ifft_size: int = 512
    n_data_subcarriers: int = 210
    n_pilots: int = 8
    cp_fraction: float = 0.02
    sample_rate: float = 25e9
    n_preamble_symbols: int = 2

    def validate(self) -> None:
        n_active = self.n_active
        if n_active % 2:
            raise ValueError("data + pilot subcarriers must be even to sit symmetrically around DC")
        if n_active > self.ifft_size - 1:
            raise ValueError(
                f"{n_active} active subcarriers do not fit an IFFT of {self.ifft_size} with DC unused")
        if self.cp_samples < 1:
            raise ValueError("cyclic prefix must be at least one sample")
        if self.n_pilots < 2 or self.n_pilots % 2:
            raise ValueError("n_pilots must be an even number >= 2")
        if self.n_preamble_symbols < 1:
            raise ValueError("at least one preamble symbol is needed for channel estimation")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __post_init__(self):
        self.validate()

    @property
    def n_active(self) -> int:
        return self.n_data_subcarriers + self.n_pilots

    @property
    def cp_samples(self) -> int:
        return math.floor(self.cp_fraction * self.ifft_size)

    @property
    def symbol_length(self) -> int:
        return self.ifft_size + self.cp_samples

    @property
    def subcarrier_spacing(self) -> float:
        return self.sample_rate / self.ifft_size

    @property
    def occupied_bandwidth(self) -> float:
        return (self.n_active + 1) * self.subcarrier_spacing

    @property
    def active_bins(self) -> np.ndarray:
        """Signed bin indices of all active subcarriers, lowest frequency first."""
        h = self.n_active // 2
        return np.concatenate((np.arange(-h, 0), np.arange(1, h + 1)))

    @property
    def pilot_positions(self) -> np.ndarray:
        """Positions of pilots within ``active_bins``, mirror-symmetric."""
        spacing = self.n_active // self.n_pilots
        left = spacing // 2 + spacing * np.arange(self.n_pilots // 2)
        return np.sort(np.concatenate((left, self.n_active - 1 - left)))

    @property
    def pilot_spacing(self) -> int:
        return self.n_active // self.n_pilots

    @property
    def data_positions(self) -> np.ndarray:
        mask = np.ones(self.n_active, dtype=bool)
        mask[self.pilot_positions] = False
        return np.flatnonzero(mask)

    @property
    def subcarrier_map(self) -> np.ndarray:
        """Signed bin index of every data subcarrier, in data order."""
        return self.active_bins[self.data_positions]

    @property
    def pilot_bins(self) -> np.ndarray:
        return self.active_bins[self.pilot_positions]

    @property
    def scale(self) -> float:
        """Bin amplitude scale giving unit average time-domain power."""
        return math.sqrt(self.ifft_size / self.n_active)


@dataclass
class OfdmFrame:
    payload: np.ndarray = field(repr=False)   # [T, n_data]
    pilots: np.ndarray = field(repr=False)    # [T, n_pilots]
    preamble: np.ndarray = field(repr=False)  # [P, n_active]

    @property
    def n_payload_symbols(self) -> int:
        return self.payload.shape[0]

    def check(self, cfg: OfdmConfig) -> None:
        t = self.payload.shape[0]
        if self.payload.shape != (t, cfg.n_data_subcarriers):
            raise ValueError(f"payload shape {self.payload.shape} != ({t}, {cfg.n_data_subcarriers})")
        if self.pilots.shape != (t, cfg.n_pilots):
            raise ValueError(f"pilot shape {self.pilots.shape} != ({t}, {cfg.n_pilots})")
        if self.preamble.shape != (cfg.n_preamble_symbols, cfg.n_active):
            raise ValueError(
                f"preamble shape {self.preamble.shape} != ({cfg.n_preamble_symbols}, {cfg.n_active})")


@dataclass
class ChannelEstimate:
    taps: np.ndarray            # [n_data]
    pilot_taps: np.ndarray      # [n_pilots]
    cpe_per_symbol: np.ndarray  # [T]


def _known_qpsk(seed: int, shape) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return QPSK.points[rng.integers(0, 4, size=shape)]


def known_preamble(cfg: OfdmConfig) -> np.ndarray:
    return _known_qpsk(PREAMBLE_SEED, (cfg.n_preamble_symbols, cfg.n_active))


def known_pilots(cfg: OfdmConfig, n_symbols: int) -> np.ndarray:
    return _known_qpsk(PILOT_SEED, (n_symbols, cfg.n_pilots))


def build_frame(payload: np.ndarray, cfg: OfdmConfig) -> OfdmFrame:
    payload = np.asarray(payload, dtype=complex).reshape(-1, cfg.n_data_subcarriers)
    return OfdmFrame(payload, known_pilots(cfg, payload.shape[0]), known_preamble(cfg))


def frame_grid(frame: OfdmFrame, cfg: OfdmConfig) -> np.ndarray:
    """All OFDM symbols as rows over the active bins."""
    body = np.empty((frame.n_payload_symbols, cfg.n_active), dtype=complex)
    body[:, cfg.data_positions] = frame.payload
    body[:, cfg.pilot_positions] = frame.pilots
    return np.vstack((frame.preamble, body))


def ofdm_modulate(frame: OfdmFrame, cfg: OfdmConfig) -> SampledWaveform:
    frame.check(cfg)
    active = frame_grid(frame, cfg)
    grid = np.zeros((active.shape[0], cfg.ifft_size), dtype=complex)
    grid[:, cfg.active_bins % cfg.ifft_size] = active * cfg.scale
    body = sfft.ifft(grid, axis=1, norm="ortho")
    cp = cfg.cp_samples
    symbols = np.hstack((body[:, cfg.ifft_size - cp:], body))
    return SampledWaveform(symbols.ravel(), cfg.sample_rate)


def ofdm_demodulate_grid(w: SampledWaveform, cfg: OfdmConfig) -> np.ndarray:
    """CP removal and FFT; returns every OFDM symbol over the active bins."""
    n = len(w.samples)
    if n % cfg.symbol_length:
        raise ValueError(
            f"waveform length {n} is not a multiple of the OFDM symbol length {cfg.symbol_length}")
    rows = w.samples.reshape(-1, cfg.symbol_length)[:, cfg.cp_samples:]
    spec = sfft.fft(rows, axis=1, norm="ortho")
    return spec[:, cfg.active_bins % cfg.ifft_size] / cfg.scale


def ofdm_demodulate(w: SampledWaveform, cfg: OfdmConfig) -> OfdmFrame:
    grid = ofdm_demodulate_grid(w, cfg)
    p = cfg.n_preamble_symbols
    body = grid[p:]
    return OfdmFrame(body[:, cfg.data_positions], body[:, cfg.pilot_positions], grid[:p])


def cd_compensate(w: SampledWaveform, params: FiberParams, total_length: float,
                  cfg: OfdmConfig | None = None) -> SampledWaveform:
    """Undo linear dispersion accumulated over ``total_length`` km.

    The all-pass filter is the exact inverse of the dispersive part of the
    fiber's linear operator (including the slope term).  ``cfg`` is accepted
    for call-site symmetry and is not needed.
    """
    if total_length < 0:
        raise ValueError("total_length must be >= 0")
    if total_length == 0:
        return w
    h = np.exp(-1j * dispersion_phase(angular_grid(w), params) * total_length)
    return w.with_samples(sfft.ifft(sfft.fft(w.samples) * h))


def estimate_channel(rx: OfdmFrame, cfg: OfdmConfig, tx_preamble: np.ndarray | None = None,
                     tx_pilots: np.ndarray | None = None) -> ChannelEstimate:
    """Preamble-averaged one-tap estimate plus pilot common-phase error.

    ``taps[k]`` is the mean over preamble symbols of rx/tx.  The common phase of
    payload symbol ``t`` is the angle of the pilot correlation after removing
    the pilot taps.
    """
    if tx_preamble is None:
        tx_preamble = known_preamble(cfg)
    if tx_pilots is None:
        tx_pilots = known_pilots(cfg, rx.n_payload_symbols)
    if rx.preamble.shape[0] == 0:
        raise ValueError("channel estimation needs at least one preamble symbol")
    if np.any(tx_preamble == 0) or np.any(tx_pilots == 0):
        raise ValueError("known preamble/pilot symbols must be non-zero")
    taps_all = np.mean(rx.preamble / tx_preamble, axis=0)
    pilot_taps = taps_all[cfg.pilot_positions]
    corr = np.sum(rx.pilots * np.conj(pilot_taps * tx_pilots), axis=1)
    cpe = np.angle(corr)
    return ChannelEstimate(taps_all[cfg.data_positions], pilot_taps, cpe)
