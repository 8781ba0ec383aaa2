import numpy as np

from ..ofdm import ChannelEstimate


def linear_equalize(rx: np.ndarray, est: ChannelEstimate) -> np.ndarray:
    """One-tap zero-forcing plus per-symbol common-phase correction."""
    rx = np.asarray(rx)
    if rx.shape[-1] != est.taps.shape[0]:
        raise ValueError(f"{rx.shape[-1]} subcarriers but {est.taps.shape[0]} taps")
    if rx.shape[0] != est.cpe_per_symbol.shape[0]:
        raise ValueError(f"{rx.shape[0]} symbols but {est.cpe_per_symbol.shape[0]} CPE values")
    if np.any(est.taps == 0):
        raise ValueError("zero channel tap; the preamble is missing or blank")
    return rx / est.taps[None, :] * np.exp(-1j * est.cpe_per_symbol)[:, None]
