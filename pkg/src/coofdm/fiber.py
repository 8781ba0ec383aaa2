"""Single-polarization fiber link: SSFM propagation, EDFAs, converters, WDM.

Unit conventions
----------------
* Field samples are complex amplitudes with ``|a|**2`` in watts.
* Lengths are in km, so ``beta2`` is stored in s^2/km and ``beta3`` in s^3/km.
* Spectra follow numpy's FFT sign convention, under which linear propagation
  over ``z`` km multiplies the spectrum by
  ``exp(1j*(beta2/2*w**2 - beta3/6*w**3)*z - alpha/2*z)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from ._kernels import K

C_LIGHT = 299_792_458.0
PLANCK = 6.62607015e-34


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray = field(repr=False)
    sample_rate: float
    center_freq_offset: float = 0.0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self):
        return len(self.samples)

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> "SampledWaveform":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class FiberParams:
    gamma: float = 1.1                 # 1/(W km)
    dispersion_D: float = 16.0         # ps/(nm km)
    dispersion_slope_S: float = 0.06   # ps/(nm^2 km)
    loss_alpha: float = 0.2            # dB/km
    pmd_coeff: float = 0.1             # ps/sqrt(km), stored only
    center_wavelength: float = 1550.2  # nm

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.loss_alpha < 0:
            raise ValueError("loss_alpha must be >= 0")

    @property
    def wavelength_m(self) -> float:
        return self.center_wavelength * 1e-9

    @property
    def optical_freq(self) -> float:
        return C_LIGHT / self.wavelength_m

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in s^2/km."""
        lam = self.wavelength_m
        d_si = self.dispersion_D * 1e-6  # s/m^2
        return -d_si * lam ** 2 / (2 * math.pi * C_LIGHT) * 1e3

    @property
    def beta3(self) -> float:
        """Third-order dispersion in s^3/km."""
        lam = self.wavelength_m
        d_si = self.dispersion_D * 1e-6
        s_si = self.dispersion_slope_S * 1e3  # s/m^3
        return (lam / (2 * math.pi * C_LIGHT)) ** 2 * (lam ** 2 * s_si + 2 * lam * d_si) * 1e3

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/km."""
        return self.loss_alpha * math.log(10) / 10

    def linear(self) -> "FiberParams":
        return replace(self, gamma=0.0)


@dataclass(frozen=True)
class AmplifierParams:
    gain_db: float = 20.0
    noise_figure_db: float = 5.5
    optical_freq: float = C_LIGHT / 1550.2e-9

    def __post_init__(self):
        if self.gain_db < 0:
            raise ValueError("amplifier gain must be >= 0 dB")

    @property
    def gain(self) -> float:
        return 10 ** (self.gain_db / 10)

    @property
    def ase_psd(self) -> float:
        """One-sided single-polarization ASE PSD in W/Hz, with n_sp = NF/2."""
        nf = 10 ** (self.noise_figure_db / 10)
        return nf / 2 * (self.gain - 1) * PLANCK * self.optical_freq


@dataclass(frozen=True)
class LinkPlan:
    n_spans: int = 20
    span_length: float = 100.0       # km
    launch_power_dbm: float = 0.0
    amplifier: AmplifierParams | None = None  # None -> gain matched to span loss
    step_km: float = 0.1

    def __post_init__(self):
        if self.n_spans < 0:
            raise ValueError("n_spans must be >= 0")
        if self.span_length <= 0:
            raise ValueError("span_length must be > 0")
        if self.step_km <= 0:
            raise ValueError("step_km must be > 0")

    @property
    def total_length(self) -> float:
        return self.n_spans * self.span_length

    @property
    def launch_power_w(self) -> float:
        return 1e-3 * 10 ** (self.launch_power_dbm / 10)

    def amplifier_for(self, p: FiberParams) -> AmplifierParams:
        if self.amplifier is not None:
            return self.amplifier
        return AmplifierParams(gain_db=p.loss_alpha * self.span_length, optical_freq=p.optical_freq)


@dataclass(frozen=True)
class ConverterParams:
    bits: int = 10
    clipping_ratio_db: float = 13.0

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("converter resolution must be >= 1 bit")


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def angular_grid(w: SampledWaveform) -> np.ndarray:
    """Angular frequency of each FFT bin, relative to the fiber's reference."""
    f = sfft.fftfreq(len(w.samples), 1.0 / w.sample_rate) + w.center_freq_offset
    return 2 * np.pi * f


def dispersion_phase(omega: np.ndarray, p: FiberParams) -> np.ndarray:
    """Dispersive phase accumulated per km at each angular frequency."""
    return p.beta2 / 2 * omega ** 2 - p.beta3 / 6 * omega ** 3


def _check_oversampling(spec: np.ndarray) -> None:
    n = len(spec)
    power = np.abs(spec) ** 2
    total = power.sum()
    if total == 0:
        return
    outer = power[n // 4: n - n // 4].sum()
    if outer > 1e-3 * total:
        warnings.warn(
            f"{outer / total:.1%} of the signal energy lies in the outer half of the "
            "simulation band; nonlinear products will alias",
            RuntimeWarning,
            stacklevel=3,
        )


def ssfm_propagate(w: SampledWaveform, p: FiberParams, length: float, step_km: float,
                   direction: str = "forward", check_band: bool = True) -> SampledWaveform:
    """Symmetric split-step Fourier solution of the NLSE over ``length`` km.

    The step count is ``ceil(length / step_km)`` with equal steps.  Each step is
    half a linear step, a full nonlinear phase rotation using the effective
    length of the step, and another half linear step; adjacent half steps are
    merged.  ``direction='backward'`` negates gamma, the dispersion and the
    loss, which is the exact inverse of a forward run with the same steps.
    ``check_band`` warns when the input leaves too little spectral headroom
    for the nonlinear products.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if length < 0:
        raise ValueError("length must be >= 0")
    if step_km <= 0:
        raise ValueError("step_km must be > 0")
    if length == 0:
        return w
    if step_km > length * (1 + 1e-12):
        raise ValueError(f"step {step_km} km is larger than the length {length} km")

    n_steps = max(1, math.ceil(length / step_km - 1e-9))
    dz = length / n_steps
    sign = 1.0 if direction == "forward" else -1.0
    alpha = p.alpha
    lin = sign * (1j * dispersion_phase(angular_grid(w), p) - alpha / 2)
    half = np.exp(lin * dz / 2)
    full = half * half
    dz_eff = dz if alpha == 0 else 2 * math.sinh(alpha * dz / 2) / alpha
    coef = sign * p.gamma * dz_eff

    spec = sfft.fft(w.samples)
    if p.gamma != 0 and check_band:
        _check_oversampling(spec)
    spec *= half
    for i in range(n_steps):
        if coef != 0:
            a = sfft.ifft(spec, overwrite_x=True)
            K.nonlinear_phase(a, coef)
            spec = sfft.fft(a, overwrite_x=True)
        spec *= full if i < n_steps - 1 else half
    return w.with_samples(sfft.ifft(spec, overwrite_x=True))


def edfa_amplify(w: SampledWaveform, a: AmplifierParams, rng: np.random.Generator | None,
                 noise: bool = True) -> SampledWaveform:
    """Scale the field by sqrt(G) and add circular Gaussian ASE over the full band."""
    out = w.samples * math.sqrt(a.gain)
    var = a.ase_psd * w.sample_rate
    if noise and var > 0:
        if rng is None:
            raise ValueError("a seeded generator is required for ASE noise")
        n = len(out)
        out = out + math.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return w.with_samples(out)


def propagate_link(w: SampledWaveform, plan: LinkPlan, p: FiberParams, nl_on: bool = True,
                   noise_on: bool = True, rng: np.random.Generator | None = None) -> SampledWaveform:
    """Launch-power scaling, then fiber span + EDFA for every span.

    ``w`` is expected at unit average power per channel.
    """
    fiber = p if nl_on else p.linear()
    amp = plan.amplifier_for(p)
    out = w.with_samples(w.samples * math.sqrt(plan.launch_power_w))
    for i in range(plan.n_spans):
        # ASE fills the whole band after the first amplifier; only the launched signal is checked
        out = ssfm_propagate(out, fiber, plan.span_length, min(plan.step_km, plan.span_length),
                             check_band=i == 0)
        out = edfa_amplify(out, amp, rng, noise=noise_on)
    return out


# ---------------------------------------------------------------------------
# transceiver impairments
# ---------------------------------------------------------------------------

def clip_level(samples: np.ndarray, clipping_ratio_db: float) -> float:
    """Clip amplitude for one quadrature, relative to the per-quadrature rms."""
    rms = math.sqrt(np.mean(samples.real ** 2 + samples.imag ** 2) / 2)
    return rms * 10 ** (clipping_ratio_db / 20)


def dac_adc(w: SampledWaveform, c: ConverterParams) -> SampledWaveform:
    """Clip I and Q independently, then quantize each to 2**bits uniform levels.

    The levels span [-A_clip, +A_clip] inclusive with no level at zero
    (mid-rise).
    """
    a_clip = clip_level(w.samples, c.clipping_ratio_db)
    if a_clip == 0:
        return w
    re = K.quantize(np.ascontiguousarray(w.samples.real), a_clip, c.bits)
    im = K.quantize(np.ascontiguousarray(w.samples.imag), a_clip, c.bits)
    return w.with_samples(re + 1j * im)


def apply_phase_noise(w: SampledWaveform, linewidth_hz: float,
                      rng: np.random.Generator | None) -> SampledWaveform:
    """Wiener laser phase noise with increment variance 2*pi*linewidth/fs."""
    if linewidth_hz < 0:
        raise ValueError("linewidth must be >= 0")
    if linewidth_hz == 0:
        return w
    var = 2 * math.pi * linewidth_hz / w.sample_rate
    steps = rng.standard_normal(len(w.samples) - 1) * math.sqrt(var)
    theta = np.concatenate(([0.0], np.cumsum(steps)))
    return w.with_samples(w.samples * np.exp(1j * theta))


# ---------------------------------------------------------------------------
# resampling and WDM
# ---------------------------------------------------------------------------

def resample(w: SampledWaveform, n_out: int) -> SampledWaveform:
    """Band-limited resampling by zero-padding or truncating the spectrum.

    Truncation is an ideal brick-wall low-pass.  Average power is preserved
    for signals that fit in the narrower band.
    """
    n_in = len(w.samples)
    if n_out == n_in:
        return w
    spec = sfft.fft(w.samples)
    out = np.zeros(n_out, dtype=complex)
    n = min(n_in, n_out)
    pos, neg = (n + 1) // 2, n // 2  # an even length's Nyquist bin counts as negative
    out[:pos] = spec[:pos]
    out[n_out - neg:] = spec[n_in - neg:]
    samples = sfft.ifft(out) * (n_out / n_in)
    return SampledWaveform(samples, w.sample_rate * n_out / n_in, w.center_freq_offset)


def frequency_shift(w: SampledWaveform, offset_hz: float) -> SampledWaveform:
    n = np.arange(len(w.samples))
    return w.with_samples(w.samples * np.exp(2j * np.pi * offset_hz * n / w.sample_rate))


def wdm_mux(channels, bandwidth_hz: float | None = None) -> SampledWaveform:
    """Sum frequency-shifted channel fields.

    ``channels`` is a sequence of ``(SampledWaveform, offset_hz)`` pairs sharing
    sample rate and length.  With ``bandwidth_hz`` each channel's band is
    checked against Nyquist.
    """
    channels = list(channels)
    if not channels:
        raise ValueError("at least one channel is required")
    fs = channels[0][0].sample_rate
    n = len(channels[0][0].samples)
    total = np.zeros(n, dtype=complex)
    for wf, offset in channels:
        if wf.sample_rate != fs or len(wf.samples) != n:
            raise ValueError("all WDM channels must share sample rate and length")
        half = (bandwidth_hz or 0.0) / 2
        if abs(offset) + half > fs / 2:
            raise ValueError(
                f"channel at {offset / 1e9:+.2f} GHz aliases at sample rate {fs / 1e9:.2f} GS/s")
        total += frequency_shift(wf, offset).samples
    return SampledWaveform(total, fs, channels[0][0].center_freq_offset)


def wdm_demux(aggregate: SampledWaveform, offset_hz: float, bandwidth_hz: float) -> SampledWaveform:
    """Shift the channel at ``offset_hz`` to baseband and brick-wall filter it."""
    fs = aggregate.sample_rate
    if abs(offset_hz) + bandwidth_hz / 2 > fs / 2:
        raise ValueError(
            f"demux band at {offset_hz / 1e9:+.2f} GHz exceeds Nyquist for {fs / 1e9:.2f} GS/s")
    shifted = frequency_shift(aggregate, -offset_hz)
    spec = sfft.fft(shifted.samples)
    f = sfft.fftfreq(len(spec), 1.0 / fs)
    spec[np.abs(f) > bandwidth_hz / 2 * (1 + 1e-12)] = 0  # edge bin kept despite fftfreq roundoff
    return SampledWaveform(sfft.ifft(spec), fs, aggregate.center_freq_offset + offset_hz)
