import math
import warnings

import numpy as np
import pytest

from coofdm.fiber import (
    PLANCK,
    AmplifierParams,
    ConverterParams,
    FiberParams,
    LinkPlan,
    SampledWaveform,
    apply_phase_noise,
    clip_level,
    dac_adc,
    edfa_amplify,
    propagate_link,
    resample,
    ssfm_propagate,
    wdm_demux,
    wdm_mux,
)
from coofdm.ofdm import OfdmConfig, build_frame, cd_compensate, ofdm_modulate

FS = 50e9


def ofdm_waveform(rng, n_symbols=8, oversampling=2):
    cfg = OfdmConfig()
    payload = (rng.choice([-1, 1], (n_symbols, 210)) + 1j * rng.choice([-1, 1], (n_symbols, 210))) / np.sqrt(2)
    w = ofdm_modulate(build_frame(payload, cfg), cfg)
    return resample(w, len(w) * oversampling)


# -- parameters ----------------------------------------------------------------

def test_derived_parameters():
    p = FiberParams()
    assert p.alpha == pytest.approx(0.2 * math.log(10) / 10)
    assert p.beta2 * 1e24 == pytest.approx(-20.41, abs=0.01)
    assert p.beta3 > 0
    assert p.linear().gamma == 0 and p.linear().beta2 == p.beta2


def test_negative_parameters_rejected():
    with pytest.raises(ValueError):
        FiberParams(gamma=-1)
    with pytest.raises(ValueError):
        FiberParams(loss_alpha=-0.1)
    with pytest.raises(ValueError):
        ConverterParams(bits=0)


def test_ase_psd_value():
    a = AmplifierParams(gain_db=20.0, noise_figure_db=5.5, optical_freq=193.4e12)
    expected = 10 ** 0.55 / 2 * 99 * 6.626e-34 * 193.4e12
    assert a.ase_psd == pytest.approx(2.25e-17, rel=0.01)
    assert a.ase_psd == pytest.approx(expected, rel=1e-3)


def test_amplifier_matches_span_loss():
    plan = LinkPlan(n_spans=3, span_length=80.0)
    assert plan.amplifier_for(FiberParams()).gain_db == pytest.approx(16.0)


# -- SSFM ------------------------------------------------------------------------

def test_spm_phase_of_cw():
    p = FiberParams(dispersion_D=0.0, dispersion_slope_S=0.0, loss_alpha=0.0)
    w = SampledWaveform(np.full(256, math.sqrt(10e-3), dtype=complex), FS)
    out = ssfm_propagate(w, p, 100.0, 0.1)
    np.testing.assert_allclose(np.angle(out.samples), 1.1, atol=1e-9)
    np.testing.assert_allclose(np.abs(out.samples), math.sqrt(10e-3), rtol=1e-12)


def test_spm_phase_with_loss_uses_effective_length():
    p = FiberParams(dispersion_D=0.0, dispersion_slope_S=0.0)
    w = SampledWaveform(np.full(64, math.sqrt(10e-3), dtype=complex), FS)
    out = ssfm_propagate(w, p, 100.0, 5.0)
    l_eff = (1 - math.exp(-p.alpha * 100)) / p.alpha
    np.testing.assert_allclose(np.angle(out.samples), 1.1e-2 * l_eff, atol=1e-9)


@pytest.mark.parametrize("length", [1.0, 100.0, 3200.0])
def test_lossless_linear_energy_conserved(rng, length):
    p = FiberParams(gamma=0.0, loss_alpha=0.0)
    w = ofdm_waveform(rng)
    out = ssfm_propagate(w, p, length, length / 4)
    assert np.sum(np.abs(out.samples) ** 2) == pytest.approx(np.sum(np.abs(w.samples) ** 2), rel=1e-12)


def test_forward_backward_inverts(rng):
    p = FiberParams()
    w = ofdm_waveform(rng)
    w = w.with_samples(w.samples * math.sqrt(10 ** 0.6 * 1e-3))
    fwd = ssfm_propagate(w, p, 100.0, 0.1)
    back = ssfm_propagate(fwd, p, 100.0, 0.1, direction="backward")
    err = np.linalg.norm(back.samples - w.samples) / np.linalg.norm(w.samples)
    assert err < 1e-6


def test_step_convergence_is_monotone(rng):
    p = FiberParams()
    w = ofdm_waveform(rng, 4, 4)
    w = w.with_samples(w.samples * math.sqrt(10e-3))
    ref = ssfm_propagate(w, p, 100.0, 0.05).samples
    errs = [np.linalg.norm(ssfm_propagate(w, p, 100.0, s).samples - ref) for s in (6.25, 3.125, 1.5625, 0.78125)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_step_larger_than_length():
    w = SampledWaveform(np.ones(8, complex), FS)
    with pytest.raises(ValueError, match="larger than"):
        ssfm_propagate(w, FiberParams(), 1.0, 2.0)


def test_undersampled_input_warns(rng):
    w = SampledWaveform(rng.standard_normal(512) + 1j * rng.standard_normal(512), FS)
    with pytest.warns(RuntimeWarning, match="outer half"):
        ssfm_propagate(w, FiberParams(), 1.0, 1.0)


def test_oversampled_input_does_not_warn(rng):
    w = ofdm_waveform(rng, 2, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ssfm_propagate(w, FiberParams(), 1.0, 1.0)


# -- EDFA -------------------------------------------------------------------------

def test_edfa_unity_gain_passthrough(rng):
    w = SampledWaveform(rng.standard_normal(100) + 0j, FS)
    out = edfa_amplify(w, AmplifierParams(gain_db=0.0), np.random.default_rng(0))
    np.testing.assert_array_equal(out.samples, w.samples)


def test_edfa_noise_variance():
    a = AmplifierParams(gain_db=20.0, noise_figure_db=5.5)
    out = edfa_amplify(SampledWaveform(np.zeros(10 ** 6, complex), FS), a, np.random.default_rng(7))
    var = np.mean(np.abs(out.samples) ** 2)
    assert var == pytest.approx(a.ase_psd * FS, rel=0.01)
    # circular: equal power in I and Q, no I/Q correlation
    assert np.var(out.samples.real) == pytest.approx(np.var(out.samples.imag), rel=0.01)


def test_edfa_needs_rng():
    with pytest.raises(ValueError, match="seeded generator"):
        edfa_amplify(SampledWaveform(np.zeros(4, complex), FS), AmplifierParams(), None)


# -- link --------------------------------------------------------------------------

def test_zero_spans_scales_only(rng):
    w = ofdm_waveform(rng)
    out = propagate_link(w, LinkPlan(n_spans=0, launch_power_dbm=3.0), FiberParams(), rng=rng)
    np.testing.assert_allclose(out.samples, w.samples * math.sqrt(10 ** 0.3 * 1e-3), rtol=1e-15)


def test_linear_noiseless_link_restored_by_cd_compensation(rng):
    w = ofdm_waveform(rng)
    plan = LinkPlan(n_spans=32, launch_power_dbm=0.0, step_km=100.0)
    out = propagate_link(w, plan, FiberParams(), nl_on=False, noise_on=False)
    back = cd_compensate(out, FiberParams(), plan.total_length)
    ref = w.samples * math.sqrt(plan.launch_power_w)
    assert np.linalg.norm(back.samples - ref) / np.linalg.norm(ref) < 1e-8


def test_noisy_link_is_reproducible(rng):
    w = ofdm_waveform(rng, 2)
    plan = LinkPlan(n_spans=2, step_km=10.0)
    a = propagate_link(w, plan, FiberParams(), rng=np.random.default_rng(3))
    b = propagate_link(w, plan, FiberParams(), rng=np.random.default_rng(3))
    assert a.samples.tobytes() == b.samples.tobytes()


# -- converters --------------------------------------------------------------------

def brute_force_quantizer(x, a_clip, bits):
    levels = -a_clip + np.arange(2 ** bits) * (2 * a_clip / (2 ** bits - 1))
    xc = np.clip(x, -a_clip, a_clip)
    return levels[np.argmin(np.abs(xc[:, None] - levels[None, :]), axis=1)]


def test_converter_vanishing_limit(rng):
    w = ofdm_waveform(rng, 4)
    out = dac_adc(w, ConverterParams(bits=30, clipping_ratio_db=60.0))
    np.testing.assert_allclose(out.samples, w.samples, rtol=1e-6, atol=1e-6 * np.max(np.abs(w.samples)))


def test_clipping_pins_to_level():
    x = np.full(100, 5.0 + 5.0j)
    x[:50] = 0.001  # sets the rms
    w = SampledWaveform(x, FS)
    c = ConverterParams(bits=10, clipping_ratio_db=3.0)
    a = clip_level(x, c.clipping_ratio_db)
    out = dac_adc(w, c).samples
    assert np.all(out[50:].real == a) and np.all(out[50:].imag == a)


def test_quantizer_is_mid_rise_with_pinned_ends():
    from coofdm._kernels import K
    q = K.quantize(np.linspace(-2, 2, 10001), 1.0, 3)
    np.testing.assert_allclose(np.unique(q), -1 + np.arange(8) * 2 / 7, atol=1e-15)
    assert 0.0 not in q


def test_sqnr_matches_brute_force_oracle(rng):
    w = ofdm_waveform(rng, 20, 1)
    c = ConverterParams(bits=10, clipping_ratio_db=13.0)
    out = dac_adc(w, c).samples
    a = clip_level(w.samples, c.clipping_ratio_db)
    ref = brute_force_quantizer(w.samples.real, a, 10) + 1j * brute_force_quantizer(w.samples.imag, a, 10)
    sqnr = 10 * np.log10(np.sum(np.abs(w.samples) ** 2) / np.sum(np.abs(out - w.samples) ** 2))
    sqnr_ref = 10 * np.log10(np.sum(np.abs(w.samples) ** 2) / np.sum(np.abs(ref - w.samples) ** 2))
    assert abs(sqnr - sqnr_ref) < 0.01
    # decision-boundary ties may round either way, by one level at most
    diff = np.abs(np.concatenate([(out - ref).real, (out - ref).imag]))
    assert np.mean(diff > 1e-12) < 1e-3
    assert diff.max() <= 2 * a / 1023 * (1 + 1e-9)


# -- phase noise ----------------------------------------------------------------------

def test_zero_linewidth_is_identity(rng):
    w = SampledWaveform(rng.standard_normal(10) + 0j, FS)
    assert apply_phase_noise(w, 0.0, None) is w


def test_phase_noise_statistics():
    n, m, lw = 10 ** 6, 7, 1e5
    w = SampledWaveform(np.ones(n, complex), FS)
    out = apply_phase_noise(w, lw, np.random.default_rng(11))
    np.testing.assert_allclose(np.abs(out.samples), 1.0, rtol=1e-15)
    theta = np.unwrap(np.angle(out.samples))
    d = theta[m:] - theta[:-m]
    assert np.var(d) == pytest.approx(2 * np.pi * lw * m / FS, rel=0.02)


def test_negative_linewidth():
    with pytest.raises(ValueError):
        apply_phase_noise(SampledWaveform(np.ones(4, complex), FS), -1.0, None)


# -- resampling and WDM ----------------------------------------------------------------

@pytest.mark.parametrize("n", [1001, 1000])
def test_resample_round_trip(rng, n):
    x = np.fft.ifft(np.fft.fft(rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    w = SampledWaveform(x, FS)
    up = resample(w, 3 * n)
    np.testing.assert_allclose(resample(up, n).samples, x, atol=1e-12)
    assert up.power == pytest.approx(w.power, rel=1e-12)


def test_single_channel_mux_is_identity(rng):
    w = ofdm_waveform(rng, 2)
    np.testing.assert_array_equal(wdm_mux([(w, 0.0)]).samples, w.samples)


def test_demux_rejects_neighbour_tone():
    fs, n = 64e9, 2 ** 14
    t = np.arange(n) / fs
    f0 = 10e9
    up = np.exp(2j * np.pi * f0 * t)
    down = np.exp(-2j * np.pi * f0 * t)
    out = wdm_demux(SampledWaveform(up + down, fs), f0, 8e9).samples
    wanted = np.abs(np.vdot(np.ones(n), out)) / n
    leak = np.abs(np.vdot(np.exp(-4j * np.pi * f0 * t), out)) / n
    assert wanted == pytest.approx(1.0, rel=1e-9)
    assert 20 * np.log10(wanted / max(leak, 1e-300)) > 60


def test_mux_demux_disjoint_channels(rng):
    a, b = ofdm_waveform(rng, 2, 4), ofdm_waveform(rng, 2, 4)
    bw = OfdmConfig().occupied_bandwidth
    agg = wdm_mux([(a, -25e9), (b, 25e9)], bw)
    for w, off in ((a, -25e9), (b, 25e9)):
        out = wdm_demux(agg, off, 25e9)
        assert np.linalg.norm(out.samples - w.samples) / np.linalg.norm(w.samples) < 1e-6


def test_aliasing_rejected(rng):
    w = ofdm_waveform(rng, 1, 2)
    with pytest.raises(ValueError, match="aliases"):
        wdm_mux([(w, 0.0), (w, 20e9)], 12e9)
    with pytest.raises(ValueError, match="Nyquist"):
        wdm_demux(w, 20e9, 20e9)
