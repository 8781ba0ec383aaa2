"""End-to-end scenario execution and parameter sweeps.

Chain for the channel under test::

    PRBS -> map -> OFDM -> DAC -> upsample -> Tx laser -> WDM mux -> link
    -> WDM demux -> LO laser -> ADC -> CD compensation or DBP -> downsample
    -> FFT -> one-tap + CPE -> [ANN | grouped network] -> demap -> metrics

The first ``training_symbols`` payload symbols are known to the receiver.  They
train the learned equalizers and are left out of error counting for every
equalizer, so all equalizers are scored on the same symbols.

Propagated waveforms are cached on the physical part of the configuration,
so sweeping equalizers, cases or training overhead reuses one propagation.
"""
from __future__ import annotations

import functools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from .. import __version__
from ..equalizers import (
    TrainingRecord,
    build_network,
    case_plan,
    dbp_equalize,
    equalize_grouped,
    linear_equalize,
    train_rprop,
)
from ..fiber import (
    SampledWaveform,
    apply_phase_noise,
    dac_adc,
    propagate_link,
    resample,
    wdm_demux,
    wdm_mux,
)
from ..metrics import QualityReport, count_ber, evm, per_subcarrier_q, q_from_counts
from ..modulation import demap_symbols, get_constellation, map_bits, prbs_generate, seed_to_prbs_state
from ..ofdm import build_frame, cd_compensate, estimate_channel, ofdm_demodulate, ofdm_modulate
from .config import ConfigError, ScenarioConfig, fingerprint, validate

WORKERS_ENV = "COOFDM_WORKERS"


@dataclass
class Transmission:
    bits: np.ndarray = field(repr=False)     # [T, n_data, bits_per_symbol]
    symbols: np.ndarray = field(repr=False)  # [T, n_data]
    n_samples: int                           # at the modem rate, before the guard
    n_padded: int                            # at the modem rate, with the guard


@dataclass
class RunResult:
    report: QualityReport
    training: TrainingRecord | None
    fingerprint: str
    config: ScenarioConfig = field(repr=False)
    wall_time: float = 0.0
    versions: dict = field(default_factory=dict)
    net_bit_rate: float = 0.0
    equalized: np.ndarray | None = field(default=None, repr=False)

    def row(self) -> dict:
        """Flat CSV row; wall time is left out so rows are reproducible."""
        cfg = self.config
        rep = self.report
        tr = self.training
        return {
            "fingerprint": self.fingerprint,
            "equalizer": equalizer_label(cfg),
            "constellation": cfg.constellation,
            "n_spans": cfg.link.n_spans,
            "launch_power_dbm": cfg.link.launch_power_dbm,
            "overhead": cfg.training.overhead_fraction,
            "seed_channel": cfg.seeds.channel,
            "seed_noise": cfg.seeds.noise,
            "seed_training": cfg.seeds.training,
            "ber": rep.ber,
            "q_factor_db": rep.q_factor_db,
            "q_is_ceiling": rep.q_is_ceiling,
            "n_bits": rep.n_bits_counted,
            "n_errors": rep.n_errors,
            "evm_percent": rep.evm_percent,
            "epochs_run": tr.epochs_run if tr else 0,
            "final_cost": tr.cost_per_epoch[-1] if tr else math.nan,
            "net_bit_rate": self.net_bit_rate,
            "version": self.versions.get("coofdm", ""),
            "per_subcarrier_q": list(rep.per_subcarrier_q),
        }


def equalizer_label(cfg: ScenarioConfig) -> str:
    eq = cfg.equalizer
    if eq.kind == "mimo_dl":
        return f"mimo_dl:{eq.case}"
    if eq.kind == "dbp":
        return f"dbp:{eq.dbp_steps_per_span}"
    return eq.kind


# ---------------------------------------------------------------------------
# transmitter and channel
# ---------------------------------------------------------------------------

def _padded_length(n: int, oversampling: int) -> int:
    m = n
    while sfft.next_fast_len(m * oversampling) != m * oversampling:
        m += 1
    return m


def _channel_waveform(cfg: ScenarioConfig, data_seed: int):
    c = get_constellation(cfg.constellation)
    modem = cfg.modem
    t = cfg.payload_symbols
    bits, _ = prbs_generate(seed_to_prbs_state(data_seed), t * modem.n_data_subcarriers * c.bits_per_symbol)
    symbols = map_bits(bits, c).reshape(t, modem.n_data_subcarriers)
    w = ofdm_modulate(build_frame(symbols, modem), modem)
    if cfg.impairments.converters:
        w = dac_adc(w, cfg.impairments.converter)
    n = len(w.samples)
    n_pad = _padded_length(n, cfg.oversampling)
    w = w.with_samples(np.concatenate((w.samples, np.zeros(n_pad - n, dtype=complex))))
    w = resample(w, n_pad * cfg.oversampling)
    tx = Transmission(bits.reshape(t, modem.n_data_subcarriers, c.bits_per_symbol), symbols, n, n_pad)
    return tx, w


def transmission(cfg: ScenarioConfig) -> Transmission:
    return _channel_waveform(cfg, cfg.seeds.channel)[0]


def transmitted_waveform(cfg: ScenarioConfig) -> SampledWaveform:
    """Channel-under-test waveform at unit power, before lasers and launch scaling."""
    return _channel_waveform(cfg, cfg.seeds.channel)[1]


def _physical(cfg: ScenarioConfig) -> ScenarioConfig:
    """The part of the configuration that fixes the received waveform."""
    return replace(cfg, equalizer=type(cfg.equalizer)(), training=type(cfg.training)(),
                   seeds=replace(cfg.seeds, training=0))


def _noise_streams(cfg: ScenarioConfig):
    seqs = np.random.SeedSequence(cfg.seeds.noise).spawn(3 + cfg.wdm.n_channels)
    return [np.random.default_rng(s) for s in seqs]


@functools.lru_cache(maxsize=2)
def _received(phys: ScenarioConfig) -> SampledWaveform:
    rng_ase, rng_lo, _, *rng_tx = _noise_streams(phys)
    imp = phys.impairments
    fs = phys.modem.sample_rate * phys.oversampling
    # a single channel keeps the whole modem band; WDM channels get one grid slot each
    slot_bw = phys.wdm.spacing_hz if phys.wdm.n_channels > 1 else phys.modem.sample_rate
    channels = []
    for i, slot in enumerate(phys.wdm.slots):
        seed = phys.seeds.channel if slot == 0 else phys.seeds.channel + 7919 * slot
        _, w = _channel_waveform(phys, seed)
        if imp.phase_noise:
            w = apply_phase_noise(w, imp.linewidth_hz, rng_tx[i])
        if phys.wdm.n_channels > 1:
            w = wdm_demux(w, 0.0, slot_bw)  # confine OFDM sidelobes to the slot
        channels.append((w, slot * phys.wdm.spacing_hz))
    if len(channels) == 1:
        w = channels[0][0]
    else:
        w = wdm_mux(channels, phys.modem.occupied_bandwidth)
    w = propagate_link(w, phys.link, phys.fiber, nl_on=phys.nl_on, noise_on=phys.noise_on, rng=rng_ase)
    w = wdm_demux(w, 0.0, slot_bw)
    if imp.phase_noise:
        w = apply_phase_noise(w, imp.linewidth_hz, rng_lo)
    if imp.converters:
        w = dac_adc(w, imp.converter)
    return w


def received_waveform(cfg: ScenarioConfig) -> SampledWaveform:
    """Waveform at the receiver ADC output (channel rate, guard included)."""
    return _received(_physical(cfg))


def _remove_dispersion(phys: ScenarioConfig, dbp_steps: int | None, w: SampledWaveform):
    if dbp_steps is None:
        return cd_compensate(w, phys.fiber, phys.link.total_length)
    fiber = phys.fiber if phys.nl_on else phys.fiber.linear()
    return dbp_equalize(w, fiber, phys.link, dbp_steps)


@functools.lru_cache(maxsize=2)
def _dispersion_removed(phys: ScenarioConfig, dbp_steps: int | None):
    return _remove_dispersion(phys, dbp_steps, _received(phys))


# ---------------------------------------------------------------------------
# receiver
# ---------------------------------------------------------------------------

def run_scenario(cfg: ScenarioConfig, trace: SampledWaveform | None = None) -> RunResult:
    """Run one configuration end to end.

    ``trace`` replaces the simulated channel output (see ``received_waveform``)
    so a saved trace can be replayed through the receiver.
    """
    validate(cfg)
    start = time.perf_counter()
    c = get_constellation(cfg.constellation)
    modem = cfg.modem
    tx = transmission(cfg)
    phys = _physical(cfg)
    eq = cfg.equalizer
    if trace is not None:
        expected = tx.n_padded * cfg.oversampling
        if len(trace.samples) != expected:
            raise ConfigError(f"trace has {len(trace.samples)} samples, scenario expects {expected}")
    dbp_steps = eq.dbp_steps_per_span if eq.kind == "dbp" else None
    if trace is None:
        w = _dispersion_removed(phys, dbp_steps)
    else:
        w = _remove_dispersion(phys, dbp_steps, trace)
    w = resample(w, tx.n_padded)
    w = w.with_samples(w.samples[:tx.n_samples])

    rx = ofdm_demodulate(w, modem)
    est = estimate_channel(rx, modem)
    y = linear_equalize(rx.payload, est)

    n_train = cfg.training_symbols
    record = None
    if eq.kind in ("ann", "mimo_dl"):
        case = "per_subcarrier" if eq.kind == "ann" else eq.case
        # the harness training seed drives both initialization and any validation split
        train_cfg = replace(cfg.training, seed=cfg.seeds.training)
        net = build_network(case_plan(case, modem.n_data_subcarriers), c.order, train_cfg.seed)
        net, record = train_rprop(net, tx.symbols[:n_train], y[:n_train], train_cfg)
        y = equalize_grouped(net, y)

    y_eval = y[n_train:]
    tx_eval = tx.bits[n_train:]
    rx_bits = demap_symbols(y_eval, c).reshape(tx_eval.shape)
    ber, n_err, n_bits = count_ber(tx_eval, rx_bits)
    report = QualityReport(
        ber=ber,
        q_factor_db=q_from_counts(n_err, n_bits),
        n_bits_counted=n_bits,
        n_errors=n_err,
        evm_percent=float(evm(tx.symbols[n_train:], y_eval)),
        per_subcarrier_q=per_subcarrier_q(tx_eval, rx_bits),
        q_is_ceiling=n_err == 0,
    )
    symbol_rate = modem.sample_rate / modem.symbol_length
    frame_symbols = cfg.payload_symbols + modem.n_preamble_symbols
    net_rate = (modem.n_data_subcarriers * c.bits_per_symbol * symbol_rate
                * (cfg.payload_symbols - n_train) / frame_symbols)
    return RunResult(
        report=report,
        training=record,
        fingerprint=fingerprint(cfg),
        config=cfg,
        wall_time=time.perf_counter() - start,
        versions={"coofdm": __version__, "numpy": np.__version__},
        net_bit_rate=net_rate,
        equalized=y_eval,
    )



# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

AXES = ("launch_power_dbm", "overhead", "case", "equalizer")


def apply_equalizer(cfg: ScenarioConfig, label: str) -> ScenarioConfig:
    """Apply an equalizer label such as ``linear``, ``dbp:40`` or ``mimo_dl:Case2``."""
    kind, _, arg = str(label).partition(":")
    eq = cfg.equalizer
    if kind == "mimo_dl":
        eq = replace(eq, kind=kind, case=arg or eq.case)
    elif kind == "dbp":
        eq = replace(eq, kind=kind, dbp_steps_per_span=int(arg) if arg else eq.dbp_steps_per_span)
    else:
        eq = replace(eq, kind=kind)
    return cfg.replace(equalizer=eq)


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "launch_power_dbm":
        return cfg.replace(link=replace(cfg.link, launch_power_dbm=float(value)))
    if axis == "overhead":
        return cfg.replace(training=replace(cfg.training, overhead_fraction=float(value)))
    if axis == "case":
        return cfg.replace(equalizer=replace(cfg.equalizer, kind="mimo_dl", case=str(value)))
    if axis == "equalizer":
        return apply_equalizer(cfg, value)
    raise ConfigError(f"axis: unknown sweep axis {axis!r}; expected one of {', '.join(AXES)}")


def with_repeat(cfg: ScenarioConfig, repeat: int) -> ScenarioConfig:
    s = cfg.seeds
    return cfg.replace(seeds=replace(s, noise=s.noise + repeat, training=s.training + repeat))


@dataclass
class SweepTable:
    axis: str
    rows: list

    def summary(self) -> list:
        """Mean, min and max Q per (axis value, equalizer), in first-seen order."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r["axis_value"], r["equalizer"]), []).append(r["q_factor_db"])
        return [
            {"axis_value": v, "equalizer": e, "mean_q_db": float(np.mean(q)),
             "min_q_db": float(np.min(q)), "max_q_db": float(np.max(q)), "n": len(q)}
            for (v, e), q in groups.items()
        ]

    def mean_q(self, equalizer: str) -> dict:
        """Mean Q per axis value for one equalizer.

        A bare kind such as ``dbp`` matches ``dbp:40`` as long as only one
        label of that kind is in the table.
        """
        summary = self.summary()
        labels = {s["equalizer"] for s in summary}
        if equalizer not in labels:
            same_kind = {e for e in labels if e.partition(":")[0] == equalizer}
            if len(same_kind) > 1:
                raise ValueError(f"equalizer {equalizer!r} is ambiguous: {', '.join(sorted(same_kind))}")
            if not same_kind:
                raise KeyError(f"no rows for equalizer {equalizer!r}")
            equalizer = same_kind.pop()
        return {s["axis_value"]: s["mean_q_db"] for s in summary if s["equalizer"] == equalizer}


def _run_point(args):
    idx, value, repeat, cfgs = args
    out = []
    for j, cfg in enumerate(cfgs):
        row = run_scenario(cfg).row()
        row.update(point=idx, axis_value=value, repeat=repeat, variant=j)
        out.append(row)
    return out


def sweep(cfg: ScenarioConfig, axis: str, values, repeats: int = 3, equalizers=None,
          workers: int | None = None, progress=None) -> SweepTable:
    """Run every (axis value, repeat) point, each for every requested equalizer.

    Repeats differ only in the noise and training seeds.  Every point is
    validated before anything runs.  Points run on ``workers`` processes
    (default from ``COOFDM_WORKERS``, else 1); results do not depend on it.
    """
    if axis not in AXES:
        raise ConfigError(f"axis: unknown sweep axis {axis!r}; expected one of {', '.join(AXES)}")
    values = list(values)
    if not values:
        raise ConfigError("values: a sweep needs at least one axis value")
    if repeats < 1:
        raise ConfigError("repeats: must be >= 1")
    labels = list(equalizers) if equalizers else [None]
    tasks = []
    for i, value in enumerate(values):
        for r in range(repeats):
            try:
                base = with_repeat(apply_axis(cfg, axis, value), r)
                cfgs = [apply_equalizer(base, lab) if lab else base for lab in labels]
                for c in cfgs:
                    validate(c)
            except ValueError as exc:  # ConfigError included
                raise ConfigError(f"sweep point {axis}={value}: {exc}") from None
            tasks.append((i, value, r, cfgs))

    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    rows = []
    if workers <= 1:
        for t in tasks:
            rows.extend(_run_point(t))
            if progress:
                progress(t)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for t, res in zip(tasks, pool.map(_run_point, tasks)):
                rows.extend(res)
                if progress:
                    progress(t)
    rows.sort(key=lambda r: (r["point"], r["repeat"], r["variant"]))
    for r in rows:
        r["axis"] = axis
    return SweepTable(axis, rows)
