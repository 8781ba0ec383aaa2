"""Scenario configuration: dataclasses, YAML round trip, validation, presets.

The YAML file mirrors ``ScenarioConfig`` section by section; any key left out
takes its default.  ``print-defaults`` emits a complete file.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, replace

import yaml

from ..equalizers.network import case_plan
from ..equalizers.rprop import TrainingConfig
from ..fiber import AmplifierParams, ConverterParams, FiberParams, LinkPlan
from ..modulation import get_constellation
from ..ofdm import OfdmConfig

EQUALIZERS = ("linear", "dbp", "ann", "mimo_dl")
MIN_COUNTED_BITS = 200_000
SIZING_OVERHEAD = 0.30  # frames hold MIN_COUNTED_BITS up to this overhead


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


@dataclass(frozen=True)
class WdmConfig:
    n_channels: int = 1
    spacing_hz: float = 12.5e9

    @property
    def slots(self) -> list:
        """Grid slot of each channel; slot 0 (at baseband) is under test."""
        lo = -(self.n_channels // 2)
        return list(range(lo, lo + self.n_channels))


@dataclass(frozen=True)
class Impairments:
    converters: bool = True
    converter: ConverterParams = ConverterParams()
    phase_noise: bool = True
    linewidth_hz: float = 1e5


@dataclass(frozen=True)
class EqualizerConfig:
    kind: str = "mimo_dl"
    case: str = "Case2"
    dbp_steps_per_span: int = 40


@dataclass(frozen=True)
class Seeds:
    channel: int = 1    # transmitted data
    noise: int = 101    # ASE, laser phase noise
    training: int = 1001


@dataclass(frozen=True)
class ScenarioConfig:
    modem: OfdmConfig = OfdmConfig()
    constellation: str = "QAM16"
    fiber: FiberParams = FiberParams()
    link: LinkPlan = LinkPlan()
    oversampling: int = 4
    nl_on: bool = True
    noise_on: bool = True
    wdm: WdmConfig = WdmConfig()
    impairments: Impairments = Impairments()
    equalizer: EqualizerConfig = EqualizerConfig()
    training: TrainingConfig = TrainingConfig()
    seeds: Seeds = Seeds()
    n_payload_symbols: int | None = None  # None -> enough for MIN_COUNTED_BITS

    @property
    def payload_symbols(self) -> int:
        if self.n_payload_symbols is not None:
            return self.n_payload_symbols
        bits = self.modem.n_data_subcarriers * get_constellation(self.constellation).bits_per_symbol
        counted = math.ceil(MIN_COUNTED_BITS / bits)
        # independent of the actual overhead so an overhead sweep shares one waveform
        return math.ceil(counted / (1 - max(SIZING_OVERHEAD, self.training.overhead_fraction)))

    @property
    def training_symbols(self) -> int:
        return max(1, round(self.training.overhead_fraction * self.payload_symbols))

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


_NESTED = {
    ScenarioConfig: {
        "modem": OfdmConfig, "fiber": FiberParams, "link": LinkPlan, "wdm": WdmConfig,
        "impairments": Impairments, "equalizer": EqualizerConfig, "training": TrainingConfig,
        "seeds": Seeds,
    },
    Impairments: {"converter": ConverterParams},
    LinkPlan: {"amplifier": AmplifierParams},
}


def to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = to_dict(v) if dataclasses.is_dataclass(v) else v
    return out


def _build(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{unknown[0]}: unknown field")
    nested = _NESTED.get(cls, {})
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key in nested and value is not None:
            kwargs[key] = _build(nested[key], value, sub)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None


def from_dict(data: dict) -> ScenarioConfig:
    return _build(ScenarioConfig, data, "")


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not valid YAML ({exc})") from None
    cfg = from_dict(data)
    validate(cfg)
    return cfg


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def fingerprint(cfg: ScenarioConfig) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate(cfg: ScenarioConfig) -> None:
    """Raise ConfigError naming the first inconsistent field."""
    def fail(name, msg):
        raise ConfigError(f"{name}: {msg}")

    try:
        cfg.modem.validate()
    except ValueError as exc:
        fail("modem", str(exc))
    try:
        get_constellation(cfg.constellation)
    except ValueError as exc:
        fail("constellation", str(exc))
    if not isinstance(cfg.oversampling, int) or cfg.oversampling < 1:
        fail("oversampling", "must be an integer >= 1")
    link = cfg.link
    if link.step_km > link.span_length:
        fail("link.step_km", "larger than the span length")
    if not math.isfinite(link.launch_power_dbm):
        fail("link.launch_power_dbm", "must be finite")
    if cfg.equalizer.kind not in EQUALIZERS:
        fail("equalizer.kind", f"must be one of {', '.join(EQUALIZERS)}")
    if cfg.equalizer.dbp_steps_per_span < 1:
        fail("equalizer.dbp_steps_per_span", "must be >= 1")
    if cfg.equalizer.kind == "mimo_dl":
        try:
            case_plan(cfg.equalizer.case, cfg.modem.n_data_subcarriers)
        except ValueError as exc:
            fail("equalizer.case", str(exc))
    try:
        cfg.training.validate()
    except ValueError as exc:
        fail("training", str(exc))
    if cfg.n_payload_symbols is not None and cfg.n_payload_symbols < 2:
        fail("n_payload_symbols", "must be >= 2")
    if cfg.training_symbols >= cfg.payload_symbols:
        fail("training.overhead_fraction", "leaves no payload symbols for BER counting")
    wdm = cfg.wdm
    if wdm.n_channels < 1:
        fail("wdm.n_channels", "must be >= 1")
    if wdm.n_channels > 1 and wdm.spacing_hz <= 0:
        fail("wdm.spacing_hz", "must be > 0")
    fs = cfg.modem.sample_rate * cfg.oversampling
    edge = max(abs(k) for k in wdm.slots) * wdm.spacing_hz + cfg.modem.occupied_bandwidth / 2
    if edge > fs / 2:
        fail("oversampling", f"{fs / 1e9:.1f} GS/s cannot hold a band edge at {edge / 1e9:.2f} GHz")
    if cfg.impairments.linewidth_hz < 0:
        fail("impairments.linewidth_hz", "must be >= 0")


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def single_channel_16qam() -> ScenarioConfig:
    """Single-channel 16-QAM over 20 x 100 km."""
    return ScenarioConfig(constellation="QAM16", link=LinkPlan(n_spans=20, launch_power_dbm=4.0))


def wdm_qpsk() -> ScenarioConfig:
    """Desk-scale WDM QPSK over 32 x 100 km, 5 channels."""
    return ScenarioConfig(
        constellation="QPSK",
        link=LinkPlan(n_spans=32, launch_power_dbm=-5.0),
        wdm=WdmConfig(n_channels=5),
    )


def min_oversampling(modem: OfdmConfig, wdm: WdmConfig) -> int:
    """Smallest oversampling whose Nyquist band holds every WDM channel."""
    edge = max(abs(k) for k in wdm.slots) * wdm.spacing_hz + modem.occupied_bandwidth / 2
    return max(1, math.ceil(2 * edge / modem.sample_rate))


def full_scale(cfg: ScenarioConfig) -> ScenarioConfig:
    """20 WDM channels over 32 spans, oversampled enough to hold the comb (slow)."""
    wdm = replace(cfg.wdm, n_channels=20)
    return cfg.replace(wdm=wdm, link=replace(cfg.link, n_spans=32),
                       oversampling=max(cfg.oversampling, min_oversampling(cfg.modem, wdm)))


def desk_scale(cfg: ScenarioConfig) -> ScenarioConfig:
    """Settings for the single-core acceptance runs: 2 km steps and 2x oversampling,
    or more when a WDM comb needs it."""
    os = max(2, min_oversampling(cfg.modem, cfg.wdm))
    return cfg.replace(oversampling=os, link=replace(cfg.link, step_km=2.0))


PRESETS = {"single-16qam": single_channel_16qam, "wdm-qpsk": wdm_qpsk}
