from dataclasses import replace

import pytest

from coofdm.fiber import LinkPlan
from coofdm.harness.config import Impairments, ScenarioConfig

ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


def small_scenario(**changes) -> ScenarioConfig:
    """A short frame over a short link; fast enough for unit-level harness tests."""
    cfg = ScenarioConfig(
        constellation="QPSK",
        link=LinkPlan(n_spans=2, span_length=50.0, launch_power_dbm=0.0, step_km=5.0),
        oversampling=2,
        n_payload_symbols=24,
        impairments=Impairments(),
    )
    cfg = cfg.replace(equalizer=replace(cfg.equalizer, kind="linear"))
    return cfg.replace(**changes)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(1234)
