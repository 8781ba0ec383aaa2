"""Result tables (CSV), plots (SVG) and waveform traces on disk."""
from __future__ import annotations

import csv
import io
import math
import os
import struct

import numpy as np

from ..fiber import SampledWaveform

# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

LIST_SEP = ";"
TEXT_COLUMNS = frozenset({"fingerprint", "equalizer", "constellation", "version", "axis"})
LIST_COLUMNS = frozenset({"per_subcarrier_q"})


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form
    if isinstance(v, (list, tuple)):
        return LIST_SEP.join(_fmt(float(x)) for x in v)
    return str(v)


def _parse(text: str, column: str):
    if column in TEXT_COLUMNS:
        return text
    if column in LIST_COLUMNS:
        return [float(x) for x in text.split(LIST_SEP)]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def rows_to_csv(rows) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("empty result table")
    header = list(rows[0])
    for r in rows[1:]:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(r[k]) if k in r else "" for k in header])
    return buf.getvalue()


def emit_csv(rows, path) -> None:
    """Write rows as CSV; floats are written in shortest round-trip form."""
    text = rows_to_csv(rows)  # raises before anything touches the disk
    with open(path, "w", newline="") as fh:
        fh.write(text)


def parse_csv(text: str) -> list:
    """Inverse of ``rows_to_csv``; column types follow the row schema."""
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    return [{k: _parse(v, k) for k, v in zip(header, line) if v != ""} for line in rd]


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return parse_csv(fh.read())


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

PLOT_KINDS = ("q_vs_lop", "q_per_subcarrier", "q_vs_overhead", "constellation")


def _mean_by(rows, x_key):
    series: dict = {}
    for r in rows:
        series.setdefault(r["equalizer"], {}).setdefault(r[x_key], []).append(r["q_factor_db"])
    return {eq: sorted((x, float(np.mean(q))) for x, q in pts.items()) for eq, pts in series.items()}


def emit_plot(rows, kind: str, path, symbols=None) -> None:
    """Render a result table (or equalized symbols) as a static SVG.

    ``constellation`` takes the complex ``symbols`` instead of table rows.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    if kind == "constellation":
        if symbols is None or np.size(symbols) == 0:
            raise ValueError("constellation plot needs equalized symbols")
    elif not rows:
        raise ValueError("empty result table")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "coofdm"  # stable element ids
    fig, ax = plt.subplots(figsize=(6, 4))
    if kind == "q_vs_lop":
        for eq, pts in _mean_by(rows, "launch_power_dbm").items():
            ax.plot(*zip(*pts), marker="o", label=eq)
        ax.set_xlabel("launch power per channel (dBm)")
        ax.set_ylabel("Q-factor (dB)")
        ax.legend()
    elif kind == "q_vs_overhead":
        for eq, pts in _mean_by(rows, "overhead").items():
            x, q = zip(*pts)
            ax.plot([100 * v for v in x], q, marker="o", label=eq)
        ax.set_xlabel("training overhead (%)")
        ax.set_ylabel("Q-factor (dB)")
        ax.legend()
    elif kind == "q_per_subcarrier":
        for r in rows:
            q = r["per_subcarrier_q"]
            ax.plot(np.arange(len(q)), q, lw=0.8, label=f"{r['equalizer']} @ {r['launch_power_dbm']} dBm")
        ax.set_xlabel("data subcarrier index")
        ax.set_ylabel("Q-factor (dB)")
        ax.legend(fontsize="small")
    else:
        s = np.ravel(symbols)
        ax.plot(s.real, s.imag, ".", ms=1, alpha=0.5)
        ax.set_aspect("equal")
        ax.set_xlabel("in-phase")
        ax.set_ylabel("quadrature")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


# ---------------------------------------------------------------------------
# waveform traces
# ---------------------------------------------------------------------------

TRACE_MAGIC = b"COOFDMWF"
TRACE_VERSION = 1
_TRACE_HEADER = struct.Struct("<8sIddQ")  # magic, version, sample_rate, center offset, length


def trace_to_bytes(w: SampledWaveform) -> bytes:
    s = np.ascontiguousarray(w.samples, dtype=complex)
    header = _TRACE_HEADER.pack(TRACE_MAGIC, TRACE_VERSION, float(w.sample_rate),
                                float(w.center_freq_offset), s.size)
    return header + s.astype("<c16").tobytes()


def trace_from_bytes(blob: bytes) -> SampledWaveform:
    if len(blob) < _TRACE_HEADER.size:
        raise ValueError("trace truncated: header incomplete")
    magic, version, fs, offset, n = _TRACE_HEADER.unpack_from(blob, 0)
    if magic != TRACE_MAGIC:
        raise ValueError("not a waveform trace (bad magic)")
    if version != TRACE_VERSION:
        raise ValueError(f"unsupported trace version {version} (expected {TRACE_VERSION})")
    body = len(blob) - _TRACE_HEADER.size
    if body < 16 * n:
        raise ValueError(f"trace truncated: {body} of {16 * n} sample bytes present")
    if body > 16 * n:
        raise ValueError(f"trace has {body - 16 * n} trailing bytes")
    if not (math.isfinite(fs) and fs > 0):
        raise ValueError("trace header has an invalid sample rate")
    samples = np.frombuffer(blob, dtype="<c16", count=n, offset=_TRACE_HEADER.size).astype(complex)
    return SampledWaveform(samples, fs, offset)


def save_trace(w: SampledWaveform, path) -> None:
    data = trace_to_bytes(w)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_trace(path) -> SampledWaveform:
    with open(path, "rb") as fh:
        return trace_from_bytes(fh.read())
