"""Inner-loop kernels with a numba path and a pure-numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``COOFDM_NUMBA`` is not set to ``0``.  Both paths are always
importable (``NUMPY_KERNELS`` / ``NUMBA_KERNELS``) so tests and the benchmark
can compare them directly.
"""
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover
    nb = None

PRBS19_MASK = (1 << 19) - 1
# 0-based register taps for x^19 + x^18 + x^17 + x^14 + 1
PRBS19_TAPS = (18, 17, 16, 13)


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def _lfsr_np(register, n):
    """Output recurrence o[k+19] = o[k] ^ o[k+1] ^ o[k+2] ^ o[k+5].

    The smallest lag is 14, so the sequence can be extended 14 bits at a time.
    """
    out = np.empty(n + 19, dtype=np.uint8)
    for j in range(19):
        out[j] = (register >> (18 - j)) & 1
    k = 19
    while k < n + 19:
        m = min(14, n + 19 - k)
        b = k - 19
        out[k:k + m] = (out[b:b + m] ^ out[b + 1:b + 1 + m]
                        ^ out[b + 2:b + 2 + m] ^ out[b + 5:b + 5 + m])
        k += m
    new_state = 0
    for j in range(19):
        new_state = (new_state << 1) | int(out[n + j])
    return out[:n].copy(), new_state


def _nonlinear_phase_np(a, coef):
    a *= np.exp(1j * coef * (a.real ** 2 + a.imag ** 2))


def _rprop_np(w, g, g_prev, step, eta_plus, eta_minus, step_min, step_max):
    s = g * g_prev
    grow = s > 0
    shrink = s < 0
    step[grow] = np.minimum(step[grow] * eta_plus, step_max)
    step[shrink] = np.maximum(step[shrink] * eta_minus, step_min)
    g = np.where(shrink, 0.0, g)
    w -= np.sign(g) * step
    g_prev[:] = g


def _quantize_np(x, a_clip, bits):
    levels = 2 ** bits
    delta = 2.0 * a_clip / (levels - 1)
    idx = np.floor((np.clip(x, -a_clip, a_clip) + a_clip) / delta + 0.5)
    idx = np.minimum(idx, levels - 1)
    # levels are -A + i*delta with both ends pinned to +-A exactly
    return np.where(idx == levels - 1, a_clip, -a_clip + idx * delta)


def _nearest_np(symbols, points):
    d = np.abs(symbols[:, None] - points[None, :]) ** 2
    return np.argmin(d, axis=1)


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    lfsr=_lfsr_np,
    nonlinear_phase=_nonlinear_phase_np,
    rprop=_rprop_np,
    quantize=_quantize_np,
    nearest=_nearest_np,
)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

def _build_numba():
    opts = dict(cache=True, nogil=True)

    @nb.njit(**opts)
    def lfsr(register, n):
        out = np.empty(n, dtype=np.uint8)
        r = register
        for k in range(n):
            out[k] = (r >> 18) & 1
            fb = ((r >> 18) ^ (r >> 17) ^ (r >> 16) ^ (r >> 13)) & 1
            r = ((r << 1) | fb) & PRBS19_MASK
        return out, r

    @nb.njit(**opts)
    def nonlinear_phase(a, coef):
        for i in range(a.shape[0]):
            re = a[i].real
            im = a[i].imag
            phi = coef * (re * re + im * im)
            c = np.cos(phi)
            s = np.sin(phi)
            a[i] = complex(re * c - im * s, re * s + im * c)

    @nb.njit(**opts)
    def rprop(w, g, g_prev, step, eta_plus, eta_minus, step_min, step_max):
        for i in range(w.shape[0]):
            gi = g[i]
            s = gi * g_prev[i]
            if s > 0.0:
                step[i] = min(step[i] * eta_plus, step_max)
            elif s < 0.0:
                step[i] = max(step[i] * eta_minus, step_min)
                gi = 0.0
            if gi > 0.0:
                w[i] -= step[i]
            elif gi < 0.0:
                w[i] += step[i]
            g_prev[i] = gi

    @nb.njit(**opts)
    def quantize(x, a_clip, bits):
        levels = 2 ** bits
        delta = 2.0 * a_clip / (levels - 1)
        out = np.empty_like(x)
        for i in range(x.shape[0]):
            v = min(max(x[i], -a_clip), a_clip) + a_clip
            idx = min(np.floor(v / delta + 0.5), levels - 1)
            if idx == levels - 1:
                out[i] = a_clip
            else:
                out[i] = -a_clip + idx * delta
        return out

    @nb.njit(**opts)
    def nearest(symbols, points):
        out = np.empty(symbols.shape[0], dtype=np.int64)
        for i in range(symbols.shape[0]):
            best = np.inf
            arg = 0
            for j in range(points.shape[0]):
                dr = symbols[i].real - points[j].real
                di = symbols[i].imag - points[j].imag
                d = dr * dr + di * di
                if d < best:
                    best = d
                    arg = j
            out[i] = arg
        return out

    return SimpleNamespace(
        name="numba",
        lfsr=lfsr,
        nonlinear_phase=nonlinear_phase,
        rprop=rprop,
        quantize=quantize,
        nearest=nearest,
    )


NUMBA_KERNELS = _build_numba() if nb is not None else None

USE_NUMBA = NUMBA_KERNELS is not None and os.environ.get("COOFDM_NUMBA", "1") != "0"
K = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
