"""Grouped complex-valued network for joint subcarrier equalization.

Each subcarrier group owns one sub-network::

    z = W1 @ x + b1          x: received symbols of the group (complex)
    h = tanh(Re z) + 1j*tanh(Im z)
    y = W2 @ h + b2          y: equalized symbols of the group

with ``3 * M`` hidden units per subcarrier in the group.  Gradients treat the
real and imaginary part of every parameter as independent real parameters and
are reported in the packed form ``dL/dRe + 1j*dL/dIm``.

Parameters live in one flat complex vector.  Groups of equal size are stored
together in a bucket (buckets in order of first appearance in the plan); each
bucket holds ``W1[G, H, n]``, ``b1[G, H]``, ``W2[G, n, H]``, ``b2[G, n]``
back to back, row-major.  The same order is used on disk.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

HIDDEN_PER_SUBCARRIER_PER_LEVEL = 3
INIT_RANGE = 0.1


@dataclass(frozen=True)
class GroupPlan:
    case_id: str
    groups: tuple  # of (start, stop, role)

    def __post_init__(self):
        pos = 0
        for start, stop, role in self.groups:
            if start != pos or stop <= start:
                raise ValueError(f"groups of {self.case_id} must be contiguous and non-empty")
            if role not in ("edge", "middle"):
                raise ValueError(f"unknown group role {role!r}")
            pos = stop

    @property
    def n_subcarriers(self) -> int:
        return self.groups[-1][1]

    @property
    def n_hidden_layers(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> list:
        return [stop - start for start, stop, _ in self.groups]

    @classmethod
    def from_sizes(cls, case_id: str, sizes, roles=None) -> "GroupPlan":
        if roles is None:
            roles = ["edge" if i in (0, len(sizes) - 1) and len(sizes) > 1 else "middle"
                     for i in range(len(sizes))]
        groups, pos = [], 0
        for size, role in zip(sizes, roles):
            groups.append((pos, pos + int(size), role))
            pos += int(size)
        return cls(case_id, tuple(groups))


CASE_MIDDLE = {"Case1": 50, "Case2": 100, "Case3": 150}


def case_plan(case_id: str, n_subcarriers: int = 210) -> GroupPlan:
    """Subcarrier grouping for Case1..Case4; ``per_subcarrier`` gives the ANN layout."""
    if case_id in CASE_MIDDLE:
        middle = CASE_MIDDLE[case_id]
        edge, rem = divmod(n_subcarriers - middle, 2)
        if edge < 1 or rem:
            raise ValueError(f"{case_id} needs an even number of subcarriers above {middle}")
        return GroupPlan.from_sizes(case_id, [edge, middle, edge])
    if case_id == "Case4":
        if n_subcarriers != 210:
            raise ValueError("Case4 grouping (51, 54, 54, 51) is defined for 210 subcarriers")
        return GroupPlan.from_sizes(case_id, [51, 54, 54, 51], ["edge", "middle", "middle", "edge"])
    if case_id == "per_subcarrier":
        return GroupPlan.from_sizes(case_id, [1] * n_subcarriers, ["middle"] * n_subcarriers)
    raise ValueError(f"unknown case {case_id!r}")


def sigmoid_split(z):
    """tanh applied separately to the real and imaginary parts."""
    z = np.asarray(z)
    return np.tanh(z.real) + 1j * np.tanh(z.imag)


@dataclass
class _Bucket:
    size: int
    hidden: int
    group_index: list
    columns: np.ndarray  # [G, n] subcarrier indices
    offset: int          # start in the flat parameter vector

    @property
    def count(self) -> int:
        return len(self.group_index)

    @property
    def n_params(self) -> int:
        g, n, h = self.count, self.size, self.hidden
        return g * h * n + g * h + g * n * h + g * n

    def views(self, theta: np.ndarray):
        g, n, h = self.count, self.size, self.hidden
        o = self.offset
        w1 = theta[o:o + g * h * n].reshape(g, h, n)
        o += g * h * n
        b1 = theta[o:o + g * h].reshape(g, h)
        o += g * h
        w2 = theta[o:o + g * n * h].reshape(g, n, h)
        o += g * n * h
        b2 = theta[o:o + g * n].reshape(g, n)
        return w1, b1, w2, b2


def _make_buckets(plan: GroupPlan, order: int) -> list:
    buckets: dict = {}
    for gi, (start, stop, _) in enumerate(plan.groups):
        buckets.setdefault(stop - start, []).append(gi)
    out, offset = [], 0
    for size, members in buckets.items():
        cols = np.array([np.arange(plan.groups[gi][0], plan.groups[gi][1]) for gi in members])
        b = _Bucket(size, HIDDEN_PER_SUBCARRIER_PER_LEVEL * order * size, members, cols, offset)
        offset += b.n_params
        out.append(b)
    return out


@dataclass
class GroupedNetwork:
    plan: GroupPlan
    order: int
    seed: int
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        self._buckets = _make_buckets(self.plan, self.order)
        expected = sum(b.n_params for b in self._buckets)
        if self.theta.shape != (expected,):
            raise ValueError(f"parameter vector has {self.theta.size} entries, expected {expected}")

    @property
    def hidden_widths(self) -> list:
        return [HIDDEN_PER_SUBCARRIER_PER_LEVEL * self.order * s for s in self.plan.sizes]

    @property
    def total_neurons(self) -> int:
        """Hidden units over all groups (output units are not counted)."""
        return sum(self.hidden_widths)

    @property
    def n_params(self) -> int:
        return self.theta.size

    def copy(self) -> "GroupedNetwork":
        return GroupedNetwork(self.plan, self.order, self.seed, self.theta.copy())

    # -- forward / backward ------------------------------------------------

    def forward(self, x: np.ndarray, keep: bool = False):
        """Map ``x[T, n_subcarriers]`` to equalized symbols of the same shape."""
        x = np.asarray(x, dtype=complex)
        if x.ndim != 2 or x.shape[1] != self.plan.n_subcarriers:
            raise ValueError(f"expected [T, {self.plan.n_subcarriers}] input, got {x.shape}")
        y = np.empty_like(x)
        cache = []
        for b in self._buckets:
            w1, b1, w2, b2 = b.views(self.theta)
            xb = np.transpose(x[:, b.columns], (1, 0, 2))          # [G, T, n]
            z = xb @ np.transpose(w1, (0, 2, 1)) + b1[:, None, :]  # [G, T, H]
            tr, ti = np.tanh(z.real), np.tanh(z.imag)
            h = tr + 1j * ti
            yb = h @ np.transpose(w2, (0, 2, 1)) + b2[:, None, :]  # [G, T, n]
            y[:, b.columns] = np.transpose(yb, (1, 0, 2))
            if keep:
                cache.append((xb, tr, ti, h))
        return (y, cache) if keep else y

    def cost(self, x: np.ndarray, s: np.ndarray) -> float:
        """Mean squared symbol error."""
        return float(np.mean(np.abs(s - self.forward(x)) ** 2))

    def cost_and_gradient(self, x: np.ndarray, s: np.ndarray):
        """Cost and packed complex gradient with respect to ``theta``."""
        y, cache = self.forward(x, keep=True)
        e = y - np.asarray(s, dtype=complex)
        cost = float(np.mean(e.real ** 2 + e.imag ** 2))
        gy_all = 2.0 * e / e.size
        grad = np.empty_like(self.theta)
        for b, (xb, tr, ti, h) in zip(self._buckets, cache):
            w1, _, w2, _ = b.views(self.theta)
            g_w1, g_b1, g_w2, g_b2 = b.views(grad)
            gy = np.transpose(gy_all[:, b.columns], (1, 0, 2))      # [G, T, n]
            g_w2[...] = np.transpose(gy, (0, 2, 1)) @ np.conj(h)    # [G, n, H]
            g_b2[...] = gy.sum(axis=1)
            gh = gy @ np.conj(w2)                                    # [G, T, H]
            gz = gh.real * (1 - tr ** 2) + 1j * (gh.imag * (1 - ti ** 2))
            g_w1[...] = np.transpose(gz, (0, 2, 1)) @ np.conj(xb)   # [G, H, n]
            g_b1[...] = gz.sum(axis=1)
        return cost, grad


def build_network(plan: GroupPlan, order: int, seed: int) -> GroupedNetwork:
    """Fresh network with every real and imaginary part drawn from U(-0.1, 0.1)."""
    n = sum(b.n_params for b in _make_buckets(plan, order))
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-INIT_RANGE, INIT_RANGE, size=2 * n).view(complex)
    return GroupedNetwork(plan, order, seed, theta)


def equalize_grouped(net: GroupedNetwork, rx: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(net.theta)):
        raise ValueError("network has non-finite weights")
    return net.forward(rx)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

NET_MAGIC = b"COOFDMNN"
NET_VERSION = 1
_HEADER = struct.Struct("<8sIIIq")  # magic, version, order, n_groups, seed


def network_to_bytes(net: GroupedNetwork) -> bytes:
    """Header, case id, groups as (start, stop, role) then float64 LE weights.

    Weights are the flat parameter vector as interleaved (re, im) pairs.
    """
    case = net.plan.case_id.encode()
    parts = [_HEADER.pack(NET_MAGIC, NET_VERSION, net.order, len(net.plan.groups), net.seed),
             struct.pack("<H", len(case)), case]
    for start, stop, role in net.plan.groups:
        parts.append(struct.pack("<IIB", start, stop, role == "middle"))
    parts.append(struct.pack("<Q", net.theta.size))
    parts.append(net.theta.astype("<c16").tobytes())
    return b"".join(parts)


def network_from_bytes(blob: bytes) -> GroupedNetwork:
    if len(blob) < _HEADER.size:
        raise ValueError("network blob truncated in header")
    magic, version, order, n_groups, seed = _HEADER.unpack_from(blob, 0)
    if magic != NET_MAGIC:
        raise ValueError("not a network blob (bad magic)")
    if version != NET_VERSION:
        raise ValueError(f"unsupported network blob version {version}")
    pos = _HEADER.size
    try:
        (n_case,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        case = blob[pos:pos + n_case].decode()
        pos += n_case
        groups = []
        for _ in range(n_groups):
            start, stop, middle = struct.unpack_from("<IIB", blob, pos)
            pos += 9
            groups.append((start, stop, "middle" if middle else "edge"))
        (n,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
    except struct.error:
        raise ValueError("network blob truncated in group table") from None
    if len(blob) - pos != 16 * n:
        raise ValueError("network blob truncated in weights")
    theta = np.frombuffer(blob, dtype="<c16", count=n, offset=pos).astype(complex)
    return GroupedNetwork(GroupPlan(case, tuple(groups)), order, seed, theta)


def save_network(net: GroupedNetwork, path) -> None:
    with open(path, "wb") as fh:
        fh.write(network_to_bytes(net))


def load_network(path) -> GroupedNetwork:
    with open(path, "rb") as fh:
        return network_from_bytes(fh.read())
