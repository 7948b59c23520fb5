"""Ground truth labelings and noisy parity samples.

Per-edge counts ``N_e ~ Poisson(lam * w_e)`` are generated through the
equivalent splitting construction: a total ``N ~ Poisson(sum_e lam * w_e)``
followed by ``N`` i.i.d. edge draws with probability proportional to ``w_e``.
This keeps the cost proportional to the number of samples rather than the
number of edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_bits, check_positive_int, check_rng
from .topology import Family, HyperTopology, MeasurementTopology, draw_class_pairs


class SamplingError(ValueError):
    pass


class ThetaOutOfRange(SamplingError):
    pass


class POutOfRange(SamplingError):
    pass


class EmptyTopology(SamplingError):
    pass


class NonpositiveWeight(SamplingError):
    pass


# -- labelings ------------------------------------------------------------------


class Labeling:
    """Binary vertex labels, compared modulo a global flip."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = check_bits(bits).copy()
        arr.flags.writeable = False
        self.bits = arr

    def __len__(self):
        return self.bits.size

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    def __repr__(self):
        return f"Labeling({self.bits.tolist()})" if len(self) <= 16 else f"Labeling(n={len(self)})"

    def flipped(self) -> "Labeling":
        return Labeling(self.bits ^ 1)

    def distance(self, other) -> int:
        return hamming_mod_flip(self, other)


def hamming_mod_flip(a, b) -> int:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("labelings have different lengths")
    diff = int(np.count_nonzero(a != b))
    return min(diff, a.size - diff)


def random_labeling(n, rng=None) -> Labeling:
    n = check_positive_int(n, "n")
    return Labeling(check_rng(rng).integers(0, 2, size=n, dtype=np.uint8))


def planted_labeling(bits) -> Labeling:
    return Labeling(bits)


def trial_seed(master_seed: int, *key: int) -> int:
    """Derive an independent 32-bit seed for one trial from the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# -- sample containers ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Pairwise parity samples, grouped by edge.

    ``u < v`` are 0-based endpoints and ``y`` the observed parities, one entry
    per observation; observations on one edge keep their generation order, so
    the first entry of a group is ``Y^(1)``.
    """

    topology: MeasurementTopology
    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    theta: float
    lam: float
    m_target: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.uint8)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        idx = np.argsort(lo * self.topology.n + hi, kind="stable")
        for name, arr in (("u", lo[idx]), ("v", hi[idx]), ("y", y[idx])):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.topology.n

    def __len__(self):
        return int(self.y.size)

    def __iter__(self):
        """Yield ``((i, j), value)`` with 1-based ``i < j``."""
        for a, b, val in zip(self.u.tolist(), self.v.tolist(), self.y.tolist()):
            yield (a + 1, b + 1), val

    def counts(self) -> dict:
        """Observation count ``N_ij`` per sampled edge (1-based keys)."""
        keys, cnt = np.unique(self.u * self.n + self.v, return_counts=True)
        return {(int(k // self.n) + 1, int(k % self.n) + 1): int(c) for k, c in zip(keys, cnt)}


@dataclass(frozen=True, eq=False)
class HyperSampleSet:
    """Multi-linked samples stored as a ragged array.

    Sample ``s`` covers ``vertices[offsets[s]:offsets[s+1]]`` (0-based) with
    observed values ``values[offsets[s]:offsets[s+1]]``.
    """

    topology: MeasurementTopology
    offsets: np.ndarray
    vertices: np.ndarray
    values: np.ndarray
    p: float
    lam: float
    m_target: float
    L: int | None = None
    sample_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64)
        vertices = np.asarray(self.vertices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.uint8)
        if offsets[0] != 0 or offsets[-1] != vertices.size or vertices.size != values.size:
            raise ValueError("inconsistent ragged sample layout")
        sid = np.repeat(np.arange(offsets.size - 1), np.diff(offsets))
        for name, arr in (("offsets", offsets), ("vertices", vertices), ("values", values), ("sample_index", sid)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def __len__(self):
        return int(self.offsets.size - 1)

    def __iter__(self):
        """Yield ``(vertices, values)`` tuples with 1-based vertices."""
        verts, vals = self.vertices.tolist(), self.values.tolist()
        offs = self.offsets.tolist()
        for a, b in zip(offs[:-1], offs[1:]):
            yield tuple(x + 1 for x in verts[a:b]), tuple(vals[a:b])

    def pairwise(self):
        """Break every sample into its pairwise parities ``Y_i xor Y_j``.

        Returns 0-based ``(u, v, y)`` ordered by sample, then by pair, so the
        first derived parity of an edge comes from the earliest sample.
        """
        sizes = self.sizes
        parts, order_keys = [], []
        for size in np.unique(sizes):
            if size < 2:
                continue
            rows = np.flatnonzero(sizes == size)
            base = self.offsets[rows][:, None] + np.arange(size)
            verts, vals = self.vertices[base], self.values[base]
            ia, ib = np.triu_indices(size, k=1)
            parts.append((verts[:, ia].ravel(), verts[:, ib].ravel(), (vals[:, ia] ^ vals[:, ib]).ravel()))
            order_keys.append((np.repeat(rows, ia.size), np.tile(np.arange(ia.size), rows.size)))
        if not parts:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty, np.empty(0, dtype=np.uint8)
        u, v, y = (np.concatenate(x) for x in zip(*parts))
        srow, spair = (np.concatenate(x) for x in zip(*order_keys))
        idx = np.lexsort((spair, srow))
        return u[idx], v[idx], y[idx].astype(np.uint8)


# -- samplers --------------------------------------------------------------------


def _check_theta(theta):
    if not 0 <= theta < 1:
        raise ThetaOutOfRange(f"theta must lie in [0, 1), got {theta}")
    return float(theta)


def _check_m(m_target):
    if not m_target > 0:
        raise SamplingError(f"m_target must be positive, got {m_target}")
    return float(m_target)


def _draw_from_classes(topology, classes, weights, m_target, rng):
    total = float(np.dot([c.count for c in classes], weights))
    if total <= 0:
        raise EmptyTopology("topology has no edges")
    count = int(rng.poisson(m_target))
    prob = np.array([c.count for c in classes], dtype=float) * weights / total
    which = rng.choice(len(classes), size=count, p=prob)
    u = np.empty(count, dtype=np.int64)
    v = np.empty(count, dtype=np.int64)
    for ci in np.unique(which):
        slot = np.flatnonzero(which == ci)
        u[slot], v[slot] = draw_class_pairs(topology, classes[ci], slot.size, rng)
    return u, v, m_target / total


def _noisy_parities(truth, u, v, theta, rng):
    flips = (rng.random(u.size) < theta).astype(np.uint8)
    return truth[u] ^ truth[v] ^ flips


def draw_samples(topology: MeasurementTopology, truth, theta, m_target, rng=None) -> SampleSet:
    """Poisson sampling at the rate that makes the expected total ``m_target``."""
    theta, m_target = _check_theta(theta), _check_m(m_target)
    rng = check_rng(rng)
    truth = check_bits(truth, topology.n, "truth")
    classes = topology.edge_classes()
    weights = np.array([c.weight for c in classes], dtype=float)
    u, v, lam = _draw_from_classes(topology, classes, weights, m_target, rng)
    y = _noisy_parities(truth, u, v, theta, rng)
    return SampleSet(topology, u, v, y, theta, lam, m_target)


def draw_weighted_samples(topology, truth, theta, m_target, weight_profile, rng=None) -> SampleSet:
    """Poisson sampling with per-edge rate ``lam * w(distance)``.

    ``weight_profile`` is a callable or mapping from edge distance (index
    distance on lines and rings, Euclidean distance on grids) to a weight.
    """
    if topology.family not in (Family.RING, Family.LINE, Family.GRID):
        raise ValueError("distance-weighted sampling is defined for rings, lines and grids")
    theta, m_target = _check_theta(theta), _check_m(m_target)
    rng = check_rng(rng)
    truth = check_bits(truth, topology.n, "truth")
    classes = topology.edge_classes()
    lookup = weight_profile.__getitem__ if isinstance(weight_profile, dict) else weight_profile
    weights = np.array([float(_profile_value(lookup, c.distance)) for c in classes])
    if np.any(~(weights > 0)):
        raise NonpositiveWeight("weight profile must be positive on every edge distance")
    u, v, lam = _draw_from_classes(topology, classes, weights, m_target, rng)
    y = _noisy_parities(truth, u, v, theta, rng)
    return SampleSet(topology, u, v, y, theta, lam, m_target)


def _profile_value(lookup, distance):
    if float(distance).is_integer():
        try:
            return lookup(int(distance))
        except KeyError:
            pass
    return lookup(distance)


def uniform_profile(distance) -> float:
    return 1.0


def poisson_profile(mean: float, r: int) -> dict:
    """Poisson(mean) pmf restricted to distances ``1..r`` and renormalised."""
    d = np.arange(1, r + 1)
    logpmf = d * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in d])
    pmf = np.exp(logpmf - logpmf.max())
    pmf /= pmf.sum()
    return {int(k): float(w) for k, w in zip(d, pmf)}


def load_profile(path) -> dict:
    """Read a ``distance weight`` per line profile; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                d, w = line.split()
                out[int(d)] = float(w)
    return out


def draw_hyper_samples(hyper: HyperTopology, truth, p, m_target, rng=None) -> HyperSampleSet:
    """L-wise samples: per-vertex flips with probability ``p``, then a fair
    global phase bit applied to the whole tuple."""
    if not 0 <= p < 0.5:
        raise POutOfRange(f"p must lie in [0, 0.5), got {p}")
    m_target = _check_m(m_target)
    rng = check_rng(rng)
    truth = check_bits(truth, hyper.n, "truth")
    count = int(rng.poisson(m_target))
    edges = hyper.draw(count, rng)
    vals = _linked_reads(truth, edges, p, rng)
    offsets = np.arange(count + 1) * hyper.L
    return HyperSampleSet(hyper.base, offsets, edges.ravel(), vals.ravel(), float(p),
                          m_target / hyper.universe_size, m_target, L=hyper.L)


def _linked_reads(truth, edges, p, rng):
    z = truth[edges] ^ (rng.random(edges.shape) < p)
    phase = rng.integers(0, 2, size=edges.shape[0], dtype=np.uint8)
    return (z ^ phase[:, None]).astype(np.uint8)


def draw_fragment_samples(topology, truth, p, n_fragments, fragment_length=100, mean_reads=9.0, rng=None) -> HyperSampleSet:
    """Linked-read fragments on a line: each fragment is a uniformly placed
    segment of ``fragment_length`` vertices carrying ``Poisson(mean_reads)``
    reads at distinct uniform positions, one phase bit per fragment."""
    if not 0 <= p < 0.5:
        raise POutOfRange(f"p must lie in [0, 0.5), got {p}")
    rng = check_rng(rng)
    n = topology.n
    truth = check_bits(truth, n, "truth")
    seg = min(fragment_length, n)
    count = int(rng.poisson(n_fragments))
    starts = rng.integers(0, n - seg + 1, size=count)
    reads = np.minimum(rng.poisson(mean_reads, size=count), seg)
    keys = rng.random((count, seg))
    rank = np.argsort(keys, axis=1)
    verts = []
    for s in range(count):
        verts.append(np.sort(rank[s, : reads[s]]) + starts[s])
    flat = np.concatenate(verts) if verts else np.empty(0, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(reads)])
    sid = np.repeat(np.arange(count), reads)
    z = truth[flat] ^ (rng.random(flat.size) < p)
    phase = rng.integers(0, 2, size=count, dtype=np.uint8)
    vals = (z ^ phase[sid]).astype(np.uint8)
    return HyperSampleSet(topology, offsets, flat, vals, float(p), float(n_fragments) / max(1, n - seg + 1),
                          float(n_fragments), L=None)


# -- text dump / load ---------------------------------------------------------------


def _header(fields: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in fields.items()) + "\n"


def dump_samples(samples, fh, seed=None) -> None:
    """Write samples in the line format ``i j v`` / ``H k v1..vk i1..ik`` (1-based)."""
    top = samples.topology
    fields = {"n": top.n, "family": top.family.value, "r": top.r}
    if isinstance(samples, SampleSet):
        fields["theta"] = repr(samples.theta)
    else:
        fields["p"] = repr(samples.p)
    fields["m"] = repr(samples.m_target)
    fields["seed"] = "" if seed is None else int(seed)
    fh.write(_header(fields))
    if isinstance(samples, SampleSet):
        for a, b, val in zip(samples.u.tolist(), samples.v.tolist(), samples.y.tolist()):
            fh.write(f"{a + 1} {b + 1} {val}\n")
    else:
        for verts, vals in samples:
            fh.write(" ".join(["H", str(len(verts)), *map(str, vals), *map(str, verts)]) + "\n")


def load_samples(fh):
    """Inverse of :func:`dump_samples`; rebuilds the topology from the header."""
    from .topology import build_topology

    header = fh.readline()
    if not header.startswith("#"):
        raise ValueError("missing sample header line")
    fields = dict(item.split("=", 1) for item in header[1:].split())
    n, r = int(fields["n"]), int(fields["r"])
    top = build_topology(fields["family"], n, r)
    m = float(fields.get("m", "nan"))
    pair_rows, hyper_rows = [], []
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "H":
            k = int(parts[1])
            vals = [int(x) for x in parts[2 : 2 + k]]
            verts = [int(x) - 1 for x in parts[2 + k : 2 + 2 * k]]
            hyper_rows.append((verts, vals))
        else:
            i, j, val = (int(x) for x in parts)
            pair_rows.append((i - 1, j - 1, val))
    if "theta" in fields:
        arr = np.array(pair_rows, dtype=np.int64).reshape(-1, 3)
        lam = m / top.total_weight()
        return SampleSet(top, arr[:, 0], arr[:, 1], arr[:, 2], float(fields["theta"]), lam, m)
    sizes = [len(v) for v, _ in hyper_rows]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    flat_v = np.array([x for v, _ in hyper_rows for x in v], dtype=np.int64)
    flat_y = np.array([x for _, y in hyper_rows for x in y], dtype=np.uint8)
    L = sizes[0] if sizes and len(set(sizes)) == 1 else None
    return HyperSampleSet(top, offsets, flat_v, flat_y, float(fields["p"]), float("nan"), m, L=L)
