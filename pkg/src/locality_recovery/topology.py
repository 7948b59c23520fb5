"""Measurement graphs with locality: complete, line, ring, grid, small-world.

Vertex arguments of the public methods are 1-based (``V = {1, ..., n}``).
Arrays (``order``, sample endpoints, label vectors) are 0-based.

Adjacency is computed arithmetically instead of being materialised, because a
ring with ``n = 10**5`` and ``r = n**0.75`` already has more than 5e8 edges.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_rng


class Family(str, enum.Enum):
    COMPLETE = "complete"
    LINE = "line"
    RING = "ring"
    GRID = "grid"
    SMALLWORLD = "smallworld"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown topology family {value!r}") from None


class TopologyError(ValueError):
    pass


class NonSquareGrid(TopologyError):
    pass


class RadiusTooLarge(TopologyError):
    pass


class WeightRatioUnbounded(TopologyError):
    pass


class WidthExceedsRadius(TopologyError):
    pass


@dataclass(frozen=True)
class EdgeClass:
    """A translation class of edges sharing one offset (and hence one distance).

    ``kind`` is one of ``ring``, ``line``, ``grid`` (offset-indexed classes),
    ``pair`` (all pairs of a complete graph) or ``far`` (the complete-only
    edges of a small-world graph).
    """

    kind: str
    offset: tuple
    distance: float
    count: int
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class MeasurementTopology:
    family: Family
    n: int
    r: int
    order: np.ndarray
    core: int
    side: int | None = None
    w0: float = 1.0
    w1: float = 1.0
    position: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        order.flags.writeable = False
        position = np.empty(self.n, dtype=np.int64)
        position[order] = np.arange(self.n)
        position.flags.writeable = False
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "position", position)

    # -- geometry ---------------------------------------------------------
    def _check_vertex(self, v) -> int:
        if not 1 <= v <= self.n:
            raise IndexError(f"vertex {v} outside 1..{self.n}")
        return int(v) - 1

    def coords(self, v) -> tuple[int, int]:
        """Lattice coordinates ``(row, col)`` of grid vertex ``v``; row 0 is the bottom."""
        if self.family is not Family.GRID:
            raise TypeError("coordinates are only defined for grids")
        return divmod(self._check_vertex(v), self.side)

    def distance(self, i, j) -> float:
        a, b = self._check_vertex(i), self._check_vertex(j)
        if self.family is Family.GRID:
            (ra, ca), (rb, cb) = divmod(a, self.side), divmod(b, self.side)
            return math.hypot(ra - rb, ca - cb)
        if self.family in (Family.RING, Family.SMALLWORLD):
            d = abs(a - b)
            return float(min(d, self.n - d))
        return float(abs(a - b))

    def has_edge(self, i, j) -> bool:
        if i == j:
            return False
        if self.family in (Family.COMPLETE, Family.SMALLWORLD):
            self._check_vertex(i), self._check_vertex(j)
            return True
        return self.distance(i, j) <= self.r

    def _is_local_edge(self, i, j) -> bool:
        # small-world: edge belongs to the ring component
        return i != j and self.distance(i, j) <= self.r

    def weight(self, i, j) -> float:
        if not self.has_edge(i, j):
            raise KeyError(f"({i}, {j}) is not an edge")
        if self.family is Family.SMALLWORLD:
            return self.w1 if self._is_local_edge(i, j) else self.w0
        return 1.0

    def neighbors(self, v) -> np.ndarray:
        """Sorted 1-based neighbour ids of ``v``."""
        a = self._check_vertex(v)
        n = self.n
        if self.family in (Family.COMPLETE, Family.SMALLWORLD):
            nb = np.delete(np.arange(n), a)
        elif self.family is Family.RING:
            d = np.concatenate([np.arange(1, self.r + 1), -np.arange(1, self.r + 1)])
            nb = np.unique((a + d) % n)
            nb = nb[nb != a]
        elif self.family is Family.LINE:
            nb = np.arange(max(0, a - self.r), min(n, a + self.r + 1))
            nb = nb[nb != a]
        else:
            s = self.side
            row, col = divmod(a, s)
            out = []
            for dr, dc in _disk_offsets(self.r):
                rr, cc = row + dr, col + dc
                if 0 <= rr < s and 0 <= cc < s:
                    out.append(rr * s + cc)
            nb = np.array(sorted(out), dtype=np.int64)
        return nb.astype(np.int64) + 1

    def edges(self):
        """Iterate over edges as 1-based pairs ``(i, j)`` with ``i < j``."""
        for i in range(1, self.n + 1):
            for j in self.neighbors(i):
                if j > i:
                    yield (i, int(j))

    def edge_classes(self) -> list[EdgeClass]:
        return _edge_classes(self)

    @property
    def n_edges(self) -> int:
        return sum(c.count for c in self.edge_classes())

    def total_weight(self) -> float:
        return float(sum(c.count * c.weight for c in self.edge_classes()))


def _disk_offsets(r) -> list[tuple[int, int]]:
    """All nonzero integer offsets within Euclidean distance r (ties included)."""
    out = []
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if (dr or dc) and dr * dr + dc * dc <= r * r:
                out.append((dr, dc))
    return out


def _ring_classes(n, r, weight=1.0):
    out = []
    for d in range(1, min(r, n // 2) + 1):
        out.append(EdgeClass("ring", (d,), float(d), n if 2 * d != n else n // 2, weight))
    return out


def _edge_classes(top: MeasurementTopology) -> list[EdgeClass]:
    n = top.n
    if top.family is Family.RING:
        return _ring_classes(n, top.r)
    if top.family is Family.LINE:
        return [EdgeClass("line", (d,), float(d), n - d) for d in range(1, min(top.r, n - 1) + 1)]
    if top.family is Family.GRID:
        s = top.side
        out = []
        for dr, dc in _disk_offsets(top.r):
            if dr < 0 or (dr == 0 and dc < 0):
                continue
            count = (s - dr) * (s - abs(dc))
            if count > 0:
                out.append(EdgeClass("grid", (dr, dc), math.hypot(dr, dc), count))
        return out
    if top.family is Family.COMPLETE:
        return [EdgeClass("pair", (), float("nan"), n * (n - 1) // 2)]
    local = _ring_classes(n, top.r, top.w1)
    far = n * (n - 1) // 2 - sum(c.count for c in local)
    if far > 0:
        local.append(EdgeClass("far", (), float("nan"), far, top.w0))
    return local


def draw_class_pairs(top: MeasurementTopology, cls: EdgeClass, k: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``k`` edges uniformly from one edge class; returns 0-based endpoints."""
    rng = check_rng(rng)
    n = top.n
    if cls.kind == "ring":
        (d,) = cls.offset
        i = rng.integers(0, cls.count, size=k)
        return i, (i + d) % n
    if cls.kind == "line":
        (d,) = cls.offset
        i = rng.integers(0, n - d, size=k)
        return i, i + d
    if cls.kind == "grid":
        dr, dc = cls.offset
        s = top.side
        row = rng.integers(0, s - dr, size=k)
        col = rng.integers(max(0, -dc), s - max(0, dc), size=k)
        return row * s + col, (row + dr) * s + col + dc
    if cls.kind == "pair":
        return _uniform_pairs(n, k, rng)
    if cls.kind == "far":
        us, vs, need = [], [], k
        while need > 0:
            u, v = _uniform_pairs(n, max(2 * need, 16), rng)
            d = np.abs(u - v)
            keep = np.minimum(d, n - d) > top.r
            u, v = u[keep][:need], v[keep][:need]
            us.append(u)
            vs.append(v)
            need -= u.size
        return np.concatenate(us), np.concatenate(vs)
    raise ValueError(f"unknown edge class {cls.kind!r}")


def _uniform_pairs(n, k, rng):
    i = rng.integers(0, n, size=k)
    j = rng.integers(0, n - 1, size=k)
    j = j + (j >= i)
    return i, j


def _serpentine_grid_order(side: int, r: int) -> np.ndarray:
    # core block first, then the bottom band column by column, then the
    # remaining rows; directions alternate so the path stays lattice-adjacent
    order = [row * side + col for row in range(r) for col in range(r)]
    up = True
    for col in range(r, side):
        rows = range(r) if up else range(r - 1, -1, -1)
        order.extend(row * side + col for row in rows)
        up = not up
    leftward = True
    for row in range(r, side):
        cols = range(side - 1, -1, -1) if leftward else range(side)
        order.extend(row * side + col for col in cols)
        leftward = not leftward
    return np.array(order, dtype=np.int64)


def build_topology(family, n, r, smallworld_weights=None, weight_bound=1.0) -> MeasurementTopology:
    """Construct a measurement graph together with its recovery order and core.

    Parameters
    ----------
    family : Family or str
    n : int
        Number of vertices (a perfect square for grids).
    r : int
        Locality radius. Ignored for complete graphs.
    smallworld_weights : (w0, w1), optional
        Sampling weights of the complete-only and ring edges of a small-world
        graph. Defaults to ``(r / n, 1)``.
    weight_bound : float
        Constant ``C`` in the small-world requirement ``w0 * n <= C * w1 * r``.
    """
    family = Family.parse(family)
    n = check_positive_int(n, "n", minimum=2)
    if family is Family.COMPLETE:
        return MeasurementTopology(family, n, n - 1, np.arange(n), core=n)
    r = check_positive_int(r, "r")
    if family is Family.GRID:
        side = math.isqrt(n)
        if side * side != n:
            raise NonSquareGrid(f"grid needs a perfect square vertex count, got n={n}")
        if r > side:
            raise RadiusTooLarge(f"grid radius {r} exceeds the side length {side}")
        return MeasurementTopology(family, n, r, _serpentine_grid_order(side, r), core=r * r, side=side)
    if r >= n:
        raise RadiusTooLarge(f"radius r={r} must be smaller than n={n}")
    if family is Family.SMALLWORLD:
        w0, w1 = smallworld_weights if smallworld_weights is not None else (r / n, 1.0)
        if w0 <= 0 or w1 <= 0:
            raise WeightRatioUnbounded("small-world weights must be positive")
        if w0 * n > weight_bound * w1 * r * (1 + 1e-12):
            raise WeightRatioUnbounded(
                f"w0*n = {w0 * n:g} exceeds {weight_bound:g} * w1*r = {weight_bound * w1 * r:g}"
            )
        return MeasurementTopology(family, n, r, np.arange(n), core=r, w0=float(w0), w1=float(w1))
    return MeasurementTopology(family, n, r, np.arange(n), core=r)


def degree(topology: MeasurementTopology, v) -> int:
    return int(topology.neighbors(v).size)


def weighted_degree(topology: MeasurementTopology, v) -> float:
    return float(sum(topology.weight(v, int(u)) for u in topology.neighbors(v)))


def avg_degree(topology: MeasurementTopology) -> float:
    return 2.0 * topology.n_edges / topology.n


def check_backward_edges(topology: MeasurementTopology) -> list[int]:
    """Return the (1-based) vertices after the core without any earlier neighbour."""
    missing = []
    pos = topology.position
    for k in range(topology.core, topology.n):
        v = int(topology.order[k]) + 1
        if not np.any(pos[topology.neighbors(v) - 1] < k):
            missing.append(v)
    return missing


# -- L-wise hyper-graphs ------------------------------------------------------

_MAX_EXPLICIT_UNIVERSE = 200_000


@dataclass(frozen=True, eq=False)
class HyperTopology:
    """L-uniform hyper-graph over a ring; every hyper-edge fits in one window
    ``{v, v+1, ..., v+r}`` (mod n), so its vertices are pairwise adjacent."""

    base: MeasurementTopology
    L: int
    _explicit: tuple | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def r(self) -> int:
        return self.base.r

    @property
    def universe_size(self) -> int:
        if self._explicit is not None:
            return len(self._explicit)
        return self.n * math.comb(self.r, self.L - 1)

    def contains(self, edge) -> bool:
        verts = [int(v) - 1 for v in edge]
        if len(verts) != self.L or len(set(verts)) != self.L:
            return False
        if not all(0 <= v < self.n for v in verts):
            return False
        return any(all((v - a) % self.n <= self.r for v in verts) for a in verts)

    def hyper_edges(self) -> list[tuple[int, ...]]:
        """Enumerate the universe as sorted 1-based tuples (small instances only)."""
        if self._explicit is not None:
            return [tuple(v + 1 for v in e) for e in self._explicit]
        if self.universe_size > _MAX_EXPLICIT_UNIVERSE:
            raise ValueError(f"hyper-edge universe too large to enumerate ({self.universe_size})")
        out = []
        for a in range(self.n):
            for offs in itertools.combinations(range(1, self.r + 1), self.L - 1):
                out.append(tuple(sorted([a + 1] + [(a + d) % self.n + 1 for d in offs])))
        return sorted(out)

    def draw(self, k: int, rng) -> np.ndarray:
        """``k`` hyper-edges drawn uniformly from the universe, shape ``(k, L)``, 0-based.

        Rows list the window start first, then the remaining vertices in ring order.
        """
        rng = check_rng(rng)
        if self._explicit is not None:
            idx = rng.integers(0, len(self._explicit), size=k)
            table = np.array(self._explicit, dtype=np.int64).reshape(-1, self.L)
            return table[idx]
        out = np.empty((k, self.L), dtype=np.int64)
        start = rng.integers(0, self.n, size=k)
        out[:, 0] = start
        if self.L == 1:
            return out
        chunk = max(1, 4_000_000 // self.r)
        for a in range(0, k, chunk):
            b = min(k, a + chunk)
            if self.L - 1 == self.r:
                offs = np.broadcast_to(np.arange(1, self.r + 1), (b - a, self.r))
            else:
                keys = rng.random((b - a, self.r))
                offs = np.sort(np.argpartition(keys, self.L - 2, axis=1)[:, : self.L - 1], axis=1) + 1
            out[a:b, 1:] = (start[a:b, None] + offs) % self.n
        return out


def build_hyper_topology(n, r, L, count_policy="window") -> HyperTopology:
    """Ring ``R_r`` plus the universe of L-subsets of its sliding windows."""
    L = check_positive_int(L, "L", minimum=2)
    if L > r + 1:
        raise WidthExceedsRadius(f"L={L} vertices cannot be pairwise adjacent in a ring of radius {r}")
    if count_policy != "window":
        raise ValueError(f"unsupported hyper-edge policy {count_policy!r}")
    base = build_topology(Family.RING, n, r)
    if 2 * r < n:
        return HyperTopology(base, L)
    # windows wrap onto themselves: window starts are no longer unique
    if n * math.comb(r + 1, L) > _MAX_EXPLICIT_UNIVERSE:
        raise ValueError("hyper-edge universe too large for a ring with 2r >= n")
    universe = set()
    for a in range(n):
        window = [(a + d) % n for d in range(r + 1)]
        for combo in itertools.combinations(window, L):
            universe.add(tuple(sorted(combo)))
    return HyperTopology(base, L, tuple(sorted(universe)))
