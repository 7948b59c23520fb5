import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locality_recovery.topology import (
    Family,
    NonSquareGrid,
    RadiusTooLarge,
    WeightRatioUnbounded,
    WidthExceedsRadius,
    avg_degree,
    build_hyper_topology,
    build_topology,
    check_backward_edges,
    degree,
    weighted_degree,
)


def brute_edges(family, n, r):
    """Edge set from the raw definitions, by enumerating all pairs."""
    out = set()
    side = math.isqrt(n)
    for i, j in itertools.combinations(range(1, n + 1), 2):
        if family == "line":
            ok = abs(i - j) <= r
        elif family == "ring":
            ok = (i - j) % n <= r or (j - i) % n <= r
        elif family == "grid":
            (ri, ci), (rj, cj) = divmod(i - 1, side), divmod(j - 1, side)
            ok = (ri - rj) ** 2 + (ci - cj) ** 2 <= r * r
        else:
            ok = True
        if ok:
            out.add((i, j))
    return out


def test_ring_six_radius_one_is_a_cycle():
    top = build_topology("ring", 6, 1)
    assert set(top.edges()) == {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6)}


def test_line_degrees_small():
    top = build_topology("line", 5, 2)
    assert degree(top, 1) == 2
    assert degree(top, 3) == 4


def test_grid_three_by_three_has_twelve_edges():
    top = build_topology("grid", 9, 1)
    assert len(set(top.edges())) == len(brute_edges("grid", 9, 1)) == 12
    assert top.n_edges == 12


def test_ring_and_line_degrees():
    ring = build_topology("ring", 100, 5)
    assert all(degree(ring, v) == 10 for v in range(1, 101))
    line = build_topology("line", 100, 5)
    assert degree(line, 1) == 5 and degree(line, 50) == 10


def test_uniform_weighted_degree_equals_degree():
    top = build_topology("line", 30, 4)
    for v in (1, 7, 30):
        assert weighted_degree(top, v) == degree(top, v)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["line", "ring"]), st.integers(3, 40), st.data())
def test_edges_match_definition(family, n, data):
    r = data.draw(st.integers(1, n - 1))
    top = build_topology(family, n, r)
    expected = brute_edges(family, n, r)
    assert set(top.edges()) == expected
    assert top.n_edges == len(expected)
    assert avg_degree(top) == pytest.approx(2 * len(expected) / n)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.data())
def test_grid_edges_match_definition(side, data):
    r = data.draw(st.integers(1, side))
    top = build_topology("grid", side * side, r)
    assert set(top.edges()) == brute_edges("grid", side * side, r)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.data())
def test_grid_order_is_a_permutation_with_backward_edges(side, data):
    r = data.draw(st.integers(1, side))
    top = build_topology("grid", side * side, r)
    assert sorted(top.order.tolist()) == list(range(side * side))
    assert top.core == r * r
    core = {top.coords(int(v) + 1) for v in top.order[: top.core]}
    assert core == {(a, b) for a in range(r) for b in range(r)}
    assert check_backward_edges(top) == []


def test_serpentine_steps_are_lattice_adjacent_within_rows():
    top = build_topology("grid", 100, 3)
    coords = [top.coords(int(v) + 1) for v in top.order]
    rows_part = coords[3 * 10 :]
    for a, b in zip(rows_part, rows_part[1:]):
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


@pytest.mark.parametrize("family", ["line", "ring", "smallworld"])
def test_identity_order_and_core(family):
    top = build_topology(family, 50, 7)
    assert np.array_equal(top.order, np.arange(50))
    assert top.core == 7
    assert check_backward_edges(top) == []


def test_complete_graph_core_is_everything():
    top = build_topology("complete", 12, 3)
    assert top.core == 12
    assert top.n_edges == 66


def test_smallworld_edges_and_weights():
    top = build_topology("smallworld", 20, 3)
    assert set(top.edges()) == brute_edges("complete", 20, 0)
    assert brute_edges("ring", 20, 3) <= set(top.edges())
    assert top.weight(1, 2) == 1.0
    assert top.weight(1, 10) == pytest.approx(3 / 20)
    assert top.total_weight() == pytest.approx(60 * 1.0 + (190 - 60) * 3 / 20)


def test_construction_errors():
    with pytest.raises(NonSquareGrid):
        build_topology("grid", 10, 1)
    with pytest.raises(RadiusTooLarge):
        build_topology("ring", 10, 10)
    with pytest.raises(WeightRatioUnbounded):
        build_topology("smallworld", 100, 2, smallworld_weights=(1.0, 1.0))
    with pytest.raises(ValueError):
        Family.parse("torus")


def test_build_is_deterministic():
    a, b = build_topology("grid", 49, 2), build_topology("grid", 49, 2)
    assert np.array_equal(a.order, b.order) and a.core == b.core
    assert list(a.edges()) == list(b.edges())


def test_hyper_complete_ring():
    hyper = build_hyper_topology(5, 4, 5)
    assert hyper.hyper_edges() == [(1, 2, 3, 4, 5)]


def test_hyper_adjacency_check():
    hyper = build_hyper_topology(6, 2, 3)
    assert hyper.contains((1, 2, 3))
    assert not hyper.contains((1, 2, 4))


def test_hyper_width_two_is_the_edge_set():
    hyper = build_hyper_topology(10, 3, 2)
    assert set(hyper.hyper_edges()) == brute_edges("ring", 10, 3)
    assert hyper.universe_size == 30


def test_hyper_width_exceeds_radius():
    with pytest.raises(WidthExceedsRadius):
        build_hyper_topology(20, 2, 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 30), st.data())
def test_hyper_universe_is_all_mutually_adjacent_sets(n, data):
    r = data.draw(st.integers(1, (n - 1) // 2))
    L = data.draw(st.integers(2, min(r + 1, 4)))
    hyper = build_hyper_topology(n, r, L)
    top = hyper.base
    # oracle: L-subsets whose vertices fit in one window {a, ..., a+r}
    expected = {c for c in itertools.combinations(range(1, n + 1), L)
                if any(all((v - a) % n <= r for v in c) for a in c)}
    got = hyper.hyper_edges()
    assert len(got) == len(set(got)) == hyper.universe_size
    assert set(got) == expected
    for e in got:
        assert all(top.has_edge(a, b) for a, b in itertools.combinations(e, 2))


def test_hyper_draw_is_uniform_over_universe():
    hyper = build_hyper_topology(7, 2, 2)
    rng = np.random.default_rng(0)
    draws = hyper.draw(70_000, rng)
    keys = [tuple(sorted(row + 1)) for row in draws]
    counts = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    assert set(counts) == set(hyper.hyper_edges())
    expected = 70_000 / hyper.universe_size
    assert all(abs(c - expected) < 5 * math.sqrt(expected) for c in counts.values())
