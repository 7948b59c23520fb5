import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locality_recovery.recover import (
    RecoveryConfig,
    RecoveryError,
    TooLarge,
    WindowLargerThanN,
    brute_force_ml,
    calibrate_phase,
    default_t_max,
    default_window,
    local_ml_score,
    majority_vote,
    spectral_expanding,
    spectral_expanding_multilink,
    spectral_stitching,
    spectral_stitching_multilink,
)
from locality_recovery.sampling import (
    HyperSampleSet,
    SampleSet,
    draw_hyper_samples,
    draw_samples,
    hamming_mod_flip,
    random_labeling,
)
from locality_recovery.topology import build_hyper_topology, build_topology


def every_edge_once(top, truth):
    """One noiseless sample per edge."""
    pairs = np.array(list(top.edges())) - 1
    y = truth[pairs[:, 0]] ^ truth[pairs[:, 1]]
    return SampleSet(top, pairs[:, 0], pairs[:, 1], y, 0.0, 1.0, float(len(pairs)))


def loop_majority(samples, est, vertex0, backward_of=None):
    """Majority of Y xor X_j over the samples touching ``vertex0``."""
    votes = []
    for (i, j), val in samples:
        i, j = i - 1, j - 1
        if vertex0 not in (i, j):
            continue
        other = j if i == vertex0 else i
        if backward_of is not None and not backward_of(other):
            continue
        votes.append(val ^ int(est[other]))
    return majority_vote(votes), len(votes)


def test_majority_vote_rule():
    assert majority_vote([1, 1, 0]) == 1
    assert majority_vote([1, 0]) == 0
    assert majority_vote([]) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        RecoveryConfig(window=3)
    with pytest.raises(ValueError):
        RecoveryConfig(window=0)
    with pytest.raises(ValueError):
        RecoveryConfig(t_max=-1)
    with pytest.raises(ValueError):
        RecoveryConfig(algorithm="greedy")


def test_defaults():
    assert default_t_max(10_000) == 16
    assert default_window(build_topology("ring", 100, 7)) == 6
    assert default_window(build_topology("ring", 100, 1)) == 2


@pytest.mark.parametrize("algo", [spectral_expanding, spectral_stitching])
def test_noiseless_ring_is_exact(algo):
    top = build_topology("ring", 50, 3)
    truth = random_labeling(50, np.random.default_rng(0)).bits
    res = algo(top, every_edge_once(top, truth), rng=1)
    assert hamming_mod_flip(res.labeling.bits, truth) == 0


@pytest.mark.parametrize("family,n,r", [("line", 200, 6), ("grid", 144, 3), ("smallworld", 150, 6), ("complete", 40, 1)])
def test_noisy_recovery_other_families(family, n, r):
    top = build_topology(family, n, r)
    rng = np.random.default_rng(3)
    truth = random_labeling(n, rng).bits
    s = draw_samples(top, truth, 0.05, 40 * n * math.log(n), rng)
    res = spectral_expanding(top, s, rng=rng)
    assert hamming_mod_flip(res.labeling.bits, truth) == 0
    assert res.iterations_used <= default_t_max(n)


def test_phase_calibration_rule():
    bits, flipped = calibrate_phase([0, 1, 1], [0, 1, 1, 0, 0, 1])
    assert not flipped and bits.tolist() == [0, 1, 1, 0, 0, 1]
    bits, flipped = calibrate_phase([0, 1, 1], [1, 0, 0, 1, 1, 0])
    assert flipped and bits.tolist() == [0, 1, 1, 0, 0, 1]
    # exactly half disagreeing keeps the orientation
    bits, flipped = calibrate_phase([0, 0], [1, 0, 1, 1])
    assert not flipped


def test_stitching_window_too_large():
    top = build_topology("ring", 20, 3)
    s = every_edge_once(top, np.zeros(20, dtype=np.uint8))
    with pytest.raises(WindowLargerThanN):
        spectral_stitching(top, s, RecoveryConfig(algorithm="stitching", window=22))


def test_stitching_identical_windows_need_no_flip():
    top = build_topology("ring", 60, 4)
    s = every_edge_once(top, np.zeros(60, dtype=np.uint8))
    res = spectral_stitching(top, s, RecoveryConfig(algorithm="stitching", window=4), rng=0)
    assert hamming_mod_flip(res.initial.bits, np.zeros(60)) == 0
    assert any(f.startswith("stitch:flipped_windows:") for f in res.stage_flags)


def test_theta_at_least_half_rejected():
    top = build_topology("ring", 20, 2)
    s = draw_samples(top, np.zeros(20, dtype=np.uint8), 0.6, 100, np.random.default_rng(0))
    with pytest.raises(RecoveryError):
        spectral_expanding(top, s)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_stage_two_uses_only_backward_samples(seed):
    top = build_topology("line", 40, 4)
    rng = np.random.default_rng(seed)
    truth = random_labeling(40, rng).bits
    s = draw_samples(top, truth, 0.25, 300, rng)
    res = spectral_expanding(top, s, RecoveryConfig(t_max=0), rng=seed)
    init = res.initial.bits
    # the core estimate is taken as given; every later vertex must equal the
    # majority over samples to earlier vertices, evaluated on the running estimate
    for k in range(top.core, 40):
        expected, count = loop_majority(s, init, k, backward_of=lambda j, k=k: j < k)
        assert init[k] == expected
    assert res.iterations_used == 0 and res.labeling.bits.tolist() == init.tolist()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_refinement_round_is_full_neighbourhood_majority(seed):
    top = build_topology("ring", 30, 3)
    rng = np.random.default_rng(seed)
    truth = random_labeling(30, rng).bits
    s = draw_samples(top, truth, 0.3, 200, rng)
    res = spectral_expanding(top, s, RecoveryConfig(t_max=1), rng=seed)
    for k in range(30):
        expected, _ = loop_majority(s, res.initial.bits, k)
        assert res.labeling.bits[k] == expected


def test_truth_is_a_fixed_point_of_refinement():
    top = build_topology("ring", 80, 5)
    rng = np.random.default_rng(4)
    truth = random_labeling(80, rng).bits
    s = draw_samples(top, truth, 0.05, 20_000, rng)
    for k in range(80):
        votes = [val ^ int(truth[(j if i - 1 == k else i) - 1]) for (i, j), val in s if k in (i - 1, j - 1)]
        assert 2 * sum(votes) != len(votes)
        assert majority_vote(votes) == truth[k]
    res = spectral_expanding(top, s, rng=0)
    assert hamming_mod_flip(res.labeling.bits, truth) == 0
    assert res.per_iteration_changes[-1] == 0


def test_global_flip_equivariance():
    top = build_topology("ring", 500, 20)
    truth = random_labeling(500, np.random.default_rng(0)).bits
    m = 3 * 500 * math.log(500)
    a = draw_samples(top, truth, 0.1, m, np.random.default_rng(8))
    b = draw_samples(top, truth ^ 1, 0.1, m, np.random.default_rng(8))
    ra = spectral_expanding(top, a, rng=2)
    rb = spectral_expanding(top, b, rng=2)
    assert hamming_mod_flip(ra.labeling.bits, rb.labeling.bits) == 0


def test_iterations_bounded_and_changes_logged():
    top = build_topology("ring", 300, 10)
    rng = np.random.default_rng(1)
    truth = random_labeling(300, rng).bits
    s = draw_samples(top, truth, 0.3, 1000, rng)
    res = spectral_expanding(top, s, RecoveryConfig(t_max=4), rng=rng)
    assert res.iterations_used <= 4
    assert len(res.per_iteration_changes) == res.iterations_used


def test_missing_backward_samples_are_flagged():
    top = build_topology("line", 10, 2)
    s = SampleSet(top, [0], [1], [1], 0.1, 1.0, 1.0)
    res = spectral_expanding(top, s, RecoveryConfig(t_max=0))
    assert "stage2:no_backward_samples:8" in res.stage_flags
    assert res.initial.bits[2:].tolist() == [0] * 8


# -- multi-linked ---------------------------------------------------------------------


def oracle_llr(k, current, hs, p):
    """Mixture likelihood ratio written out as products of per-read terms."""
    total = 0.0
    for verts, vals in hs:
        verts = [v - 1 for v in verts]
        if k not in verts:
            continue

        def lik(xk):
            x = [xk if v == k else int(current[v]) for v in verts]
            direct = math.prod((1 - p) if y == xi else p for y, xi in zip(vals, x))
            flipped = math.prod((1 - p) if y != xi else p for y, xi in zip(vals, x))
            return 0.5 * direct + 0.5 * flipped

        total += math.log(lik(1)) - math.log(lik(0))
    return total


def test_local_ml_score_without_samples_is_zero():
    top = build_topology("ring", 10, 3)
    hs = HyperSampleSet(top, [0, 3], [1, 2, 3], [0, 0, 1], 0.1, 1.0, 1.0)
    assert local_ml_score(8, 1, np.zeros(10), hs, 0.1) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 5), st.sampled_from([0.01, 0.1, 0.3]))
def test_local_ml_score_matches_product_formula(seed, L, p):
    hyper = build_hyper_topology(20, 5, L)
    rng = np.random.default_rng(seed)
    truth = random_labeling(20, rng).bits
    hs = draw_hyper_samples(hyper, truth, p, 40, rng)
    current = random_labeling(20, rng).bits
    for v in (1, 7, 20):
        got = local_ml_score(v, 1, current, hs, p)
        assert got == pytest.approx(oracle_llr(v - 1, current, hs, p), abs=1e-9)
        assert local_ml_score(v, 0, current, hs, p) == pytest.approx(-got)


def test_width_two_score_follows_parity_vote():
    top = build_topology("ring", 10, 2)
    current = np.zeros(10, dtype=np.uint8)
    for vals in ([0, 0], [0, 1], [1, 0], [1, 1]):
        hs = HyperSampleSet(top, [0, 2], [0, 1], vals, 0.1, 1.0, 1.0)
        vote = vals[0] ^ vals[1] ^ int(current[1])
        score = local_ml_score(1, 1, current, hs, 0.1)
        assert (score > 0) == (vote == 1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_multilink_refinement_round_matches_score(seed):
    hyper = build_hyper_topology(30, 4, 3)
    rng = np.random.default_rng(seed)
    truth = random_labeling(30, rng).bits
    hs = draw_hyper_samples(hyper, truth, 0.2, 60, rng)
    res = spectral_expanding_multilink(hyper, hs, RecoveryConfig(t_max=1), rng=seed)
    for k in range(30):
        score = oracle_llr(k, res.initial.bits, hs, 0.2)
        assert res.labeling.bits[k] == (1 if score >= -1e-12 else 0) or abs(score) < 1e-9


@pytest.mark.parametrize("algo", [spectral_expanding_multilink, spectral_stitching_multilink])
def test_multilink_noiseless_exact(algo):
    hyper = build_hyper_topology(300, 8, 4)
    rng = np.random.default_rng(0)
    truth = random_labeling(300, rng).bits
    hs = draw_hyper_samples(hyper, truth, 0.0, 3000, rng)
    res = algo(hyper, hs, rng=rng)
    assert hamming_mod_flip(res.labeling.bits, truth) == 0


def test_width_two_multilink_equals_pairwise_on_same_parities():
    hyper = build_hyper_topology(400, 10, 2)
    rng = np.random.default_rng(5)
    truth = random_labeling(400, rng).bits
    p = 0.05
    hs = draw_hyper_samples(hyper, truth, p, 400 * math.log(400) * 3, rng)
    u, v, y = hs.pairwise()
    pairs = SampleSet(hyper.base, u, v, y, 2 * p * (1 - p), hs.lam, hs.m_target)
    ml = spectral_expanding_multilink(hyper, hs, rng=11)
    pw = spectral_expanding(hyper.base, pairs, rng=11)
    assert np.array_equal(ml.initial.bits[: hyper.base.core], pw.initial.bits[: hyper.base.core])
    assert np.array_equal(ml.labeling.bits, pw.labeling.bits)


# -- brute force --------------------------------------------------------------------------


def test_brute_force_noiseless_connected():
    top = build_topology("ring", 8, 2)
    truth = np.array([0, 1, 1, 0, 1, 0, 0, 1], dtype=np.uint8)
    assert hamming_mod_flip(brute_force_ml(top, every_edge_once(top, truth)).bits, truth) == 0


def test_brute_force_single_sample():
    top = build_topology("ring", 6, 1)
    s = SampleSet(top, [0], [1], [1], 0.1, 1.0, 1.0)
    assert brute_force_ml(top, s).bits.tolist() == [0, 1, 0, 0, 0, 0]


def test_brute_force_limits():
    top = build_topology("ring", 21, 2)
    with pytest.raises(TooLarge):
        brute_force_ml(top, every_edge_once(top, np.zeros(21, dtype=np.uint8)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_brute_force_matches_likelihood_enumeration(seed):
    n = 7
    top = build_topology("ring", n, 2)
    rng = np.random.default_rng(seed)
    s = draw_samples(top, random_labeling(n, rng), 0.2, 30, rng)
    theta = 0.2
    best, best_ll = None, -math.inf
    for rest in itertools.product((0, 1), repeat=n - 1):
        x = (0,) + rest
        ll = sum(math.log(1 - theta) if val == x[i - 1] ^ x[j - 1] else math.log(theta) for (i, j), val in s)
        if ll > best_ll + 1e-12:
            best, best_ll = x, ll
    assert tuple(brute_force_ml(top, s, theta).bits.tolist()) == best
