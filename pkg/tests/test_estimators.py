import math

import numpy as np
import pytest
from sklearn.base import clone

from locality_recovery import SpectralExpanding, SpectralStitching
from locality_recovery.sampling import draw_hyper_samples, draw_samples, random_labeling
from locality_recovery.topology import build_hyper_topology, build_topology


@pytest.fixture(scope="module")
def ring_problem():
    top = build_topology("ring", 600, 20)
    rng = np.random.default_rng(0)
    truth = random_labeling(600, rng).bits
    return draw_samples(top, truth, 0.1, 3 * 600 * math.log(600), rng), truth


@pytest.mark.parametrize("cls", [SpectralExpanding, SpectralStitching])
def test_fit_predict_and_score(cls, ring_problem):
    samples, truth = ring_problem
    est = cls(random_state=0)
    labels = est.fit_predict(samples)
    assert labels.shape == (600,) and labels.dtype == np.uint8
    assert est.score(samples, truth) == 1.0
    assert est.n_iter_ == len(est.per_iteration_changes_)
    assert est.initial_labels_.shape == (600,)


def test_params_round_trip():
    est = SpectralStitching(window=10, t_max=3, matrix_mode="aggregate", early_stop=False, random_state=4)
    params = est.get_params()
    assert params == {"window": 10, "t_max": 3, "matrix_mode": "aggregate", "early_stop": False, "random_state": 4}
    assert clone(est).get_params() == params
    assert SpectralExpanding().set_params(t_max=2).t_max == 2


def test_multilinked_samples_dispatch():
    hyper = build_hyper_topology(300, 8, 4)
    rng = np.random.default_rng(1)
    truth = random_labeling(300, rng).bits
    hs = draw_hyper_samples(hyper, truth, 0.01, 2000, rng)
    assert SpectralExpanding(random_state=0).fit(hs).score(hs, truth) == 1.0


def test_rejects_non_sample_input():
    with pytest.raises(TypeError):
        SpectralExpanding().fit(np.zeros((3, 3)))


def test_same_seed_same_result(ring_problem):
    samples, _ = ring_problem
    a = SpectralExpanding(random_state=7).fit(samples).labels_
    b = SpectralExpanding(random_state=7).fit(samples).labels_
    assert np.array_equal(a, b)
