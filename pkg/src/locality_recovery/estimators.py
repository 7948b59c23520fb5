"""scikit-learn style wrappers around the recovery algorithms.

``fit`` takes a :class:`~locality_recovery.sampling.SampleSet` (pairwise) or
a :class:`~locality_recovery.sampling.HyperSampleSet` (multi-linked); the
measurement graph travels with the samples.

>>> est = SpectralExpanding(random_state=0).fit(samples)     # doctest: +SKIP
>>> est.labels_                                              # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_rng, check_sample_set
from .recover import (
    EXPANDING,
    STITCHING,
    RecoveryConfig,
    spectral_expanding,
    spectral_expanding_multilink,
    spectral_stitching,
    spectral_stitching_multilink,
)
from .sampling import HyperSampleSet, hamming_mod_flip
from .spectral import FIRST_SAMPLE

_DISPATCH = {
    (EXPANDING, False): spectral_expanding,
    (STITCHING, False): spectral_stitching,
    (EXPANDING, True): spectral_expanding_multilink,
    (STITCHING, True): spectral_stitching_multilink,
}


class _SpectralRecovery(BaseEstimator):
    _algorithm = EXPANDING

    def _config(self):
        return RecoveryConfig(
            algorithm=self._algorithm,
            t_max=self.t_max,
            window=getattr(self, "window", None),
            matrix_mode=self.matrix_mode,
            early_stop=self.early_stop,
        )

    def fit(self, samples, y=None):
        """Recover the vertex labels from ``samples``; ``y`` is ignored."""
        samples = check_sample_set(samples)
        linked = isinstance(samples, HyperSampleSet)
        algo = _DISPATCH[(self._algorithm, linked)]
        result = algo(samples.topology, samples, self._config(), check_rng(self.random_state))
        self.result_ = result
        self.labels_ = np.array(result.labeling.bits)
        self.initial_labels_ = np.array(result.initial.bits)
        self.n_iter_ = result.iterations_used
        self.per_iteration_changes_ = list(result.per_iteration_changes)
        self.stage_flags_ = list(result.stage_flags)
        return self

    def fit_predict(self, samples, y=None):
        return self.fit(samples).labels_

    def score(self, samples, truth):
        """Fraction of vertices recovered correctly, up to the global flip."""
        labels = self.fit_predict(samples)
        truth = np.asarray(truth, dtype=np.uint8)
        return 1.0 - hamming_mod_flip(labels, truth) / truth.size


class SpectralExpanding(_SpectralRecovery):
    """Spectral estimate on a core subgraph, progressive estimation of the
    remaining vertices in recovery order, then local refinement.

    Parameters
    ----------
    t_max : int, optional
        Cap on refinement rounds; ``ceil(log2 n) + 2`` when unset.
    matrix_mode : {"first", "aggregate"}
        Use only the first sample per edge in the spectral stage, or sum them.
    early_stop : bool
        Stop refining once a round changes no label.
    random_state : int, Generator or None
        Seeds the power-iteration start vector.
    """

    _algorithm = EXPANDING

    def __init__(self, t_max=None, matrix_mode=FIRST_SAMPLE, early_stop=True, random_state=None):
        self.t_max = t_max
        self.matrix_mode = matrix_mode
        self.early_stop = early_stop
        self.random_state = random_state


class SpectralStitching(_SpectralRecovery):
    """Spectral estimates on overlapping windows of the recovery order whose
    global phases are aligned through their overlaps, then local refinement.

    ``window`` (even) defaults to the core size of the topology, i.e. ``r``
    for lines and rings.
    """

    _algorithm = STITCHING

    def __init__(self, window=None, t_max=None, matrix_mode=FIRST_SAMPLE, early_stop=True, random_state=None):
        self.window = window
        self.t_max = t_max
        self.matrix_mode = matrix_mode
        self.early_stop = early_stop
        self.random_state = random_state
