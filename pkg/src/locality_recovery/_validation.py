"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import numbers

import numpy as np


def check_rng(seed=None) -> np.random.Generator:
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an int, a :class:`~numpy.random.SeedSequence` or an
    existing generator (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a Generator from {type(seed).__name__}")


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_bits(bits, n: int | None = None, name: str = "bits") -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must only contain 0/1 values")
    if n is not None and arr.size != n:
        raise ValueError(f"{name} has length {arr.size}, expected {n}")
    return arr.astype(np.uint8)


def check_sample_set(samples):
    """Validate a pairwise or multi-linked sample set before recovery."""
    # local import: sampling imports this module
    from .sampling import HyperSampleSet, SampleSet

    if not isinstance(samples, (SampleSet, HyperSampleSet)):
        raise TypeError(
            f"expected a SampleSet or HyperSampleSet, got {type(samples).__name__}"
        )
    if samples.n < 1:
        raise ValueError("sample set has no vertices")
    return samples
