"""Spectral initialisation: signed sample matrix and its leading eigenvector."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ._validation import check_rng
from .sampling import Labeling

FIRST_SAMPLE = "first"
AGGREGATE = "aggregate"


class SpectralEstimate(NamedTuple):
    labeling: Labeling
    vector: np.ndarray
    iterations: int
    converged: bool
    degenerate: bool


def signed_matrix(a, b, y, dim, mode=FIRST_SAMPLE) -> sp.csr_array:
    """Symmetric matrix with +1 for a 0-parity and -1 for a 1-parity.

    ``a`` and ``b`` are local (0-based) row indices of the sample endpoints.
    In ``first`` mode only the first observation per edge counts; in
    ``aggregate`` mode the signed observations are summed.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    sign = 1.0 - 2.0 * np.asarray(y, dtype=float)
    keep = a != b
    a, b, sign = a[keep], b[keep], sign[keep]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    if mode == FIRST_SAMPLE:
        _, first = np.unique(lo * dim + hi, return_index=True)
        lo, hi, sign = lo[first], hi[first], sign[first]
    elif mode != AGGREGATE:
        raise ValueError(f"unknown matrix mode {mode!r}")
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    vals = np.concatenate([sign, sign])
    mat = sp.coo_array((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def build_sample_matrix(samples, subset, mode=FIRST_SAMPLE) -> sp.csr_array:
    """Sample matrix of the subgraph induced by ``subset`` (1-based vertex ids).

    Row ``k`` corresponds to ``subset[k]``.
    """
    subset = np.asarray(subset, dtype=np.int64) - 1
    if np.unique(subset).size != subset.size:
        raise ValueError("subset vertices must be distinct")
    if subset.size and (subset.min() < 0 or subset.max() >= samples.n):
        raise ValueError("subset vertex out of range")
    local = np.full(samples.n, -1, dtype=np.int64)
    local[subset] = np.arange(subset.size)
    a, b = local[samples.u], local[samples.v]
    inside = (a >= 0) & (b >= 0)
    return signed_matrix(a[inside], b[inside], samples.y[inside], subset.size, mode)


def default_max_iter(dim: int) -> int:
    return 100 * max(1, math.ceil(math.log(dim))) if dim > 1 else 1


def leading_eigvec_signs(matrix, rng=None, tol=1e-8, max_iter=None, start=None) -> SpectralEstimate:
    """Round the leading eigenvector of ``matrix`` to bits (``u_i >= 0`` gives 1).

    Power iteration runs on ``A + s I`` with ``s = 1 + max_i sum_j |A_ij|``,
    which makes the algebraically largest eigenvalue dominant and positive.
    """
    mat = sp.csr_array(matrix)
    dim = mat.shape[0]
    if dim < 1:
        raise ValueError("empty matrix")
    if dim == 1:
        return SpectralEstimate(Labeling([1]), np.ones(1), 0, True, False)
    if mat.nnz == 0:
        return SpectralEstimate(Labeling(np.zeros(dim, dtype=np.uint8)), np.zeros(dim), 0, True, True)
    if max_iter is None:
        max_iter = default_max_iter(dim)
    shift = 1.0 + float(np.abs(mat).sum(axis=1).max())
    if start is None:
        x = check_rng(rng).standard_normal(dim)
    else:
        x = np.asarray(start, dtype=float).copy()
    x /= np.linalg.norm(x)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        z = mat @ x + shift * x
        z /= np.linalg.norm(z)
        if np.linalg.norm(z - x) < tol:
            x = z
            converged = True
            break
        x = z
    bits = (x >= 0).astype(np.uint8)
    return SpectralEstimate(Labeling(bits), x, it, converged, False)
