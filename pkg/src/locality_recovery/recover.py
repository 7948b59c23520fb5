"""Spectral-Expanding and Spectral-Stitching, pairwise and multi-linked.

All stages work on 0-based vertex ids and on positions in the topology's
recovery order (``topology.position[v]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_rng
from .sampling import HyperSampleSet, Labeling, SampleSet
from .spectral import AGGREGATE, FIRST_SAMPLE, leading_eigvec_signs, signed_matrix
from .topology import HyperTopology, MeasurementTopology

EXPANDING = "expanding"
STITCHING = "stitching"
_P_FLOOR = 1e-12


class RecoveryError(ValueError):
    pass


class WindowLargerThanN(RecoveryError):
    pass


class TooLarge(RecoveryError):
    pass


@dataclass
class RecoveryConfig:
    algorithm: str = EXPANDING
    t_max: int | None = None
    window: int | None = None
    matrix_mode: str = FIRST_SAMPLE
    early_stop: bool = True
    spectral_tol: float = 1e-8

    def __post_init__(self):
        if self.algorithm not in (EXPANDING, STITCHING):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.matrix_mode not in (FIRST_SAMPLE, AGGREGATE):
            raise ValueError(f"unknown matrix mode {self.matrix_mode!r}")
        if self.window is not None and (self.window < 2 or self.window % 2):
            raise ValueError("stitching window must be even and >= 2")
        if self.t_max is not None and self.t_max < 0:
            raise ValueError("t_max must be nonnegative")


@dataclass
class RecoveryResult:
    labeling: Labeling
    initial: Labeling
    iterations_used: int
    per_iteration_changes: list = field(default_factory=list)
    stage_flags: list = field(default_factory=list)
    oscillating: bool = False


def default_t_max(n: int) -> int:
    return math.ceil(math.log2(n)) + 2


def default_window(topology: MeasurementTopology) -> int:
    return max(2, 2 * (topology.core // 2))


def majority_vote(bits) -> int:
    """1 iff strictly more than half of ``bits`` are ones (ties and empty give 0)."""
    bits = list(bits)
    return 1 if 2 * sum(bits) > len(bits) else 0


# -- shared stages ----------------------------------------------------------------


def _spectral_block(pa, pb, y, start, stop, config, rng):
    """Spectral estimate for the order positions ``start..stop-1``."""
    inside = (pa >= start) & (pa < stop) & (pb >= start) & (pb < stop)
    mat = signed_matrix(pa[inside] - start, pb[inside] - start, y[inside], stop - start, config.matrix_mode)
    return leading_eigvec_signs(mat, rng=rng, tol=config.spectral_tol)


def _stage1_core(top, pa, pb, y, config, rng, est, flags):
    res = _spectral_block(pa, pb, y, 0, top.core, config, rng)
    if res.degenerate:
        flags.append("stage1:degenerate")
    est[top.order[: top.core]] = res.labeling.bits


def _windows(n, width):
    if width > n:
        raise WindowLargerThanN(f"window {width} exceeds n={n}")
    out, start = [], 0
    while True:
        stop = min(start + width, n)
        out.append((start, stop))
        if stop >= n:
            return out
        start += width // 2


def calibrate_phase(previous_overlap, window_bits):
    """Flip ``window_bits`` when its head disagrees with ``previous_overlap``
    on more than half of the shared positions; returns ``(bits, flipped)``."""
    prev = np.asarray(previous_overlap, dtype=np.uint8)
    bits = np.asarray(window_bits, dtype=np.uint8)
    disagree = int(np.count_nonzero(bits[: prev.size] != prev))
    if disagree > 0.5 * prev.size:
        return bits ^ 1, True
    return bits.copy(), False


def _stitch(top, pa, pb, y, config, rng, est, flags):
    """Spectral estimates on overlapping windows with phase calibration."""
    width = config.window or default_window(top)
    lo, hi = np.minimum(pa, pb), np.maximum(pa, pb)
    idx = np.argsort(lo, kind="stable")
    lo, hi, ys = lo[idx], hi[idx], y[idx]
    prev, prev_stop = None, None
    flips = 0
    for w, (start, stop) in enumerate(_windows(top.n, width)):
        a, b = np.searchsorted(lo, [start, stop])
        sel = slice(a, b)
        inside = hi[sel] < stop
        mat = signed_matrix(lo[sel][inside] - start, hi[sel][inside] - start, ys[sel][inside],
                            stop - start, config.matrix_mode)
        res = leading_eigvec_signs(mat, rng=rng, tol=config.spectral_tol)
        if res.degenerate:
            flags.append(f"stage1:degenerate_window:{w}")
        bits = res.labeling.bits.copy()
        if prev is not None:
            overlap = prev_stop - start
            bits, flipped = calibrate_phase(prev[-overlap:], bits)
            flips += flipped
        est[top.order[start:stop]] = bits
        prev, prev_stop = bits, stop
    flags.append(f"stitch:flipped_windows:{flips}")


def _stage2_majority(top, u, v, y, pa, pb, est, flags):
    """Progressive estimation from backward samples only."""
    core, n = top.core, top.n
    if core >= n:
        return
    last = np.maximum(pa, pb)
    keep = last >= core
    last = last[keep]
    earlier = np.where(pa < pb, u, v)[keep]
    ys = y[keep]
    idx = np.argsort(last, kind="stable")
    last, earlier, ys = last[idx], earlier[idx], ys[idx]
    bounds = np.searchsorted(last, np.arange(core, n + 1))
    order = top.order
    missing = 0
    for k in range(core, n):
        a, b = bounds[k - core], bounds[k - core + 1]
        if a == b:
            est[order[k]] = 0
            missing += 1
            continue
        ones = np.count_nonzero(ys[a:b] ^ est[earlier[a:b]])
        est[order[k]] = 1 if 2 * ones > b - a else 0
    if missing:
        flags.append(f"stage2:no_backward_samples:{missing}")


def _refine(est, update, t_max, early_stop):
    """Synchronous refinement rounds; returns (estimate, changes, oscillating)."""
    changes = []
    before = None
    for _ in range(t_max):
        new = update(est)
        changed = int(np.count_nonzero(new != est))
        changes.append(changed)
        if before is not None and changed and np.array_equal(new, before):
            before, est = est, new
            return est, changes, True
        before, est = est, new
        if early_stop and changed == 0:
            break
    return est, changes, False


def _majority_update(u, v, y, n):
    idx = np.concatenate([u, v])
    partner = np.concatenate([v, u])
    ys = np.concatenate([y, y])
    total = np.bincount(idx, minlength=n)

    def update(est):
        ones = np.bincount(idx, weights=ys ^ est[partner], minlength=n)
        return (2 * ones > total).astype(np.uint8)

    return update


def _check_pairwise(samples):
    if not isinstance(samples, SampleSet):
        raise TypeError("pairwise recovery needs a SampleSet")
    if samples.theta >= 0.5:
        raise RecoveryError("recovery assumes theta < 0.5; flip the parities first")


def _run_pairwise(topology, samples, config, rng, stitch):
    _check_pairwise(samples)
    config = config or RecoveryConfig(algorithm=STITCHING if stitch else EXPANDING)
    rng = check_rng(rng)
    n = topology.n
    u, v, y = samples.u, samples.v, samples.y
    pos = topology.position
    pa, pb = pos[u], pos[v]
    est = np.zeros(n, dtype=np.uint8)
    flags = []
    if stitch:
        _stitch(topology, pa, pb, y, config, rng, est, flags)
    else:
        _stage1_core(topology, pa, pb, y, config, rng, est, flags)
        _stage2_majority(topology, u, v, y, pa, pb, est, flags)
    initial = Labeling(est)
    t_max = default_t_max(n) if config.t_max is None else config.t_max
    final, changes, osc = _refine(est, _majority_update(u, v, y, n), t_max, config.early_stop)
    if osc:
        flags.append("stage3:oscillation")
    return RecoveryResult(Labeling(final), initial, len(changes), changes, flags, osc)


def spectral_expanding(topology, samples, config=None, rng=None) -> RecoveryResult:
    """Core spectral estimate, progressive majority over backward samples,
    then synchronous local majority refinement."""
    return _run_pairwise(topology, samples, config, rng, stitch=False)


def spectral_stitching(topology, samples, config=None, rng=None) -> RecoveryResult:
    return _run_pairwise(topology, samples, config, rng, stitch=True)


# -- multi-linked samples ---------------------------------------------------------------


def _log_probs(p):
    p = min(max(p, _P_FLOOR), 0.5)
    return math.log(p), math.log1p(-p)


def _pair_terms(vals, est_vals, lp, lq):
    match = vals == est_vals
    return np.where(match, lq, lp), np.where(match, lp, lq)


def _candidate_llr(a_rest, b_rest, vals, lp, lq):
    """ln P(sample | X_k=1) - ln P(sample | X_k=0) given the other vertices' terms."""
    one = vals == 1
    c1_0, c1_1 = np.where(one, lq, lp), np.where(one, lp, lq)
    return np.logaddexp(a_rest + c1_0, b_rest + c1_1) - np.logaddexp(a_rest + c1_1, b_rest + c1_0)


class _LinkedData:
    """Samples with at least two vertices; singletons carry no phase information."""

    def __init__(self, hs: HyperSampleSet):
        sizes = hs.sizes
        keep = np.flatnonzero(sizes >= 2)
        starts = hs.offsets[keep]
        ksz = sizes[keep]
        flat = np.repeat(starts - np.concatenate([[0], np.cumsum(ksz)[:-1]]), ksz) + np.arange(ksz.sum())
        self.verts = hs.vertices[flat]
        self.vals = hs.values[flat]
        self.sizes = ksz
        self.offsets = np.concatenate([[0], np.cumsum(ksz)]).astype(np.int64)
        self.sid = np.repeat(np.arange(keep.size), ksz)
        self.count = keep.size


def local_ml_score(vertex, candidate_bit, current, hyper_samples: HyperSampleSet, p) -> float:
    """Log-likelihood ratio of ``X_vertex = candidate_bit`` against its complement.

    Only samples containing ``vertex`` (1-based) contribute; every other vertex
    is held at ``current``.
    """
    k = int(vertex) - 1
    est = np.array(current, dtype=np.uint8)
    lp, lq = _log_probs(p)
    total = 0.0
    for verts, vals in hyper_samples:
        verts = np.asarray(verts) - 1
        if k not in verts:
            continue
        vals = np.asarray(vals, dtype=np.uint8)
        here = verts == k
        l0, l1 = _pair_terms(vals[~here], est[verts[~here]], lp, lq)
        total += float(_candidate_llr(l0.sum(), l1.sum(), vals[here], lp, lq).sum())
    return total if candidate_bit == 1 else -total


def _ml_update(data: _LinkedData, n, lp, lq):
    verts, vals, sid, count = data.verts, data.vals, data.sid, data.count

    def update(est):
        l0, l1 = _pair_terms(vals, est[verts], lp, lq)
        a = np.bincount(sid, weights=l0, minlength=count)[sid] - l0
        b = np.bincount(sid, weights=l1, minlength=count)[sid] - l1
        score = np.bincount(verts, weights=_candidate_llr(a, b, vals, lp, lq), minlength=n)
        return (score >= 0).astype(np.uint8)

    return update


def _stage2_ml(top, data: _LinkedData, est, lp, lq, flags):
    core, n = top.core, top.n
    if core >= n or data.count == 0:
        if core < n:
            est[top.order[core:]] = 0
            flags.append(f"stage2:no_backward_samples:{n - core}")
        return
    pos = top.position[data.verts]
    last = np.maximum.reduceat(pos, data.offsets[:-1])
    keep = np.flatnonzero(last >= core)
    idx = keep[np.argsort(last[keep], kind="stable")]
    last = last[idx]
    sizes = data.sizes[idx]
    starts = data.offsets[idx]
    flat = np.repeat(starts - np.concatenate([[0], np.cumsum(sizes)[:-1]]), sizes) + np.arange(sizes.sum())
    verts, vals = data.verts[flat], data.vals[flat]
    sid = np.repeat(np.arange(idx.size), sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)])
    bounds = np.searchsorted(last, np.arange(core, n + 1))
    missing = 0
    for k in range(core, n):
        sa, sb = bounds[k - core], bounds[k - core + 1]
        vk = top.order[k]
        if sa == sb:
            est[vk] = 0
            missing += 1
            continue
        fa, fb = offs[sa], offs[sb]
        fv, fy, ls = verts[fa:fb], vals[fa:fb], sid[fa:fb] - sa
        l0, l1 = _pair_terms(fy, est[fv], lp, lq)
        here = fv == vk
        others = ~here
        a = np.bincount(ls[others], weights=l0[others], minlength=sb - sa)
        b = np.bincount(ls[others], weights=l1[others], minlength=sb - sa)
        score = _candidate_llr(a[ls[here]], b[ls[here]], fy[here], lp, lq).sum()
        est[vk] = 1 if score >= 0 else 0
    if missing:
        flags.append(f"stage2:no_backward_samples:{missing}")


def _as_topology(topology):
    return topology.base if isinstance(topology, HyperTopology) else topology


def _run_multilink(topology, hs, config, rng, stitch):
    if not isinstance(hs, HyperSampleSet):
        raise TypeError("multi-linked recovery needs a HyperSampleSet")
    top = _as_topology(topology)
    config = config or RecoveryConfig(algorithm=STITCHING if stitch else EXPANDING)
    rng = check_rng(rng)
    n = top.n
    lp, lq = _log_probs(hs.p)
    u, v, y = hs.pairwise()
    pos = top.position
    pa, pb = pos[u], pos[v]
    data = _LinkedData(hs)
    est = np.zeros(n, dtype=np.uint8)
    flags = []
    if stitch:
        _stitch(top, pa, pb, y, config, rng, est, flags)
    else:
        _stage1_core(top, pa, pb, y, config, rng, est, flags)
        _stage2_ml(top, data, est, lp, lq, flags)
    initial = Labeling(est)
    t_max = default_t_max(n) if config.t_max is None else config.t_max
    final, changes, osc = _refine(est, _ml_update(data, n, lp, lq), t_max, config.early_stop)
    if osc:
        flags.append("stage3:oscillation")
    return RecoveryResult(Labeling(final), initial, len(changes), changes, flags, osc)


def spectral_expanding_multilink(topology, hyper_samples, config=None, rng=None) -> RecoveryResult:
    return _run_multilink(topology, hyper_samples, config, rng, stitch=False)


def spectral_stitching_multilink(topology, hyper_samples, config=None, rng=None) -> RecoveryResult:
    return _run_multilink(topology, hyper_samples, config, rng, stitch=True)


# -- exhaustive oracle -------------------------------------------------------------------


def brute_force_ml(topology, samples: SampleSet, theta=None, max_n=20) -> Labeling:
    """Exhaustive maximum likelihood over all labelings with ``X_1 = 0``.

    For a common flip rate below 1/2 the likelihood is monotone in the number
    of agreeing samples; ties go to the lexicographically smallest labeling.
    """
    n = topology.n
    if n > max_n:
        raise TooLarge(f"brute force is limited to n <= {max_n}")
    if theta is not None and not theta < 0.5:
        raise RecoveryError("brute force ML assumes theta < 0.5")
    keys, inverse = np.unique(samples.u * n + samples.v, return_inverse=True)
    ones = np.bincount(inverse, weights=samples.y, minlength=keys.size)
    total = np.bincount(inverse, minlength=keys.size)
    gain = ones - (total - ones)  # extra agreements when the edge parity is 1
    eu, ev = keys // n, keys % n
    best_score, best = -np.inf, 0
    size = 1 << (n - 1)
    chunk = 1 << 14
    shifts = np.arange(n - 1, -1, -1)
    for a in range(0, size, chunk):
        codes = np.arange(a, min(size, a + chunk))
        bits = (codes[:, None] >> shifts[None, :]) & 1
        score = ((bits[:, eu] ^ bits[:, ev]) * gain).sum(axis=1)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score, best = score[i], int(codes[i])
    return Labeling(((best >> shifts) & 1).astype(np.uint8))
