"""Independent numerical oracles for tests and the ``selftest`` command.

Nothing in the recovery path imports this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    name: str
    observed: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.observed - self.expected) <= self.tolerance

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: observed={self.observed:.12g} "
                f"expected={self.expected:.12g} tol={self.tolerance:g}")


def dense_top_eigvec(matrix, tol=1e-12, max_sweeps=100):
    """Algebraically largest eigenpair of a small symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(matrix, dtype=float)
    dim = a.shape[0]
    if a.ndim != 2 or a.shape[1] != dim:
        raise OracleError("matrix must be square")
    if dim > 64:
        raise OracleError("dense oracle is limited to dim <= 64")
    if not np.allclose(a, a.T, atol=1e-12):
        raise OracleError("matrix must be symmetric")
    vecs = np.eye(dim)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * rp - s * rq, s * rp + c * rq
                vp, vq = vecs[:, p].copy(), vecs[:, q].copy()
                vecs[:, p], vecs[:, q] = c * vp - s * vq, s * vp + c * vq
    k = int(np.argmax(np.diag(a)))
    return float(a[k, k]), vecs[:, k]


def chernoff_tau_grid(p0, p1, gridsize=100_001) -> float:
    """Chernoff information by brute-force minimisation over a uniform tau grid."""
    if gridsize < 1000:
        raise OracleError("gridsize must be at least 1000")
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    tau = np.linspace(0.0, 1.0, gridsize)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p0 > 0, p0**tau, tau == 0) * np.where(p1 > 0, p1 ** (1 - tau), tau == 1)
    return float(-np.log(terms.sum(axis=1)).min())


def empirical_flip_rate(samples, truth) -> float:
    """Fraction of pairwise samples disagreeing with the true parity."""
    if len(samples) == 0:
        raise OracleError("no samples")
    truth = np.asarray(truth, dtype=np.uint8)
    return float(np.mean(samples.y != (truth[samples.u] ^ truth[samples.v])))


def run_selftest(seed=0) -> list[OracleReport]:
    """Cross-check the production routines against the oracles above."""
    from .limits import (
        chernoff_information,
        kl_half_theta,
        multilink_chernoff_closed_form,
        multilink_distributions,
    )
    from .sampling import draw_samples, random_labeling
    from .spectral import leading_eigvec_signs
    from .topology import build_topology

    reports = []
    for theta in (0.05, 0.1, 0.25):
        direct = kl_half_theta(theta)
        grid = chernoff_tau_grid([theta, 1 - theta], [1 - theta, theta])
        reports.append(OracleReport(f"kl_half_theta({theta}) vs tau grid", direct, grid, 1e-6))
    for L, p in ((2, 0.01), (5, 0.05), (10, 0.1)):
        pair = multilink_distributions(L, p)
        reports.append(OracleReport(
            f"closed form D(L={L}, p={p}) vs golden section",
            multilink_chernoff_closed_form(L, p), chernoff_information(pair), 1e-9))
        reports.append(OracleReport(
            f"golden section D(L={L}, p={p}) vs tau grid",
            chernoff_information(pair), chernoff_tau_grid(pair.p0, pair.p1), 1e-6))

    rng = np.random.default_rng(seed)
    for dim in (5, 10, 20):
        m = rng.standard_normal((dim, dim))
        m = m + m.T
        lam, vec = dense_top_eigvec(m)
        reports.append(OracleReport(f"jacobi residual dim={dim}", float(np.linalg.norm(m @ vec - lam * vec)), 0.0, 1e-9))
        est = leading_eigvec_signs(m, rng=rng, tol=1e-13, max_iter=200_000)
        cos = abs(float(est.vector @ vec))
        reports.append(OracleReport(f"power iteration vs jacobi dim={dim} (|cos|)", cos, 1.0, 1e-6))

    top = build_topology("ring", 2000, 20)
    truth = random_labeling(top.n, rng)
    samples = draw_samples(top, truth, 0.1, 100_000, rng)
    reports.append(OracleReport("empirical flip rate theta=0.1", empirical_flip_rate(samples, truth), 0.1, 0.005))
    return reports
