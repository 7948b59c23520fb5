"""Chernoff information and minimum sample complexities (natural logs throughout)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .topology import Family

# beta/gamma crossover for finite n; lines and grids with r >= n**LINEAR_CROSSOVER
# (grids: r**2) are treated as the linear-radius regime
LINEAR_CROSSOVER = 0.95
WEIGHT_RATIO_WARNING = 100.0


class LimitError(ValueError):
    pass


class ThetaOutOfRange(LimitError):
    pass


class ZeroDivergence(LimitError):
    pass


class UnsupportedCombination(LimitError):
    pass


class InvalidDistribution(LimitError):
    pass


class WeightRatioWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FiniteDistPair:
    support: tuple
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        if p0.shape != p1.shape or p0.ndim != 1 or p0.size != len(self.support):
            raise InvalidDistribution("p0, p1 and support must have matching lengths")
        for p in (p0, p1):
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise InvalidDistribution("probability vectors must be nonnegative and sum to 1")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)


@dataclass(frozen=True)
class LimitSpec:
    """Model family plus the parameters entering the sample-complexity limit.

    Exactly one noise parametrisation is set: ``theta`` (pairwise) or
    ``(L, p)`` (multi-linked). ``beta``/``gamma`` override the values
    inferred from ``(n, r)`` for lines and grids.
    """

    family: Family
    n: int
    r: int | None = None
    theta: float | None = None
    L: int | None = None
    p: float | None = None
    beta: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        pairwise = self.theta is not None
        multilink = self.L is not None or self.p is not None
        if pairwise == multilink:
            raise LimitError("set exactly one of theta or (L, p)")
        if pairwise and not (0 < self.theta < 1):
            raise ThetaOutOfRange(f"theta must lie in (0, 1), got {self.theta}")
        if multilink:
            if self.L is None or self.p is None:
                raise LimitError("multi-linked limits need both L and p")
            if self.L < 2 or not 0 < self.p < 0.5:
                raise LimitError("need L >= 2 and 0 < p < 0.5")
        if self.n < 2:
            raise LimitError("n must be at least 2")


def kl_half_theta(theta) -> float:
    """KL(Bern(0.5) || Bern(theta))."""
    if not 0 < theta < 1:
        raise ThetaOutOfRange(f"theta must lie in (0, 1), got {theta}")
    # -ln 2 - (ln theta + ln(1 - theta)) / 2, with log1p for accuracy near 0
    return -math.log(2.0) - 0.5 * (math.log(theta) + math.log1p(-theta))


def _log_affinity(lp0, lp1, tau):
    # ln sum p0^tau p1^(1-tau); 0^0 = 1
    with np.errstate(invalid="ignore"):
        terms = np.where(lp0 == -np.inf, 0.0 if tau == 0 else -np.inf, tau * lp0)
        terms = terms + np.where(lp1 == -np.inf, 0.0 if tau == 1 else -np.inf, (1 - tau) * lp1)
    return float(logsumexp(terms))


def chernoff_information(pair: FiniteDistPair, tol=1e-12, max_iter=200) -> float:
    """Chernoff information by golden-section search over tau in [0, 1].

    The log-affinity is convex in tau, so the search is exact up to ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    with np.errstate(divide="ignore"):
        lp0, lp1 = np.log(pair.p0), np.log(pair.p1)
    f = lambda t: _log_affinity(lp0, lp1, t)  # noqa: E731
    invphi = (math.sqrt(5) - 1) / 2
    a, b = 0.0, 1.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best = min(fc, fd, f(0.0), f(1.0), f(0.5 * (a + b)))
    return max(0.0, -best)


def _multilink_log_terms(L, p):
    if L < 2 or not 0 < p < 0.5:
        raise LimitError("need L >= 2 and 0 < p < 0.5")
    i = np.arange(L)
    lp, lq = math.log(p), math.log1p(-p)
    lbinom = np.array([math.lgamma(L) - math.lgamma(k + 1) - math.lgamma(L - k) for k in i])
    a = np.logaddexp(i * lp + (L - i) * lq, i * lq + (L - i) * lp)
    c = np.logaddexp((i + 1) * lp + (L - i - 1) * lq, (i + 1) * lq + (L - i - 1) * lp)
    return lbinom, a, c


def multilink_distributions(L, p) -> FiniteDistPair:
    """Laws of the number of disagreeing partners seen by a vertex labelled 0 / 1."""
    lbinom, a, _ = _multilink_log_terms(L, p)
    p0 = np.exp(lbinom + a)
    p0 /= p0.sum()
    # P1(i) = P0(L-1-i); building P1 by reversal keeps the mirror symmetry exact
    return FiniteDistPair(tuple(range(L)), p0, p0[::-1].copy())


def multilink_chernoff_closed_form(L, p) -> float:
    """Chernoff information of the multi-linked pair, evaluated at tau = 1/2 in log space."""
    lbinom, a, c = _multilink_log_terms(L, p)
    return float(-logsumexp(lbinom + 0.5 * (a + c)))


def hellinger_exponent(dstar) -> float:
    """Chernoff-Hellinger divergence ``1 - exp(-D*)``."""
    return -math.expm1(-dstar)


def divergence(spec: LimitSpec) -> float:
    if spec.theta is not None:
        return kl_half_theta(spec.theta)
    return multilink_chernoff_closed_form(spec.L, spec.p)


def line_parameters(n, r, crossover=LINEAR_CROSSOVER):
    """Return ``("beta", ln r / ln n)`` or ``("gamma", r / n)`` for a line."""
    if r < n**crossover:
        return "beta", math.log(r) / math.log(n)
    return "gamma", r / n


def m_star(spec: LimitSpec, crossover=LINEAR_CROSSOVER) -> float:
    """Minimum expected sample size for exact recovery."""
    dstar = divergence(spec)
    if dstar <= 0:
        raise ZeroDivergence("the two hypotheses are indistinguishable")
    h = hellinger_exponent(dstar)
    n = spec.n
    nlogn = n * math.log(n)
    fam = spec.family
    if spec.L is not None:
        if fam is not Family.RING:
            raise UnsupportedCombination("multi-linked limits are only available for rings")
        return nlogn / (spec.L * h)
    if fam in (Family.RING, Family.SMALLWORLD, Family.COMPLETE):
        return nlogn / (2 * h)
    if fam is Family.LINE:
        if spec.gamma is not None:
            kind, val = "gamma", spec.gamma
        elif spec.beta is not None:
            kind, val = "beta", spec.beta
        else:
            kind, val = line_parameters(n, _need_r(spec), crossover)
        if kind == "gamma":
            return (1 - val / 2) * nlogn / h
        return max(0.5, val) * nlogn / h
    if fam is Family.GRID:
        if spec.beta is not None:
            beta = spec.beta
        else:
            r = _need_r(spec)
            if r * r >= n**crossover:
                raise UnsupportedCombination("grid limit needs r = n^beta with beta < 1/2")
            beta = math.log(r) / math.log(n)
        if not 0 < beta < 0.5:
            raise UnsupportedCombination("grid limit needs 0 < beta < 1/2")
        return max(0.5, 4 * beta) * nlogn / h
    raise UnsupportedCombination(f"no limit for family {fam}")


def _need_r(spec):
    if spec.r is None or spec.r < 1:
        raise LimitError("this family needs a locality radius r (or beta/gamma)")
    return spec.r


def genie_error_exponent(lambda_dv, dstar) -> float:
    """Exponent ``lambda d_v (1 - e^{-D*})`` of the single-vertex genie error."""
    if lambda_dv < 0 or dstar < 0:
        raise ValueError("inputs must be nonnegative")
    if math.isinf(dstar):
        return float(lambda_dv)
    return lambda_dv * hellinger_exponent(dstar)


def check_weight_ratio(weights) -> float:
    """Warn when max/min sampling weight leaves the bounded-ratio regime."""
    w = np.asarray(list(weights.values()) if isinstance(weights, dict) else weights, dtype=float)
    ratio = float(w.max() / w.min())
    if ratio > WEIGHT_RATIO_WARNING:
        warnings.warn(
            f"sampling weight ratio {ratio:.3g} exceeds {WEIGHT_RATIO_WARNING:g}; the limit assumes a bounded ratio",
            WeightRatioWarning,
            stacklevel=2,
        )
    return ratio
