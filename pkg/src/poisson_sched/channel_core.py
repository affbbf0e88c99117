"""Channel model for two Bernoulli-modulated Poisson sources and one counter.

The counter spends ``t1`` on source 1, ``t2`` on source 2 and ``t3`` on the
superposition of both.  Given the source bits ``(x1, x2)`` the three counts
are independent Poisson variables with means

    mu1 = rate(x1) * t1
    mu2 = rate(x2) * t2
    mu3 = (rate(x1) + rate(x2)) * t3

where ``rate(0) = lambda0`` and ``rate(1) = lambda1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, pdtrc, xlogy

EPS_DEFAULT = 2.0**-53
SIMPLEX_TOL = 1e-12

# (x1, x2) in the fixed order used throughout: 00, 01, 10, 11
STATES = ((0, 0), (0, 1), (1, 0), (1, 1))
STATE_LABELS = ("00", "01", "10", "11")

_EXTENDED = np.finfo(np.longdouble).eps < 2.0**-60


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


@dataclass(frozen=True)
class ChannelParams:
    lambda0: float
    lambda1: float
    p: float
    T: float = 1.0

    def __post_init__(self):
        for name in ("lambda0", "lambda1", "p", "T"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.lambda0 <= 0 or self.lambda1 <= 0:
            raise DomainError("rates must be positive")
        if self.lambda0 > self.lambda1:
            raise DomainError(
                f"lambda0 ({self.lambda0}) must not exceed lambda1 ({self.lambda1})"
            )
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"prior p must lie in (0, 1), got {self.p}")
        if self.T <= 0:
            raise DomainError(f"total time T must be positive, got {self.T}")

    @property
    def degenerate(self) -> bool:
        """True when both rates coincide and the channel carries no information."""
        return self.lambda0 == self.lambda1

    def rate(self, bit: int) -> float:
        return self.lambda1 if bit else self.lambda0


@dataclass(frozen=True)
class TimeAllocation:
    """Dwell times for the three counter configurations.

    Only nonnegativity is enforced here; use :meth:`on_simplex` or
    :func:`check_simplex` where the total-time constraint applies.
    """

    t1: float
    t2: float
    t3: float

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be a nonnegative number, got {value!r}")

    @classmethod
    def on_simplex(cls, t1, t2, t3, T=1.0, tol=SIMPLEX_TOL):
        alloc = cls(float(t1), float(t2), float(t3))
        check_simplex(alloc, T, tol)
        return alloc

    @classmethod
    def symmetric(cls, alpha, T=1.0):
        """Point ``((T - alpha)/2, (T - alpha)/2, alpha)`` on the symmetry line."""
        if not 0.0 <= alpha <= T:
            raise DomainError(f"alpha must lie in [0, {T}], got {alpha}")
        half = (T - alpha) / 2.0
        return cls(half, half, float(alpha))

    @property
    def total(self) -> float:
        return self.t1 + self.t2 + self.t3

    def swapped(self) -> "TimeAllocation":
        return TimeAllocation(self.t2, self.t1, self.t3)

    def as_tuple(self):
        return (self.t1, self.t2, self.t3)


def check_simplex(alloc: TimeAllocation, T: float, tol: float = SIMPLEX_TOL) -> None:
    if abs(alloc.total - T) > tol:
        raise DomainError(
            f"allocation {alloc.as_tuple()} sums to {alloc.total!r}, expected T={T!r}"
        )


@dataclass(frozen=True)
class HypothesisState:
    x1: int
    x2: int
    prior: float
    intensities: tuple

    @property
    def label(self) -> str:
        return f"{self.x1}{self.x2}"


@dataclass(frozen=True, eq=False)
class TruncatedPmfTable:
    """Poisson pmf on ``0..upper``; mass above ``upper`` is taken to be zero."""

    intensity: float
    upper: int
    probs: np.ndarray = field(repr=False)

    @property
    def tail_mass(self) -> float:
        return 1.0 - math.fsum(self.probs)

    def cdf(self) -> np.ndarray:
        return np.minimum(np.cumsum(self.probs), 1.0)


def prior_pmf(x1: int, x2: int, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"prior p must lie in (0, 1), got {p}")
    if x1 not in (0, 1) or x2 not in (0, 1):
        raise DomainError(f"state bits must be 0 or 1, got ({x1}, {x2})")
    return (p if x1 else 1.0 - p) * (p if x2 else 1.0 - p)


def poisson_pmf(y: int, mu: float) -> float:
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"Poisson mean must be nonnegative, got {mu}")
    if y < 0:
        return 0.0
    if mu == 0.0:
        return 1.0 if y == 0 else 0.0
    return math.exp(-mu + y * math.log(mu) - math.lgamma(y + 1))


def poisson_logpmf(y, mu):
    """Vectorised log pmf; ``mu == 0`` gives ``0`` at ``y == 0`` and ``-inf`` elsewhere."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return xlogy(y, mu) - mu - gammaln(y + 1.0)


def truncation_bound(mu: float, eps: float = EPS_DEFAULT) -> int:
    """Smallest ``x`` such that ``P(Poisson(mu) > x) <= eps``."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"Poisson mean must be nonnegative, got {mu}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return _truncation_bound(float(mu), float(eps))


@lru_cache(maxsize=65536)
def _truncation_bound(mu, eps):
    if mu == 0.0:
        return 0
    lo = 0
    width = int(mu + 12.0 * math.sqrt(mu) + 64)
    while True:
        xs = np.arange(lo, lo + width)
        hits = np.flatnonzero(pdtrc(xs, mu) <= eps)
        if hits.size:
            return int(xs[hits[0]])
        lo += width


def pmf_vector(mu: float, upper: int) -> np.ndarray:
    """Poisson pmf for ``y = 0..upper`` as float64.

    Built by the ratio recurrence ``P(y) = P(y - 1) * mu / y`` in extended
    precision so that every entry is correctly rounded to about one ulp and
    the float64 entries sum to within ``2**-53`` of the exact truncated mass.
    """
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"Poisson mean must be nonnegative, got {mu}")
    if upper < 0:
        raise DomainError("upper must be nonnegative")
    return _pmf_vector(float(mu), int(upper)).copy()


@lru_cache(maxsize=4096)
def _pmf_vector(mu, upper):
    if mu == 0.0:
        out = np.zeros(upper + 1)
        out[0] = 1.0
        return out
    if not _EXTENDED:
        return _pmf_vector_mpmath(mu, upper)
    ratios = np.empty(upper + 1, dtype=np.longdouble)
    ratios[0] = np.exp(-np.longdouble(mu))
    ks = np.arange(1, upper + 1, dtype=np.longdouble)
    ratios[1:] = np.longdouble(mu) / ks
    if ratios[0] == 0:
        # exp(-mu) below the extended range: accumulate in log space instead
        logs = np.cumsum(np.log(ratios[1:]))
        out = np.empty(upper + 1, dtype=np.longdouble)
        out[0] = -np.longdouble(mu)
        out[1:] = logs - np.longdouble(mu)
        return np.exp(out).astype(np.float64)
    return np.cumprod(ratios).astype(np.float64)


def _pmf_vector_mpmath(mu, upper):
    import mpmath

    with mpmath.workdps(30):
        term = mpmath.exp(-mpmath.mpf(mu))
        out = np.empty(upper + 1)
        out[0] = float(term)
        for k in range(1, upper + 1):
            term = term * mu / k
            out[k] = float(term)
    return out


def pmf_table(mu: float, upper: int | None = None, eps: float = EPS_DEFAULT) -> TruncatedPmfTable:
    if upper is None:
        upper = truncation_bound(mu, eps)
    return TruncatedPmfTable(float(mu), int(upper), pmf_vector(mu, upper))


def intensity_vector(x1: int, x2: int, alloc: TimeAllocation, params: ChannelParams):
    r1 = params.rate(x1)
    r2 = params.rate(x2)
    return (r1 * alloc.t1, r2 * alloc.t2, (r1 + r2) * alloc.t3)


def hypotheses(params: ChannelParams, alloc: TimeAllocation):
    """The four source states in the order 00, 01, 10, 11."""
    return [
        HypothesisState(x1, x2, prior_pmf(x1, x2, params.p), intensity_vector(x1, x2, alloc, params))
        for x1, x2 in STATES
    ]


@dataclass(frozen=True, eq=False)
class PmfTables:
    """Per-dimension pmf tables sharing one cutoff per dimension.

    ``dims[i]`` maps each distinct intensity of dimension ``i`` to its table;
    ``index[k][i]`` is the intensity used by hypothesis ``k`` in dimension ``i``.
    """

    dims: tuple
    index: tuple
    uppers: tuple
    eps: float

    def table(self, state: int, dim: int) -> TruncatedPmfTable:
        return self.dims[dim][self.index[state][dim]]

    @property
    def cells(self) -> int:
        return math.prod(u + 1 for u in self.uppers)

    def all_tables(self):
        for dim in self.dims:
            yield from dim.values()


def build_pmf_tables(alloc: TimeAllocation, params: ChannelParams, eps: float = EPS_DEFAULT) -> PmfTables:
    index = tuple(intensity_vector(x1, x2, alloc, params) for x1, x2 in STATES)
    dims = []
    uppers = []
    for d in range(3):
        mus = sorted({row[d] for row in index})
        upper = truncation_bound(mus[-1], eps)
        dims.append({mu: pmf_table(mu, upper) for mu in mus})
        uppers.append(upper)
    return PmfTables(tuple(dims), index, tuple(uppers), eps)
