"""Mutual information between the source bits and the observed counts.

All quantities are in bits.  Sums run over the truncated supports built by
:func:`~poisson_sched.channel_core.build_pmf_tables`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from . import _grid
from .channel_core import (
    EPS_DEFAULT,
    STATES,
    ChannelParams,
    DomainError,
    TimeAllocation,
    build_pmf_tables,
    pmf_vector,
    prior_pmf,
    truncation_bound,
)
from ._grid import CellBudgetExceeded  # noqa: F401  (re-exported)

_LN2 = math.log(2.0)
INDIVIDUAL = "individual"
JOINT = "joint"


@dataclass(frozen=True)
class MiResult:
    value: float
    hY: float
    hYgivenX: float
    truncation_upper: tuple
    tail_bound: float


@dataclass(frozen=True)
class ChainTerms:
    term1: float
    term2: float
    term3: float

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3


def scalar_mutual_info(params: ChannelParams, t: float, eps: float = EPS_DEFAULT) -> MiResult:
    """I(X1; Y1) for a single source observed for time ``t``."""
    if t < 0 or not math.isfinite(t):
        raise DomainError(f"observation time must be nonnegative, got {t}")
    mu0 = params.lambda0 * t
    mu1 = params.lambda1 * t
    upper = truncation_bound(max(mu0, mu1), eps)
    a = pmf_vector(mu0, upper)
    b = pmf_vector(mu1, upper)
    p = params.p
    f = (1.0 - p) * a + p * b
    h_y = float(np.sum(entr(f))) / _LN2
    h_a = float(np.sum(entr(a))) / _LN2
    h_b = float(np.sum(entr(b))) / _LN2
    h_yx = (1.0 - p) * h_a + p * h_b
    if params.degenerate:
        # identical components: Y1 is independent of X1
        h_y = h_yx

    bound = 0.0
    for prior, mu, probs in ((1.0 - p, mu0, a), (p, mu1, b)):
        tail, mass = _grid._poisson_entropy_tail(mu, upper, probs)
        bound += prior * (tail - mass * math.log2(prior))
    return MiResult(h_y - h_yx, h_y, h_yx, (upper,), bound)


def _canonical(alloc: TimeAllocation) -> TimeAllocation:
    # I is invariant under t1 <-> t2; fixing the order makes the swap exact
    return alloc.swapped() if alloc.t1 > alloc.t2 else alloc


def vector_mutual_info(
    params: ChannelParams,
    alloc: TimeAllocation,
    eps: float = EPS_DEFAULT,
    cell_budget: int | None = None,
    workers: int | None = None,
) -> MiResult:
    """I(X1, X2; Y1, Y2, Y3) over the truncated grid.

    H(Y) streams the grid slice by slice (y3 outer, y2, y1 inner).  H(Y|X)
    uses the fact that each conditional law is a product measure, so it is a
    prior-weighted sum of 1-D Poisson entropies.
    """
    alloc = _canonical(alloc)
    tables = build_pmf_tables(alloc, params, eps)
    _grid.check_budget(tables, cell_budget)
    priors = [prior_pmf(x1, x2, params.p) for x1, x2 in STATES]

    h_yx = 0.0
    for k in range(4):
        h_yx += priors[k] * sum(_grid.entropy_bits(tables.table(k, d).probs) for d in range(3))
    if params.degenerate:
        return MiResult(0.0, h_yx, h_yx, tables.uppers, _grid.mi_tail_bound(tables, priors))

    factors = _grid.factor_arrays(tables)
    n1, n2, n3 = (u + 1 for u in tables.uppers)

    planes = [np.multiply.outer(b, a) for a, b, _ in factors]
    weights = np.stack([priors[k] * factors[k][2] for k in range(4)], axis=1)

    def slab(z0, z1):
        w = weights[z0:z1, :, None, None]
        m = w[:, 0] * planes[0]
        m += w[:, 1] * planes[1]
        m += w[:, 2] * planes[2]
        m += w[:, 3] * planes[3]
        return entr(m).reshape(z1 - z0, -1).sum(axis=1)[:, None]

    partials = _grid.stream_slices(n3, n1 * n2, slab, 1, workers)
    h_y = float(_grid.reduce_partials(partials)[0]) / _LN2

    return MiResult(
        h_y - h_yx,
        h_y,
        h_yx,
        tables.uppers,
        _grid.mi_tail_bound(tables, priors),
    )


def mi_chain_terms(params: ChannelParams, alloc: TimeAllocation, eps: float = EPS_DEFAULT, **kw) -> ChainTerms:
    """Split I(X;Y) into I(X1;Y1) + I(X2;Y2) + I(X1,X2; Y3 | Y1, Y2)."""
    total = vector_mutual_info(params, alloc, eps, **kw).value
    term1 = scalar_mutual_info(params, alloc.t1, eps).value
    term2 = scalar_mutual_info(params, alloc.t2, eps).value
    return ChainTerms(term1, term2, total - term1 - term2)


def _xlog2x(x):
    return x * math.log2(x) if x > 0 else 0.0


def mi_derivative_at_zero(params: ChannelParams, mode: str = INDIVIDUAL) -> float:
    """Initial information rate dI/dT at T = 0.

    ``individual`` splits the time equally between the two sources,
    ``joint`` spends it all on the summed counts.  Both equal
    ``E[L log2 L] - E[L] log2 E[L]`` for the relevant random rate ``L``.
    """
    l0, l1, p = params.lambda0, params.lambda1, params.p
    if mode == INDIVIDUAL:
        values = (l0, l1)
        probs = (1.0 - p, p)
    elif mode == JOINT:
        values = (2.0 * l0, l0 + l1, 2.0 * l1)
        probs = ((1.0 - p) ** 2, 2.0 * p * (1.0 - p), p * p)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    mean = sum(q * v for q, v in zip(probs, values))
    return sum(q * _xlog2x(v) for q, v in zip(probs, values)) - _xlog2x(mean)


def numerical_derivative_at_zero(
    params: ChannelParams, mode: str = INDIVIDUAL, h: float = 1e-6, eps: float = EPS_DEFAULT
) -> float:
    """Forward difference ``(I(h) - I(0)) / h`` with ``I(0) = 0``."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    if mode == INDIVIDUAL:
        alloc = TimeAllocation(h / 2.0, h / 2.0, 0.0)
    elif mode == JOINT:
        alloc = TimeAllocation(0.0, 0.0, h)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return vector_mutual_info(params, alloc, eps).value / h


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(fn, lo: float, hi: float, xtol: float = 1e-10, max_iter: int = 200):
    """Maximiser of a unimodal ``fn`` on ``[lo, hi]`` by golden-section search."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def maximize_derivative_over_prior(lambda0: float, lambda1: float, mode: str = INDIVIDUAL, xtol: float = 1e-12):
    """Prior ``p`` in (0, 1) that maximises the initial information rate.

    The individual-mode rate is concave in ``p``, so golden-section search
    converges to the global maximiser.
    """
    tiny = 1e-12

    def rate(p):
        return mi_derivative_at_zero(ChannelParams(lambda0, lambda1, p), mode)

    return golden_section_max(rate, tiny, 1.0 - tiny, xtol)
