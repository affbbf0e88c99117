"""MAP detection of the source state and its exact probability of success.

Ties between hypothesis scores are broken by the fixed priority
00 > 01 > 10 > 11: a later hypothesis is chosen only when its score is
strictly larger than every earlier one and at least as large as every later
one.  ``numpy.argmax`` returns the first maximum, which is exactly that rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _grid
from .channel_core import (
    EPS_DEFAULT,
    STATES,
    ChannelParams,
    DomainError,
    TimeAllocation,
    build_pmf_tables,
    intensity_vector,
    poisson_logpmf,
    prior_pmf,
)

LOG_SPACE_THRESHOLD = 700.0


@dataclass(frozen=True)
class DecisionOutcome:
    decided: int
    posterior_scores: tuple

    @property
    def label(self) -> str:
        x1, x2 = STATES[self.decided]
        return f"{x1}{x2}"


@dataclass(frozen=True)
class PdResult:
    pd: float
    risk: float
    per_hypothesis: tuple
    tail_bound: float


def _state_arrays(params, alloc):
    priors = np.array([prior_pmf(x1, x2, params.p) for x1, x2 in STATES])
    mus = np.array([intensity_vector(x1, x2, alloc, params) for x1, x2 in STATES])
    return priors, mus


def decision_scores(y, params: ChannelParams, alloc: TimeAllocation, log: bool | None = None):
    """Joint scores ``prior(x) * prod_i Poiss(y_i; mu_i(x))`` for counts ``y`` of shape (..., 3).

    Returns an array of shape (..., 4).  With ``log`` true the scores are
    natural logs; by default log space is used only when some mean exceeds
    ``LOG_SPACE_THRESHOLD``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("counts must be nonnegative")
    priors, mus = _state_arrays(params, alloc)
    if log is None:
        log = bool(mus.max() > LOG_SPACE_THRESHOLD)
    logs = np.log(priors) + poisson_logpmf(y[..., None, :], mus).sum(axis=-1)
    return logs if log else np.exp(logs)


def map_decide(y, params: ChannelParams, alloc: TimeAllocation) -> DecisionOutcome:
    scores = decision_scores(y, params, alloc)
    return DecisionOutcome(int(np.argmax(scores)), tuple(float(s) for s in scores))


def map_decide_batch(ys, params: ChannelParams, alloc: TimeAllocation) -> np.ndarray:
    """Decided state index for each row of ``ys`` (shape (n, 3))."""
    return np.argmax(decision_scores(ys, params, alloc), axis=-1)


def prob_correct_detection(
    params: ChannelParams,
    alloc: TimeAllocation,
    eps: float = EPS_DEFAULT,
    cell_budget: int | None = None,
    workers: int | None = None,
) -> PdResult:
    """Bayesian probability that the MAP decision equals the true state."""
    tables = build_pmf_tables(alloc, params, eps)
    _grid.check_budget(tables, cell_budget)
    priors = [prior_pmf(x1, x2, params.p) for x1, x2 in STATES]
    n1, n2, n3 = (u + 1 for u in tables.uppers)
    use_log = max(max(row) for row in tables.index) > LOG_SPACE_THRESHOLD

    if use_log:
        factors = [[poisson_logpmf(np.arange(u + 1), tables.index[k][d]) for d, u in enumerate(tables.uppers)]
                   for k in range(4)]
        planes = [np.add.outer(b, a) for a, b, _ in factors]
        weights = np.stack([np.log(priors[k]) + factors[k][2] for k in range(4)], axis=1)
    else:
        factors = _grid.factor_arrays(tables)
        planes = [np.multiply.outer(b, a) for a, b, _ in factors]
        weights = np.stack([priors[k] * factors[k][2] for k in range(4)], axis=1)

    def slab(z0, z1):
        w = weights[z0:z1, :, None, None]
        if use_log:
            scores = np.stack([w[:, k] + planes[k] for k in range(4)])
        else:
            scores = np.stack([w[:, k] * planes[k] for k in range(4)])
        decided = np.argmax(scores, axis=0)
        if use_log:
            scores = np.exp(scores)
        out = np.empty((z1 - z0, 4))
        for k in range(4):
            hit = np.where(decided == k, scores[k], 0.0)
            out[:, k] = hit.reshape(z1 - z0, -1).sum(axis=1)
        return out

    partials = _grid.stream_slices(n3, n1 * n2, slab, 4, workers)
    joint_correct = _grid.reduce_partials(partials)
    pd = float(np.sum(joint_correct))
    per_hyp = tuple(float(joint_correct[k] / priors[k]) for k in range(4))
    return PdResult(pd, 1.0 - pd, per_hyp, _grid.missing_mass(tables, priors))


def bayes_risk(params: ChannelParams, alloc: TimeAllocation, **kw) -> float:
    """Probability of a wrong decision under 0-1 costs."""
    return prob_correct_detection(params, alloc, **kw).risk
