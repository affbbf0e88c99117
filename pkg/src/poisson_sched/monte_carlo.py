"""Stratified Monte Carlo estimate of the MAP detector's success rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel_core import (
    EPS_DEFAULT,
    ChannelParams,
    DomainError,
    HypothesisState,
    TimeAllocation,
    hypotheses,
    intensity_vector,
    pmf_table,
)
from .detection import map_decide_batch


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 100_000
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError(f"n_samples must be at least 1, got {self.n_samples}")


@dataclass(frozen=True)
class McResult:
    cd: float
    n: int
    stderr: float
    per_hypothesis_counts: tuple
    per_hypothesis_correct: tuple


def _inverse_cdf_draw(mu: float, rng: np.random.Generator, size, eps=EPS_DEFAULT):
    table = pmf_table(mu, eps=eps)
    cdf = table.cdf()
    u = rng.random(size)
    # smallest y with cdf[y] > u; u beyond the truncated mass lands on the cutoff
    return np.minimum(np.searchsorted(cdf, u, side="right"), table.upper)


def sample_observations(state: HypothesisState, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws of (y1, y2, y3) under one hypothesis."""
    cols = [_inverse_cdf_draw(mu, rng, size) for mu in state.intensities]
    return np.stack(cols, axis=-1)


def sample_observation(state: HypothesisState, alloc: TimeAllocation, params: ChannelParams, rng):
    mus = intensity_vector(state.x1, state.x2, alloc, params)
    return tuple(int(_inverse_cdf_draw(mu, rng, 1)[0]) for mu in mus)


def stratum_counts(priors, n: int) -> list:
    """Largest-remainder split of ``n`` samples in proportion to ``priors``."""
    quotas = [n * q for q in priors]
    counts = [math.floor(x) for x in quotas]
    short = n - sum(counts)
    order = sorted(range(len(priors)), key=lambda k: (-(quotas[k] - counts[k]), k))
    for k in order[:short]:
        counts[k] += 1
    return counts


def empirical_correct_rate(params: ChannelParams, alloc: TimeAllocation, cfg: McConfig = McConfig()) -> McResult:
    states = hypotheses(params, alloc)
    priors = [s.prior for s in states]
    if cfg.stratified:
        counts = stratum_counts(priors, cfg.n_samples)
    else:
        rng = np.random.default_rng([cfg.seed, len(states)])
        counts = [int(c) for c in rng.multinomial(cfg.n_samples, priors)]

    correct = []
    for k, (state, count) in enumerate(zip(states, counts)):
        rng = np.random.default_rng(cfg.seed ^ k)
        if count == 0:
            correct.append(0)
            continue
        ys = sample_observations(state, count, rng)
        correct.append(int(np.count_nonzero(map_decide_batch(ys, params, alloc) == k)))

    n = cfg.n_samples
    cd = sum(correct) / n
    return McResult(cd, n, math.sqrt(cd * (1.0 - cd) / n), tuple(counts), tuple(correct))
