"""Streaming evaluation over the truncated (y1, y2, y3) grid.

The cube is never materialised: the y3 axis is cut into fixed-size blocks and
each block builds its (y3, y2, y1) slab from outer products of the 1-D pmf
tables.  Per-slice partial sums are stored by y3 index and reduced once at
the end, so the result does not depend on how blocks are spread over workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channel_core import PmfTables

CELL_BUDGET_DEFAULT = 10**9
_SLAB_CELLS = 1 << 21


class CellBudgetExceeded(RuntimeError):
    """The truncated grid is larger than the permitted number of cells."""

    def __init__(self, cells, budget):
        super().__init__(
            f"truncated grid needs {cells} cells, budget is {budget}; "
            "loosen eps or reduce the intensities"
        )
        self.cells = cells
        self.budget = budget


def default_workers() -> int:
    env = os.environ.get("POISSON_SCHED_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def check_budget(tables: PmfTables, budget: int | None) -> None:
    budget = CELL_BUDGET_DEFAULT if budget is None else budget
    if tables.cells > budget:
        raise CellBudgetExceeded(tables.cells, budget)


def factor_arrays(tables: PmfTables, log: bool = False):
    """Per-hypothesis 1-D factors ``(a_k, b_k, c_k)`` over the shared cutoffs."""
    out = []
    for k in range(4):
        row = []
        for d in range(3):
            probs = tables.table(k, d).probs
            if log:
                with np.errstate(divide="ignore"):
                    probs = np.log(probs)
            row.append(probs)
        out.append(row)
    return out


def stream_slices(n3: int, n_plane: int, fn, n_out: int, workers: int | None = None):
    """Run ``fn(z0, z1)`` over y3 blocks; returns per-slice partials ``(n3, n_out)``.

    ``fn`` must return an array of shape ``(z1 - z0, n_out)``.
    """
    block = max(1, _SLAB_CELLS // max(n_plane, 1))
    starts = list(range(0, n3, block))
    partials = np.empty((n3, n_out))

    def run(z0):
        z1 = min(z0 + block, n3)
        partials[z0:z1] = fn(z0, z1)

    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(starts) == 1:
        for z0 in starts:
            run(z0)
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(starts))) as pool:
            list(pool.map(run, starts))
    return partials


def reduce_partials(partials: np.ndarray) -> np.ndarray:
    # fixed-order pairwise reduction along y3
    return np.sum(partials, axis=0)


def _poisson_entropy_tail(mu: float, upper: int, probs: np.ndarray):
    """Upper bounds (bits, mass) for what truncation drops from one Poisson entropy.

    Beyond the cutoff successive pmf ratios are at most ``r = mu / (upper + 1)``,
    so the dropped terms are dominated by a geometric sequence and
    ``-q log q`` is increasing on the range involved.
    """
    from scipy.special import pdtrc

    if mu == 0.0:
        return 0.0, 0.0
    mass = float(pdtrc(upper, mu))
    p_cut = float(probs[upper])
    r = mu / (upper + 1)
    if r >= 1.0 or p_cut >= 1.0 / math.e:
        return math.inf, mass
    if p_cut == 0.0:
        return 0.0, mass
    neg_log = -math.log2(p_cut)
    tail = p_cut * (neg_log * r / (1.0 - r) - math.log2(r) * r / (1.0 - r) ** 2)
    return tail, mass


def entropy_bits(probs: np.ndarray) -> float:
    from scipy.special import entr

    return float(np.sum(entr(probs))) / math.log(2.0)


def mi_tail_bound(tables: PmfTables, priors) -> float:
    """Certified bound (bits) on the truncation error of the grid mutual information."""
    total = 0.0
    for k, prior in enumerate(priors):
        tails = []
        masses = []
        full = []
        for d in range(3):
            tab = tables.table(k, d)
            tail, mass = _poisson_entropy_tail(tab.intensity, tab.upper, tab.probs)
            tails.append(tail)
            masses.append(mass)
            full.append(entropy_bits(tab.probs) + tail)
        own = 0.0
        for d in range(3):
            others = sum(full[e] for e in range(3) if e != d)
            own += tails[d] + masses[d] * others
        outside = min(1.0, sum(masses))
        total += prior * (own - outside * math.log2(prior))
    return total


def missing_mass(tables: PmfTables, priors) -> float:
    from scipy.special import pdtrc

    total = 0.0
    for k, prior in enumerate(priors):
        m = 0.0
        for d in range(3):
            tab = tables.table(k, d)
            if tab.intensity > 0:
                m += float(pdtrc(tab.upper, tab.intensity))
        total += prior * min(1.0, m)
    return total
