"""Grid-search scheduling of the three dwell times and the associated sweeps.

Every sweep evaluates independent points; with ``workers > 1`` they run on a
thread pool but results are always collected in input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel_core import EPS_DEFAULT, ChannelParams, DomainError, TimeAllocation
from .detection import prob_correct_detection
from .info_metrics import golden_section_max, mi_chain_terms, vector_mutual_info

METRICS = ("mi", "pd", "both")
CONCAVITY_TOL = 1e-8
SYMMETRY_TOL = 1e-12


def _map(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_metric(metric):
    if metric not in METRICS:
        raise DomainError(f"metric must be one of {METRICS}, got {metric!r}")


def line_alphas(T: float, n_points: int) -> np.ndarray:
    if n_points < 2:
        raise DomainError(f"need at least 2 grid points, got {n_points}")
    return np.linspace(0.0, T, n_points)


@dataclass
class LineSweep:
    T: float
    alphas: np.ndarray
    mi: np.ndarray | None = None
    pd: np.ndarray | None = None
    argmax_mi: float | None = None
    argmax_pd: float | None = None
    refined_mi: tuple | None = None

    def allocation(self, i: int) -> TimeAllocation:
        return TimeAllocation.symmetric(float(self.alphas[i]), self.T)

    def summary(self) -> dict:
        out = {"argmax_mi": self.argmax_mi, "argmax_pd": self.argmax_pd}
        if self.mi is not None:
            out["max_mi"] = float(np.max(self.mi))
        if self.pd is not None:
            out["max_pd"] = float(np.max(self.pd))
        if self.refined_mi is not None:
            out["refined_alpha_mi"], out["refined_max_mi"] = self.refined_mi
        return out


def sweep_symmetry_line(
    params: ChannelParams,
    n_points: int = 100,
    metric: str = "mi",
    eps: float = EPS_DEFAULT,
    workers: int | None = None,
    refine: bool = False,
    cell_budget: int | None = None,
) -> LineSweep:
    """Evaluate the metric(s) along ``((T - a)/2, (T - a)/2, a)``.

    Ties go to the smallest ``a``.  With ``refine`` the MI grid optimum is
    polished by golden-section search over the neighbouring grid cells; that
    assumes MI is unimodal along the line.
    """
    _check_metric(metric)
    T = params.T
    alphas = line_alphas(T, n_points)
    sweep = LineSweep(T, alphas)
    allocs = [TimeAllocation.symmetric(float(a), T) for a in alphas]

    def one_mi(alloc):
        return vector_mutual_info(params, alloc, eps, cell_budget=cell_budget, workers=1).value

    def one_pd(alloc):
        return prob_correct_detection(params, alloc, eps, cell_budget=cell_budget, workers=1).pd

    if metric in ("mi", "both"):
        sweep.mi = np.array(_map(one_mi, allocs, workers))
        sweep.argmax_mi = float(alphas[int(np.argmax(sweep.mi))])
    if metric in ("pd", "both"):
        sweep.pd = np.array(_map(one_pd, allocs, workers))
        sweep.argmax_pd = float(alphas[int(np.argmax(sweep.pd))])

    if refine and sweep.mi is not None:
        i = int(np.argmax(sweep.mi))
        lo = float(alphas[max(i - 1, 0)])
        hi = float(alphas[min(i + 1, n_points - 1)])
        a_star, v_star = golden_section_max(
            lambda a: one_mi(TimeAllocation.symmetric(min(max(a, 0.0), T), T)), lo, hi, xtol=1e-9
        )
        if v_star < sweep.mi[i]:
            a_star, v_star = float(alphas[i]), float(sweep.mi[i])
        sweep.refined_mi = (a_star, v_star)
    return sweep


@dataclass
class TernarySweep:
    T: float
    resolution: int
    records: list = field(default_factory=list)  # (t1, t2, t3, mi)

    def argmax(self):
        return max(self.records, key=lambda r: r[3])


def simplex_lattice(resolution: int, T: float = 1.0):
    if resolution < 2:
        raise DomainError(f"resolution must be at least 2, got {resolution}")
    pts = []
    for i in range(resolution + 1):
        for j in range(resolution + 1 - i):
            k = resolution - i - j
            pts.append((i * T / resolution, j * T / resolution, k * T / resolution))
    return pts


def sweep_ternary(
    params: ChannelParams, resolution: int, eps: float = EPS_DEFAULT, workers: int | None = None
) -> TernarySweep:
    pts = simplex_lattice(resolution, params.T)

    def one(pt):
        return vector_mutual_info(params, TimeAllocation(*pt), eps, workers=1).value

    values = _map(one, pts, workers)
    return TernarySweep(params.T, resolution, [(*pt, v) for pt, v in zip(pts, values)])


def prior_grid() -> np.ndarray:
    """90 points evenly filling (0, 0.5] followed by 10 evenly inside (0.5, 1)."""
    low = np.linspace(0.0, 0.5, 91)[1:]
    high = np.linspace(0.5, 1.0, 12)[1:-1]
    return np.concatenate([low, high])


@dataclass
class PriorSweep:
    priors: np.ndarray
    t3_opt: np.ndarray
    best: np.ndarray
    metric: str


def sweep_prior(
    params_base: ChannelParams,
    metric: str = "mi",
    n_points: int = 100,
    eps: float = EPS_DEFAULT,
    workers: int | None = None,
) -> PriorSweep:
    if metric not in ("mi", "pd"):
        raise DomainError("prior sweep optimises a single metric: 'mi' or 'pd'")
    priors = prior_grid()

    def one(p):
        sweep = sweep_symmetry_line(replace(params_base, p=float(p)), n_points, metric, eps, workers=1)
        values = sweep.mi if metric == "mi" else sweep.pd
        alpha = sweep.argmax_mi if metric == "mi" else sweep.argmax_pd
        return alpha, float(np.max(values))

    rows = _map(one, priors, workers)
    return PriorSweep(priors, np.array([r[0] for r in rows]), np.array([r[1] for r in rows]), metric)


@dataclass
class IntensitySweep:
    p: float
    lambda_max: float
    records: list = field(default_factory=list)  # (lambda0*T, lambda1*T, best, alpha*)


def intensity_lattice(grid_n: int, lambda_max: float = 5.0):
    if grid_n < 2:
        raise DomainError(f"grid_n must be at least 2, got {grid_n}")
    levels = [lambda_max * k / grid_n for k in range(1, grid_n + 1)]
    return [(a, b) for i, a in enumerate(levels) for b in levels[i + 1:]]


def sweep_intensity(
    p: float,
    grid_n: int,
    lambda_max: float = 5.0,
    metric: str = "mi",
    n_points: int = 100,
    eps: float = EPS_DEFAULT,
    workers: int | None = None,
) -> IntensitySweep:
    """Best value and maximising ``alpha`` for each ``0 < l0 T < l1 T <= lambda_max`` (T = 1)."""
    if metric not in ("mi", "pd"):
        raise DomainError("intensity sweep optimises a single metric: 'mi' or 'pd'")
    pairs = intensity_lattice(grid_n, lambda_max)

    def one(pair):
        sweep = sweep_symmetry_line(ChannelParams(pair[0], pair[1], p, 1.0), n_points, metric, eps, workers=1)
        values = sweep.mi if metric == "mi" else sweep.pd
        alpha = sweep.argmax_mi if metric == "mi" else sweep.argmax_pd
        return (pair[0], pair[1], float(np.max(values)), alpha)

    return IntensitySweep(p, lambda_max, _map(one, pairs, workers))


@dataclass
class ConcavityReport:
    alphas: np.ndarray
    values: np.ndarray
    second_differences: np.ndarray
    max_second_difference: float
    passed: bool
    quantity: str


def check_concavity_line(
    params: ChannelParams,
    n_points: int = 100,
    quantity: str = "mi",
    eps: float = EPS_DEFAULT,
    workers: int | None = None,
    tol: float = CONCAVITY_TOL,
) -> ConcavityReport:
    """Second differences of MI (or of the conditional chain term) along the symmetry line.

    ``quantity`` is ``"mi"`` or ``"term3"``.  Concavity of the total is only
    conjectured, so a failure is reported rather than raised.
    """
    if n_points < 3:
        raise DomainError(f"need at least 3 grid points, got {n_points}")
    alphas = line_alphas(params.T, n_points)
    allocs = [TimeAllocation.symmetric(float(a), params.T) for a in alphas]
    if quantity == "mi":
        def one(alloc):
            return vector_mutual_info(params, alloc, eps, workers=1).value
    elif quantity == "term3":
        def one(alloc):
            return mi_chain_terms(params, alloc, eps, workers=1).term3
    else:
        raise DomainError(f"quantity must be 'mi' or 'term3', got {quantity!r}")
    values = np.array(_map(one, allocs, workers))
    d2 = values[2:] - 2.0 * values[1:-1] + values[:-2]
    worst = float(np.max(d2))
    return ConcavityReport(alphas, values, d2, worst, worst <= tol, quantity)


@dataclass
class SymmetryReport:
    points: np.ndarray
    deviations: np.ndarray
    max_deviation: float
    passed: bool


def check_symmetry(
    params: ChannelParams, trials: int, rng: np.random.Generator | None = None, eps: float = EPS_DEFAULT
) -> SymmetryReport:
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    rng = np.random.default_rng() if rng is None else rng
    pts = rng.dirichlet(np.ones(3), size=trials) * params.T
    devs = np.empty(trials)
    for i, (t1, t2, t3) in enumerate(pts):
        a = vector_mutual_info(params, TimeAllocation(t1, t2, t3), eps).value
        b = vector_mutual_info(params, TimeAllocation(t2, t1, t3), eps).value
        devs[i] = abs(a - b)
    worst = float(np.max(devs))
    return SymmetryReport(pts, devs, worst, worst <= SYMMETRY_TOL)


def rank_correlation(x, y) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)


def grid_step(T: float, n_points: int) -> float:
    return T / (n_points - 1)


def is_boundary(alpha: float, T: float) -> bool:
    return math.isclose(alpha, 0.0, abs_tol=1e-15) or math.isclose(alpha, T, rel_tol=0, abs_tol=1e-15)
