"""Independent reference computations used only by the tests.

None of these share code paths with the package: they use factorial
formulas, scipy.stats, mpmath, or materialise the full 3-D grid.
"""

import math

import mpmath
import numpy as np
from scipy import stats


def naive_pmf(y, mu):
    return math.exp(-mu) * mu**y / math.factorial(y)


def bound_by_scan(mu, eps):
    """Smallest x with upper tail <= eps, accumulating the pmf in 40-digit arithmetic."""
    with mpmath.workdps(40):
        mu = mpmath.mpf(mu)
        term = mpmath.exp(-mu)
        cdf = term
        x = 0
        target = 1 - mpmath.mpf(eps)
        while cdf < target:
            x += 1
            term = term * mu / x
            cdf += term
        return x


def scalar_mi_mp(l0, l1, p, t, n_terms=200, dps=40):
    """I(X1;Y1) by direct summation in extended precision."""
    with mpmath.workdps(dps):
        l0, l1, p, t = (mpmath.mpf(v) for v in (l0, l1, p, t))
        h = mpmath.mpf(0)
        for y in range(n_terms):
            a = mpmath.exp(-l0 * t) * (l0 * t) ** y / mpmath.factorial(y)
            b = mpmath.exp(-l1 * t) * (l1 * t) ** y / mpmath.factorial(y)
            f = (1 - p) * a + p * b
            for w, q in ((1, f), (-(1 - p), a), (-p, b)):
                if q > 0:
                    h -= w * q * mpmath.log(q, 2)
        return float(h)


def _cube(l0, l1, p, t1, t2, t3, upper):
    """Four joint score cubes prior * P(y|x) on 0..upper in every dimension (global cutoff)."""
    y = np.arange(upper + 1)
    priors = {(0, 0): (1 - p) ** 2, (0, 1): p * (1 - p), (1, 0): p * (1 - p), (1, 1): p * p}
    rate = {0: l0, 1: l1}
    cubes = []
    for (x1, x2), w in priors.items():
        a = stats.poisson.pmf(y, rate[x1] * t1) if t1 > 0 else (y == 0).astype(float)
        b = stats.poisson.pmf(y, rate[x2] * t2) if t2 > 0 else (y == 0).astype(float)
        c = stats.poisson.pmf(y, (rate[x1] + rate[x2]) * t3) if t3 > 0 else (y == 0).astype(float)
        cubes.append(w * a[:, None, None] * b[None, :, None] * c[None, None, :])
    return list(priors.values()), cubes


def global_upper(l1, T):
    return int(stats.poisson.ppf(1 - 2.0**-53, 2 * l1 * T))


def brute_force_mi(l0, l1, p, t1, t2, t3, T=1.0):
    """Full triple sum of H(Y) and H(Y|X) on one global cutoff at 2 * l1 * T."""
    upper = global_upper(l1, T)
    priors, cubes = _cube(l0, l1, p, t1, t2, t3, upper)
    f = sum(cubes)

    def h(q):
        q = q[q > 0]
        return -np.sum(q * np.log2(q))

    h_y = h(f)
    h_yx = sum(w * h(c / w) for w, c in zip(priors, cubes))
    return h_y - h_yx


def brute_force_pd(l0, l1, p, t1, t2, t3, T=1.0):
    upper = global_upper(l1, T)
    _, cubes = _cube(l0, l1, p, t1, t2, t3, upper)
    s = np.stack(cubes)
    # region rules written out literally
    f00, f01, f10, f11 = s
    r00 = (f00 >= f01) & (f00 >= f10) & (f00 >= f11)
    r01 = (f01 > f00) & (f01 >= f10) & (f01 >= f11)
    r10 = (f10 > f00) & (f10 > f01) & (f10 >= f11)
    r11 = (f11 > f00) & (f11 > f01) & (f11 > f10)
    return float(f00[r00].sum() + f01[r01].sum() + f10[r10].sum() + f11[r11].sum())


def priority_argmax(scores):
    """Decision by the region rules, one score vector at a time."""
    f00, f01, f10, f11 = scores
    if f00 >= f01 and f00 >= f10 and f00 >= f11:
        return 0
    if f01 > f00 and f01 >= f10 and f01 >= f11:
        return 1
    if f10 > f00 and f10 > f01 and f10 >= f11:
        return 2
    return 3


def derivative_stationary_prior(l0, l1):
    """Closed-form maximiser in p of the individual-mode initial rate."""
    log_m = (l1 * math.log2(l1) - l0 * math.log2(l0)) / (l1 - l0) - 1 / math.log(2)
    return (2.0**log_m - l0) / (l1 - l0)


def golden_section_oracle(fn, lo, hi):
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda x: -fn(x), bracket=(lo, 0.5 * (lo + hi), hi), method="golden",
                          options={"xtol": 1e-12})
    return res.x
