import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_sched.channel_core import (
    EPS_DEFAULT,
    ChannelParams,
    DomainError,
    TimeAllocation,
    build_pmf_tables,
    check_simplex,
    hypotheses,
    intensity_vector,
    pmf_table,
    poisson_pmf,
    prior_pmf,
    truncation_bound,
)

from oracles import bound_by_scan, naive_pmf


class TestPriorPmf:
    def test_uniform_at_half(self):
        assert prior_pmf(0, 0, 0.5) == 0.25

    def test_values_at_p02(self):
        assert prior_pmf(0, 0, 0.2) == pytest.approx(0.64, abs=1e-15)
        assert prior_pmf(0, 1, 0.2) == pytest.approx(0.16, abs=1e-15)
        assert prior_pmf(1, 0, 0.2) == pytest.approx(0.16, abs=1e-15)
        assert prior_pmf(1, 1, 0.2) == pytest.approx(0.04, abs=1e-15)

    @given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
    def test_normalised(self, p):
        total = sum(prior_pmf(a, b, p) for a in (0, 1) for b in (0, 1))
        assert total == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            prior_pmf(0, 0, p)


class TestPoissonPmf:
    @pytest.mark.parametrize("mu", [0.0, 0.3, 1.0, 7.5, 40.0])
    def test_zero_count(self, mu):
        assert poisson_pmf(0, mu) == pytest.approx(math.exp(-mu), rel=1e-15)

    def test_degenerate_mean(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    def test_direct_value(self):
        assert poisson_pmf(2, 1.0) == pytest.approx(math.exp(-1) / 2, rel=1e-14)
        assert poisson_pmf(2, 1.0) == pytest.approx(0.1839397206, abs=1e-10)

    def test_negative_mean(self):
        with pytest.raises(DomainError):
            poisson_pmf(1, -0.5)

    def test_matches_factorial_formula(self):
        for y in range(21):
            for mu in np.linspace(0.05, 30.0, 37):
                assert poisson_pmf(y, mu) == pytest.approx(naive_pmf(y, mu), rel=1e-12)


class TestTruncationBound:
    def test_zero_mean(self):
        assert truncation_bound(0.0, EPS_DEFAULT) == 0

    def test_unit_mean_matches_extended_scan(self):
        # frozen from oracles.bound_by_scan(1.0, 2**-53)
        assert truncation_bound(1.0, 2.0**-53) == 17

    @pytest.mark.parametrize("mu,eps", [(5.0, 2.0**-53), (0.37, 2.0**-40), (12.3, 1e-9), (60.0, 2.0**-53)])
    def test_matches_scan(self, mu, eps):
        assert truncation_bound(mu, eps) == bound_by_scan(mu, eps)

    def test_monotone(self):
        assert truncation_bound(5.0) >= truncation_bound(1.0)
        bounds = [truncation_bound(mu) for mu in np.linspace(0, 50, 501)]
        assert all(b1 <= b2 for b1, b2 in zip(bounds, bounds[1:]))

    @pytest.mark.parametrize("eps", [0.0, 1.0, -1e-3])
    def test_eps_domain(self, eps):
        with pytest.raises(DomainError):
            truncation_bound(1.0, eps)


class TestIntensityVector:
    params = ChannelParams(2.0, 4.0, 0.3)
    alloc = TimeAllocation(0.5, 0.3, 0.2)

    def test_rows(self):
        assert intensity_vector(0, 0, self.alloc, self.params) == pytest.approx((1.0, 0.6, 0.8))
        assert intensity_vector(1, 1, self.alloc, self.params) == pytest.approx((2.0, 1.2, 1.6))
        assert intensity_vector(0, 1, self.alloc, self.params) == pytest.approx((1.0, 1.2, 1.2))

    def test_joint_channel_blind_to_order(self):
        a = intensity_vector(0, 1, self.alloc, self.params)
        b = intensity_vector(1, 0, self.alloc, self.params)
        assert a[2] == b[2]

    @given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 3), st.sampled_from([(0, 0), (0, 1), (1, 0), (1, 1)]))
    def test_swap_symmetry(self, t1, t2, t3, x):
        alloc = TimeAllocation(t1, t2, t3)
        mu = intensity_vector(x[0], x[1], alloc, self.params)
        nu = intensity_vector(x[1], x[0], alloc.swapped(), self.params)
        assert (nu[0], nu[1], nu[2]) == (mu[1], mu[0], mu[2])

    def test_hypotheses_priors(self):
        states = hypotheses(self.params, self.alloc)
        assert [s.label for s in states] == ["00", "01", "10", "11"]
        assert sum(s.prior for s in states) == pytest.approx(1.0, abs=1e-15)


class TestTypes:
    def test_rate_order(self):
        with pytest.raises(DomainError):
            ChannelParams(4.0, 2.0, 0.5)

    def test_equal_rates_flagged(self):
        assert ChannelParams(3.0, 3.0, 0.5).degenerate
        assert not ChannelParams(2.0, 3.0, 0.5).degenerate

    @pytest.mark.parametrize("kw", [dict(p=0.0), dict(p=1.0), dict(T=0.0), dict(lambda0=0.0)])
    def test_invalid_params(self, kw):
        base = dict(lambda0=1.0, lambda1=2.0, p=0.5, T=1.0) | kw
        with pytest.raises(DomainError):
            ChannelParams(**base)

    def test_allocation_nonnegative(self):
        with pytest.raises(DomainError):
            TimeAllocation(-0.1, 0.5, 0.6)

    def test_simplex(self):
        TimeAllocation.on_simplex(0.2, 0.3, 0.5)
        with pytest.raises(DomainError):
            TimeAllocation.on_simplex(0.5, 0.5, 0.1)
        check_simplex(TimeAllocation.symmetric(0.3, 2.0), 2.0)


class TestTables:
    def test_zero_time_joint_dimension(self):
        tables = build_pmf_tables(TimeAllocation(0.5, 0.5, 0.0), ChannelParams(2.0, 4.0, 0.5))
        assert tables.uppers[2] == 0
        for tab in tables.dims[2].values():
            assert tab.upper == 0
            assert list(tab.probs) == [1.0]

    def test_equal_rates_identical_tables(self):
        tables = build_pmf_tables(TimeAllocation(0.4, 0.3, 0.3), ChannelParams(3.0, 3.0, 0.5))
        for d in range(2):
            assert np.array_equal(tables.table(0, d).probs, tables.table(3, d).probs)

    def test_shared_cutoff_is_largest_intensity(self):
        params = ChannelParams(2.0, 9.0, 0.5)
        tables = build_pmf_tables(TimeAllocation(0.3, 0.3, 0.4), params)
        assert tables.uppers == (truncation_bound(2.7), truncation_bound(2.7), truncation_bound(7.2))
        assert len(tables.dims[2]) == 3

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=0.0, max_value=400.0))
    def test_tail_mass_certified(self, mu):
        tab = pmf_table(mu)
        s = math.fsum(tab.probs)
        assert 1.0 - 2.0**-52 <= s <= 1.0
        assert np.all(tab.probs >= 0)

    @pytest.mark.parametrize("mu", [700.0, 1500.0, 9000.0])
    def test_tail_mass_large_means(self, mu):
        s = math.fsum(pmf_table(mu).probs)
        assert 1.0 - 2.0**-52 <= s <= 1.0

    def test_table_entries_match_pmf(self):
        tab = pmf_table(6.5)
        for y in range(tab.upper + 1):
            assert tab.probs[y] == pytest.approx(poisson_pmf(y, 6.5), rel=1e-13)
