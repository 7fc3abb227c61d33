import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tvhc.cost import (Constant, Deadline, NetCost, PiecewiseLinear,
                       Polynomial, bandit_r, cost_from_dict,
                       exp_shift_quadrature, r_derivative_residual)


def quad_cumulative(f, t):
    val, _ = integrate.quad(lambda s: float(f(s)), 0, t,
                            points=[b for b in f.breakpoints() if b < t] or None,
                            limit=200)
    return val


class TestEval:
    def test_constant(self):
        assert Constant(5.0)(3.7) == 5.0

    def test_deadline_step(self):
        d = Deadline(10.0, 10.0)
        assert d(9.99) == 0.0
        assert d(10.0) == 10.0

    def test_polynomial(self):
        assert Polynomial((0, 0, 1))(3.0) == 9.0

    def test_pwl_interp_and_extrapolation(self):
        f = PiecewiseLinear(((1.0, 2.0), (3.0, 6.0)))
        assert f(0.5) == 2.0  # flat before first knot
        assert f(2.0) == 4.0
        assert f(5.0) == 10.0  # last slope 2 continues

    def test_negative_age_rejected(self):
        with pytest.raises(ValueError):
            Constant(1.0)(-0.1)

    def test_decreasing_rejected(self):
        with pytest.raises(ValueError):
            Polynomial((5.0, -1.0))
        with pytest.raises(ValueError):
            PiecewiseLinear(((0.0, 3.0), (1.0, 2.0)))


class TestCumulative:
    def test_constant_rectangle(self):
        assert Constant(2.0).cumulative(5.0) == 10.0

    def test_polynomial_cube(self):
        assert Polynomial((0, 0, 1)).cumulative(3.0) == pytest.approx(9.0)

    def test_deadline_past(self):
        # area of the step over [10, 12]
        assert Deadline(10.0, 10.0).cumulative(12.0) == pytest.approx(20.0)

    @pytest.mark.parametrize("f", [
        Constant(1.5),
        Polynomial((1.0, 0.5, 0.25)),
        Deadline(7.0, 4.0),
        PiecewiseLinear(((0.0, 1.0), (2.0, 3.0), (5.0, 3.0))),
        PiecewiseLinear(((1.0, 0.0), (2.0, 4.0))),
    ])
    @pytest.mark.parametrize("t", [0.0, 0.7, 2.0, 4.0, 9.3])
    def test_against_quadrature(self, f, t):
        assert float(f.cumulative(t)) == pytest.approx(quad_cumulative(f, t),
                                                       abs=1e-9)

    def test_vectorized_matches_scalar(self):
        f = PiecewiseLinear(((1.0, 2.0), (3.0, 6.0), (4.0, 7.0)))
        ts = np.array([0.0, 0.5, 1.0, 2.5, 3.7, 8.0])
        vec = f.cumulative(ts)
        assert vec == pytest.approx([float(f.cumulative(float(t))) for t in ts])


class TestExpShift:
    def test_constant(self):
        assert Constant(3.0).exp_shift_mean(1.7, 0.4) == 3.0

    def test_second_moment(self):
        # E[X^2] = 2/theta^2
        assert Polynomial((0, 0, 1)).exp_shift_mean(0.0, 1.0) == pytest.approx(2.0)

    def test_deadline_tail_probability(self):
        f = Deadline(10.0, 10.0)
        got = f.exp_shift_mean(8.8662, 3.0)
        assert got == pytest.approx(10 * math.exp(-3 * (10 - 8.8662)), rel=1e-12)
        assert got == pytest.approx(0.3334, abs=5e-4)

    def test_theta_rejected(self):
        with pytest.raises(ValueError):
            Constant(1.0).exp_shift_mean(0.0, 0.0)

    @pytest.mark.parametrize("f", [
        Polynomial((1.0, 2.0, 0.5, 0.1)),
        Polynomial((0.0, 0.0, 0.0, 0.0, 2.0)),
        Deadline(4.0, 2.5),
        PiecewiseLinear(((0.0, 1.0), (2.0, 3.0), (3.0, 8.0))),
        PiecewiseLinear(((0.5, 2.0),)),
    ])
    @pytest.mark.parametrize("t,theta", [(0.0, 1.0), (0.5, 0.3), (2.0, 2.5),
                                         (4.0, 1.2)])
    def test_against_quadrature(self, f, t, theta):
        assert f.exp_shift_mean(t, theta) == pytest.approx(
            exp_shift_quadrature(f, t, theta), abs=1e-9, rel=1e-9)

    @given(st.floats(0, 20), st.floats(0, 20), st.floats(0.05, 5))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_t(self, a, b, theta):
        f = Deadline(3.0, 6.0)
        lo, hi = sorted((a, b))
        assert f.exp_shift_mean(lo, theta) <= f.exp_shift_mean(hi, theta) + 1e-12

    @given(st.lists(st.floats(0, 3), min_size=1, max_size=4),
           st.floats(0, 10), st.floats(0.1, 4))
    @settings(max_examples=60, deadline=None)
    def test_monotone_polynomial(self, coeffs, t, theta):
        f = Polynomial(tuple(coeffs))
        assert f.exp_shift_mean(t, theta) <= f.exp_shift_mean(t + 0.5, theta) + 1e-9


class TestSerialization:
    @pytest.mark.parametrize("f", [
        Constant(2.0),
        Polynomial((1.0, 0.0, 3.0)),
        Deadline(10.0, 10.0),
        PiecewiseLinear(((0.0, 1.0), (2.0, 5.0))),
    ])
    def test_round_trip(self, f):
        assert cost_from_dict(f.to_dict()) == f

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            cost_from_dict({"kind": "cubic-spline"})


def mc_bandit_r(nc, lam1, t1, n=1_000_000, seed=0):
    """Partial sums of Exp(lam1) gaps stopped before t1; averages the
    net cost over the sampled younger-job ages."""
    rng = np.random.default_rng(seed)
    cols = max(int(lam1 * t1 + 10 * math.sqrt(lam1 * t1 + 1)), 4)
    total = 0.0
    chunk = 100_000
    done = 0
    while done < n:
        m = min(chunk, n - done)
        gaps = rng.exponential(1 / lam1, size=(m, cols))
        ages = np.cumsum(gaps, axis=1)
        assert np.all(ages[:, -1] > t1), "column budget too small"
        mask = ages < t1
        vals = np.where(mask, nc.mu1 * nc.c1(np.maximum(ages, 0.0) * mask)
                        - nc.mu2 * nc.c2, 0.0)
        total += float(np.sum(vals * mask))
        done += m
    return nc(t1) + total / n


class TestBanditR:
    def test_constant(self):
        nc = NetCost(Constant(2.0), 1.0, 2.0, 1.0)  # c(t) = 4 - 1 = 3
        assert bandit_r(nc, 0.5, 4.0) == pytest.approx(3 + 0.5 * 3 * 4)

    def test_linear_closed_form(self):
        # c(t) = t: mu1=1, c1 = t, c2 = 0 -> r(3) = 3 + 2 * 9/2 = 12
        nc = NetCost(PiecewiseLinear(((0.0, 0.0), (1.0, 1.0))), 0.0, 1.0, 1.0)
        assert bandit_r(nc, 2.0, 3.0) == pytest.approx(12.0)

    def test_zero_age(self):
        nc = NetCost(Polynomial((0, 0, 1)), 30.0, 1.0, 3.0)
        assert bandit_r(nc, 0.9, 0.0) == nc(0.0)

    @pytest.mark.parametrize("c1,c2,mu1,mu2,lam1,t1", [
        (Polynomial((0, 0, 1)), 30.0, 1.0, 3.0, 0.45, 7.5),
        (Deadline(10.0, 10.0), 1.0, 3.0, 1.0, 1.8, 12.0),
    ])
    def test_monte_carlo_oracle(self, c1, c2, mu1, mu2, lam1, t1):
        nc = NetCost(c1, c2, mu1, mu2)
        exact = bandit_r(nc, lam1, t1)
        reps = 200_000
        est = mc_bandit_r(nc, lam1, t1, n=reps, seed=7)
        # crude sigma bound from a small pilot of per-sample spread
        rng = np.random.default_rng(1)
        pilot = [mc_bandit_r(nc, lam1, t1, n=5000, seed=s) for s in range(8)]
        se = np.std(pilot, ddof=1) * math.sqrt(5000 / reps)
        assert abs(est - exact) <= max(3 * se, 1e-3 * max(1, abs(exact)))

    def test_negative_age_flat_extension(self):
        nc = NetCost(Polynomial((0, 0, 1)), 30.0, 1.0, 3.0)
        assert nc(-2.0) == nc(0.0)
        assert nc.cumulative(-2.0) == pytest.approx(nc(0.0) * -2.0)
        # the flat-left convention makes E[r(t - I)] = r(t) - c(t) exact
        lam1, t = 0.45, 7.49
        from tvhc.verify import _exp_expect
        lhs = _exp_expect(lambda y: bandit_r(nc, lam1, t - y), lam1, [t])
        assert lhs == pytest.approx(bandit_r(nc, lam1, t) - nc(t), rel=1e-8)


class TestRDerivative:
    def test_linear(self):
        nc = NetCost(PiecewiseLinear(((0.0, 0.0), (10.0, 10.0))), 0.0, 1.0, 1.0)
        assert r_derivative_residual(nc, 2.0, 3.0, 1e-4) < 1e-6

    def test_constant(self):
        nc = NetCost(Constant(4.0), 1.0, 1.0, 1.0)
        assert r_derivative_residual(nc, 1.3, 2.0, 1e-4) < 1e-10

    def test_quadratic(self):
        # r'(2) = c'(2) + c(2) = 4 + 4 = 8 for c(t) = t^2
        nc = NetCost(Polynomial((0, 0, 1)), 0.0, 1.0, 1.0)
        assert r_derivative_residual(nc, 1.0, 2.0, 1e-4) < 1e-6

    def test_breakpoint_rejected(self):
        nc = NetCost(Deadline(10.0, 10.0), 1.0, 3.0, 1.0)
        with pytest.raises(ValueError):
            r_derivative_residual(nc, 1.0, 10.0, 1e-4)
