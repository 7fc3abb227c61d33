import math

import numpy as np
import pytest

from tvhc.cost import Constant, Deadline, NetCost, Polynomial
from tvhc.experiments import ExperimentConfig, run_verify
from tvhc.opt import solve_alpha_star
from tvhc.policy import LOOKAHEAD, SystemParams
from tvhc.sim import SimOptions, simulate
from tvhc.verify import (VerificationReport, amortized_fixed_point,
                         amortized_index, check_claim1, check_conservation,
                         check_convexity, check_exp_formula, check_q0_tail,
                         check_t1_tail)

DL_C1, DL_C2 = Deadline(10.0, 10.0), 1.0
QUAD_C1, QUAD_C2 = Polynomial((0, 0, 1)), 30.0


def dl_params(rho):
    return SystemParams(2.25 * rho, 0.25 * rho, 3.0, 1.0)


def quad_params(rho):
    return SystemParams(0.9 * rho, 0.3 * rho, 1.0, 3.0)


@pytest.fixture(scope="module")
def dl_run():
    p = dl_params(0.8)
    return p, simulate(p, LOOKAHEAD, DL_C1, DL_C2, SimOptions(seed=5))


class TestReport:
    def test_pass_consistency(self):
        with pytest.raises(ValueError):
            VerificationReport("x", 2.0, 1.0, True)
        r = VerificationReport("x", 0.5, 1.0, True)
        assert r.to_dict()["passed"] is True


class TestConservation:
    def test_deadline(self, dl_run):
        p, res = dl_run
        rep = check_conservation(res, p)
        assert rep.statistic < 0.03  # single run, ~1% noise

    def test_single_class(self):
        p = SystemParams(0.5, 0.0, 1.0, 5.0)
        res = simulate(p, LOOKAHEAD, Constant(1.0), 1.0,
                       SimOptions(horizon_events=400_000,
                                  warmup_events=40_000, seed=9))
        rep = check_conservation(res, p)
        # rho1 E[T1] = W = (1/(1-rho1)) lambda1/mu1^2
        assert rep.statistic < 0.03


class TestAmortized:
    def test_constant_cost(self, dl_run):
        p, res = dl_run
        assert amortized_index(res, Constant(4.0), 1.0) == pytest.approx(4.0)

    def test_insufficient_samples(self, dl_run):
        p, res = dl_run
        with pytest.raises(ValueError):
            amortized_index(res, DL_C1, float(np.max(res.t1_samples)))

    def test_fixed_point_at_alpha_star(self, dl_run):
        p, res = dl_run
        astar = solve_alpha_star(p, DL_C1, DL_C2).value()
        rep = amortized_fixed_point(res, p, DL_C1, DL_C2, astar)
        assert rep.passed, rep.detail

    def test_above_alpha_matches_lookahead_mean(self, dl_run):
        # beyond the top level's entry age the conditional remaining
        # sojourn is exponential, so the estimator tracks E[c1(t+X)]
        p, res = dl_run
        astar = solve_alpha_star(p, DL_C1, DL_C2).value()
        t = astar + 0.5
        est = amortized_index(res, DL_C1, t)
        exact = DL_C1.exp_shift_mean(t, p.lookahead_rate)
        assert est == pytest.approx(exact, rel=0.1)


class TestClaim1:
    @pytest.mark.parametrize("params,c1,c2", [
        (dl_params(0.8), DL_C1, DL_C2),
        (quad_params(0.5), QUAD_C1, QUAD_C2),
    ])
    def test_equality_at_alpha_star(self, params, c1, c2):
        nc = NetCost(c1, c2, params.mu1, params.mu2)
        astar = solve_alpha_star(params, c1, c2).value()
        rep = check_claim1(params, nc, astar)
        assert rep.passed, rep.detail

    def test_inequality_above(self):
        p = quad_params(0.5)
        nc = NetCost(QUAD_C1, QUAD_C2, p.mu1, p.mu2)
        astar = solve_alpha_star(p, QUAD_C1, QUAD_C2).value()
        prev_margin = -math.inf
        for k in (0.5, 1.0, 2.0, 5.0):
            rep = check_claim1(p, nc, astar + k / p.lookahead_rate)
            assert rep.passed, rep.detail
            margin = -rep.statistic
            assert margin >= prev_margin - 1e-9
            prev_margin = margin

    def test_below_alpha_rejected(self):
        p = dl_params(0.8)
        nc = NetCost(DL_C1, DL_C2, p.mu1, p.mu2)
        with pytest.raises(ValueError):
            check_claim1(p, nc, 0.1)


class TestExpFormula:
    def test_trivial_linear(self):
        assert check_exp_formula(1, 3.0, 2.0).passed

    def test_grid(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            rep = check_exp_formula(4, float(rng.uniform(0.1, 6)),
                                    float(rng.uniform(0.1, 5)))
            assert rep.passed, rep.detail

    def test_bad_theta(self):
        with pytest.raises(ValueError):
            check_exp_formula(2, 1.0, 0.0)


class TestTails:
    def test_q0(self, dl_run):
        p, res = dl_run
        rep = check_q0_tail(res, p)
        assert rep.passed, rep.detail

    def test_t1_beyond_alpha(self, dl_run):
        p, res = dl_run
        astar = solve_alpha_star(p, DL_C1, DL_C2).value()
        rep = check_t1_tail(res, p, astar)
        assert rep.passed, rep.detail


class TestConvexity:
    def test_deadline_small(self):
        p = dl_params(0.8)
        opts = SimOptions(horizon_events=150_000, warmup_events=15_000, seed=7)
        grid = [3, 4, 5, 6, 7, 8, 9, 10, 11]
        rep = check_convexity(p, DL_C1, DL_C2, grid, opts, replications=5)
        assert rep.passed, rep.detail

    def test_grid_must_span(self):
        p = dl_params(0.8)
        opts = SimOptions(horizon_events=10_000, warmup_events=1_000, seed=7)
        with pytest.raises(ValueError):
            check_convexity(p, DL_C1, DL_C2, [20, 21, 22, 23, 24, 25, 26],
                            opts)


class TestBattery:
    def test_deadline_battery_passes(self):
        cfg = ExperimentConfig(family="deadline", base_seed=0)
        reports = run_verify(cfg, rho=0.8)
        names = {r.check_name for r in reports}
        assert {"exp_formula", "r_derivative", "claim1", "conservation",
                "q0_tail", "t1_tail", "amortized_fixed_point"} <= names
        failed = [r for r in reports if not r.passed]
        assert not failed, [f.detail for f in failed]
