import math

import pytest

from tvhc.cost import Constant, Deadline, Polynomial
from tvhc.opt import alpha_star_closed_form, solve_alpha_star
from tvhc.policy import LOOKAHEAD, SystemParams, overtake_age

QUAD_C1, QUAD_C2 = Polynomial((0, 0, 1)), 30.0
DL_C1, DL_C2 = Deadline(10.0, 10.0), 1.0


def quad_params(rho):
    return SystemParams(0.9 * rho, 0.3 * rho, 1.0, 3.0)


def dl_params(rho):
    return SystemParams(2.25 * rho, 0.25 * rho, 3.0, 1.0)


class TestSolve:
    def test_deadline_light(self):
        dec = solve_alpha_star(dl_params(0.0), DL_C1, DL_C2)
        assert dec.value() == pytest.approx(10 - math.log(30) / 3, abs=1e-8)

    def test_deadline_heavy_limit(self):
        # as the load approaches 1 the age tends to 10 - (4/3) ln 30
        dec = solve_alpha_star(dl_params(1 - 1e-9), DL_C1, DL_C2)
        assert dec.value() == pytest.approx(10 - 4 / 3 * math.log(30), abs=1e-4)

    def test_quadratic_light(self):
        dec = solve_alpha_star(quad_params(0.0), QUAD_C1, QUAD_C2)
        assert dec.value() == pytest.approx(-1 + math.sqrt(89), abs=1e-8)

    def test_quadratic_heavy_zero(self):
        for rho in (0.95, 0.98):
            assert solve_alpha_star(quad_params(rho), QUAD_C1, QUAD_C2).case == "zero"

    def test_constant_below_threshold_infinite(self):
        # mu1 * lim c1 = 0.5 < mu2 c2 = 1
        assert solve_alpha_star(dl_params(0.5), Constant(0.5 / 3), 1.0).case \
            == "infinite"

    def test_matches_lookahead_overtake_age(self):
        for rho in (0.0, 0.4, 0.8):
            p = dl_params(rho)
            a = solve_alpha_star(p, DL_C1, DL_C2).value()
            b = overtake_age(LOOKAHEAD, p, DL_C1, DL_C2).value()
            assert a == pytest.approx(b, abs=1e-7)

    def test_fixed_point_identity(self):
        for rho in (0.2, 0.6, 0.9):
            p = dl_params(rho)
            dec = solve_alpha_star(p, DL_C1, DL_C2)
            lhs = p.mu1 * DL_C1.exp_shift_mean(dec.value(), p.lookahead_rate)
            assert lhs == pytest.approx(p.mu2 * DL_C2, abs=1e-8)


class TestClosedForm:
    def test_rho_range(self):
        with pytest.raises(ValueError):
            alpha_star_closed_form("deadline", 1.0)
        with pytest.raises(ValueError):
            alpha_star_closed_form("deadline", -0.1)
        with pytest.raises(ValueError):
            alpha_star_closed_form("cubic", 0.5)

    def test_published_points(self):
        assert alpha_star_closed_form("deadline", 0.0) == pytest.approx(8.866, abs=1e-3)
        assert alpha_star_closed_form("deadline", 0.98) == pytest.approx(5.722, abs=1e-3)
        assert alpha_star_closed_form("quadratic", 0.95) == 0.0

    @pytest.mark.parametrize("rho", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                     0.8, 0.9])
    def test_solver_agreement_quadratic(self, rho):
        got = solve_alpha_star(quad_params(rho), QUAD_C1, QUAD_C2).value()
        assert got == pytest.approx(alpha_star_closed_form("quadratic", rho),
                                    abs=1e-6)

    @pytest.mark.parametrize("rho", [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.98])
    def test_solver_agreement_deadline(self, rho):
        got = solve_alpha_star(dl_params(rho), DL_C1, DL_C2).value()
        assert got == pytest.approx(alpha_star_closed_form("deadline", rho),
                                    abs=1e-6)
