"""Optimal overtake age: root of E[c1(a + X)] = c2*mu2/mu1 with
X ~ Exp(mu1 - lambda1), plus the published closed forms for the two
benchmark experiment families."""

from __future__ import annotations

import math

from .cost import HoldingCost
from .policy import (ALPHA_TOL, AlphaDecision, BRACKET_LIMIT, INFINITE,
                     SystemParams, ZERO, finite)


def solve_alpha_star(params: SystemParams, c1: HoldingCost,
                     c2: float) -> AlphaDecision:
    """Three-case optimal overtake age.

    zero: E[c1(X)] >= c2*mu2/mu1 already at age 0, so full class-1
    priority is optimal. infinite: c1 never reaches the threshold even
    in the limit, so full class-2 priority is optimal. Otherwise the
    unique root of the lookahead equation, bisected to 1e-9.
    """
    theta = params.lookahead_rate
    target = c2 * params.mu2 / params.mu1
    if c1.exp_shift_mean(0.0, theta) >= target:
        return ZERO
    if c1.limit_at_infinity() < target:
        return INFINITE

    hi = max([1.0] + list(c1.breakpoints()))
    while c1.exp_shift_mean(hi, theta) < target:
        hi *= 2
        if hi > BRACKET_LIMIT:
            return INFINITE
    lo = 0.0
    while hi - lo > ALPHA_TOL:
        mid = (lo + hi) / 2
        if c1.exp_shift_mean(mid, theta) >= target:
            hi = mid
        else:
            lo = mid
    return finite(hi) if hi > ALPHA_TOL else ZERO


def alpha_star_closed_form(family: str, rho: float) -> float:
    """Published closed forms for the benchmark families, clamped at 0.

    quadratic: c1(t) = t^2, c2 = 30, mu1 = 1, mu2 = 3, lambda1 = 0.9*rho.
    deadline: step cost 10 past d = 10, c2 = 1, mu1 = 3, mu2 = 1,
    lambda1 = 2.25*rho.
    """
    if not 0 <= rho < 1:
        raise ValueError("rho must be in [0, 1)")
    if family == "quadratic":
        u = 1.0 / (1.0 - 0.9 * rho)
        disc = 90.0 - u * u
        if disc <= 0:
            return 0.0
        return max(-u + math.sqrt(disc), 0.0)
    if family == "deadline":
        return max(10.0 - math.log(30.0) / (3.0 - 2.25 * rho), 0.0)
    raise ValueError(f"unknown family {family!r}")
