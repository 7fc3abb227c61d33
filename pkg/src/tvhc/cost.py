"""Holding-cost functions: evaluation, cumulative integrals, and
exponential-shift expectations E[f(t + X)] with X ~ Exp(theta).

All cost functions are non-decreasing and non-negative on [0, inf).
Closed forms are used wherever the variant admits one; piecewise-linear
costs fall back to adaptive quadrature with an analytic affine tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

# Polynomial closed forms for the exponential shift are used up to this
# degree; higher degrees fall back to quadrature.
MAX_CLOSED_FORM_DEGREE = 4

QUAD_ABS_TOL = 1e-10


def _check_age(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("age t must be non-negative")
    return t


def _polyval(coeffs, x):
    """Horner evaluation with coeffs in ascending order."""
    out = 0.0
    for a in reversed(coeffs):
        out = out * x + a
    return out


def _check_rate(theta):
    if theta <= 0:
        raise ValueError("rate theta must be positive")


class HoldingCost:
    """Base class for instantaneous holding-cost curves c(t)."""

    def __call__(self, t):
        raise NotImplementedError

    def cumulative(self, t):
        """Integral of c over [0, t]."""
        raise NotImplementedError

    def derivative(self, t):
        """c'(t) on smooth pieces; raises at jump/kink points."""
        raise NotImplementedError

    def exp_shift_mean(self, t, theta):
        """E[c(t + X)] with X ~ Exp(theta)."""
        raise NotImplementedError

    def limit_at_infinity(self):
        """lim_{t -> inf} c(t), possibly math.inf."""
        raise NotImplementedError

    def breakpoints(self):
        """Ages where c has a jump or kink (empty for smooth variants)."""
        return []

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(HoldingCost):
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("constant cost rate must be non-negative")

    def __call__(self, t):
        t = _check_age(t)
        return np.broadcast_to(float(self.c), t.shape)[()] if t.ndim else float(self.c)

    def cumulative(self, t):
        t = _check_age(t)
        return self.c * t

    def derivative(self, t):
        _check_age(t)
        return 0.0

    def exp_shift_mean(self, t, theta):
        _check_age(t)
        _check_rate(theta)
        return float(self.c)

    def limit_at_infinity(self):
        return float(self.c)

    def to_dict(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Polynomial(HoldingCost):
    """c(t) = sum_k coeffs[k] * t**k, non-decreasing on [0, inf)."""

    coeffs: tuple = ()

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        if not coeffs:
            coeffs = (0.0,)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs[0] < 0:
            raise ValueError("c(0) must be non-negative")
        self._check_non_decreasing()

    def _check_non_decreasing(self):
        deriv = self._derivative_coeffs()
        if len(deriv) > 1 and deriv[-1] < 0:
            raise ValueError("polynomial decreases for large t")
        # p' can only change sign at roots of p''; check p' at those
        # critical points and at 0.
        candidates = [0.0]
        if len(deriv) > 2:
            second = [k * a for k, a in enumerate(deriv)][1:]
            roots = np.roots(second[::-1])
            candidates += [float(r.real) for r in roots
                           if abs(r.imag) < 1e-12 and r.real > 0]
        for x in candidates:
            if _polyval(deriv, x) < -1e-12:
                raise ValueError("polynomial is not non-decreasing on [0, inf)")

    def _derivative_coeffs(self):
        return tuple(k * a for k, a in enumerate(self.coeffs))[1:] or (0.0,)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, t):
        t = _check_age(t)
        return _polyval(self.coeffs, t)

    def cumulative(self, t):
        t = _check_age(t)
        integ = (0.0,) + tuple(a / (k + 1) for k, a in enumerate(self.coeffs))
        return _polyval(integ, t)

    def derivative(self, t):
        t = _check_age(t)
        return _polyval(self._derivative_coeffs(), t)

    def exp_shift_mean(self, t, theta):
        t = _check_age(t)
        _check_rate(theta)
        if self.degree > MAX_CLOSED_FORM_DEGREE:
            return exp_shift_quadrature(self, float(t), theta)
        # E[(t+X)^k] = sum_j C(k,j) t^(k-j) * j!/theta^j
        total = 0.0
        for k, a in enumerate(self.coeffs):
            if a == 0.0:
                continue
            mk = sum(math.comb(k, j) * t ** (k - j) * math.factorial(j) / theta ** j
                     for j in range(k + 1))
            total += a * mk
        return total

    def limit_at_infinity(self):
        return float(self.coeffs[0]) if self.degree == 0 else math.inf

    def to_dict(self):
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Deadline(HoldingCost):
    """Step cost c(t) = c_after * 1{t >= d}."""

    c_after: float
    d: float

    def __post_init__(self):
        if self.c_after < 0:
            raise ValueError("c_after must be non-negative")
        if self.d < 0:
            raise ValueError("deadline must be non-negative")

    def __call__(self, t):
        t = _check_age(t)
        return np.where(t >= self.d, self.c_after, 0.0)[()]

    def cumulative(self, t):
        t = _check_age(t)
        return self.c_after * np.maximum(t - self.d, 0.0)

    def derivative(self, t):
        t = _check_age(t)
        if np.any(t == self.d):
            raise ValueError("derivative undefined at the deadline")
        return 0.0

    def exp_shift_mean(self, t, theta):
        t = float(_check_age(t))
        _check_rate(theta)
        if t >= self.d:
            return float(self.c_after)
        return self.c_after * math.exp(-theta * (self.d - t))

    def limit_at_infinity(self):
        return float(self.c_after)

    def breakpoints(self):
        return [self.d]

    def to_dict(self):
        return {"kind": "deadline", "c_after": self.c_after, "d": self.d}


@dataclass(frozen=True)
class PiecewiseLinear(HoldingCost):
    """Linear interpolation through (time, cost-rate) knots; flat before
    the first knot, extrapolated with the last segment's slope after the
    last one."""

    knots: tuple = ()

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        object.__setattr__(self, "knots", knots)
        if not knots:
            raise ValueError("at least one knot required")
        times = [k[0] for k in knots]
        values = [k[1] for k in knots]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("knot times must be strictly increasing")
        if times[0] < 0:
            raise ValueError("knot times must be non-negative")
        if values[0] < 0:
            raise ValueError("cost rates must be non-negative")
        if any(v2 < v1 for v1, v2 in zip(values, values[1:])):
            raise ValueError("cost rates must be non-decreasing")

    @property
    def _times(self):
        return np.array([k[0] for k in self.knots])

    @property
    def _values(self):
        return np.array([k[1] for k in self.knots])

    @property
    def _last_slope(self):
        if len(self.knots) == 1:
            return 0.0
        (t1, v1), (t2, v2) = self.knots[-2], self.knots[-1]
        return (v2 - v1) / (t2 - t1)

    def __call__(self, t):
        t = _check_age(t)
        times, values = self._times, self._values
        out = np.interp(t, times, values)
        over = t > times[-1]
        if np.any(over):
            out = np.where(over, values[-1] + self._last_slope * (t - times[-1]), out)
        return out[()]

    def cumulative(self, t):
        t = _check_age(t)
        times, values = self._times, self._values
        # integral of c up to each knot
        seg = np.concatenate([[times[0] * values[0]],
                              np.diff(times) * (values[1:] + values[:-1]) / 2])
        cum_at_knot = np.cumsum(seg)
        idx = np.searchsorted(times, t, side="right") - 1
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(t)
        idx = np.atleast_1d(idx)
        out = np.empty_like(t_arr)
        below = idx < 0
        out[below] = values[0] * t_arr[below]
        inside = ~below
        i = idx[inside]
        dt = t_arr[inside] - times[i]
        v0 = values[i]
        if len(times) > 1:
            slopes = np.append(np.diff(values) / np.diff(times), self._last_slope)
        else:
            slopes = np.array([self._last_slope])
        out[inside] = cum_at_knot[i] + v0 * dt + slopes[i] * dt ** 2 / 2
        return out[0] if scalar else out

    def derivative(self, t):
        t = float(_check_age(t))
        times = self._times
        if any(abs(t - kt) < 1e-15 for kt in times):
            raise ValueError("derivative undefined at a knot")
        if t < times[0]:
            return 0.0
        i = int(np.searchsorted(times, t) - 1)
        if i >= len(times) - 1:
            return self._last_slope
        return (self._values[i + 1] - self._values[i]) / (times[i + 1] - times[i])

    def exp_shift_mean(self, t, theta):
        t = float(_check_age(t))
        _check_rate(theta)
        last = float(self._times[-1])
        x_tail = max(last - t, 0.0)
        b = self._last_slope
        # beyond the last knot the curve is affine, so the tail integral
        # is exact: int_{x0}^inf (f(t+x0) + b(x-x0)) theta e^{-theta x} dx
        tail = math.exp(-theta * x_tail) * (float(self(t + x_tail)) + b / theta)
        if x_tail == 0.0:
            return tail
        pts = sorted({float(k - t) for k in self._times if 0 < k - t < x_tail})
        body, _ = integrate.quad(
            lambda x: float(self(t + x)) * theta * math.exp(-theta * x),
            0.0, x_tail, points=pts or None, limit=200, epsabs=QUAD_ABS_TOL,
            epsrel=1e-12)
        return body + tail

    def limit_at_infinity(self):
        return math.inf if self._last_slope > 0 else float(self._values[-1])

    def breakpoints(self):
        return [float(x) for x in self._times]

    def to_dict(self):
        return {"kind": "piecewise_linear", "knots": [list(k) for k in self.knots]}


_KINDS = {
    "constant": lambda d: Constant(d["c"]),
    "polynomial": lambda d: Polynomial(tuple(d["coeffs"])),
    "deadline": lambda d: Deadline(d["c_after"], d["d"]),
    "piecewise_linear": lambda d: PiecewiseLinear(tuple(tuple(k) for k in d["knots"])),
}


def cost_from_dict(d):
    """Deserialize a cost function from its JSON object form."""
    try:
        kind = d["kind"]
        return _KINDS[kind](d)
    except KeyError as e:
        raise ValueError(f"bad cost function spec: {d!r}") from e


def exp_shift_quadrature(f, t, theta, upper_factor=40.0):
    """Generic E[f(t+X)], X ~ Exp(theta), by quadrature.

    Used as an independent cross-check of the closed forms. Truncates at
    upper_factor/theta; the remainder is bounded by the affine-or-flat
    continuation of f and added as f(t+U) e^{-theta U}.
    """
    if t < 0:
        raise ValueError("age t must be non-negative")
    _check_rate(theta)
    upper = upper_factor / theta
    pts = sorted({b - t for b in getattr(f, "breakpoints", list)() or []
                  if 0 < b - t < upper})
    val, _ = integrate.quad(
        lambda x: float(f(t + x)) * theta * math.exp(-theta * x),
        0.0, upper, points=pts or None, limit=300, epsabs=QUAD_ABS_TOL,
        epsrel=1e-13)
    return val + float(f(t + upper)) * math.exp(-theta * upper)


@dataclass(frozen=True)
class NetCost:
    """Net cost c(t) = mu1*c1(t) - mu2*c2 of the oldest class-1 job.

    Non-decreasing in t but may be negative. For negative ages the curve
    is extended flat at its t=0 value and the cumulative integral is
    signed, so identities involving expectations over negative arguments
    stay exact.
    """

    c1: HoldingCost
    c2: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if self.c2 < 0:
            raise ValueError("c2 must be non-negative")
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("service rates must be positive")

    def __call__(self, t):
        return self.mu1 * float(self.c1(max(float(t), 0.0))) - self.mu2 * self.c2

    def cumulative(self, t):
        t = float(t)
        if t >= 0:
            return self.mu1 * float(self.c1.cumulative(t)) - self.mu2 * self.c2 * t
        return self(0.0) * t

    def derivative(self, t):
        t = float(t)
        if t < 0:
            return 0.0
        return self.mu1 * float(self.c1.derivative(t))

    def exp_shift_mean(self, t, theta):
        return self.mu1 * self.c1.exp_shift_mean(t, theta) - self.mu2 * self.c2

    def breakpoints(self):
        return self.c1.breakpoints()


def bandit_r(nc: NetCost, lambda1: float, t1: float) -> float:
    """Per-state cost rate r(t1) = c(t1) + lambda1 * int_0^t1 c(s) ds.

    The integral term is the expected net cost of the younger class-1
    jobs, whose ages are partial sums of Exp(lambda1) gaps below t1.
    Defined for all real t1 via the signed cumulative of NetCost.
    """
    return nc(t1) + lambda1 * nc.cumulative(t1)


def r_derivative_residual(nc: NetCost, lambda1: float, t: float, h: float) -> float:
    """|central difference of r at step h - (c'(t) + lambda1*c(t))|."""
    if h <= 0:
        raise ValueError("step h must be positive")
    for b in nc.breakpoints():
        if abs(t - b) < 1e-12:
            raise ValueError("derivative undefined at a cost breakpoint")
    num = (bandit_r(nc, lambda1, t + h) - bandit_r(nc, lambda1, t - h)) / (2 * h)
    exact = nc.derivative(t) + lambda1 * nc(t)
    return abs(num - exact)
