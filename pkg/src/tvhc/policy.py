"""Index-policy family for the two-class queue.

Every non-FCFS policy assigns class-1 jobs a non-decreasing index V1(t)
of their age and class-2 jobs the constant index mu2*c2, and therefore
reduces to a three-level priority structure parameterized by the
overtake age: the youngest class-1 age whose index reaches mu2*c2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cost import HoldingCost

ALPHA_TOL = 1e-9
BRACKET_LIMIT = 1e6


@dataclass(frozen=True)
class SystemParams:
    """Arrival and service rates. Stability requires rho < 1.

    Arrival rates may be zero (single-class and light-traffic limits);
    service rates must be positive.
    """

    lambda1: float
    lambda2: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("service rates must be positive")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("arrival rates must be non-negative")
        if self.rho >= 1:
            raise ValueError(f"unstable system: rho = {self.rho:.4f} >= 1")

    @property
    def rho1(self):
        return self.lambda1 / self.mu1

    @property
    def rho2(self):
        return self.lambda2 / self.mu2

    @property
    def rho(self):
        return self.rho1 + self.rho2

    @property
    def lookahead_rate(self):
        """Rate of the lookahead variable X ~ Exp(mu1 - lambda1)."""
        return self.mu1 - self.lambda1

    def workload(self):
        """Time-average work W in the system (conservation-law target)."""
        return (self.lambda1 / self.mu1 ** 2 + self.lambda2 / self.mu2 ** 2) \
            / (1 - self.rho)


_POLICY_KINDS = ("fcfs", "pprio12", "pprio21", "gen_cmu", "aalto",
                 "lookahead", "overtake")


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "overtake":
            if self.alpha is None or self.alpha < 0:
                raise ValueError("overtake policy needs alpha >= 0")
        elif self.alpha is not None:
            raise ValueError(f"policy {self.kind!r} takes no alpha")

    @property
    def is_index_policy(self):
        return self.kind != "fcfs"

    def label(self):
        if self.kind == "overtake":
            return f"overtake({self.alpha:g})"
        return self.kind

    def to_dict(self):
        d = {"policy": self.kind}
        if self.kind == "overtake":
            d["alpha"] = self.alpha
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["policy"], d.get("alpha"))


FCFS = PolicySpec("fcfs")
PPRIO12 = PolicySpec("pprio12")
PPRIO21 = PolicySpec("pprio21")
GEN_CMU = PolicySpec("gen_cmu")
AALTO = PolicySpec("aalto")
LOOKAHEAD = PolicySpec("lookahead")


def overtake_fixed(alpha: float) -> PolicySpec:
    return PolicySpec("overtake", float(alpha))


@dataclass(frozen=True)
class AlphaDecision:
    """Outcome of an overtake-age computation.

    case is one of "zero" (full priority to class 1), "finite", or
    "infinite" (full priority to class 2, i.e. strict P-Prio(2;1)).
    """

    case: str
    alpha: float | None = None

    def __post_init__(self):
        if self.case not in ("zero", "finite", "infinite"):
            raise ValueError(f"bad case {self.case!r}")
        if self.case == "finite":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("finite decision requires alpha > 0")
        elif self.alpha is not None:
            raise ValueError(f"case {self.case!r} carries no alpha")

    def value(self):
        """Overtake age as a float, with 0 and inf for the edge cases."""
        return {"zero": 0.0, "infinite": math.inf}.get(self.case, self.alpha)

    def to_dict(self):
        d = {"case": self.case}
        if self.case == "finite":
            d["alpha"] = self.alpha
        return d


ZERO = AlphaDecision("zero")
INFINITE = AlphaDecision("infinite")


def finite(alpha: float) -> AlphaDecision:
    return AlphaDecision("finite", float(alpha))


def index_class1(p: PolicySpec, t: float, params: SystemParams,
                 c1: HoldingCost) -> float:
    """Class-1 index V1(t) under policy p.

    gen_cmu uses the instantaneous cost, aalto looks ahead by a service
    time Exp(mu1), lookahead by a single-class response time
    Exp(mu1 - lambda1). Strict priorities use +-inf sentinels.
    """
    if not p.is_index_policy:
        raise ValueError("FCFS is not an index policy")
    if t < 0:
        raise ValueError("age must be non-negative")
    mu1 = params.mu1
    if p.kind == "gen_cmu":
        return mu1 * float(c1(t))
    if p.kind == "aalto":
        return mu1 * c1.exp_shift_mean(t, mu1)
    if p.kind == "lookahead":
        return mu1 * c1.exp_shift_mean(t, params.lookahead_rate)
    if p.kind == "pprio12":
        return math.inf
    if p.kind == "pprio21":
        return -math.inf
    raise ValueError(f"policy {p.kind!r} has no index function; "
                     "use overtake_age directly")


def index_class2(params: SystemParams, c2: float) -> float:
    """Class-2 index, constant in age: mu2 * c2."""
    if c2 < 0:
        raise ValueError("c2 must be non-negative")
    return params.mu2 * c2


def _index_limit(p: PolicySpec, params: SystemParams, c1: HoldingCost):
    """sup_t V1(t) = mu1 * lim c1 (indexes are monotone in t)."""
    lim = c1.limit_at_infinity()
    return math.inf if math.isinf(lim) else params.mu1 * lim


def overtake_age(p: PolicySpec, params: SystemParams, c1: HoldingCost,
                 c2: float) -> AlphaDecision:
    """Youngest age where V1 reaches the class-2 index mu2*c2.

    Found by bisection after geometric bracket expansion; V1 is
    non-decreasing so the crossing is unique. Jobs at exactly the
    crossing age are promoted, so the decision uses V1(t) >= mu2*c2.
    """
    if not p.is_index_policy:
        raise ValueError("FCFS has no overtake age")
    if p.kind == "pprio12":
        return ZERO
    if p.kind == "pprio21":
        return INFINITE
    if p.kind == "overtake":
        return ZERO if p.alpha == 0 else finite(p.alpha)

    v2 = index_class2(params, c2)
    if index_class1(p, 0.0, params, c1) >= v2:
        return ZERO

    hi = max([1.0] + list(c1.breakpoints()))
    while index_class1(p, hi, params, c1) < v2:
        hi *= 2
        if hi > BRACKET_LIMIT:
            # no crossing within the bracket limit: either sup V1 < v2,
            # or v2 is only approached asymptotically
            return INFINITE
    lo = 0.0
    while hi - lo > ALPHA_TOL:
        mid = (lo + hi) / 2
        if index_class1(p, mid, params, c1) >= v2:
            hi = mid
        else:
            lo = mid
    return finite(hi) if hi > ALPHA_TOL else ZERO
