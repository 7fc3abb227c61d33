"""Experiment families, load sweeps, and CSV emission.

Two built-in families:

quadratic: mu1=1, mu2=3, c1(t)=t^2, c2=30, arrivals split so that
lambda1 = 0.75*lambda (lambda1 = 0.9*rho).
deadline: mu1=3, mu2=1, c1 a step of height 10 at age 10, c2=1,
lambda1 = 0.9*lambda (lambda1 = 2.25*rho).

Cost constants are chosen so the optimal overtake age has the published
closed forms; reported cost ratios are invariant to joint rescaling.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cost import Deadline, HoldingCost, NetCost, Polynomial, cost_from_dict
from .opt import solve_alpha_star
from .policy import (AALTO, FCFS, GEN_CMU, LOOKAHEAD, PPRIO12, PPRIO21,
                     PolicySpec, SystemParams, _POLICY_KINDS, overtake_age)
from . import verify as _verify
from .sim import SimOptions, SimResult, mix64, simulate, time_avg_cost

FAMILIES = ("quadratic", "deadline", "custom")

DEFAULT_RHO_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98)
DEFAULT_POLICIES = (FCFS, PPRIO12, PPRIO21, GEN_CMU, AALTO, LOOKAHEAD)

SWEEP_HEADER = ["family", "rho", "policy", "replication", "seed",
                "mean_cost", "mean_t1", "mean_t2", "overtake_age",
                "conservation_residual"]
AGG_HEADER = ["family", "rho", "policy", "replications", "mean_cost",
              "two_sigma", "ratio_vs_lookahead", "mean_t1", "mean_t2",
              "overtake_age"]


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "deadline"
    rho_grid: tuple = DEFAULT_RHO_GRID
    policies: tuple = DEFAULT_POLICIES
    replications: int = 10
    base_seed: int = 0
    sim: SimOptions = field(default_factory=SimOptions)
    # custom-family fields; ignored for the built-ins
    mu1: float | None = None
    mu2: float | None = None
    frac1: float | None = None  # class-1 share of the total arrival rate
    c1: HoldingCost | None = None
    c2: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.family == "custom":
            if None in (self.mu1, self.mu2, self.frac1, self.c1, self.c2):
                raise ValueError("custom family needs mu1, mu2, frac1, c1, c2")
            if not 0 < self.frac1 <= 1:
                raise ValueError("frac1 must be in (0, 1]")

    @classmethod
    def from_dict(cls, d):
        kw = {}
        for k in ("family", "replications", "base_seed", "mu1", "mu2",
                  "frac1", "c2"):
            if k in d:
                kw[k] = d[k]
        if "rho_grid" in d:
            kw["rho_grid"] = tuple(float(r) for r in d["rho_grid"])
        if "policies" in d:
            kw["policies"] = tuple(PolicySpec.from_dict(p)
                                   for p in d["policies"])
        if "c1" in d:
            kw["c1"] = cost_from_dict(d["c1"])
        if "sim" in d:
            kw["sim"] = SimOptions(**d["sim"])
        return cls(**kw)


def family_costs(cfg: ExperimentConfig):
    """(c1, c2) for the configured family."""
    if cfg.family == "quadratic":
        return Polynomial((0.0, 0.0, 1.0)), 30.0
    if cfg.family == "deadline":
        return Deadline(10.0, 10.0), 1.0
    return cfg.c1, cfg.c2


def family_params(cfg: ExperimentConfig, rho: float) -> SystemParams:
    """System rates at load rho, preserving the family's arrival split."""
    if not 0 <= rho < 1:
        raise ValueError(f"unstable load rho = {rho}")
    if cfg.family == "quadratic":
        return SystemParams(0.9 * rho, 0.3 * rho, 1.0, 3.0)
    if cfg.family == "deadline":
        return SystemParams(2.25 * rho, 0.25 * rho, 3.0, 1.0)
    mu1, mu2, p1 = cfg.mu1, cfg.mu2, cfg.frac1
    lam = rho / (p1 / mu1 + (1 - p1) / mu2)
    return SystemParams(p1 * lam, (1 - p1) * lam, mu1, mu2)


def _policy_id(p: PolicySpec) -> int:
    return _POLICY_KINDS.index(p.kind)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_one(cfg, rho, p, rep):
    params = family_params(cfg, rho)
    c1, c2 = family_costs(cfg)
    seed = mix64(cfg.base_seed, _policy_id(p), cfg.rho_grid.index(rho), rep)
    opts = SimOptions(horizon_events=cfg.sim.horizon_events,
                      warmup_events=cfg.sim.warmup_events,
                      seed=seed, record_tails=False)
    res = simulate(params, p, c1, c2, opts)
    age = math.nan if p.kind == "fcfs" else overtake_age(p, params, c1, c2).value()
    cons = _verify.check_conservation(res, params).statistic
    return {
        "family": cfg.family, "rho": rho, "policy": p.label(),
        "replication": rep, "seed": seed,
        "mean_cost": time_avg_cost(res, c1, c2),
        "mean_t1": float(np.mean(res.t1_samples)) if len(res.t1_samples) else math.nan,
        "mean_t2": float(np.mean(res.t2_samples)) if len(res.t2_samples) else math.nan,
        "overtake_age": age, "conservation_residual": cons,
    }


def run_sweep(cfg: ExperimentConfig, out_path, agg_path=None):
    """Per-replication sweep CSV plus a per-(rho, policy) aggregate CSV.

    Aggregates carry mean, 2-sigma across replications, and the cost
    ratio against the lookahead policy at the same load.
    """
    rows = []
    for rho in cfg.rho_grid:
        if not 0 <= rho < 1:
            warnings.warn(f"skipping unstable load rho = {rho}")
            rows.append({"family": cfg.family, "rho": rho,
                         "policy": "unstable", "replication": "", "seed": "",
                         "mean_cost": "", "mean_t1": "", "mean_t2": "",
                         "overtake_age": "", "conservation_residual": ""})
            continue
        for p in cfg.policies:
            for rep in range(cfg.replications):
                rows.append(_run_one(cfg, rho, p, rep))
    rows.sort(key=lambda r: (r["family"], float(r["rho"]), r["policy"],
                             r["replication"] if r["replication"] != "" else -1))
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in SWEEP_HEADER])

    aggs = []
    groups = {}
    for r in rows:
        if r["policy"] == "unstable":
            continue
        groups.setdefault((r["rho"], r["policy"]), []).append(r)
    for (rho, pol), g in groups.items():
        costs = np.array([r["mean_cost"] for r in g], dtype=float)
        aggs.append({
            "family": cfg.family, "rho": rho, "policy": pol,
            "replications": len(g), "mean_cost": float(costs.mean()),
            "two_sigma": 2 * float(costs.std(ddof=1)) if len(g) > 1 else 0.0,
            "ratio_vs_lookahead": None,
            "mean_t1": float(np.mean([r["mean_t1"] for r in g])),
            "mean_t2": float(np.mean([r["mean_t2"] for r in g])),
            "overtake_age": g[0]["overtake_age"],
        })
    base = {a["rho"]: a["mean_cost"] for a in aggs if a["policy"] == "lookahead"}
    for a in aggs:
        if a["rho"] in base and base[a["rho"]] > 0:
            a["ratio_vs_lookahead"] = a["mean_cost"] / base[a["rho"]]
    aggs.sort(key=lambda a: (a["family"], float(a["rho"]), a["policy"]))
    if agg_path is None:
        agg_path = str(out_path) + ".aggregate.csv"
    with open(agg_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AGG_HEADER)
        for a in aggs:
            w.writerow([_fmt(a[k]) for k in AGG_HEADER])
    return rows, aggs


def run_alpha_curve(cfg: ExperimentConfig, out_path=None):
    """Overtake age per index policy per load."""
    c1, c2 = family_costs(cfg)
    rows = []
    for rho in cfg.rho_grid:
        if not 0 <= rho < 1:
            warnings.warn(f"skipping unstable load rho = {rho}")
            rows.append({"rho": rho, "policy": "unstable", "overtake_age": ""})
            continue
        params = family_params(cfg, rho)
        for p in cfg.policies:
            if not p.is_index_policy:
                continue
            rows.append({"rho": rho, "policy": p.label(),
                         "overtake_age": overtake_age(p, params, c1, c2).value()})
    rows.sort(key=lambda r: (float(r["rho"]), r["policy"]))
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "policy", "overtake_age"])
            for r in rows:
                w.writerow([_fmt(r[k]) for k in ("rho", "policy",
                                                 "overtake_age")])
    return rows


def run_verify(cfg: ExperimentConfig, rho=None):
    """Battery of analytic checks over the configured family."""
    c1, c2 = family_costs(cfg)
    if c1.limit_at_infinity() < float(c1(0.0)):
        raise ValueError("c1 must be non-decreasing")
    if rho is None:
        rho = 0.8
    params = family_params(cfg, rho)
    if params.lambda1 <= 0:
        raise ValueError("verification needs lambda1 > 0")
    nc = NetCost(c1, c2, params.mu1, params.mu2)

    reports = []
    rng = np.random.Generator(np.random.PCG64(mix64(cfg.base_seed, 97)))
    for _ in range(5):
        x0 = float(rng.uniform(0.1, 5.0))
        theta = float(rng.uniform(0.2, 4.0))
        reports.append(_verify.check_exp_formula(4, x0, theta))

    # finite-difference check of r'(t) = c'(t) + lambda1 c(t)
    from .cost import r_derivative_residual
    worst = 0.0
    bps = set(nc.breakpoints())
    for _ in range(20):
        lam = float(rng.uniform(0.1, 3.0))
        t = float(rng.uniform(0.1, 15.0))
        if any(abs(t - b) < 0.05 for b in bps):
            continue
        nc_t = NetCost(c1, c2, params.mu1, params.mu2)
        worst = max(worst, r_derivative_residual(nc_t, lam, t, 1e-5)
                    / max(1.0, abs(nc_t.derivative(t) + lam * nc_t(t))))
    reports.append(_verify.VerificationReport(
        "r_derivative", worst, 1e-6, worst <= 1e-6,
        "max relative residual over random (lambda1, t)"))

    dec = solve_alpha_star(params, c1, c2)
    if dec.case in ("zero", "finite"):
        astar = dec.value()
        theta = params.lookahead_rate
        reports.append(_verify.check_claim1(params, nc, astar))
        for k in (0.5, 1.0, 2.0, 5.0):
            reports.append(_verify.check_claim1(params, nc, astar + k / theta))

        runs = []
        for rep in range(5):
            opts = SimOptions(horizon_events=cfg.sim.horizon_events,
                              warmup_events=cfg.sim.warmup_events,
                              seed=mix64(cfg.base_seed, 11, rep))
            runs.append(simulate(params, LOOKAHEAD, c1, c2, opts))
        pooled = SimResult(
            t1_samples=np.concatenate([r.t1_samples for r in runs]),
            t2_samples=np.concatenate([r.t2_samples for r in runs]),
            q0_sojourns=np.concatenate([r.q0_sojourns for r in runs]),
            total_cost=sum(r.total_cost for r in runs),
            busy_time=sum(r.busy_time for r in runs),
            horizon=sum(r.horizon for r in runs), seed=runs[0].seed)
        reports.append(_verify.check_conservation(pooled, params))
        if len(pooled.q0_sojourns):
            reports.append(_verify.check_q0_tail(runs, params))
        reports.append(_verify.check_t1_tail(runs, params, astar))
        if np.sum(pooled.t1_samples >= astar) >= _verify.MIN_CONDITIONAL_SAMPLES:
            reports.append(_verify.amortized_fixed_point(
                runs, params, c1, c2, astar))
    return reports
