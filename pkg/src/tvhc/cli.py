"""Command-line entry point.

Subcommands: alpha, simulate, sweep, alpha-curve, convexity, verify.
Configuration is one JSON document (see README for the schema); --seed,
--reps, and --policies override the config file. Exit codes: 0 success,
1 configuration error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .experiments import (ExperimentConfig, family_costs, family_params,
                          run_alpha_curve, run_sweep, run_verify)
from .opt import solve_alpha_star
from .policy import PolicySpec, overtake_age
from .sim import SimOptions, mix64, simulate, time_avg_cost, write_csv
from .verify import check_convexity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2


def _load_config(args) -> ExperimentConfig:
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    cfg = ExperimentConfig.from_dict(d)
    kw = {}
    if getattr(args, "seed", None) is not None:
        kw["base_seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        kw["replications"] = args.reps
    if getattr(args, "policies", None):
        kw["policies"] = tuple(PolicySpec(k) for k in args.policies)
    if kw:
        from dataclasses import replace
        cfg = replace(cfg, **kw)
    return cfg


def _cmd_alpha(args):
    cfg = _load_config(args)
    c1, c2 = family_costs(cfg)
    params = family_params(cfg, args.rho)
    dec = solve_alpha_star(params, c1, c2)
    print(json.dumps(dec.to_dict()))
    return EXIT_OK


def _cmd_simulate(args):
    cfg = _load_config(args)
    c1, c2 = family_costs(cfg)
    params = family_params(cfg, args.rho)
    p = PolicySpec(args.policy, args.alpha)
    opts = SimOptions(horizon_events=cfg.sim.horizon_events,
                      warmup_events=cfg.sim.warmup_events,
                      seed=cfg.base_seed, record_tails=args.out is not None)
    res = simulate(params, p, c1, c2, opts)
    if args.out:
        write_csv(res, args.out)
    summary = {
        "policy": p.label(), "rho": args.rho, "seed": res.seed,
        "mean_cost": time_avg_cost(res, c1, c2),
        "mean_t1": float(np.mean(res.t1_samples)) if len(res.t1_samples) else None,
        "mean_t2": float(np.mean(res.t2_samples)) if len(res.t2_samples) else None,
        "n1": len(res.t1_samples), "n2": len(res.t2_samples),
    }
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _load_config(args)
    run_sweep(cfg, args.out)
    print(f"wrote {args.out} and {args.out}.aggregate.csv")
    return EXIT_OK


def _cmd_alpha_curve(args):
    cfg = _load_config(args)
    run_alpha_curve(cfg, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_convexity(args):
    cfg = _load_config(args)
    c1, c2 = family_costs(cfg)
    params = family_params(cfg, args.rho)
    dec = solve_alpha_star(params, c1, c2)
    if args.alphas:
        grid = [float(a) for a in args.alphas.split(",")]
    else:
        astar = dec.value()
        if not np.isfinite(astar):
            raise ValueError("optimal overtake age is infinite; pass --alphas")
        lo = max(astar - 5.0, 0.0)
        grid = list(np.linspace(lo, astar + 5.0, 11))
    opts = SimOptions(horizon_events=cfg.sim.horizon_events,
                      warmup_events=cfg.sim.warmup_events, seed=cfg.base_seed)
    rep = check_convexity(params, c1, c2, grid, opts,
                          replications=cfg.replications)
    print(json.dumps(rep.to_dict()))
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _cmd_verify(args):
    cfg = _load_config(args)
    reports = run_verify(cfg, rho=args.rho)
    ok = True
    for rep in reports:
        print(json.dumps(rep.to_dict()))
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser():
    ap = argparse.ArgumentParser(prog="tvhc")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, rho_default=None):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override base seed")
        p.add_argument("--reps", type=int, help="override replication count")
        p.add_argument("--policies", nargs="*",
                       help="override policy list (kinds)")
        if rho_default is not False:
            p.add_argument("--rho", type=float, default=rho_default,
                           help="system load")

    p = sub.add_parser("alpha", help="optimal overtake age as JSON")
    common(p, 0.8)
    p.set_defaults(fn=_cmd_alpha)

    p = sub.add_parser("simulate", help="one simulation run")
    common(p, 0.8)
    p.add_argument("--policy", default="lookahead")
    p.add_argument("--alpha", type=float, help="overtake age for kind overtake")
    p.add_argument("--out", help="per-job CSV output path")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="load sweep to CSV")
    common(p, False)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("alpha-curve", help="overtake ages per load to CSV")
    common(p, False)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_alpha_curve)

    p = sub.add_parser("convexity", help="cost convexity in overtake age")
    common(p, 0.8)
    p.add_argument("--alphas", help="comma-separated overtake-age grid")
    p.set_defaults(fn=_cmd_convexity)

    p = sub.add_parser("verify", help="analytic verification battery")
    common(p, 0.8)
    p.set_defaults(fn=_cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
