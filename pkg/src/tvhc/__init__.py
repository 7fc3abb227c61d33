"""Age-based index scheduling for a two-class M/M/1 queue with
time-varying holding costs."""

from .cost import (Constant, Deadline, HoldingCost, NetCost,
                   PiecewiseLinear, Polynomial, bandit_r, cost_from_dict,
                   exp_shift_quadrature, r_derivative_residual)
from .policy import (AALTO, FCFS, GEN_CMU, LOOKAHEAD, PPRIO12, PPRIO21,
                     AlphaDecision, PolicySpec, SystemParams, index_class1,
                     index_class2, overtake_age, overtake_fixed)
from .opt import alpha_star_closed_form, solve_alpha_star
from .sim import (SimOptions, SimResult, empirical_tail, mix64, simulate,
                  splitmix64, time_avg_cost, write_csv)
from .verify import (VerificationReport, amortized_fixed_point,
                     amortized_index, check_claim1, check_conservation,
                     check_convexity, check_exp_formula, check_q0_tail,
                     check_t1_tail)
from .experiments import (ExperimentConfig, family_costs, family_params,
                          run_alpha_curve, run_sweep, run_verify)

__all__ = [
    "Constant", "Deadline", "HoldingCost", "NetCost", "PiecewiseLinear",
    "Polynomial", "bandit_r", "cost_from_dict", "exp_shift_quadrature",
    "r_derivative_residual",
    "AALTO", "FCFS", "GEN_CMU", "LOOKAHEAD", "PPRIO12", "PPRIO21",
    "AlphaDecision", "PolicySpec", "SystemParams", "index_class1",
    "index_class2", "overtake_age", "overtake_fixed",
    "alpha_star_closed_form", "solve_alpha_star",
    "SimOptions", "SimResult", "empirical_tail", "mix64", "simulate",
    "splitmix64", "time_avg_cost", "write_csv",
    "VerificationReport", "amortized_fixed_point", "amortized_index",
    "check_claim1", "check_conservation", "check_convexity",
    "check_exp_formula", "check_q0_tail", "check_t1_tail",
    "ExperimentConfig", "family_costs", "family_params", "run_alpha_curve",
    "run_sweep", "run_verify",
]
