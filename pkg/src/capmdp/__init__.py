"""Capacity-constrained multi-model MDP solver toolkit."""

from .model import (
    Instance,
    InstanceParams,
    OccupancyTrajectory,
    Scenario,
    Strategy,
    load_instance,
    load_strategy,
    save_instance,
    save_strategy,
    validate_instance,
)
from .evaluate import EvaluationResult, check_proposition1, check_proposition2, evaluate_strategy, simulate_cohort
from .exact import SolveResult, solve_exact, solve_exact_stationary
from .padp import PadpResult, decode_path, solve_padp
from .generator import (
    NominalModel,
    chronic_care_instance,
    estimate_nominal,
    generate_instance,
    random_instance,
    sample_rule_satisfying_model,
)
from .analysis import (
    AnalysisReport,
    capacity_sweep,
    compute_evpi,
    compute_evss,
    compute_flexibility,
    repair_strategy,
)

__all__ = [
    "Instance",
    "InstanceParams",
    "OccupancyTrajectory",
    "Scenario",
    "Strategy",
    "EvaluationResult",
    "SolveResult",
    "PadpResult",
    "NominalModel",
    "AnalysisReport",
    "validate_instance",
    "load_instance",
    "save_instance",
    "load_strategy",
    "save_strategy",
    "evaluate_strategy",
    "simulate_cohort",
    "check_proposition1",
    "check_proposition2",
    "solve_exact",
    "solve_exact_stationary",
    "solve_padp",
    "decode_path",
    "sample_rule_satisfying_model",
    "estimate_nominal",
    "generate_instance",
    "chronic_care_instance",
    "random_instance",
    "repair_strategy",
    "compute_evss",
    "compute_evpi",
    "compute_flexibility",
    "capacity_sweep",
]
