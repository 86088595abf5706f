"""Band switching policies for a two-rate production-inventory system.

Closed-form discounted costs of threshold policies via fluctuation-theory
kernels, threshold optimization with HJB verification, and an independent
Monte Carlo simulator for cross-checks.
"""

__version__ = "0.1.0"

from .cost_one import (
    BandOne,
    BandTwo,
    CostSurface,
    total_cost,
)
from .cost_two import total_cost_two, upper_phase1_costs
from .model import (
    DemandLaw,
    HoldingCost,
    ModelConfig,
    PenaltyCost,
    SwitchMatrix,
    drift_mean,
    laplace_exponent,
    upper_cost_bound,
    validate,
)
from .optimize import (
    OptimizationResult,
    escalate,
    optimize_doshi,
    optimize_type_one,
    optimize_type_two,
)
from .scale import ScaleSet, build_scale, check_laplace_identity, eval_W_family, eval_Z_family
from .simulate import SimEstimate, SimStrategy, estimate_cost, estimate_occupation, simulate_path
from .verify import VerificationReport, operator_L, operator_L0, verify_strategy

__all__ = [
    "BandOne", "BandTwo", "CostSurface", "DemandLaw", "HoldingCost", "ModelConfig",
    "OptimizationResult", "PenaltyCost", "ScaleSet", "SimEstimate", "SimStrategy",
    "SwitchMatrix", "VerificationReport", "build_scale", "check_laplace_identity",
    "drift_mean", "escalate", "estimate_cost", "estimate_occupation", "eval_W_family",
    "eval_Z_family", "laplace_exponent", "operator_L", "operator_L0", "optimize_doshi",
    "optimize_type_one", "optimize_type_two", "simulate_path", "total_cost",
    "total_cost_two", "upper_cost_bound", "upper_phase1_costs", "validate",
    "verify_strategy",
]
