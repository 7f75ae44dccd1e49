"""Requirement-based incentive contracts for one-shot systems engineering."""

from reqcontract.agent import (
    best_response_effort,
    expected_agent_payoff,
    stationary_candidates,
)
from reqcontract.calibration import (
    CalibrationFit,
    DimensionlessParams,
    HistoricalRecord,
    LinearQualityRegressor,
    fit_linear_mle,
    scaled_quality,
    to_dimensionless,
)
from reqcontract.model import (
    AgentParams,
    Contract,
    EffortSolution,
    Scenario,
    SolveResult,
    agent_realized_payoff,
    heaviside,
    quality,
    std_normal_cdf,
    std_normal_pdf,
    system_value,
    transfer,
)
from reqcontract.montecarlo import (
    McEstimate,
    simulate_expected_agent_payoff,
    simulate_expected_principal_payoff,
    verify_phi_identity,
)
from reqcontract.principal import (
    ContractOptimizer,
    OptimizerOptions,
    SweepResult,
    expected_principal_payoff,
    optimize_contracts,
    participation_slack,
    sweep_requirement,
)

__version__ = "0.1.0"

__all__ = [
    "AgentParams",
    "CalibrationFit",
    "Contract",
    "ContractOptimizer",
    "DimensionlessParams",
    "EffortSolution",
    "HistoricalRecord",
    "LinearQualityRegressor",
    "McEstimate",
    "OptimizerOptions",
    "Scenario",
    "SolveResult",
    "SweepResult",
    "agent_realized_payoff",
    "best_response_effort",
    "expected_agent_payoff",
    "expected_principal_payoff",
    "fit_linear_mle",
    "heaviside",
    "optimize_contracts",
    "participation_slack",
    "quality",
    "scaled_quality",
    "simulate_expected_agent_payoff",
    "simulate_expected_principal_payoff",
    "stationary_candidates",
    "std_normal_cdf",
    "std_normal_pdf",
    "sweep_requirement",
    "system_value",
    "to_dimensionless",
    "transfer",
    "verify_phi_identity",
]
