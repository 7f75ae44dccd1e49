"""Domain types and closed-form model functions.

Quality is measured in units of the true requirement and money in units of
the system value, so a non-dimensionalized scenario has ``r = 1`` and
``v0 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _check_positive(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")


def _check_nonnegative(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")


def _check_effort(e: float) -> None:
    if not (0.0 <= e <= 1.0):
        raise ValueError(f"effort must lie in [0, 1], got {e!r}")


@dataclass(frozen=True)
class AgentParams:
    """Dimensionless subsystem engineer: productivity, noise, cost, requirement."""

    a: float
    sigma: float
    c: float
    r: float = 1.0

    def __post_init__(self):
        for name in ("a", "sigma", "c", "r"):
            _check_positive(name, getattr(self, name))


@dataclass(frozen=True)
class Contract:
    """Requirement-based transfer: ``psi1 + psi2 * H(q - psi3)``."""

    psi1: float
    psi2: float
    psi3: float

    def __post_init__(self):
        for name in ("psi1", "psi2", "psi3"):
            _check_nonnegative(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.psi1, self.psi2, self.psi3)


@dataclass(frozen=True)
class Scenario:
    v0: float
    agents: tuple[AgentParams, ...]

    def __post_init__(self):
        # v0 = 0 is the degenerate "worthless system" case and is allowed.
        _check_nonnegative("v0", self.v0)
        object.__setattr__(self, "agents", tuple(self.agents))
        if len(self.agents) < 1:
            raise ValueError("a scenario needs at least one agent")

    @property
    def n_agents(self) -> int:
        return len(self.agents)


@dataclass(frozen=True)
class EffortSolution:
    effort: float
    expected_payoff: float
    candidates: tuple[float, ...] = ()


@dataclass
class SolveResult:
    """Outcome of the contract optimization.

    ``converged`` is False when no restart reached a feasible point; in that
    case the contract lists are empty and ``principal_payoff`` is NaN.
    """

    contracts: list[Contract]
    efforts: list[float]
    principal_payoff: float
    participation_slacks: list[float]
    n_restarts_used: int
    converged: bool
    best_restart: int = -1
    restart_payoffs: list[float] = field(default_factory=list)


def std_normal_cdf(x: float) -> float:
    # erfc keeps full relative accuracy in the lower tail.
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def heaviside(x: float) -> int:
    """Unit step with ``H(0) = 1``."""
    return 1 if x >= 0 else 0


def transfer(q: float, contract: Contract) -> float:
    return contract.psi1 + contract.psi2 * heaviside(q - contract.psi3)


def quality(e: float, xi: float, agent: AgentParams) -> float:
    _check_effort(e)
    return agent.a * e + agent.sigma * xi


def system_value(qualities: Sequence[float], scenario: Scenario) -> float:
    if len(qualities) != scenario.n_agents:
        raise ValueError(
            f"expected {scenario.n_agents} qualities, got {len(qualities)}"
        )
    for q, agent in zip(qualities, scenario.agents):
        if not heaviside(q - agent.r):
            return 0.0
    return scenario.v0


def agent_realized_payoff(
    e: float, xi: float, contract: Contract, agent: AgentParams
) -> float:
    return transfer(quality(e, xi, agent), contract) - agent.c * e
