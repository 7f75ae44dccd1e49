"""Subsystem engineer: expected payoff and globally optimal effort."""

from __future__ import annotations

import math

from scipy.optimize import minimize_scalar

from reqcontract.model import (
    AgentParams,
    Contract,
    EffortSolution,
    _check_effort,
    std_normal_cdf,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Payoff differences below this are ties; ties go to the larger effort.
TIE_TOLERANCE = 1e-12
REFINE_HALF_WIDTH = 1e-3
REFINE_XATOL = 1e-10


def _payoff(e: float, contract: Contract, agent: AgentParams) -> float:
    z = (agent.a * e - contract.psi3) / agent.sigma
    return contract.psi1 - agent.c * e + contract.psi2 * std_normal_cdf(z)


def expected_agent_payoff(e: float, contract: Contract, agent: AgentParams) -> float:
    """Closed-form expectation of the agent's payoff at effort ``e``."""
    _check_effort(e)
    return _payoff(e, contract, agent)


def interior_stationary_effort(contract: Contract, agent: AgentParams) -> float | None:
    """Effort at the local maximum of the expected payoff, clamped to [0, 1].

    Returns None when the marginal bonus never outweighs the marginal cost,
    i.e. when ``c * sigma * sqrt(2 pi) >= psi2 * a``.
    """
    if contract.psi2 <= 0:
        return None
    ratio = agent.c * agent.sigma * _SQRT_2PI / (contract.psi2 * agent.a)
    if ratio >= 1.0:
        return None
    z_bar = math.sqrt(-2.0 * math.log(ratio))
    e = (contract.psi3 + agent.sigma * z_bar) / agent.a
    return min(max(e, 0.0), 1.0)


def stationary_candidates(contract: Contract, agent: AgentParams) -> list[float]:
    """Efforts that can be global maximizers: both endpoints plus the
    upper root of the first-order condition (the lower root is a local
    minimum of the payoff)."""
    candidates = [0.0, 1.0]
    e = interior_stationary_effort(contract, agent)
    if e is not None and e not in candidates:
        candidates.append(e)
    return candidates


def _refine(e0: float, contract: Contract, agent: AgentParams) -> float:
    lo = max(0.0, e0 - REFINE_HALF_WIDTH)
    hi = min(1.0, e0 + REFINE_HALF_WIDTH)
    res = minimize_scalar(
        lambda e: -_payoff(e, contract, agent),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": REFINE_XATOL},
    )
    return float(res.x)


def select_best(efforts, payoffs) -> tuple[float, float]:
    """Pick the highest payoff, resolving near-ties toward larger effort."""
    top = max(payoffs)
    best_e, best_u = -1.0, top
    for e, u in zip(efforts, payoffs):
        if u >= top - TIE_TOLERANCE and e > best_e:
            best_e, best_u = e, u
    return best_e, best_u


def best_response_effort(contract: Contract, agent: AgentParams) -> EffortSolution:
    """Global maximizer of the expected payoff over effort in [0, 1].

    The objective is a normal CDF minus a line, so it is not concave; the
    maximizer is found by enumerating the endpoints and the interior
    stationary point, with the latter polished by a bounded Brent search.
    """
    candidates = stationary_candidates(contract, agent)
    evaluated = list(candidates)
    if len(candidates) > 2 and 0.0 < candidates[2] < 1.0:
        refined = _refine(candidates[2], contract, agent)
        if _payoff(refined, contract, agent) > _payoff(candidates[2], contract, agent):
            evaluated.append(refined)
    payoffs = [_payoff(e, contract, agent) for e in evaluated]
    effort, payoff = select_best(evaluated, payoffs)
    return EffortSolution(effort=effort, expected_payoff=payoff, candidates=tuple(evaluated))
