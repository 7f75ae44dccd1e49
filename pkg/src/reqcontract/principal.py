"""Systems engineer: expected payoff, participation, and optimal contracts.

The contract problem is bilevel: every candidate contract vector is scored by
first solving each agent's best response.  The resulting objective jumps
wherever an agent switches between shirking and working, so the local search
is run on the smooth "working" branch with the agent's global-optimality
condition imposed as an explicit inequality, and every restart outcome is
re-scored with the exact bilevel objective before it can be accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from reqcontract.agent import (
    _payoff,
    best_response_effort,
    interior_stationary_effort,
    select_best,
)
from reqcontract.model import (
    AgentParams,
    Contract,
    Scenario,
    SolveResult,
    std_normal_cdf,
)

SWEEP_MAX = 2.0


@dataclass(frozen=True)
class OptimizerOptions:
    n_restarts: int = 32
    max_iterations: int = 2000
    feasibility_tolerance: float = 1e-8
    convergence_tolerance: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if int(self.n_restarts) < 1:
            raise ValueError(f"n_restarts must be >= 1, got {self.n_restarts!r}")
        if int(self.max_iterations) < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations!r}")
        for name in ("feasibility_tolerance", "convergence_tolerance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if int(self.seed) < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed!r}")


@dataclass
class SweepResult:
    grid: list[float]
    payoffs: list[float]
    efforts: list[float]
    slacks: list[float]
    fixed_contracts: list[Contract] = field(default_factory=list)
    agent_index: int = 0


def _check_lengths(contracts: Sequence[Contract], scenario: Scenario) -> None:
    if len(contracts) != scenario.n_agents:
        raise ValueError(
            f"expected one contract per agent ({scenario.n_agents}), got {len(contracts)}"
        )


def _principal_from_efforts(contracts, efforts, scenario: Scenario) -> float:
    success = 1.0
    paid = 0.0
    for contract, e, agent in zip(contracts, efforts, scenario.agents):
        success *= std_normal_cdf((agent.a * e - agent.r) / agent.sigma)
        bonus_prob = std_normal_cdf((agent.a * e - contract.psi3) / agent.sigma)
        paid += contract.psi1 + contract.psi2 * bonus_prob
    return scenario.v0 * success - paid


def expected_principal_payoff(contracts: Sequence[Contract], scenario: Scenario) -> float:
    """SE expected payoff with every agent playing its global best response."""
    _check_lengths(contracts, scenario)
    efforts = [
        best_response_effort(k, agent).effort
        for k, agent in zip(contracts, scenario.agents)
    ]
    return _principal_from_efforts(contracts, efforts, scenario)


def participation_slack(contract: Contract, agent: AgentParams) -> float:
    """Agent's optimal expected payoff; negative means the agent walks away."""
    return best_response_effort(contract, agent).expected_payoff


def search_box(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bounds of the flattened ``(psi1, psi2, psi3)`` vector."""
    lo, hi = [], []
    for agent in scenario.agents:
        lo += [0.0, 0.0, max(0.0, agent.r - 3.0 * agent.sigma)]
        hi += [2.0 * agent.c, 2.0 * agent.c, agent.r + 3.0 * agent.sigma]
    return np.array(lo), np.array(hi)


def _unpack(x) -> list[Contract]:
    return [
        Contract(float(x[i]), float(x[i + 1]), float(x[i + 2]))
        for i in range(0, len(x), 3)
    ]


def _branch(contract: Contract, agent: AgentParams) -> tuple[float, float]:
    """Effort on the working branch and its margin over the endpoints."""
    e = interior_stationary_effort(contract, agent)
    u0 = _payoff(0.0, contract, agent)
    u1 = _payoff(1.0, contract, agent)
    if e is None:
        e, _ = select_best([0.0, 1.0], [u0, u1])
    return e, _payoff(e, contract, agent) - max(u0, u1)


def _branch_eval(x, scenario: Scenario, working) -> tuple[float, np.ndarray]:
    contracts = _unpack(x)
    efforts, cons = [], []
    for contract, agent, works in zip(contracts, scenario.agents, working):
        e, margin = _branch(contract, agent)
        efforts.append(e)
        if works:
            cons += [margin, _payoff(e, contract, agent)]
    return _principal_from_efforts(contracts, efforts, scenario), np.array(cons)


def _repair_incentives(x, scenario: Scenario, hi: np.ndarray, max_steps: int = 30):
    """Nudge bonuses up until the working branch is the agent's global optimum.

    The local search can finish a hair on the wrong side of the agent's
    indifference point, where the exact best response collapses to zero
    effort.  Raising ``psi2`` by the missing margin restores it at a cost of
    the same order.
    """
    x = np.array(x, dtype=float)
    for i, agent in enumerate(scenario.agents):
        for _ in range(max_steps):
            contract = _unpack(x[3 * i : 3 * i + 3])[0]
            e, margin = _branch(contract, agent)
            if margin >= 0 or e == 0.0:
                break
            gain = std_normal_cdf((agent.a * e - contract.psi3) / agent.sigma) - std_normal_cdf(
                -contract.psi3 / agent.sigma
            )
            if gain <= 0:
                break
            x[3 * i + 1] = min(hi[3 * i + 1], x[3 * i + 1] + 2.0 * (-margin + 1e-15) / gain)
    return x


def _score(x, scenario: Scenario):
    contracts = _unpack(x)
    sols = [best_response_effort(k, a) for k, a in zip(contracts, scenario.agents)]
    efforts = [s.effort for s in sols]
    slacks = [s.expected_payoff for s in sols]
    return _principal_from_efforts(contracts, efforts, scenario), efforts, slacks


def _snap_to_box(x, lo, hi, scenario: Scenario, payoff: float):
    """Move coordinates sitting within a hair of a bound onto it if that
    does not lower the payoff."""
    width = hi - lo
    snapped = x.copy()
    near_lo = np.abs(x - lo) <= 1e-7 * np.maximum(width, 1e-300)
    near_hi = np.abs(hi - x) <= 1e-7 * np.maximum(width, 1e-300)
    snapped[near_lo] = lo[near_lo]
    snapped[near_hi] = hi[near_hi]
    if np.array_equal(snapped, x):
        return x
    new_payoff, _, slacks = _score(snapped, scenario)
    if new_payoff >= payoff and min(slacks) >= 0.0:
        return snapped
    return x


def _local_search(x0, working, lo, hi, scenario: Scenario, opts: OptimizerOptions):
    """COBYLA over the contracts of working agents; shirkers are paid nothing."""
    x = np.array(x0, dtype=float)
    free = []
    for i, works in enumerate(working):
        if works:
            free += [3 * i, 3 * i + 1, 3 * i + 2]
        else:
            x[3 * i] = x[3 * i + 1] = 0.0
    if not free:
        return x
    free = np.array(free)
    width = (hi - lo)[free]

    def to_x(y):
        full = x.copy()
        full[free] = lo[free] + width * np.clip(y, 0.0, 1.0)
        return full

    res = minimize(
        lambda y: -_branch_eval(to_x(y), scenario, working)[0],
        (x[free] - lo[free]) / width,
        method="COBYLA",
        bounds=[(0.0, 1.0)] * free.size,
        constraints=[{"type": "ineq", "fun": lambda y: _branch_eval(to_x(y), scenario, working)[1]}],
        options={
            "rhobeg": 0.2,
            "tol": opts.convergence_tolerance,
            "maxiter": int(opts.max_iterations),
            "catol": opts.feasibility_tolerance,
        },
    )
    return to_x(res.x)


def optimize_contracts(scenario: Scenario, opts: OptimizerOptions | None = None) -> SolveResult:
    """Multistart COBYLA over the 3N contract parameters.

    Starting points are drawn from the search box by ``opts.seed``.  Agents
    that shirk at a starting point stay on the shirking branch for that
    restart, where paying them nothing is optimal; the others are searched
    on the working branch.  The no-payment contract is always scored as a
    baseline (``best_restart == -1`` when it wins).  The best feasible
    outcome wins, ties going to the lowest restart index.
    """
    opts = opts or OptimizerOptions()
    lo, hi = search_box(scenario)
    starts = lo + (hi - lo) * np.random.default_rng(opts.seed).random((opts.n_restarts, lo.size))

    baseline = np.array([v for agent in scenario.agents for v in (0.0, 0.0, agent.r)])
    best = None
    restart_payoffs = []
    for k, x0 in enumerate([baseline, *starts], start=-1):
        working = [
            best_response_effort(c, a).effort > 0.0 for c, a in zip(_unpack(x0), scenario.agents)
        ]
        if k >= 0:
            x = _local_search(x0, working, lo, hi, scenario, opts)
            x = _repair_incentives(x, scenario, hi)
        else:
            x = x0
        payoff, efforts, slacks = _score(x, scenario)
        feasible = min(slacks) >= -opts.feasibility_tolerance
        if k >= 0:
            restart_payoffs.append(payoff if feasible else float("nan"))
        if feasible and (best is None or payoff > best[0]):
            best = (payoff, x, k)

    if best is None:
        return SolveResult(
            contracts=[],
            efforts=[],
            principal_payoff=float("nan"),
            participation_slacks=[],
            n_restarts_used=opts.n_restarts,
            converged=False,
            restart_payoffs=restart_payoffs,
        )

    payoff, x, k = best
    x = _snap_to_box(x, lo, hi, scenario, payoff)
    payoff, efforts, slacks = _score(x, scenario)
    return SolveResult(
        contracts=_unpack(x),
        efforts=efforts,
        principal_payoff=payoff,
        participation_slacks=slacks,
        n_restarts_used=opts.n_restarts,
        converged=True,
        best_restart=k,
        restart_payoffs=restart_payoffs,
    )


def sweep_requirement(
    scenario: Scenario,
    base: SolveResult,
    agent_index: int,
    grid: Sequence[float],
) -> SweepResult:
    """SE payoff as one agent's passed-down requirement moves, all else fixed.

    Participation is reported through ``slacks`` but not enforced.
    """
    if not base.converged:
        raise ValueError("cannot sweep around an unsolved scenario")
    _check_lengths(base.contracts, scenario)
    if not (0 <= agent_index < scenario.n_agents):
        raise ValueError(f"agent_index {agent_index} out of range for {scenario.n_agents} agents")
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    if any(not (0.0 <= g <= SWEEP_MAX) for g in grid):
        raise ValueError(f"grid values must lie in [0, {SWEEP_MAX}]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")

    agent = scenario.agents[agent_index]
    base_k = base.contracts[agent_index]
    payoffs, efforts, slacks = [], [], []
    for g in grid:
        contracts = list(base.contracts)
        contracts[agent_index] = Contract(base_k.psi1, base_k.psi2, g)
        sol = best_response_effort(contracts[agent_index], agent)
        payoffs.append(expected_principal_payoff(contracts, scenario))
        efforts.append(sol.effort)
        slacks.append(sol.expected_payoff)
    return SweepResult(
        grid=grid,
        payoffs=payoffs,
        efforts=efforts,
        slacks=slacks,
        fixed_contracts=list(base.contracts),
        agent_index=agent_index,
    )


class ContractOptimizer(BaseEstimator):
    """Estimator-style front end to :func:`optimize_contracts`.

    ``fit`` takes a :class:`Scenario` and exposes the solution through
    trailing-underscore attributes.

    >>> from reqcontract import AgentParams, Scenario
    >>> est = ContractOptimizer(n_restarts=4).fit(
    ...     Scenario(1.0, [AgentParams(2.0, 0.05, 0.01)]))
    >>> est.converged_
    True
    """

    def __init__(
        self,
        n_restarts=32,
        max_iter=2000,
        feasibility_tol=1e-8,
        tol=1e-9,
        random_state=0,
    ):
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.feasibility_tol = feasibility_tol
        self.tol = tol
        self.random_state = random_state

    def _options(self) -> OptimizerOptions:
        return OptimizerOptions(
            n_restarts=self.n_restarts,
            max_iterations=self.max_iter,
            feasibility_tolerance=self.feasibility_tol,
            convergence_tolerance=self.tol,
            seed=self.random_state,
        )

    def fit(self, scenario: Scenario, y=None):
        if not isinstance(scenario, Scenario):
            raise TypeError(f"fit expects a Scenario, got {type(scenario).__name__}")
        self.scenario_ = scenario
        self.result_ = optimize_contracts(scenario, self._options())
        self.converged_ = self.result_.converged
        self.contracts_ = self.result_.contracts
        self.efforts_ = np.asarray(self.result_.efforts)
        self.payoff_ = self.result_.principal_payoff
        return self

    def predict(self, scenario: Scenario | None = None) -> np.ndarray:
        """Induced best-response efforts under the fitted contracts."""
        check_is_fitted(self, "result_")
        scenario = scenario or self.scenario_
        _check_lengths(self.contracts_, scenario)
        return np.array(
            [best_response_effort(k, a).effort for k, a in zip(self.contracts_, scenario.agents)]
        )

    def score(self, scenario: Scenario | None = None, y=None) -> float:
        """Expected SE payoff of the fitted contracts on ``scenario``."""
        check_is_fitted(self, "result_")
        return expected_principal_payoff(self.contracts_, scenario or self.scenario_)

    def sweep(self, grid: Sequence[float], agent_index: int = 0) -> SweepResult:
        check_is_fitted(self, "result_")
        return sweep_requirement(self.scenario_, self.result_, agent_index, grid)
