"""Plain Monte Carlo estimates of the model's expectations.

Normals come from the inverse CDF of a counter-based Philox stream keyed by
the seed.  Sample ``s`` owns Philox counter blocks ``[s*k, (s+1)*k)`` with
``k = ceil(dim / 4)`` (each block yields four 64-bit words), and its
``j``-th normal is built from word ``j`` of that range.  Any range of sample
indices can therefore be generated on its own, and chunked or parallel runs
reproduce a sequential one exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from reqcontract.agent import best_response_effort
from reqcontract.model import AgentParams, Contract, Scenario, _check_effort

CHUNK = 1 << 16
_WORDS_PER_BLOCK = 4


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int


def _blocks_per_sample(dim: int) -> int:
    return -(-dim // _WORDS_PER_BLOCK)


def normal_block(seed: int, start: int, count: int, dim: int) -> np.ndarray:
    """Standard normals for sample indices ``[start, start + count)``.

    Returns an array of shape ``(count, dim)``.
    """
    k = _blocks_per_sample(dim)
    bitgen = np.random.Philox(key=seed, counter=start * k)
    raw = bitgen.random_raw(count * k * _WORDS_PER_BLOCK)
    raw = raw.reshape(count, k * _WORDS_PER_BLOCK)[:, :dim]
    # 53-bit uniforms on the open interval (0, 1).
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


class _Accumulator:
    """Shifted sums for mean and variance; each chunk is summed exactly."""

    def __init__(self):
        self.shift = None
        self.n = 0
        self.s1 = []
        self.s2 = []

    def add(self, values: np.ndarray) -> None:
        if self.shift is None:
            self.shift = float(values[0])
        d = values - self.shift
        self.s1.append(math.fsum(d))
        self.s2.append(math.fsum(d * d))
        self.n += values.size

    def estimate(self, seed: int) -> McEstimate:
        n = self.n
        s1 = math.fsum(self.s1)
        s2 = math.fsum(self.s2)
        mean_d = s1 / n
        var = max(0.0, (s2 - s1 * mean_d) / (n - 1))
        return McEstimate(
            mean=self.shift + mean_d,
            std_error=math.sqrt(var / n),
            n_samples=n,
            seed=seed,
        )


def _run(n: int, seed: int, dim: int, fn) -> McEstimate:
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    acc = _Accumulator()
    for start in range(0, n, CHUNK):
        count = min(CHUNK, n - start)
        acc.add(fn(normal_block(seed, start, count, dim)))
    return acc.estimate(seed)


def simulate_expected_agent_payoff(
    e: float, contract: Contract, agent: AgentParams, n: int, seed: int
) -> McEstimate:
    """Sample mean of the agent's realized payoff at a fixed effort."""
    _check_effort(e)
    mean_q = agent.a * e
    fixed = contract.psi1 - agent.c * e

    def payoff(xi):
        q = mean_q + agent.sigma * xi[:, 0]
        return fixed + contract.psi2 * (q >= contract.psi3)

    return _run(n, seed, 1, payoff)


def simulate_expected_principal_payoff(
    contracts: Sequence[Contract], scenario: Scenario, n: int, seed: int
) -> McEstimate:
    """Sample mean of system value minus transfers, agents at best response.

    Each agent gets its own independent noise draw per sample.
    """
    if len(contracts) != scenario.n_agents:
        raise ValueError(
            f"expected one contract per agent ({scenario.n_agents}), got {len(contracts)}"
        )
    efforts = [best_response_effort(k, a).effort for k, a in zip(contracts, scenario.agents)]
    a = np.array([ag.a for ag in scenario.agents])
    sigma = np.array([ag.sigma for ag in scenario.agents])
    r = np.array([ag.r for ag in scenario.agents])
    psi1 = np.array([k.psi1 for k in contracts])
    psi2 = np.array([k.psi2 for k in contracts])
    psi3 = np.array([k.psi3 for k in contracts])
    mean_q = a * np.array(efforts)

    def payoff(xi):
        q = mean_q + sigma * xi
        value = scenario.v0 * np.all(q >= r, axis=1)
        paid = (psi1 + psi2 * (q >= psi3)).sum(axis=1)
        return value - paid

    return _run(n, seed, scenario.n_agents, payoff)


def verify_phi_identity(lam: float, sigma: float, n: int, seed: int) -> McEstimate:
    """Sample mean of ``H(lam + sigma * xi)``; its expectation is ``Phi(lam / sigma)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return _run(n, seed, 1, lambda xi: (lam + sigma * xi[:, 0] >= 0).astype(float))
