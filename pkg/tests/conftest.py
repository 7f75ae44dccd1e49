import numpy as np
import pytest
from scipy.special import ndtr

from reqcontract import AgentParams, Contract, Scenario


@pytest.fixture
def easy_agent():
    return AgentParams(a=2.0, sigma=0.05, c=0.01, r=1.0)


@pytest.fixture
def caption_contract():
    # Easy / low-cost / sigma = 0.05 caption contract.
    return Contract(0.001, 0.005, 1.087)


def grid_best_response(contract, agent, n=10**6):
    """Dense-grid oracle for the agent's effort choice."""
    e = np.linspace(0.0, 1.0, n)
    u = contract.psi1 - agent.c * e + contract.psi2 * ndtr((agent.a * e - contract.psi3) / agent.sigma)
    i = int(np.argmax(u))
    return float(e[i]), float(u[i])


def random_instance(rng):
    agent = AgentParams(
        a=float(rng.uniform(0.5, 3.0)),
        sigma=float(rng.uniform(0.02, 0.4)),
        c=float(rng.uniform(0.001, 0.1)),
        r=float(rng.uniform(0.5, 1.5)),
    )
    contract = Contract(
        float(rng.uniform(0, 0.05)),
        float(rng.uniform(0, 0.2)),
        float(rng.uniform(0, 2.5)),
    )
    return contract, agent


def identical_scenario(a, sigma, c, n=2, v0=1.0):
    return Scenario(v0, [AgentParams(a, sigma, c, 1.0)] * n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
