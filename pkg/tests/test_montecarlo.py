import math

import numpy as np
import pytest
from conftest import identical_scenario, random_instance

from reqcontract import (
    AgentParams,
    Contract,
    Scenario,
    best_response_effort,
    expected_agent_payoff,
    expected_principal_payoff,
    simulate_expected_agent_payoff,
    simulate_expected_principal_payoff,
    std_normal_cdf,
    verify_phi_identity,
)
from reqcontract.montecarlo import CHUNK, normal_block

N = 10**6


def within(est, exact, k=4.0):
    return abs(est.mean - exact) <= k * est.std_error


def test_no_bonus_is_constant(easy_agent):
    k = Contract(0.02, 0.0, 1.0)
    est = simulate_expected_agent_payoff(0.3, k, easy_agent, 1000, seed=1)
    assert est.mean == 0.02 - 0.01 * 0.3
    assert est.std_error == 0.0
    assert est.n_samples == 1000 and est.seed == 1


def test_caption_point_agrees(easy_agent, caption_contract):
    est = simulate_expected_agent_payoff(0.5945, caption_contract, easy_agent, N, seed=5)
    assert within(est, expected_agent_payoff(0.5945, caption_contract, easy_agent))


def test_seed_determinism(easy_agent, caption_contract):
    a = simulate_expected_agent_payoff(0.6, caption_contract, easy_agent, 100_000, seed=9)
    b = simulate_expected_agent_payoff(0.6, caption_contract, easy_agent, 100_000, seed=9)
    assert a == b


def test_different_seeds_consistent(easy_agent, caption_contract):
    a = simulate_expected_agent_payoff(0.6, caption_contract, easy_agent, 200_000, seed=1)
    b = simulate_expected_agent_payoff(0.6, caption_contract, easy_agent, 200_000, seed=2)
    assert a.mean != b.mean
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.std_error, b.std_error)


def test_rejects_small_n(easy_agent, caption_contract):
    with pytest.raises(ValueError):
        simulate_expected_agent_payoff(0.5, caption_contract, easy_agent, 1, seed=0)
    with pytest.raises(ValueError):
        verify_phi_identity(0.0, 1.0, 1, seed=0)
    with pytest.raises(ValueError):
        verify_phi_identity(0.0, 0.0, 10, seed=0)


def test_zero_payment_baseline():
    sc = Scenario(1.0, [AgentParams(1.5, 0.5, 0.01), AgentParams(2.0, 0.6, 0.02)])
    ks = [Contract(0, 0, 1)] * 2
    est = simulate_expected_principal_payoff(ks, sc, N, seed=3)
    assert within(est, std_normal_cdf(-2.0) * std_normal_cdf(-1 / 0.6))


def test_caption_contracts_principal():
    sc = identical_scenario(2.0, 0.05, 0.01)
    ks = [Contract(0.001, 0.005, 1.087)] * 2
    est = simulate_expected_principal_payoff(ks, sc, N, seed=4)
    assert within(est, expected_principal_payoff(ks, sc))


def test_principal_at_working_contract():
    sc = identical_scenario(2.0, 0.05, 0.01)
    ks = [Contract(0.0, 0.0061, 1.0855)] * 2
    est = simulate_expected_principal_payoff(ks, sc, N, seed=4)
    assert within(est, expected_principal_payoff(ks, sc))
    assert est.std_error > 0


def test_success_equals_bonus_when_requirement_passed_down():
    # psi3 == r: the bonus fires exactly when the system succeeds, so each
    # draw pays V0 - psi1 - psi2 or -psi1 and nothing in between.
    agent = AgentParams(2.0, 0.1, 0.01)
    sc = Scenario(1.0, [agent])
    k = Contract(0.001, 0.01, 1.0)
    e = best_response_effort(k, agent).effort
    xi = normal_block(11, 0, 10_000, 1)[:, 0]
    q = agent.a * e + agent.sigma * xi
    success = q >= agent.r
    bonus = q >= k.psi3
    assert np.array_equal(success, bonus)
    est = simulate_expected_principal_payoff([k], sc, 10_000, seed=11)
    assert est.mean == pytest.approx(success.mean() * (1 - 0.01) - 0.001, abs=1e-12)


def test_phi_identity_examples():
    assert within(verify_phi_identity(0.0, 0.3, N, seed=1), 0.5)
    assert within(verify_phi_identity(0.2, 0.2, N, seed=2), 0.8413447460685429)
    est = verify_phi_identity(1.0, 0.1, N, seed=3)
    assert est.mean == 1.0 and est.std_error == 0.0


def test_stream_is_splittable():
    full = normal_block(42, 0, 1000, 6)
    parts = np.vstack([normal_block(42, s, 100, 6) for s in range(0, 1000, 100)])
    assert np.array_equal(full, parts)
    # leading columns do not depend on dim while dim fits in one counter block
    assert np.array_equal(normal_block(42, 0, 50, 2), normal_block(42, 0, 50, 4)[:, :2])


def test_stream_moments():
    x = normal_block(0, 0, 400_000, 1)[:, 0]
    assert abs(x.mean()) < 4 / math.sqrt(x.size)
    assert abs(x.var() - 1) < 0.01
    assert np.all(np.isfinite(x))


def test_chunking_matches_single_pass(easy_agent, caption_contract):
    n = CHUNK * 2 + 123
    est = simulate_expected_agent_payoff(0.6, caption_contract, easy_agent, n, seed=8)
    xi = normal_block(8, 0, n, 1)[:, 0]
    q = 2.0 * 0.6 + 0.05 * xi
    vals = 0.001 - 0.006 + 0.005 * (q >= 1.087)
    assert est.mean == pytest.approx(math.fsum(vals) / n, abs=1e-15)
    assert est.std_error == pytest.approx(vals.std(ddof=1) / math.sqrt(n), rel=1e-9)


def test_std_error_scaling():
    rng = np.random.default_rng(77)
    ratios = []
    while len(ratios) < 20:
        k, agent = random_instance(rng)
        e = float(rng.uniform(0, 1))
        # rare bonus events leave too few hits for a stable error estimate
        if abs(agent.a * e - k.psi3) > 2.5 * agent.sigma or k.psi2 == 0:
            continue
        small = simulate_expected_agent_payoff(e, k, agent, 50_000, seed=1)
        big = simulate_expected_agent_payoff(e, k, agent, 200_000, seed=1)
        ratios.append(small.std_error / big.std_error)
    assert all(abs(r - 2.0) <= 0.2 * 2.0 for r in ratios)
