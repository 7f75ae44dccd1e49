"""Independent vectorized oracles used by the principal and acceptance tests."""

import numpy as np
from scipy.special import ndtr


def grid_principal_payoff(agent, v0=1.0, n=50):
    """Best SE payoff over an n^3 box grid for a single agent.

    The agent's best response is recomputed here from scratch: endpoints plus
    the upper first-order root, near-ties to the larger effort.
    """
    a, s, c, r = agent.a, agent.sigma, agent.c, agent.r
    p1, p2, p3 = np.meshgrid(
        np.linspace(0, 2 * c, n),
        np.linspace(0, 2 * c, n),
        np.linspace(max(0.0, r - 3 * s), r + 3 * s, n),
        indexing="ij",
    )
    p1, p2, p3 = p1.ravel(), p2.ravel(), p3.ravel()

    def u(e):
        return p1 - c * e + p2 * ndtr((a * e - p3) / s)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = c * s * np.sqrt(2 * np.pi) / (p2 * a)
        z = np.sqrt(-2 * np.log(np.where(ratio < 1, ratio, 1.0)))
    ei = np.where(ratio < 1, np.clip((p3 + s * z) / a, 0, 1), 0.0)
    cands = np.stack([np.zeros_like(p1), np.ones_like(p1), ei])
    vals = np.stack([u(0.0), u(1.0), u(ei)])
    top = vals.max(axis=0)
    masked = np.where(vals >= top - 1e-12, cands, -1.0)
    e = masked.max(axis=0)
    payoff = v0 * ndtr((a * e - r) / s) - p1 - p2 * ndtr((a * e - p3) / s)
    i = int(np.argmax(payoff))
    return float(payoff[i]), (float(p1[i]), float(p2[i]), float(p3[i]))
