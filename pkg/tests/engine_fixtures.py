"""Hand-built engine states shared by the engine and acceptance tests."""

import numpy as np

from hypernibble.engine import EngineParams, state_from
from hypernibble.generators import single_edge, sunflower
from hypernibble.hypergraph import build


def params(k=3, q=3, theta=0.5, p_hat=0.6, t0=5, seed=0):
    return EngineParams(k=k, delta=4, eps=0.5, omega=1.0, theta=theta, q=q, p_hat=p_hat, t0=t0, seed=seed)


def _rows(rng, n, q, cap):
    p = rng.dirichlet(np.ones(q), size=n)
    return np.minimum(p, cap)


def survival_fixtures():
    """Five states, each with a probe vertex and colour: (name, state, u, c)."""
    out = []
    # plain edge
    H = single_edge(3)
    out.append(("edge", state_from(H, params(), np.full((3, 3), 1 / 3), [-1] * 3), 0, 0))
    # sunflower at the probe vertex, uneven probabilities
    H = sunflower(3, 3)
    rng = np.random.default_rng(11)
    p = _rows(rng, H.n, 3, 0.6)
    out.append(("sunflower", state_from(H, params(theta=0.8), p, [-1] * H.n), 0, 1))
    # restriction 2-edge of colour 1 plus a live edge, both through vertex 0
    H = build(3, 5, [[0, 1, 2], [0, 3, 4]])
    p = np.array([[0.2, 0.5, 0.3], [0.3, 0.5, 0.2], [0, 0, 0], [0.1, 0.5, 0.4], [0.2, 0.4, 0.4]])
    out.append(("restriction", state_from(H, params(theta=0.9), p, [-1, -1, 1, -1, -1]), 0, 1))
    # loose 4-cycle, random probabilities
    H = build(3, 8, [[0, 1, 2], [2, 3, 4], [4, 5, 6], [6, 7, 0]])
    p = _rows(np.random.default_rng(12), 8, 4, 0.7)
    out.append(("cycle4", state_from(H, params(q=4, theta=0.7, p_hat=0.7), p, [-1] * 8), 0, 2))
    # k=4: one live edge, one restriction 3-edge and one restriction 2-edge of colour 0 at vertex 0
    H = build(4, 10, [[0, 1, 2, 3], [0, 4, 5, 6], [0, 7, 8, 9]])
    p = _rows(np.random.default_rng(13), 10, 3, 0.6)
    kappa = [-1] * 10
    kappa[6] = 0
    kappa[8] = kappa[9] = 0
    p[6] = p[8] = p[9] = 0
    out.append(("k4-mixed", state_from(H, params(k=4, theta=0.9), p, kappa), 0, 0))
    return out


def case_a_fixture():
    H = single_edge(3)
    return state_from(H, params(theta=0.5, p_hat=0.6), np.full((3, 3), 1 / 3), [-1] * 3), 0, 0


def case_b_fixture():
    H = sunflower(4, 3)
    p = np.full((H.n, 2), 0.5)
    p[0] = [0.45, 0.45]
    st = state_from(H, params(q=2, theta=0.9, p_hat=0.5), p, [-1] * H.n)
    return st, 0, 0
