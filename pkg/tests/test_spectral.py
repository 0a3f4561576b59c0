import math

import numpy as np
import pytest

from conftest import cycle, path, single_edge
from pottsmc.potts import ModelParams
from pottsmc.dynamics import hb_matrix, sw_matrix
from pottsmc.spectral import (
    ReducibleChainError,
    conductance,
    conductance_candidates,
    conductance_of_set,
    inverse_gap,
    mixing_time,
    product_chain,
    stationary,
    variational_inverse_gap,
    verify_bounds,
    verify_subgraph_lemma,
)


def two_state(a, b):
    return np.array([[1 - a, a], [b, 1 - b]])


def test_two_state_closed_forms():
    a, b = 0.3, 0.2
    P = two_state(a, b)
    mu = stationary(P)
    assert np.allclose(mu, [b / (a + b), a / (a + b)], atol=1e-12)
    # second eigenvalue 1 - a - b
    assert abs(inverse_gap(P, mu) - 1.0 / (a + b)) < 1e-12
    assert abs(conductance(P, mu) - (a + b)) < 1e-12
    S_phi = conductance_of_set(P, mu, [0])
    assert abs(S_phi - (a + b)) < 1e-12


def test_variational_matches_exact_inverse_gap():
    P = sw_matrix(ModelParams(2, 1.0), path(3))
    mu = stationary(P)
    exact = inverse_gap(P, mu)
    approx = variational_inverse_gap(P, mu)
    assert abs(exact - approx) / exact < 1e-6


def test_candidate_family_upper_bounds_exact_conductance():
    for params in (ModelParams(2, 0.7), ModelParams(3, 1.4)):
        P = hb_matrix(params, single_edge())
        mu = stationary(P)
        exact = conductance(P, mu)
        cand = conductance_candidates(P, mu)
        assert cand >= exact - 1e-12
        # sweep cuts land within the Cheeger-type quadratic factor
        assert cand <= math.sqrt(8.0 * exact)


def test_product_chain_inverse_gap_equality():
    g1, g2 = single_edge(), path(3)
    params = ModelParams(2, 0.9)
    P1 = sw_matrix(params, g1)
    P2 = sw_matrix(params, g2)
    P = product_chain(P1, P2)
    mu1, mu2 = stationary(P1), stationary(P2)
    mu = np.kron(mu1, mu2)
    lhs = inverse_gap(P @ P, mu)
    rhs = max(inverse_gap(P1 @ P1, mu1), inverse_gap(P2 @ P2, mu2))
    assert abs(lhs - rhs) < 1e-9 * rhs


def test_reducible_chain_raises():
    P = np.eye(2)
    with pytest.raises(ReducibleChainError):
        stationary(P)


def test_verify_bounds_sandwich():
    for matrix_fn in (hb_matrix, sw_matrix):
        P = matrix_fn(ModelParams(2, 1.0), cycle(4))
        mu = stationary(P)
        rep = verify_bounds(P, mu)
        assert rep["upper_ok"] and rep["lower_ok"]
        assert rep["lower"] <= rep["tau"] <= rep["upper"]


def test_subgraph_lemma_on_edge_removal():
    g = cycle(4)
    sub = g.edges[:3]
    rep = verify_subgraph_lemma(ModelParams(2, 0.8), g, sub, sw_matrix)
    assert rep["ok"]
    assert rep["factor"] == pytest.approx(math.exp(5 * 0.8))


def test_mixing_time_monotone_in_beta():
    g = cycle(4)
    taus = []
    for beta in (0.2, 1.0, 2.0):
        P = hb_matrix(ModelParams(2, beta), g)
        mu = stationary(P)
        taus.append(mixing_time(P, mu))
    assert taus[0] <= taus[1] <= taus[2]
