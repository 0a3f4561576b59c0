"""
End-to-end validation suite.

Each test checks one advertised guarantee of the package, from exact
measure-level identities on enumerable state spaces up to the scaling shape
of escape rates at the finite-size transition point.  Stochastic tests use
fixed seeds and tuned step budgets; the whole file is expected to run in
minutes, not hours.
"""

import math
from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest

from conftest import cycle, path, single_edge, star
from pottsmc.lattice import (
    TorusSpec,
    build_box,
    build_torus,
    build_tree,
    induced_subgraph,
    make_graph,
    tree_stats,
)
from pottsmc.potts import (
    ModelParams,
    enumerate_states,
    es_weight,
    fk_log_weight,
    gibbs_log_weight,
    mono_edges,
)
from pottsmc.dynamics import hb_matrix, rng_stream, sw_matrix
from pottsmc.spectral import (
    inverse_gap,
    mixing_time,
    product_chain,
    stationary,
    verify_bounds,
    verify_subgraph_lemma,
)
from pottsmc.pwidth import (
    mixing_bound_log,
    pw_constructive_box,
    pw_constructive_torus,
    pw_constructive_tree,
    pw_exact,
)
from pottsmc.contour import (
    census_summary,
    classify,
    contour_log_weights_from_summary,
    fk_log_weights_from_summary,
    omega_census,
    reconstruct,
    weight_factorized_log,
)
from pottsmc.harness import (
    ExperimentConfig,
    deletion_tail_check,
    es_coupled_run,
    hb_persistence_experiment,
    hb_sweep_tracked,
    log_rate_fit,
    mono_edge_histogram_exact,
    pseudo_critical_beta,
    sw_autocorrelation_experiment,
    sw_escape_experiment,
)

TORUS32 = TorusSpec(3, 2)

# (graph, list of q values): states stay enumerable for exact sums/matrices
SMALL_SET = [
    (single_edge(), (2, 9, 38)),
    (path(3), (2, 5, 11)),
    (cycle(4), (2, 4, 6)),
    (star(4), (2, 4, 6)),
    (build_torus(TORUS32), (2,)),
]


# ---------------------------------------------------------------------------
# measure-level identities
# ---------------------------------------------------------------------------

def spin_log_z(params, graph):
    states = enumerate_states(graph, params.q)
    lw = [gibbs_log_weight(params, graph, s) for s in states]
    m = max(lw)
    return m + math.log(sum(math.exp(x - m) for x in lw))


def fk_log_z(params, graph):
    lw = [
        fk_log_weight(params, graph, a) for a in range(1 << graph.edge_count)
    ]
    m = max(lw)
    return m + math.log(sum(math.exp(x - m) for x in lw))


def es_log_z(params, graph):
    """Joint sum over all (sigma, A) pairs with A inside E(sigma)."""
    total = 0.0
    m_edges = graph.edge_count
    cfgs = np.arange(1 << m_edges, dtype=np.uint64)
    n_a = np.bitwise_count(cfgs).astype(float)
    w_a = params.p ** n_a * (1 - params.p) ** (m_edges - n_a)
    for sigma in enumerate_states(graph, params.q):
        mask = mono_edges(graph, sigma)
        allowed = (cfgs & np.uint64(~mask & ((1 << m_edges) - 1))) == 0
        total += float(w_a[allowed].sum())
    return math.log(total)


def test_gibbs_fk_es_sums_agree():
    for graph, qs in SMALL_SET:
        for q in qs:
            if q ** graph.vertex_count > 6561:
                continue
            params = ModelParams(q, 1.0)
            z_spin = spin_log_z(params, graph)
            z_fk = fk_log_z(params, graph)
            z_es = es_log_z(params, graph)
            assert abs(math.exp(z_fk - z_spin) - 1) < 1e-9
            assert abs(math.exp(z_es - z_spin) - 1) < 1e-9


def test_es_joint_weight_support():
    g = cycle(4)
    params = ModelParams(3, 1.0)
    sigma = np.array([0, 0, 1, 1])
    mask = mono_edges(g, sigma)
    for a in range(1 << g.edge_count):
        w = es_weight(params, g, sigma, a)
        if a & ~mask:
            assert w == 0.0
        else:
            assert w > 0.0


# ---------------------------------------------------------------------------
# kernel exactness
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_kernels_exactly_stationary_and_reversible(beta):
    for graph, qs in SMALL_SET:
        for q in qs:
            params = ModelParams(q, beta)
            for matrix_fn in (hb_matrix, sw_matrix):
                P = matrix_fn(params, graph)
                mu = stationary(P)
                assert np.abs(P.sum(axis=1) - 1).max() < 1e-12
                assert np.abs(mu @ P - mu).max() <= 1e-10
                F = mu[:, None] * P
                assert np.abs(F - F.T).max() <= 1e-10


# ---------------------------------------------------------------------------
# contour-form weights and the exhaustive decomposition census
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("q,beta", [(2, 1.0), (10, 1.5), (100, 2.5)])
def test_contour_form_weight_equals_fk_everywhere(q, beta):
    summary = census_summary(3, 2)
    params = ModelParams(q, beta, 2)
    lhs = contour_log_weights_from_summary(params, summary)
    rhs = fk_log_weights_from_summary(params, summary)
    assert np.abs(np.expm1(lhs - rhs)).max() <= 1e-9


def test_decomposition_census_has_no_structural_violations():
    summary = census_summary(3, 2)
    assert summary.n_configs == 1 << 18
    assert all(v == 0 for v in summary.violations.values()), summary.violations
    # every interface carries at least L^{d-1} crossings
    assert min(summary.interface_norms) >= 3


def test_factorized_weight_and_reconstruction_on_samples():
    params = ModelParams(10, 1.5, 2)
    graph = build_torus(TORUS32)
    rng = rng_stream(99, "acceptance-contours")
    for _ in range(150):
        mask = int(rng.integers(0, 1 << graph.edge_count))
        dec = classify(params, TORUS32, mask)
        lhs = weight_factorized_log(params, TORUS32, dec)
        rhs = fk_log_weight(params, graph, mask)
        assert abs(math.expm1(lhs - rhs)) <= 1e-9
        assert reconstruct(TORUS32, dec) == mask


# ---------------------------------------------------------------------------
# ordered/disordered/tunneling sector split
# ---------------------------------------------------------------------------

def test_sector_split_is_an_exact_partition():
    beta = pseudo_critical_beta(100, 2, 3)
    cen = omega_census(ModelParams(100, beta, 2), TORUS32)
    assert sum(cen.counts.values()) == 1 << 18
    recombined = np.logaddexp.reduce(
        [cen.log_Z_dis, cen.log_Z_ord + math.log(100), cen.log_Z_tun]
    )
    assert abs(math.expm1(recombined - cen.log_Z)) <= 1e-9
    m_ord = mono_edge_histogram_exact(100, 2, 3, beta)["m_ord"]
    assert abs(m_ord - 100 / 101) <= 0.1


def test_tunneling_sector_is_rarest_at_balance_point():
    # On the 3x3 torus the tunneling sector keeps more mass than the
    # disordered one at the sector-balance point, so this check fails at
    # L = 3; the window where it would hold sits between any self-consistent
    # finite-size balance point and the asymptotic transition.
    beta = pseudo_critical_beta(100, 2, 3)
    cen = omega_census(ModelParams(100, beta, 2), TORUS32)
    nu_ord = math.exp(cen.log_Z_ord + math.log(100) - cen.log_Z)
    nu_dis = math.exp(cen.log_Z_dis - cen.log_Z)
    nu_tun = math.exp(cen.log_Z_tun - cen.log_Z)
    assert nu_tun < min(nu_ord, nu_dis)


# ---------------------------------------------------------------------------
# partition width
# ---------------------------------------------------------------------------

def brute_pw(edges, n):
    edges = tuple(edges)

    @lru_cache(maxsize=None)
    def rec(S):
        if len(S) == 1:
            return 0
        items = sorted(S)
        pivot = items[0]
        best = math.inf
        for r in range(len(items)):
            for extra in combinations(items[1:], r):
                S1 = frozenset((pivot,) + extra)
                S2 = S - S1
                if not S2:
                    continue
                cut = sum(
                    1 for u, v in edges
                    if (u in S1 and v in S2) or (u in S2 and v in S1)
                )
                best = min(best, cut + max(rec(S1), rec(frozenset(S2))))
        return best

    return rec(frozenset(range(n)))


def connected_edge_masks(n):
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    for bits in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if (bits >> i) & 1]
        adj = [0] * n
        for u, v in edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        seen = 1
        stack = [0]
        while stack:
            v = stack.pop()
            m = adj[v] & ~seen
            while m:
                w = (m & -m).bit_length() - 1
                seen |= 1 << w
                stack.append(w)
                m &= m - 1
        if seen == (1 << n) - 1:
            yield edges


def test_pw_exact_matches_brute_force_exhaustively():
    for n in range(2, 6):
        for edges in connected_edge_masks(n):
            g = make_graph(n, edges)
            w, part = pw_exact(g)
            assert part.validate() and part.sep() == w
            assert w == brute_pw(g.edges, n)


def test_pw_exact_matches_brute_force_on_random_graphs():
    rng = np.random.default_rng(17)
    done = 0
    while done < 100:
        n = 6 if done % 2 == 0 else 7
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = [p for p in pairs if rng.random() < 0.45]
        if not keep:
            continue
        g = make_graph(n, keep)
        w, part = pw_exact(g)
        assert part.sep() == w
        assert w == brute_pw(g.edges, n)
        done += 1


def test_constructive_partitions_meet_their_bounds():
    for sides in ([3, 3], [4, 3, 2], [2, 2, 2]):
        w, part = pw_constructive_box(sides)
        assert part.validate()
        assert w <= 9 * math.prod(sides) // min(sides)
    for L, d in ((3, 2), (4, 2), (3, 3)):
        w, part = pw_constructive_torus(L, d)
        assert part.validate()
        assert w <= 15 * L ** (d - 1)
    for parent in ([-1, 0, 0, 0], [-1, 0, 0, 1, 1, 2, 2], [-1, 0, 1, 2, 3]):
        g = build_tree(parent)
        d_max, depth = tree_stats(parent)
        w, part = pw_constructive_tree(parent)
        assert part.validate()
        assert w <= d_max * depth


def test_pw_subadditive_under_random_bipartitions():
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 200:
        n = int(rng.integers(6, 10))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = [p for p in pairs if rng.random() < 0.4]
        if not keep:
            continue
        g = make_graph(n, keep)
        w, _ = pw_exact(g)
        for _ in range(5):
            side = rng.random(n) < 0.5
            if side.all() or not side.any():
                continue
            s1 = [v for v in range(n) if side[v]]
            s2 = [v for v in range(n) if not side[v]]
            cut = sum(1 for u, v in g.edges if side[u] != side[v])
            w1, _ = pw_exact(induced_subgraph(g, s1))
            w2, _ = pw_exact(induced_subgraph(g, s2))
            assert w <= cut + max(w1, w2)
            checked += 1


# ---------------------------------------------------------------------------
# exact mixing-time bounds
# ---------------------------------------------------------------------------

BOUND_SET = [
    (single_edge(), (2, 16)),
    (path(3), (2, 6)),
    (path(4), (2, 4)),
    (cycle(4), (2, 4)),
    (star(4), (2, 4)),
    (path(8), (2,)),
]


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_sw_mixing_bound_and_spectral_sandwich(beta):
    for graph, qs in BOUND_SET:
        pw, _ = pw_exact(graph)
        for q in qs:
            params = ModelParams(q, beta)
            P = sw_matrix(params, graph)
            mu = stationary(P)
            tau = mixing_time(P, mu)
            assert math.log(tau) <= mixing_bound_log(params, graph, pw)
            rep = verify_bounds(P, mu)
            assert rep["upper_ok"] and rep["lower_ok"]
            sub = verify_subgraph_lemma(
                params, graph, graph.edges[:-1], sw_matrix
            )
            assert sub["ok"]


def test_product_chain_eigentime_equality():
    params = ModelParams(2, 1.0)
    P1 = sw_matrix(params, single_edge())
    P2 = sw_matrix(params, path(3))
    mu1, mu2 = stationary(P1), stationary(P2)
    P = product_chain(P1, P2)
    mu = np.kron(mu1, mu2)
    lhs = inverse_gap(P @ P, mu)
    rhs = max(inverse_gap(P1 @ P1, mu1), inverse_gap(P2 @ P2, mu2))
    assert abs(lhs - rhs) <= 1e-9 * rhs


# ---------------------------------------------------------------------------
# scaling experiments at the finite-size transition
# ---------------------------------------------------------------------------

def test_sw_escape_rate_decays_at_transition():
    config = ExperimentConfig(
        q=20, d=2, L_list=(4, 6, 8, 10, 12), steps=100000, burn_in=800,
        replicas=40, seed=2024, kernel="sw",
    )
    budgets = {4: 60000, 6: 200000, 8: 500000, 10: 1200000, 12: 2500000}
    rows = sw_escape_experiment(config, steps_for=budgets.__getitem__)
    rates = [r.rate for r in rows]
    assert all(a > b for a, b in zip(rates, rates[1:])), rates
    fit = log_rate_fit(rows)
    assert fit["slope"] < 0
    assert fit["r_squared"] >= 0.9


def test_sw_autocorrelation_flat_off_transition():
    taus = []
    for L in (4, 8, 12):
        beta = 0.5 * pseudo_critical_beta(20, 2, L, seed=2024)
        tau, _ = sw_autocorrelation_experiment(
            20, 2, L, beta, steps=6000, burn_in=300, seed=2024
        )
        taus.append(tau)
    assert max(taus) / min(taus) < 3.0, taus


def test_hb_persistence_above_transition():
    config = ExperimentConfig(
        q=10, d=2, L_list=(4, 6, 8), beta_scale=1.2, steps=100000,
        burn_in=300, replicas=60, seed=2024, kernel="hb",
    )
    budgets = {4: 300000, 6: 800000, 8: 800000}
    rows = hb_persistence_experiment(config, steps_for=budgets.__getitem__)
    rates = [r.rate for r in rows]
    positive = [r for r in rates if r > 0]
    assert all(a > b for a, b in zip(positive, positive[1:])), rates
    assert rates[0] > 0 and rates[1] > 0


def test_hb_never_jumps_between_giant_colors():
    q, d, L = 10, 2, 4
    beta = 1.2 * pseudo_critical_beta(q, d, L, seed=2024)
    graph = build_torus(TorusSpec(L, d))
    params = ModelParams(q, beta, d)
    alpha = 1.0 / (4 * d)
    threshold = (1 - alpha) * L ** d
    rng = rng_stream(2024, "hb-tracked")
    sigma = np.zeros(graph.vertex_count, dtype=np.int64)
    for _ in range(300):
        # raises if one site update moves the giant component's color
        sigma = hb_sweep_tracked(
            params, graph, sigma, rng, threshold, forbid_pair=True
        )


# ---------------------------------------------------------------------------
# coupled-trajectory invariants
# ---------------------------------------------------------------------------

def test_coupled_run_invariants_hold_for_long_trajectory():
    rec = es_coupled_run(10, 2, 6, 1.5, steps=100000, seed=77)
    assert rec["violations"] == 0
    assert (rec["deleted"] >= 0).all()
    assert (rec["deleted"] <= rec["mono"]).all()


@pytest.mark.parametrize("alpha_tilde", [0.5, 1.0])
def test_deletion_tail_beneath_binomial_bound(alpha_tilde):
    rep = deletion_tail_check(10, 2, 6, 1.5, alpha_tilde, steps=10000, seed=78)
    assert rep["violations"] == 0
    assert rep["crude_ok"]
    assert rep["binomial_ok"]
    assert rep["mean_z"] < 5.0
