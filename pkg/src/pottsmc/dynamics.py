"""
Heat-bath and Swendsen-Wang kernels, both as streaming samplers and as exact
transition matrices on small state spaces.

RNG policy: counter-based Philox generators keyed by (seed, stream name), so
any number of named chains are independent and every run is reproducible from
the recorded seed (the manifest machinery in the harness records them).
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .potts import (
    BudgetExceededError,
    component_counts_all_subsets,
    enumerate_states,
    mono_edge_masks,
    mono_edges,
    subset_zeta,
)


def rng_stream(seed, name):
    """Independent deterministic generator for a named stream."""
    key = zlib.crc32(name.encode())
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) << 32 | key))


@dataclass
class ChainState:
    sigma: np.ndarray
    step_count: int = 0
    rng: np.random.Generator = None
    stream_id: str = "chain0"

    @classmethod
    def start(cls, sigma, seed=0, stream_id="chain0"):
        return cls(
            sigma=np.array(sigma, dtype=np.int64),
            rng=rng_stream(seed, stream_id),
            stream_id=stream_id,
        )


def _edge_arrays(graph):
    eu = np.array([u for u, v in graph.edges], dtype=np.int64)
    ev = np.array([v for u, v in graph.edges], dtype=np.int64)
    return eu, ev


def hb_step(params, graph, state):
    """One heat-bath update: resample a uniform vertex from its conditional."""
    rng = state.rng
    v = int(rng.integers(graph.vertex_count))
    nbrs = graph.adjacency[v]
    counts = np.zeros(params.q)
    for w in nbrs:
        counts[state.sigma[w]] += 1
    logits = params.beta * counts
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    state.sigma[v] = rng.choice(params.q, p=probs)
    state.step_count += 1
    return state


def hb_sweep(params, graph, state):
    """|V| single-site updates (uniform random sites)."""
    for _ in range(graph.vertex_count):
        hb_step(params, graph, state)
    return state


def sw_resample(params, graph, sigma, rng):
    """One SW transition with the intermediate bond state exposed.

    Returns (new sigma, kept-bond mask, component labels, component count).
    The kept bonds A always satisfy A subset E(sigma).
    """
    eu, ev = _edge_arrays(graph)
    mono = sigma[eu] == sigma[ev]
    keep = mono & (rng.random(graph.edge_count) < params.p)
    n = graph.vertex_count
    adj = coo_matrix(
        (np.ones(int(keep.sum())), (eu[keep], ev[keep])), shape=(n, n)
    )
    ncomp, labels = connected_components(adj, directed=False)
    colors = rng.integers(0, params.q, size=ncomp)
    new_sigma = colors[labels]
    mask = 0
    for i in np.flatnonzero(keep):
        mask |= 1 << int(i)
    return new_sigma, mask, labels, ncomp


def sw_step(params, graph, state):
    new_sigma, _, _, _ = sw_resample(params, graph, state.sigma, state.rng)
    state.sigma = new_sigma
    state.step_count += 1
    return state


def sw_step_fast(params, graph, sigma, rng, eu, ev):
    """Inner-loop SW transition without bond-mask bookkeeping."""
    mono = sigma[eu] == sigma[ev]
    keep = mono & (rng.random(len(eu)) < params.p)
    n = graph.vertex_count
    adj = coo_matrix((np.ones(int(keep.sum())), (eu[keep], ev[keep])), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    return rng.integers(0, params.q, size=ncomp)[labels]


def largest_component(graph, sigma):
    """Size of the largest monochromatic component and its color."""
    eu, ev = _edge_arrays(graph)
    mono = sigma[eu] == sigma[ev]
    n = graph.vertex_count
    adj = coo_matrix((np.ones(int(mono.sum())), (eu[mono], ev[mono])), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    big = int(sizes.argmax())
    color = int(sigma[np.flatnonzero(labels == big)[0]])
    return int(sizes[big]), color


# ---------------------------------------------------------------------------
# exact transition matrices
# ---------------------------------------------------------------------------

def hb_matrix(params, graph, budget=6561):
    """Exact heat-bath transition matrix over the enumerated state space."""
    q = params.q
    states = enumerate_states(graph, q, budget)
    count, n = states.shape
    P = np.zeros((count, count))
    # precompute index strides: state index = sum sigma_v * q^{n-1-v}
    strides = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for i in range(count):
        sigma = states[i]
        base = int(sigma @ strides)
        for v in range(n):
            counts = np.zeros(q)
            for w in graph.adjacency[v]:
                counts[sigma[w]] += 1
            logits = params.beta * counts
            probs = np.exp(logits - logits.max())
            probs /= probs.sum()
            off = base - int(sigma[v]) * int(strides[v])
            for k in range(q):
                P[i, off + k * int(strides[v])] += probs[k] / n
    return P


def sw_matrix(params, graph, budget=6561, edge_budget=1 << 20):
    """Exact Swendsen-Wang transition matrix.

    P(s,s') = (1-p)^{|E(s)|} sum_{A subset E(s) cap E(s')}
              (p/(1-p))^{|A|} q^{-c(V,A)},
    evaluated for all rows at once with a subset zeta transform over
    f[A] = (p/(1-p))^{|A|} q^{-c(V,A)}.
    """
    q, p = params.q, params.p
    if 1 << graph.edge_count > edge_budget:
        raise BudgetExceededError(
            f"2^|E| = {1 << graph.edge_count} exceeds budget {edge_budget}"
        )
    c_all = component_counts_all_subsets(graph, edge_budget)
    m = graph.edge_count
    sizes = np.bitwise_count(np.arange(1 << m, dtype=np.uint64)).astype(np.int64)
    x = p / (1.0 - p)
    f = x ** sizes * float(q) ** (-c_all.astype(np.float64))
    g = subset_zeta(f)
    masks = mono_edge_masks(graph, q, budget)
    msizes = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    inter = masks[:, None] & masks[None, :]
    P = (1.0 - p) ** msizes[:, None] * g[inter]
    return P


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = (
    "step",
    "energy",
    "mono_edges",
    "max_component",
    "in_S",
    "rng_stream_id",
)


def run_trajectory(
    params, graph, kernel, initial, steps, in_set=None, seed=0, stream_id="chain0"
):
    """Run `steps` kernel applications and measure after each (and at step 0).

    kernel: "hb" (one step = one site update) or "sw".
    in_set: optional pure predicate sigma -> bool, reported as the in_S column.
    Returns a list of row dicts matching TRAJECTORY_COLUMNS.
    """
    state = ChainState.start(initial, seed=seed, stream_id=stream_id)
    step_fn = {"hb": hb_step, "sw": sw_step}[kernel]
    m = graph.edge_count
    rows = []

    def measure():
        mono = mono_edges(graph, state.sigma)
        nmono = int(mono).bit_count()
        big, _ = largest_component(graph, state.sigma)
        rows.append(
            {
                "step": state.step_count,
                "energy": m - nmono,
                "mono_edges": nmono,
                "max_component": big,
                "in_S": int(in_set(state.sigma)) if in_set else "",
                "rng_stream_id": state.stream_id,
            }
        )

    measure()
    for _ in range(steps):
        step_fn(params, graph, state)
        measure()
    return rows


def write_trajectory_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
