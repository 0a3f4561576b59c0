"""
Spin/bond configurations, model parameters, and the three equivalent weight
systems: Gibbs (spins), random-cluster (bonds), and the contour-form bond
weight on tori.  All weights are held in log-domain; sums go through
scipy.special.logsumexp.  At q=100 the disordered weight e^{-e_dis L^d}
underflows doubles already at L=3, so linear-domain weights are never used
internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG2 = math.log(2.0)


class BudgetExceededError(RuntimeError):
    """An enumeration was refused because it exceeds the configured budget."""


@dataclass(frozen=True)
class ModelParams:
    """(q, beta) plus the derived contour-form constants.

    The contour constants e_ord and e_dis depend on the torus dimension d,
    which is therefore carried here as well (None for non-torus graphs).
    Contour-form weights require beta > log 2, i.e. kappa > 0.
    """

    q: int
    beta: float
    d: int | None = None

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def p(self):
        return -math.expm1(-self.beta)  # 1 - e^{-beta}, accurately

    @property
    def kappa(self):
        return 0.5 * math.log(math.expm1(self.beta))  # (1/2) log(e^beta - 1)

    @property
    def e_dis(self):
        self._need_d()
        return self.d * self.beta - math.log(self.q)

    @property
    def e_ord(self):
        self._need_d()
        return -self.d * math.log1p(-math.exp(-self.beta))

    def _need_d(self):
        if self.d is None:
            raise ValueError("this parameter set has no torus dimension d")

    def require_contour_regime(self):
        if self.beta <= LOG2:
            raise ValueError(
                f"contour-form weights need beta > log 2, got beta={self.beta}"
            )


# ---------------------------------------------------------------------------
# spin configurations
# ---------------------------------------------------------------------------

def check_spins(graph, sigma, q):
    sigma = np.asarray(sigma)
    if sigma.shape != (graph.vertex_count,):
        raise ValueError("spin configuration has wrong length")
    if sigma.min(initial=0) < 0 or sigma.max(initial=0) >= q:
        raise ValueError("spin value out of range")
    return sigma


def hamiltonian(graph, sigma):
    """Number of bichromatic edges."""
    return sum(1 for u, v in graph.edges if sigma[u] != sigma[v])


def mono_edges(graph, sigma):
    """Bitmask of monochromatic edges E(sigma) over the canonical edge list."""
    mask = 0
    for i, (u, v) in enumerate(graph.edges):
        if sigma[u] == sigma[v]:
            mask |= 1 << i
    return mask


def spins_to_string(sigma):
    """Base-q digit string (q <= 36), vertex 0 first."""
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    return "".join(digits[int(c)] for c in sigma)


def edges_to_hex(mask, edge_count):
    width = (edge_count + 3) // 4
    return format(mask, f"0{width}x")


def edges_from_hex(text):
    return int(text, 16)


# ---------------------------------------------------------------------------
# state-space enumeration (mixed-radix, vertex 0 most significant)
# ---------------------------------------------------------------------------

def state_count(graph, q, budget=6561):
    n = graph.vertex_count
    count = q ** n
    if count > budget:
        raise BudgetExceededError(
            f"state space q^|V| = {count} exceeds budget {budget}"
        )
    return count


def enumerate_states(graph, q, budget=6561):
    """All spin configurations as an (q^n, n) int array, index-stable."""
    n = graph.vertex_count
    count = state_count(graph, q, budget)
    states = np.empty((count, n), dtype=np.int64)
    idx = np.arange(count)
    for v in range(n - 1, -1, -1):
        states[:, v] = idx % q
        idx //= q
    return states


def state_index(sigma, q):
    idx = 0
    for c in sigma:
        idx = idx * q + int(c)
    return idx


def mono_edge_masks(graph, q, budget=6561):
    """E(sigma) bitmask for every state, aligned with enumerate_states."""
    states = enumerate_states(graph, q, budget)
    masks = np.zeros(len(states), dtype=np.int64)
    for i, (u, v) in enumerate(graph.edges):
        masks |= (states[:, u] == states[:, v]).astype(np.int64) << i
    return masks


# ---------------------------------------------------------------------------
# Gibbs weights
# ---------------------------------------------------------------------------

def gibbs_log_weight(params, graph, sigma):
    """log of the unnormalized Gibbs weight e^{-beta H(sigma)}."""
    return -params.beta * hamiltonian(graph, sigma)


def partition_function_exact(params, graph, budget=6561):
    """log Z = log sum_sigma e^{-beta H(sigma)} by exhaustive enumeration."""
    masks = mono_edge_masks(graph, params.q, budget)
    h = graph.edge_count - np.bitwise_count(masks.astype(np.uint64)).astype(int)
    return float(logsumexp(-params.beta * h))


# ---------------------------------------------------------------------------
# random-cluster weights
# ---------------------------------------------------------------------------

class UnionFind:
    """Union by size with path compression (hot path of every enumeration)."""

    __slots__ = ("parent", "size", "count")

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True


def component_count(graph, mask):
    """c(V, A): connected components of (V, A), isolated vertices included."""
    uf = UnionFind(graph.vertex_count)
    for i, (u, v) in enumerate(graph.edges):
        if (mask >> i) & 1:
            uf.union(u, v)
    return uf.count


def component_labels(graph, mask):
    uf = UnionFind(graph.vertex_count)
    for i, (u, v) in enumerate(graph.edges):
        if (mask >> i) & 1:
            uf.union(u, v)
    roots = {}
    labels = np.empty(graph.vertex_count, dtype=np.int64)
    for v in range(graph.vertex_count):
        r = uf.find(v)
        labels[v] = roots.setdefault(r, len(roots))
    return labels, len(roots)


def occupied_vertices(graph, mask):
    """V(A): vertices covered by at least one bond of A."""
    out = set()
    for i, (u, v) in enumerate(graph.edges):
        if (mask >> i) & 1:
            out.add(u)
            out.add(v)
    return out


def boundary_edge_counts(graph, mask):
    """(|delta_1 A|, |delta_2 A|): absent edges with 1 resp. 2 endpoints in V(A)."""
    va = occupied_vertices(graph, mask)
    d1 = d2 = 0
    for i, (u, v) in enumerate(graph.edges):
        if (mask >> i) & 1:
            continue
        k = (u in va) + (v in va)
        if k == 1:
            d1 += 1
        elif k == 2:
            d2 += 1
    return d1, d2


def fk_log_weight(params, graph, mask):
    """log of p^{|A|} (1-p)^{|E \\ A|} q^{c(V,A)}."""
    m = graph.edge_count
    na = int(mask).bit_count()
    c = component_count(graph, mask)
    p = params.p
    return na * math.log(p) + (m - na) * math.log1p(-p) + c * math.log(params.q)


def fk_log_weight_contour_form(params, torus, graph, mask):
    """Contour-form rewrite of the random-cluster weight on a torus.

    q^{c~(A)} e^{-e_dis |V \\ V(A)|} e^{-e_ord |V(A)|} e^{-kappa ||dA||}
    with ||dA|| = |delta_1 A| + 2 |delta_2 A|.  Requires beta > log 2.
    """
    params.require_contour_regime()
    if params.d != torus.dimension:
        params = ModelParams(params.q, params.beta, torus.dimension)
    n = graph.vertex_count
    va = len(occupied_vertices(graph, mask))
    c = component_count(graph, mask)
    c_tilde = c - (n - va)
    d1, d2 = boundary_edge_counts(graph, mask)
    norm = d1 + 2 * d2
    return (
        c_tilde * math.log(params.q)
        - params.e_dis * (n - va)
        - params.e_ord * va
        - params.kappa * norm
    )


def es_weight(params, graph, sigma, mask):
    """Unnormalized Edwards-Sokal joint weight (linear domain).

    Zero unless A subset E(sigma); else p^{|A|} (1-p)^{|E \\ A|}.
    """
    em = mono_edges(graph, sigma)
    if mask & ~em:
        return 0.0
    m = graph.edge_count
    na = int(mask).bit_count()
    return params.p ** na * (1.0 - params.p) ** (m - na)


# ---------------------------------------------------------------------------
# whole-edge-space tabulations (shared by SW matrices and censuses)
# ---------------------------------------------------------------------------

_COMPONENT_TABLE_CACHE = {}


def component_counts_all_subsets(graph, budget=1 << 20):
    """c(V, A) for every A in 2^E, as an int8/int16 numpy array.

    Cached per graph; this is the shared backbone of exact SW matrices,
    weight censuses, and the subgraph-expansion edge-count polynomial.
    """
    key = (graph.vertex_count, graph.edges)
    hit = _COMPONENT_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    m = graph.edge_count
    if 1 << m > budget:
        raise BudgetExceededError(f"2^|E| = {1 << m} exceeds budget {budget}")
    n = graph.vertex_count
    eu = [u for u, v in graph.edges]
    ev = [v for u, v in graph.edges]
    out = np.empty(1 << m, dtype=np.int16)
    edge_bits = [(1 << i, eu[i], ev[i]) for i in range(m)]
    for mask in range(1 << m):
        parent = list(range(n))
        count = n
        for bit, u, v in edge_bits:
            if mask & bit:
                while parent[u] != u:
                    parent[u] = parent[parent[u]]
                    u = parent[u]
                while parent[v] != v:
                    parent[v] = parent[parent[v]]
                    v = parent[v]
                if u != v:
                    parent[u] = v
                    count -= 1
        out[mask] = count
    _COMPONENT_TABLE_CACHE[key] = out
    return out


def subset_zeta(values):
    """In-place fast zeta transform: out[F] = sum over subsets A of F of values[A]."""
    out = values.copy()
    n = out.shape[0]
    bits = n.bit_length() - 1
    for i in range(bits):
        step = 1 << i
        idx = np.arange(n)
        has = (idx & step).astype(bool)
        out[has] += out[idx[has] ^ step]
    return out


def edge_count_polynomial(graph, q, budget=1 << 20):
    """Exact counts N[k] = #{sigma in [q]^V : |E(sigma)| = k}, as Python ints.

    Uses the subgraph expansion sum_sigma x^{|E(sigma)|} =
    sum_B (x-1)^{|B|} q^{c(V,B)}, so it works for q far beyond spin
    enumeration (the coefficients are exact integers).
    """
    c_all = component_counts_all_subsets(graph, budget)
    m = graph.edge_count
    sizes = np.bitwise_count(np.arange(1 << m, dtype=np.uint64)).astype(int)
    # histogram of (|B|, c) pairs
    counts = {}
    for b, c in zip(sizes.tolist(), c_all.tolist()):
        counts[(b, c)] = counts.get((b, c), 0) + 1
    N = [0] * (m + 1)
    for (b, c), cnt in counts.items():
        w = cnt * q ** c
        # distribute w * (x-1)^b onto coefficients
        term = 1
        for k in range(b, -1, -1):
            N[k] += w * term if (b - k) % 2 == 0 else -w * term
            term = term * k // (b - k + 1)
    if any(x < 0 for x in N):
        raise AssertionError("edge-count polynomial produced a negative count")
    return N
