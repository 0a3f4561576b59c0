"""
Exact mixing-time machinery for small chains: stationary distributions,
inverse spectral gap (eigentime), variational mixing time at threshold 1/(2e),
conductance, product chains, and numeric verification of the mixing bounds.

Total variation is the exact (1/2) l1 distance throughout; tau itself is never
obtained by a spectral shortcut.
"""

from __future__ import annotations

import json
import math

import numpy as np

MIX_THRESHOLD = 1.0 / (2.0 * math.e)


class ReducibleChainError(ValueError):
    pass


class NotReversibleError(ValueError):
    pass


def _reachable(P, start):
    n = P.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [start]
    seen[start] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(P[i] > 0):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return seen


def check_irreducible(P):
    if not _reachable(P, 0).all() or not _reachable(P.T, 0).all():
        raise ReducibleChainError("transition matrix is not irreducible")


def stationary(P):
    """Stationary distribution of an irreducible row-stochastic matrix."""
    check_irreducible(P)
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    mu, *_ = np.linalg.lstsq(A, b, rcond=None)
    mu = np.maximum(mu, 0)
    mu /= mu.sum()
    resid = np.abs(mu @ P - mu).max()
    if resid > 1e-12:
        raise RuntimeError(f"stationary solve residual {resid:.2e} > 1e-12")
    return mu


def check_reversible(P, mu, tol=1e-10):
    Q = mu[:, None] * P
    err = np.abs(Q - Q.T).max()
    if err > tol:
        raise NotReversibleError(f"detailed balance violated by {err:.2e}")


def symmetrized(P, mu):
    """D^{1/2} P D^{-1/2}; symmetric when P is mu-reversible."""
    s = np.sqrt(mu)
    return (s[:, None] * P) / s[None, :]


def eigenvalues(P, mu):
    check_reversible(P, mu)
    return np.linalg.eigvalsh(symmetrized(P, mu))


def inverse_gap(P, mu):
    """Eigentime 1/(1 - lambda_2) for a reversible chain."""
    lam = eigenvalues(P, mu)
    lam2 = lam[-2]  # second largest
    return 1.0 / (1.0 - lam2)


def variational_inverse_gap(P, mu, restarts=8, iters=400, seed=7):
    """Independent cross-check: maximize Var g / E(g, g) by power iteration.

    Iterates g <- (I+P)g/2 with the constant mode projected out and tracks the
    best ratio encountered.  Valid on small spaces (|Omega| <= 64 intended).
    """
    check_reversible(P, mu)
    rng = np.random.default_rng(seed)
    n = P.shape[0]
    best = 0.0
    for _ in range(restarts):
        g = rng.standard_normal(n)
        for _ in range(iters):
            g = g - (mu @ g)  # project out constants in L2(mu)
            norm = math.sqrt(mu @ (g * g))
            if norm < 1e-300:
                break
            g /= norm
            var = mu @ (g * g) - (mu @ g) ** 2
            dirich = g @ ((mu[:, None] * (np.eye(n) - P)) @ g)
            if dirich > 1e-300:
                best = max(best, var / dirich)
            g = 0.5 * (g + P @ g)
    return best


def tv_distances(Pt, mu):
    """d(t) per start state: exact (1/2) l1 distance to mu."""
    return 0.5 * np.abs(Pt - mu[None, :]).sum(axis=1)


def mixing_time(P, mu, cap=10 ** 6):
    """Least t with max-start TV distance <= 1/(2e), from exact matrix powers."""
    Pt = P.copy()
    t = 1
    while t <= cap:
        if tv_distances(Pt, mu).max() <= MIX_THRESHOLD:
            return t
        Pt = Pt @ P
        t += 1
    raise RuntimeError(
        f"mixing cap {cap} exceeded, last d(t) = {tv_distances(Pt, mu).max():.4g}"
    )


# ---------------------------------------------------------------------------
# conductance
# ---------------------------------------------------------------------------

def conductance_of_set(P, mu, S):
    """Phi_S = Q(S, S^c) / (mu(S) mu(S^c)) for a proper subset S."""
    n = P.shape[0]
    ind = np.zeros(n, dtype=bool)
    ind[list(S)] = True
    if not ind.any() or ind.all():
        raise ValueError("S must be a proper nonempty subset")
    Q = mu[:, None] * P
    flow = Q[ind][:, ~ind].sum()
    ms = mu[ind].sum()
    return flow / (ms * (1.0 - ms))


def conductance(P, mu, max_states=22, chunk=1 << 16):
    """Global conductance: exact scan of all 2^|Omega| proper subsets."""
    n = P.shape[0]
    if n > max_states:
        raise ValueError(f"|Omega| = {n} too large for exact subset scan")
    Q = mu[:, None] * P
    best = math.inf
    total = 1 << n
    for lo in range(1, total - 1, chunk):
        hi = min(lo + chunk, total - 1)
        idx = np.arange(lo, hi, dtype=np.uint64)
        X = ((idx[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(float)
        ms = X @ mu
        ok = (ms > 0) & (ms < 1)
        flow = ((X @ Q) * (1.0 - X)).sum(axis=1)
        vals = flow[ok] / (ms[ok] * (1.0 - ms[ok]))
        if len(vals):
            best = min(best, float(vals.min()))
    return best


def conductance_candidates(P, mu, extra_sets=()):
    """Best Phi_S over a candidate family (sweep cuts of the second
    eigenvector plus any supplied sets); an upper bound on the global minimum.
    """
    s = np.sqrt(mu)
    M = symmetrized(P, mu)
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    g = V[:, -2] / s
    order = np.argsort(g)
    best = math.inf
    n = P.shape[0]
    for k in range(1, n):
        best = min(best, conductance_of_set(P, mu, order[:k]))
    for S in extra_sets:
        S = [i for i in S]
        if 0 < len(S) < n:
            best = min(best, conductance_of_set(P, mu, S))
    return best


# ---------------------------------------------------------------------------
# product chains and bound reports
# ---------------------------------------------------------------------------

def product_chain(P1, P2):
    """(P1 x P2)((x,y),(x',y')) = P1(x,x') P2(y,y')."""
    return np.kron(P1, P2)


def verify_bounds(P, mu, conductance_value=None):
    """Check tau <= eigentime(P^2) log(e^2/mu_min) and tau >= (e-1)/e / Phi.

    Returns a report dict with both sides and slack.  If conductance_value is
    not supplied, the exact global scan is used (small spaces only).
    """
    tau = mixing_time(P, mu)
    inv_gap_sq = inverse_gap(P @ P, mu)
    mu_min = mu.min()
    upper = inv_gap_sq * math.log(math.e ** 2 / mu_min)
    if conductance_value is not None:
        phi = conductance_value
    elif P.shape[0] <= 22:
        phi = conductance(P, mu)
    else:
        # candidate-family value: an upper bound on the global conductance,
        # so the derived mixing-time lower bound is still valid (just weaker)
        phi = conductance_candidates(P, mu)
    lower = (math.e - 1.0) / math.e / phi
    return {
        "tau": tau,
        "inv_gap_squared_kernel": inv_gap_sq,
        "mu_min": float(mu_min),
        "upper": upper,
        "upper_ok": tau <= upper,
        "conductance": phi,
        "lower": lower,
        "lower_ok": tau >= lower or math.isclose(tau, lower),
        "slack_upper": upper - tau,
        "slack_lower": tau - lower,
    }


def verify_subgraph_lemma(params, graph, sub_edges, matrix_fn):
    """Check eigentime((P_G)^2) <= eigentime((P_G0)^2) e^{5 beta |E - E0|}.

    sub_edges: iterable of (u,v) pairs (subset of graph.edges) defining G0 on
    the same vertex set.  matrix_fn builds the kernel matrix, e.g. sw_matrix.
    """
    from .lattice import Graph

    sub = tuple(sorted((min(u, v), max(u, v)) for u, v in sub_edges))
    for e in sub:
        if e not in graph.edge_index:
            raise ValueError(f"edge {e} not in graph")
    g0 = Graph(graph.vertex_count, sub)
    P = matrix_fn(params, graph)
    P0 = matrix_fn(params, g0)
    mu = stationary(P)
    mu0 = stationary(P0)
    lhs = inverse_gap(P @ P, mu)
    base = inverse_gap(P0 @ P0, mu0)
    factor = math.exp(5.0 * params.beta * (graph.edge_count - len(sub)))
    rhs = base * factor
    return {
        "lhs": lhs,
        "base": base,
        "factor": factor,
        "rhs": rhs,
        "ok": lhs <= rhs * (1 + 1e-12),
    }


def analysis_report(graph_name, params, kernel_name, P, mu, conductance_value=None):
    """JSON-serializable analysis row for the CLI `exact` subcommand."""
    rep = verify_bounds(P, mu, conductance_value=conductance_value)
    return {
        "graph": graph_name,
        "q": params.q,
        "beta": params.beta,
        "kernel": kernel_name,
        "tau": rep["tau"],
        "inv_gap": inverse_gap(P, mu),
        "conductance": rep["conductance"],
        "bounds": {
            "lhs": rep["tau"],
            "rhs": rep["upper"],
            "ok": bool(rep["upper_ok"] and rep["lower_ok"]),
        },
    }


def report_to_json(report):
    return json.dumps(report, indent=2, sort_keys=True)
