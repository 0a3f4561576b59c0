"""
Experiment drivers: pseudo-critical temperature location, escape-rate
experiments for Swendsen-Wang and heat-bath dynamics at the order/disorder
transition, mono-edge histograms, and deletion-tail diagnostics.

Estimator notes.  The SW bottleneck set is S = {sigma : |E(sigma)| >=
(1-alpha) d L^d} with |E(sigma)| the monochromatic edge count; the HB
bottleneck is Omega-hat_k = {sigma : some color-k monochromatic component has
>= (1-alpha) L^d vertices}.  Escape rates are estimated by a reset chain:
start deep inside S, step, count an escape whenever the chain exits S, and
restart from the ordered configuration after each escape.  This conditions on
S by construction and estimates the per-step exit probability that the
conductance of S controls; equilibrium sampling at the transition is exactly
what is slow, so it is not attempted.

The pseudo-critical beta is a finite-volume surrogate: the beta at which the
ordered and disordered sectors carry equal stationary weight.  Small tori use
the exact configuration census; larger tori use dual-start sampling on a beta
grid with single-histogram reweighting and bisection of the ordered-fraction
crossing at q/(q+1).
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from . import __version__
from .lattice import TorusSpec, build_torus
from .potts import (
    ModelParams,
    UnionFind,
    edge_count_polynomial,
    mono_edges,
)
from .dynamics import largest_component, rng_stream, sw_resample, sw_step_fast
from .contour import omega_census


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    q: int = 10
    d: int = 2
    beta: float | None = None
    beta_policy: str = "pseudo-critical"   # "fixed" | "pseudo-critical"
    beta_scale: float = 1.0                # multiplier applied to policy value
    L_list: tuple = (4, 6, 8)
    alpha: float | None = None             # default 1/3 (SW), 1/(4d) (HB)
    steps: int = 20000
    burn_in: int = 200
    replicas: int = 1
    seed: int = 12345
    kernel: str = "sw"                     # "sw" | "hb"
    out_dir: str = "."

    def __post_init__(self):
        if self.alpha is not None and not (0 < self.alpha < 0.5):
            raise ValueError("alpha must lie in (0, 1/2)")
        if not self.steps > self.burn_in >= 0:
            raise ValueError("need steps > burn_in >= 0")
        if self.beta_policy not in ("fixed", "pseudo-critical"):
            raise ValueError(f"unknown beta policy {self.beta_policy!r}")
        if self.beta_policy == "fixed" and self.beta is None:
            raise ValueError("fixed beta policy requires a beta value")

    def effective_alpha(self):
        if self.alpha is not None:
            return self.alpha
        return 1.0 / 3.0 if self.kernel == "sw" else 1.0 / (4 * self.d)

    def beta_for(self, L):
        if self.beta_policy == "fixed":
            return self.beta * self.beta_scale
        return pseudo_critical_beta(self.q, self.d, L, seed=self.seed) * self.beta_scale


_CONFIG_TYPES = {
    "q": int, "d": int, "beta": float, "beta_policy": str, "beta_scale": float,
    "steps": int, "burn_in": int, "replicas": int, "seed": int,
    "alpha": float, "kernel": str, "out_dir": str,
}


def parse_config(text):
    """Flat key = value config text (# comments, L_list comma-separated)."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "L_list":
            kwargs[key] = tuple(int(x) for x in val.split(","))
        elif key in _CONFIG_TYPES:
            kwargs[key] = _CONFIG_TYPES[key](val)
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# pseudo-critical temperature
# ---------------------------------------------------------------------------

def _census_sector_imbalance(q, torus, beta):
    """log Z_dis - log Z_ord; positive in the disordered phase.

    Z_ord here is the per-color-phase restricted sum (total ordered weight
    divided by q), so the zero is where each of the q ordered phases matches
    the single disordered phase and the ordered fraction sits at q/(q+1)."""
    cen = omega_census(ModelParams(q, beta, torus.dimension), torus)
    return cen.log_Z_dis - cen.log_Z_ord


@lru_cache(maxsize=None)
def pseudo_critical_beta(q, d, L, seed=12345, tol=1e-10):
    """The beta where ordered and disordered sectors balance on T_{L,d}.

    Exact census bisection of q Z_ord = Z_dis when 2^{dL^d} is enumerable;
    otherwise sampled ordered-fraction crossing at q/(q+1).
    """
    torus = TorusSpec(L, d)
    center = math.log(q) / d
    if d * L ** d <= 20:
        lo, hi = center - 0.5, center + 0.5
        f_lo = _census_sector_imbalance(q, torus, lo)
        f_hi = _census_sector_imbalance(q, torus, hi)
        for _ in range(8):
            if f_lo > 0 > f_hi:
                break
            if f_lo <= 0:
                lo -= 0.5
                f_lo = _census_sector_imbalance(q, torus, lo)
            if f_hi >= 0:
                hi += 0.5
                f_hi = _census_sector_imbalance(q, torus, hi)
        else:
            raise RuntimeError(
                f"bisection bracket failure: f({lo})={f_lo}, f({hi})={f_hi}"
            )
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _census_sector_imbalance(q, torus, mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    return _sampled_crossing_beta(q, d, L, seed)


def _dual_start_samples(q, d, L, beta, steps, burn_in, seed, tag):
    """Pooled |E(sigma)| samples from all-ordered and all-random starts."""
    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    params = ModelParams(q, beta, d)
    eu = np.array([e[0] for e in graph.edges])
    ev = np.array([e[1] for e in graph.edges])
    out = []
    for start in ("ord", "rnd"):
        rng = rng_stream(seed, f"{tag}-b{beta:.6f}-{start}")
        if start == "ord":
            sigma = np.zeros(graph.vertex_count, dtype=np.int64)
        else:
            sigma = rng.integers(0, q, size=graph.vertex_count)
        for t in range(steps):
            sigma = sw_step_fast(params, graph, sigma, rng, eu, ev)
            if t >= burn_in:
                out.append(int(np.count_nonzero(sigma[eu] == sigma[ev])))
    return np.array(out)


def reweighted_ordered_fraction(samples_by_beta, beta, threshold):
    """Single-histogram reweighting from the nearest grid run.

    samples_by_beta: {beta_run: array of |E| samples}.  Returns the estimated
    stationary probability of {|E| >= threshold} at the target beta.
    """
    beta_run = min(samples_by_beta, key=lambda b: abs(b - beta))
    e = samples_by_beta[beta_run].astype(float)
    logw = (beta - beta_run) * e
    logw -= logw.max()
    w = np.exp(logw)
    num = w[e >= threshold].sum()
    return float(num / w.sum())


def reweighting_overlap_report(samples_by_beta, threshold):
    """Cross-validate adjacent grid runs at their midpoints.

    For each adjacent pair, reweight both to the midpoint and report the
    discrepancy next to a binomial-scale uncertainty."""
    betas = sorted(samples_by_beta)
    rows = []
    for b0, b1 in zip(betas, betas[1:]):
        mid = 0.5 * (b0 + b1)
        ests = []
        for b in (b0, b1):
            e = samples_by_beta[b].astype(float)
            logw = (mid - b) * e
            logw -= logw.max()
            w = np.exp(logw)
            n_eff = w.sum() ** 2 / (w ** 2).sum()
            est = float(w[e >= threshold].sum() / w.sum())
            ests.append((est, n_eff))
        (e0, n0), (e1, n1) = ests
        sigma = math.sqrt(
            e0 * (1 - e0) / max(n0, 1) + e1 * (1 - e1) / max(n1, 1)
        )
        rows.append(
            {"beta_mid": mid, "est_lo": e0, "est_hi": e1,
             "discrepancy": abs(e0 - e1), "sigma": sigma}
        )
    return rows


def _sampled_crossing_beta(q, d, L, seed, grid_halfwidth=0.16, grid_points=5,
                           steps=1200, burn_in=200):
    """Bisection of the reweighted ordered fraction against q/(q+1)."""
    if d == 2:
        center = math.log(1.0 + math.sqrt(q))  # square-lattice self-dual point
    else:
        center = math.log(q) / d
    alpha = 1.0 / 3.0
    threshold = (1 - alpha) * d * L ** d
    target = q / (q + 1.0)
    for attempt in range(3):
        width = grid_halfwidth * (2 ** attempt)
        grid = np.linspace(center - width, center + width, grid_points)
        samples = {
            float(b): _dual_start_samples(
                q, d, L, float(b), steps, burn_in, seed, f"pcb-q{q}-L{L}"
            )
            for b in grid
        }
        f = lambda b: reweighted_ordered_fraction(samples, b, threshold) - target
        lo, hi = float(grid[0]), float(grid[-1])
        f_lo, f_hi = f(lo), f(hi)
        if f_lo < 0 < f_hi:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if f(mid) < 0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    raise RuntimeError(
        f"ordered-fraction crossing not bracketed for q={q}, L={L}: "
        f"f({lo:.4f})={f_lo:.4f}, f({hi:.4f})={f_hi:.4f}"
    )


# ---------------------------------------------------------------------------
# escape-rate experiments
# ---------------------------------------------------------------------------

def clopper_pearson(k, n, level=0.95):
    """Exact binomial confidence interval for k successes in n trials."""
    if n == 0:
        return 0.0, 1.0
    a = (1 - level) / 2
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a, k + 1, n - k))
    return lo, hi


@dataclass
class EscapeRow:
    q: int
    d: int
    L: int
    beta: float
    alpha: float
    kernel: str
    steps: int
    escapes: int
    rate: float
    ci_low: float
    ci_high: float
    seed: int
    low_confidence: bool = False


def sw_escape_ensemble(q, d, L, beta, alpha, steps, replicas, seed, burn_in=50):
    """Per-step SW escape probability from S = {|E(sigma)| >= (1-alpha)dL^d}.

    Runs `replicas` independent reset chains as one block-diagonal graph so
    every chain advances with a single connected-components call per step.
    Returns (trials, escapes): trials = replicas * steps after burn-in.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    params = ModelParams(q, beta, d)
    n = graph.vertex_count
    m = graph.edge_count
    eu = np.array([e[0] for e in graph.edges])
    ev = np.array([e[1] for e in graph.edges])
    offs = np.repeat(np.arange(replicas) * n, m)
    beu = np.tile(eu, replicas) + offs
    bev = np.tile(ev, replicas) + offs
    threshold = (1 - alpha) * d * L ** d
    rng = rng_stream(seed, f"sw-escape-q{q}-L{L}")
    sigma = np.zeros(replicas * n, dtype=np.int64)
    trials = 0
    escapes = 0
    ones = np.ones(replicas * m)
    for t in range(burn_in + steps):
        mono = sigma[beu] == sigma[bev]
        keep = mono & (rng.random(replicas * m) < params.p)
        adj = coo_matrix(
            (ones[: int(keep.sum())], (beu[keep], bev[keep])),
            shape=(replicas * n, replicas * n),
        )
        ncomp, labels = connected_components(adj, directed=False)
        sigma = rng.integers(0, q, size=ncomp)[labels]
        counts = (sigma[beu] == sigma[bev]).reshape(replicas, m).sum(axis=1)
        out = counts < threshold
        if t >= burn_in:
            trials += replicas
            escapes += int(out.sum())
        if out.any():
            blocks = sigma.reshape(replicas, n)
            blocks[out] = 0
            sigma = blocks.reshape(-1)
    return trials, escapes


def sw_escape_experiment(config, steps_for=None):
    """Per-L SW escape rates from S = {|E(sigma)| >= (1-alpha) d L^d}."""
    rows = []
    alpha = config.effective_alpha()
    replicas = max(config.replicas, 1)
    for L in config.L_list:
        beta = config.beta_for(L)
        per_chain = steps_for(L) if steps_for else config.steps
        steps = max(per_chain // replicas, 1)
        trials, escapes = sw_escape_ensemble(
            config.q, config.d, L, beta, alpha, steps, replicas,
            config.seed, burn_in=max(config.burn_in // replicas, 20),
        )
        rate = escapes / trials if trials else 0.0
        lo, hi = clopper_pearson(escapes, trials)
        rows.append(
            EscapeRow(
                q=config.q, d=config.d, L=L, beta=beta, alpha=alpha,
                kernel="sw", steps=trials, escapes=escapes, rate=rate,
                ci_low=lo, ci_high=hi, seed=config.seed,
                low_confidence=escapes < 10,
            )
        )
    return rows


def hb_membership(graph, sigma, threshold):
    """Color k if some color-k monochromatic component has >= threshold
    vertices, else None.  At threshold > |V|/2 the component is unique."""
    size, color = largest_component(graph, sigma)
    if size >= threshold:
        return int(color)
    return None


def hb_sweep_tracked(params, graph, sigma, rng, threshold, forbid_pair=None):
    """One heat-bath sweep (|V| uniform-site updates), asserting that no
    single update jumps directly between two distinct giant-color classes."""
    n = graph.vertex_count
    adj = graph.adjacency
    q = params.q
    prev = hb_membership(graph, sigma, threshold) if forbid_pair else None
    sites = rng.integers(0, n, size=n)
    us = rng.random(size=n)
    for v, u in zip(sites, us):
        counts = np.zeros(q)
        for w in adj[v]:
            counts[sigma[w]] += 1.0
        logits = params.beta * counts
        logits -= logits.max()
        probs = np.exp(logits)
        probs /= probs.sum()
        sigma[v] = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        if forbid_pair:
            cur = hb_membership(graph, sigma, threshold)
            if prev is not None and cur is not None and cur != prev:
                raise AssertionError(
                    f"single update moved the giant component from color "
                    f"{prev} to color {cur}"
                )
            prev = cur
    return sigma


def hb_escape_ensemble(q, d, L, beta, alpha, sweeps, replicas, seed,
                       burn_in=20):
    """Per-sweep HB escape probability from Omega-hat_1 (a color-0
    monochromatic component of >= (1-alpha)L^d vertices), reset chains
    vectorized across replicas with a shared update schedule per sweep."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    params = ModelParams(q, beta, d)
    n = graph.vertex_count
    m = graph.edge_count
    nbr = np.array([sorted(graph.adjacency[v]) for v in range(n)])
    eu = np.array([e[0] for e in graph.edges])
    ev = np.array([e[1] for e in graph.edges])
    offs = np.repeat(np.arange(replicas) * n, m)
    beu = np.tile(eu, replicas) + offs
    bev = np.tile(ev, replicas) + offs
    threshold = (1 - alpha) * L ** d
    rng = rng_stream(seed, f"hb-escape-q{q}-L{L}")
    sigma = np.zeros((replicas, n), dtype=np.int64)
    rows_idx = np.arange(replicas)
    trials = 0
    escapes = 0
    for t in range(burn_in + sweeps):
        sites = rng.integers(0, n, size=(n, replicas))
        us = rng.random(size=(n, replicas))
        for v, u in zip(sites, us):
            colors = sigma[rows_idx[:, None], nbr[v]]       # (replicas, 2d)
            counts = np.zeros((replicas, q))
            np.add.at(counts, (np.repeat(rows_idx, 2 * d), colors.reshape(-1)), 1.0)
            w = np.exp(params.beta * counts)
            cum = np.cumsum(w, axis=1)
            pick = (cum < (u * cum[:, -1])[:, None]).sum(axis=1)
            sigma[rows_idx, v] = pick
        flat = sigma.reshape(-1)
        mono = flat[beu] == flat[bev]
        adj = coo_matrix(
            (np.ones(int(mono.sum())), (beu[mono], bev[mono])),
            shape=(replicas * n, replicas * n),
        )
        ncomp, labels = connected_components(adj, directed=False)
        sizes0 = np.bincount(labels[flat == 0], minlength=ncomp)
        per_vertex = np.where(flat == 0, sizes0[labels], 0)
        giant0 = per_vertex.reshape(replicas, n).max(axis=1)
        out = giant0 < threshold
        if t >= burn_in:
            trials += replicas
            escapes += int(out.sum())
        if out.any():
            sigma[out] = 0
    return trials, escapes


def hb_persistence_experiment(config, steps_for=None):
    """Per-L HB per-sweep escape rates from Omega-hat_1."""
    rows = []
    alpha = config.effective_alpha() if config.kernel == "hb" else 1.0 / (4 * config.d)
    replicas = max(config.replicas, 1)
    for L in config.L_list:
        beta = config.beta_for(L)
        per_chain = steps_for(L) if steps_for else config.steps
        sweeps = max(per_chain // replicas, 1)
        trials, escapes = hb_escape_ensemble(
            config.q, config.d, L, beta, alpha, sweeps, replicas, config.seed,
        )
        rate = escapes / trials if trials else 0.0
        lo, hi = clopper_pearson(escapes, trials)
        rows.append(
            EscapeRow(
                q=config.q, d=config.d, L=L, beta=beta, alpha=alpha,
                kernel="hb", steps=trials, escapes=escapes, rate=rate,
                ci_low=lo, ci_high=hi, seed=config.seed,
                low_confidence=escapes < 10,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# mono-edge histogram and gap statistics
# ---------------------------------------------------------------------------

def mono_edge_histogram_exact(q, d, L, beta, alpha=1.0 / 3.0):
    """Exact stationary distribution of |E(sigma)| on T_{L,d}.

    Uses the integer edge-count polynomial N(k) = #{sigma : |E(sigma)| = k},
    so it works at any q without enumerating spins: mu(|E| = k) is
    proportional to N(k) e^{beta k}."""
    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    counts = edge_count_polynomial(graph, q)
    m = graph.edge_count
    ks = np.arange(m + 1)
    logs = np.array(
        [(-math.inf if c == 0 else math.log(c)) + beta * k
         for k, c in zip(ks, counts)]
    )
    logz = float(logsumexp(logs))
    probs = np.exp(logs - logz)
    lo_cut = alpha * d * L ** d
    hi_cut = (1 - alpha) * d * L ** d
    return {
        "ks": ks,
        "probs": probs,
        "m_dis": float(probs[ks <= lo_cut].sum()),
        "m_mid": float(probs[(ks > lo_cut) & (ks < hi_cut)].sum()),
        "m_ord": float(probs[ks >= hi_cut].sum()),
    }


def mono_edge_histogram_sampled(q, d, L, beta, alpha=1.0 / 3.0, steps=2000,
                                burn_in=300, seed=12345):
    """Dual-start sampled distribution of |E(sigma)| (no reweighting)."""
    e = _dual_start_samples(q, d, L, beta, steps, burn_in, seed, f"hist-q{q}-L{L}")
    m = 2 * d * 0 + d * L ** d
    lo_cut = alpha * m
    hi_cut = (1 - alpha) * m
    return {
        "samples": e,
        "m_dis": float((e <= lo_cut).mean()),
        "m_mid": float(((e > lo_cut) & (e < hi_cut)).mean()),
        "m_ord": float((e >= hi_cut).mean()),
    }


def integrated_autocorrelation_time(series, c=5.0):
    """Self-consistent windowed IAT estimator for a scalar time series."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = len(x)
    if n < 4 or np.allclose(x, 0):
        return 1.0
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n].real
    acf /= acf[0]
    taus = 2.0 * np.cumsum(acf) - 1.0
    for w in range(1, n):
        if w >= c * taus[w]:
            return float(max(taus[w], 1.0))
    return float(max(taus[-1], 1.0))


def sw_autocorrelation_experiment(q, d, L, beta, steps=4000, burn_in=300,
                                  seed=12345):
    """IAT of |E(sigma)| under SW from an ordered start."""
    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    params = ModelParams(q, beta, d)
    eu = np.array([e[0] for e in graph.edges])
    ev = np.array([e[1] for e in graph.edges])
    rng = rng_stream(seed, f"iat-q{q}-L{L}-b{beta:.6f}")
    sigma = np.zeros(graph.vertex_count, dtype=np.int64)
    series = np.empty(steps)
    for t in range(burn_in):
        sigma = sw_step_fast(params, graph, sigma, rng, eu, ev)
    for t in range(steps):
        sigma = sw_step_fast(params, graph, sigma, rng, eu, ev)
        series[t] = np.count_nonzero(sigma[eu] == sigma[ev])
    return integrated_autocorrelation_time(series), series


# ---------------------------------------------------------------------------
# coupled-trajectory invariants and the deletion tail
# ---------------------------------------------------------------------------

def es_coupled_run(q, d, L, beta, steps, seed=12345):
    """Run SW keeping the bond layer; verify coupling invariants each step.

    Checks per step: A is a subset of the monochromatic edges; every bond
    cluster is contained in one monochromatic spin component (so cluster
    counts and maxima sandwich); records the deleted-edge count
    |E(sigma)| - |A| next to its Binomial(|E(sigma)|, e^{-beta}) law.
    """
    torus = TorusSpec(L, d)
    graph = build_torus(torus)
    params = ModelParams(q, beta, d)
    eu = np.array([e[0] for e in graph.edges])
    ev = np.array([e[1] for e in graph.edges])
    rng = rng_stream(seed, f"es-q{q}-L{L}")
    sigma = rng.integers(0, q, size=graph.vertex_count)
    n = graph.vertex_count
    records = {"mono": [], "deleted": [], "violations": 0}
    for _ in range(steps):
        mono = sigma[eu] == sigma[ev]
        new_sigma, mask, labels, ncomp = sw_resample(params, graph, sigma, rng)
        kept = np.array(
            [(mask >> i) & 1 for i in range(graph.edge_count)], dtype=bool
        )
        if np.any(kept & ~mono):
            records["violations"] += 1
        # bond clusters refine spin components: endpoints of every kept bond
        # share a spin color (already mono) and share a bond-cluster label
        if np.any(labels[eu[kept]] != labels[ev[kept]]):
            records["violations"] += 1
        # sandwich: each spin component splits into >= 1 bond clusters
        spin_labels = _spin_component_labels(graph, sigma, eu, ev)
        if np.any(spin_labels[eu[kept]] != spin_labels[ev[kept]]):
            records["violations"] += 1
        n_spin = spin_labels.max() + 1
        if not (n_spin <= ncomp <= n):
            records["violations"] += 1
        sizes_bond = np.bincount(labels)
        sizes_spin = np.bincount(spin_labels)
        if sizes_bond.max() > sizes_spin.max():
            records["violations"] += 1
        records["mono"].append(int(mono.sum()))
        records["deleted"].append(int(mono.sum() - kept.sum()))
        sigma = new_sigma
    records["mono"] = np.array(records["mono"])
    records["deleted"] = np.array(records["deleted"])
    return records


def _spin_component_labels(graph, sigma, eu, ev):
    uf = UnionFind(graph.vertex_count)
    for u, v in zip(eu[sigma[eu] == sigma[ev]], ev[sigma[eu] == sigma[ev]]):
        uf.union(int(u), int(v))
    roots = {}
    labels = np.empty(graph.vertex_count, dtype=np.int64)
    for v in range(graph.vertex_count):
        r = uf.find(v)
        labels[v] = roots.setdefault(r, len(roots))
    return labels


def deletion_tail_check(q, d, L, beta, alpha_tilde, steps=10000, seed=12345):
    """Compare the observed frequency of |E(sigma)| - |A| >= alpha~ d L^d
    against the crude log-domain bound e^{-beta alpha~ d L^d} 2^{d L^d} and
    the exact binomial tail at the observed mean edge count."""
    rec = es_coupled_run(q, d, L, beta, steps, seed)
    cut = alpha_tilde * d * L ** d
    freq = float((rec["deleted"] >= cut).mean())
    log_crude = -beta * cut + d * L ** d * math.log(2.0)
    m_typ = int(round(rec["mono"].mean()))
    k = math.ceil(cut)
    exact_tail = float(stats.binom.sf(k - 1, m_typ, math.exp(-beta)))
    mean_del = float(rec["deleted"].mean())
    mean_pred = math.exp(-beta) * float(rec["mono"].mean())
    var = math.exp(-beta) * (1 - math.exp(-beta)) * float(rec["mono"].mean())
    z = abs(mean_del - mean_pred) / math.sqrt(max(var / steps, 1e-300))
    return {
        "frequency": freq,
        "log_crude_bound": log_crude,
        "crude_ok": (freq == 0.0) or (math.log(freq) <= log_crude),
        "binomial_tail": exact_tail,
        "binomial_ok": freq <= max(
            exact_tail + 4 * math.sqrt(exact_tail / steps + 1e-12), exact_tail * 4 + 10 / steps
        ),
        "mean_deleted": mean_del,
        "mean_predicted": mean_pred,
        "mean_z": z,
        "violations": rec["violations"],
    }


# ---------------------------------------------------------------------------
# persistence: CSV, manifest, plots
# ---------------------------------------------------------------------------

ESCAPE_CSV_COLUMNS = (
    "q", "d", "L", "beta", "alpha", "kernel", "steps", "escapes",
    "rate", "ci_low", "ci_high", "seed",
)


def write_escape_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ESCAPE_CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([d[c] for c in ESCAPE_CSV_COLUMNS])


def write_manifest(config, rows, path, wall_time, extras=None):
    payload = {
        "version": __version__,
        "csv_schema": list(ESCAPE_CSV_COLUMNS),
        "config": asdict(config),
        "wall_time_seconds": wall_time,
        "rows": [asdict(r) for r in rows],
    }
    if extras:
        payload["extras"] = extras
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def plot_escape_rates(rows, path):
    """SVG semilog plot of escape rate versus L."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    Ls = [r.L for r in rows]
    rates = [max(r.rate, 1e-12) for r in rows]
    los = [max(r.ci_low, 1e-12) for r in rows]
    his = [max(r.ci_high, 1e-12) for r in rows]
    ax.errorbar(
        Ls, rates,
        yerr=[np.subtract(rates, los), np.subtract(his, rates)],
        marker="o", capsize=3,
    )
    ax.set_yscale("log")
    ax.set_xlabel("L")
    ax.set_ylabel("escape rate")
    kern = rows[0].kernel if rows else "?"
    ax.set_title(f"{kern} escape rate, q={rows[0].q if rows else '?'}")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def log_rate_fit(rows):
    """Least-squares fit of log(rate) vs L; returns slope, intercept, R^2."""
    pts = [(r.L, r.rate) for r in rows if r.rate > 0]
    if len(pts) < 2:
        raise ValueError("need at least two positive rates to fit")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log(np.array([p[1] for p in pts]))
    res = stats.linregress(x, y)
    return {
        "slope": float(res.slope),
        "intercept": float(res.intercept),
        "r_squared": float(res.rvalue ** 2),
        "n_points": len(pts),
    }


def run_experiment(config, kind, out_prefix=None):
    """Dispatch an experiment, write CSV + manifest (+ plot), return rows."""
    t0 = time.time()
    if kind == "sw-escape":
        rows = sw_escape_experiment(config)
    elif kind == "hb-persistence":
        rows = hb_persistence_experiment(config)
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    wall = time.time() - t0
    if out_prefix:
        write_escape_csv(rows, f"{out_prefix}.csv")
        write_manifest(config, rows, f"{out_prefix}.json", wall)
        plot_escape_rates(rows, f"{out_prefix}.svg")
    return rows
