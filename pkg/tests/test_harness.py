import math

import numpy as np
import pytest

from pottsmc.lattice import TorusSpec, build_torus
from pottsmc.harness import (
    EscapeRow,
    ExperimentConfig,
    clopper_pearson,
    deletion_tail_check,
    es_coupled_run,
    hb_membership,
    integrated_autocorrelation_time,
    log_rate_fit,
    mono_edge_histogram_exact,
    mono_edge_histogram_sampled,
    parse_config,
    plot_escape_rates,
    pseudo_critical_beta,
    sw_escape_ensemble,
    write_escape_csv,
    write_manifest,
)


def test_parse_config_roundtrip():
    cfg = parse_config(
        """
        # experiment settings
        q = 20
        d = 2
        beta_policy = fixed
        beta = 1.5          # inline comment
        beta_scale = 1.2
        L_list = 4, 6, 8
        steps = 5000
        burn_in = 100
        replicas = 8
        seed = 7
        kernel = hb
        """
    )
    assert cfg.q == 20 and cfg.L_list == (4, 6, 8)
    assert cfg.kernel == "hb" and cfg.beta == 1.5
    assert cfg.beta_for(4) == pytest.approx(1.8)
    assert cfg.effective_alpha() == pytest.approx(1.0 / 8.0)


def test_parse_config_errors():
    with pytest.raises(ValueError):
        parse_config("q 10")
    with pytest.raises(ValueError):
        parse_config("quux = 3")
    with pytest.raises(ValueError):
        parse_config("beta_policy = fixed")  # no beta given
    with pytest.raises(ValueError):
        parse_config("steps = 10\nburn_in = 10")


def test_clopper_pearson_properties():
    lo, hi = clopper_pearson(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = clopper_pearson(100, 100)
    assert hi == 1.0 and lo > 0.95
    lo, hi = clopper_pearson(7, 50)
    assert lo < 7 / 50 < hi


def test_iat_white_noise_is_near_one():
    rng = np.random.default_rng(0)
    tau = integrated_autocorrelation_time(rng.normal(size=20000))
    assert tau == pytest.approx(1.0, abs=0.15)


def test_iat_ar1_matches_closed_form():
    rho = 0.6
    rng = np.random.default_rng(1)
    x = np.empty(200000)
    x[0] = 0.0
    eps = rng.normal(size=len(x))
    for t in range(1, len(x)):
        x[t] = rho * x[t - 1] + eps[t]
    tau = integrated_autocorrelation_time(x)
    assert tau == pytest.approx((1 + rho) / (1 - rho), rel=0.1)


def test_exact_edge_histogram_normalization_and_phases():
    h = mono_edge_histogram_exact(10, 2, 3, 1.4)
    assert h["probs"].sum() == pytest.approx(1.0, abs=1e-12)
    assert h["m_dis"] + h["m_mid"] + h["m_ord"] == pytest.approx(1.0, abs=1e-12)
    assert mono_edge_histogram_exact(10, 2, 3, 4.0)["m_ord"] > 0.999
    assert mono_edge_histogram_exact(10, 2, 3, 0.1)["m_dis"] > 0.99


def test_exact_histogram_ordered_mass_monotone_in_beta():
    vals = [mono_edge_histogram_exact(10, 2, 3, b)["m_ord"] for b in
            (0.5, 1.0, 1.4, 2.0, 3.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_sampled_histogram_tracks_exact():
    beta = 1.2
    exact = mono_edge_histogram_exact(10, 2, 3, beta)
    samp = mono_edge_histogram_sampled(10, 2, 3, beta, steps=4000, burn_in=500,
                                       seed=5)
    assert abs(samp["m_ord"] - exact["m_ord"]) < 0.05
    assert abs(samp["m_dis"] - exact["m_dis"]) < 0.05


def test_pseudo_critical_small_torus_census_value():
    beta = pseudo_critical_beta(10, 2, 3)
    assert beta == pytest.approx(1.396041, abs=1e-4)
    # ordered mass increases through the crossing
    lo = mono_edge_histogram_exact(10, 2, 3, beta - 0.2)["m_ord"]
    hi = mono_edge_histogram_exact(10, 2, 3, beta + 0.2)["m_ord"]
    assert lo < hi


def test_coupled_run_has_no_violations():
    rec = es_coupled_run(3, 2, 3, 1.0, steps=300, seed=2)
    assert rec["violations"] == 0
    assert len(rec["mono"]) == 300
    assert (rec["deleted"] >= 0).all()


def test_deletion_tail_degenerate_threshold():
    rep = deletion_tail_check(3, 2, 3, 1.2, alpha_tilde=1.0, steps=500, seed=3)
    assert rep["frequency"] == 0.0
    assert rep["crude_ok"] and rep["binomial_ok"]
    assert rep["violations"] == 0


def test_hb_membership():
    g = build_torus(TorusSpec(3, 2))
    assert hb_membership(g, np.zeros(9, dtype=int), 8) == 0
    sigma = np.arange(9) % 3
    assert hb_membership(g, sigma, 8) is None


def test_sw_escape_ensemble_limits():
    # deep in the ordered phase the chain never leaves the ordered set
    trials, escapes = sw_escape_ensemble(
        2, 2, 3, beta=5.0, alpha=1 / 3, steps=200, replicas=4, seed=1
    )
    assert trials == 800 and escapes == 0
    # at beta = 0 the state is uniform and leaves immediately
    trials, escapes = sw_escape_ensemble(
        10, 2, 3, beta=0.01, alpha=1 / 3, steps=200, replicas=4, seed=1
    )
    assert escapes == trials


def test_persistence_and_fit(tmp_path):
    rows = [
        EscapeRow(q=10, d=2, L=L, beta=1.4, alpha=1 / 3, kernel="sw",
                  steps=1000, escapes=k, rate=k / 1000,
                  ci_low=0.0, ci_high=1.0, seed=1)
        for L, k in ((4, 200), (6, 40), (8, 8))
    ]
    fit = log_rate_fit(rows)
    assert fit["slope"] < 0 and fit["r_squared"] > 0.99
    csv_path = tmp_path / "rows.csv"
    write_escape_csv(rows, csv_path)
    header = csv_path.read_text().splitlines()[0]
    assert header.split(",")[:4] == ["q", "d", "L", "beta"]
    cfg = ExperimentConfig(beta=1.4, beta_policy="fixed")
    write_manifest(cfg, rows, tmp_path / "m.json", wall_time=0.1)
    import json

    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["config"]["q"] == 10 and len(doc["rows"]) == 3
    plot_escape_rates(rows, tmp_path / "p.svg")
    assert (tmp_path / "p.svg").stat().st_size > 0
