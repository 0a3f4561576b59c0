"""
Slow mixing at the transition, fast mixing away from it.

At the finite-size transition point of a strongly first-order Potts model
(large q), the cluster dynamics started in the ordered phase escapes to the
disordered phase at a rate that decays exponentially in the side length L.
Away from the transition the autocorrelation time is flat in L.

This is a scaled-down run (a few minutes); the full-size experiment lives in
the acceptance test suite and the `pottsmc experiment` CLI.

Run: python demos/torpid_mixing.py
"""

from pottsmc.harness import (
    ExperimentConfig,
    log_rate_fit,
    pseudo_critical_beta,
    sw_autocorrelation_experiment,
    sw_escape_experiment,
)


def main():
    q = 20
    config = ExperimentConfig(
        q=q, d=2, L_list=(4, 6, 8), steps=100000, burn_in=400,
        replicas=20, seed=7, kernel="sw",
    )
    budgets = {4: 30000, 6: 100000, 8: 250000}
    print(f"escape rates from the ordered phase at the transition (q={q})")
    rows = sw_escape_experiment(config, steps_for=budgets.__getitem__)
    for r in rows:
        print(f"  L={r.L:2d} beta={r.beta:.5f} trials={r.steps:7d} "
              f"escapes={r.escapes:5d} rate={r.rate:.3e} "
              f"ci=[{r.ci_low:.2e}, {r.ci_high:.2e}]")
    fit = log_rate_fit(rows)
    print(f"  log-rate slope per unit L: {fit['slope']:.3f} "
          f"(R^2 = {fit['r_squared']:.3f})")

    print("\nautocorrelation time of |E(sigma)| at half the transition beta")
    for L in (4, 8, 12):
        beta = 0.5 * pseudo_critical_beta(q, 2, L, seed=7)
        tau, _ = sw_autocorrelation_experiment(q, 2, L, beta, steps=3000,
                                               burn_in=200, seed=7)
        print(f"  L={L:2d} beta={beta:.5f} tau={tau:.2f} steps")


if __name__ == "__main__":
    main()
