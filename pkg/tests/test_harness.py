"""Ensembles, claim verification, martingale diagnostics, and p-sweeps."""

import dataclasses
import math

import numpy as np
import pytest

import chemlevy as cl
from chemlevy import (
    IntervalNumber,
    Regime,
    SimConfig,
    State,
    VerifyTolerances,
    classify,
    crispify,
    ensemble,
    martingale_diagnostics,
    p_sweep,
    simulate,
    verify,
)
from chemlevy.integrator import derive_path_seed
from conftest import INITIAL, TWO_MARKS, make_extinction, make_persistence

I = IntervalNumber


def small_config(**kw) -> SimConfig:
    base = dict(initial=INITIAL, t_end=500.0, dt=0.02, seed=42, output_stride=50)
    base.update(kw)
    return SimConfig(**base)


def test_single_path_ensemble_percentiles_collapse():
    model = make_persistence()
    summary = ensemble(model, small_config(t_end=50.0), 1)
    traj = simulate(model, cl.integrator.path_config(small_config(t_end=50.0), 0))
    for stat in ("mean", "p5", "p50", "p95"):
        assert np.array_equal(summary.series["S"][stat], traj.S)
        assert np.array_equal(summary.series["mean_y"][stat], traj.mean_y)


def test_deterministic_ensemble_has_zero_spread():
    model = make_persistence().with_sigmas(0.0, 0.0, 0.0)
    summary = ensemble(model, small_config(t_end=50.0), 8)
    for name in ("S", "x", "y", "mean_S", "mean_x", "mean_y"):
        s = summary.series[name]
        assert np.array_equal(s["p5"], s["p95"])  # identical paths, zero spread
        # the mean accumulates rounding that the order statistics do not
        assert np.allclose(s["mean"], s["p50"], rtol=1e-14, atol=0)


def test_ensemble_reproducible():
    model = make_persistence(jumps=TWO_MARKS)
    a = ensemble(model, small_config(t_end=100.0), 12)
    b = ensemble(model, small_config(t_end=100.0), 12)
    for name in a.series:
        for stat in a.series[name]:
            assert np.array_equal(a.series[name][stat], b.series[name][stat],
                                  equal_nan=True)
    for key in a.terminal:
        assert np.array_equal(a.terminal[key], b.terminal[key])


def test_ensemble_worker_count_does_not_change_results():
    model = make_extinction(jumps=TWO_MARKS)
    a = ensemble(model, small_config(t_end=100.0), 8, workers=1)
    b = ensemble(model, small_config(t_end=100.0), 8, workers=2)
    for name in a.series:
        for stat in a.series[name]:
            assert np.array_equal(a.series[name][stat], b.series[name][stat],
                                  equal_nan=True)
    assert np.array_equal(a.extinct_x_frac, b.extinct_x_frac)


def test_ensemble_failure_rate_guard():
    # an initial nutrient level this small overflows the replenishment drift
    # on the first step, so every path aborts
    model = make_extinction()
    config = small_config(initial=State(1e-12, 0.5, 0.2), t_end=10.0, dt=0.01)
    with pytest.raises(RuntimeError, match="aborted"):
        ensemble(model, config, 10)


def test_extinction_fraction_reaches_one_by_t1000():
    model = make_extinction()
    config = SimConfig(initial=INITIAL, t_end=1000.0, dt=0.01, seed=606,
                       output_stride=100)
    summary = ensemble(model, config, 30, workers=2)
    assert summary.terminal["extinct_x"].mean() >= 0.9
    assert summary.terminal["extinct_y"].mean() >= 0.9
    # sticky flags make the fraction monotone over time
    assert np.all(np.diff(summary.extinct_x_frac) >= 0.0)
    assert np.all(np.diff(summary.extinct_y_frac) >= 0.0)


def test_extinction_fraction_full_ensemble_at_t1000(ens_extinction):
    # 200 paths: by t=1000 essentially every path has crossed the reporting
    # threshold in both populations
    idx = int(np.searchsorted(ens_extinction.times, 1000.0))
    assert ens_extinction.times[idx] == pytest.approx(1000.0)
    assert ens_extinction.extinct_x_frac[idx] >= 0.95
    assert ens_extinction.extinct_x_frac[-1] >= ens_extinction.extinct_x_frac[idx]


def test_percentile_ordering_everywhere(ens_extinction):
    for name in ens_extinction.series:
        s = ens_extinction.series[name]
        keep = ~np.isnan(s["p50"])
        assert np.all(s["p5"][keep] <= s["p50"][keep] + 1e-15)
        assert np.all(s["p50"][keep] <= s["p95"][keep] + 1e-15)


def test_slnn_style_decay_on_long_horizon(ens_persistence):
    # terminal state over t and martingale-over-t diagnostics all shrink
    series = ens_persistence.series
    t_end = ens_persistence.horizon
    for name in ("S", "x", "y"):
        assert series[name]["p95"][-1] / t_end < 0.01
    term = ens_persistence.terminal
    assert np.max(np.abs(term["brownian_over_t"])) < 0.01
    assert np.max(np.abs(term["comp_jump_over_t"])) < 0.01


def test_verify_refuses_short_horizon():
    model = make_extinction()
    summary = ensemble(model, small_config(t_end=100.0), 4)
    with pytest.raises(ValueError, match="horizon"):
        verify(classify(model), summary)


def test_verify_extinction_small_pilot():
    model = make_extinction()
    summary = ensemble(model, small_config(seed=31), 20, workers=2)
    verdict = verify(classify(model), summary)
    assert verdict.regime is Regime.BOTH_EXTINCT
    assert {c.claim_id for c in verdict.claims} == {
        "x_lyapunov_bound", "y_lyapunov_bound", "S_mean_limit"}
    assert verdict.all_passed


def test_verify_claim_rows_match_predictions(ens_extinction, ens_persistence):
    for model, summary in ((make_extinction(), ens_extinction),
                           (make_persistence(), ens_persistence)):
        report = classify(model)
        verdict = verify(report, summary)
        assert {c.claim_id for c in verdict.claims} == set(report.predictions.present())


def test_verify_zero_noise_persistent_exact():
    # the noise-free flow satisfies the (beta-free) lower bound up to solver error
    model = make_persistence().with_sigmas(0.0, 0.0, 0.0)
    summary = ensemble(model, small_config(t_end=600.0, dt=0.01), 2)
    verdict = verify(classify(model), summary)
    assert verdict.regime is Regime.PERSISTENT
    assert verdict.all_passed
    (claim,) = verdict.claims
    assert claim.observed >= claim.predicted - claim.tolerance


def test_verify_boundary_has_no_claims():
    base = make_extinction()
    s0 = (base.D + cl.beta(base, 2)) / base.m1
    model = dataclasses.replace(base, S0=s0)
    summary = ensemble(model, small_config(), 4)
    verdict = verify(classify(model), summary)
    assert verdict.regime is Regime.BOUNDARY
    assert verdict.claims == ()
    assert verdict.all_passed


def test_burn_in_monotone_extinction_rates(ens_extinction):
    # the passing rate verdict at the full horizon also holds at half horizon
    model = make_extinction()
    preds = classify(model).predictions
    tol = VerifyTolerances()
    series = ens_extinction.series["lnx_over_t"]["p50"]
    for target in (1000.0, 2000.0):
        idx = int(np.searchsorted(ens_extinction.times, target))
        assert series[idx] <= preds.x_lyapunov_bound + tol.rate


def test_martingale_diagnostics_no_jumps_identically_zero():
    model = make_persistence()
    trajs = [simulate(model, small_config(t_end=50.0, seed=derive_path_seed(8, i)))
             for i in range(5)]
    diag = martingale_diagnostics(trajs)
    assert np.all(diag.comp_jump_over_t == 0.0)
    assert np.all(np.abs(diag.brownian_mean) < 0.05)


def test_martingale_diagnostics_with_jumps():
    model = make_persistence(jumps=TWO_MARKS)
    t_end, n = 200.0, 40
    trajs = [simulate(model, small_config(t_end=t_end, dt=0.01,
                                          seed=derive_path_seed(17, i)))
             for i in range(n)]
    diag = martingale_diagnostics(trajs)
    se_b = 0.1 / math.sqrt(t_end * n)
    lam_ln2 = 0.5 * math.log(0.7) ** 2 + 0.5 * math.log(1.5) ** 2
    se_j = math.sqrt(lam_ln2 / t_end / n)
    assert np.all(np.abs(diag.brownian_mean) <= 3.0 * se_b)
    assert np.all(np.abs(diag.comp_jump_mean) <= 3.0 * se_j)


# ---------------------------------------------------------------------------
# p-sweep
# ---------------------------------------------------------------------------

def imprecise_extinction(m1=(0.4, 0.4)):
    return cl.ImpreciseModel(
        S0=1.0, D=I(0.5, 0.5), m1=I(*m1), delta1=I(0.5, 0.5), sigma1=I(0.1, 0.1),
        m2=I(0.3, 0.3), delta2=I(0.5, 0.5), sigma2=I(0.1, 0.1), sigma3=I(0.1, 0.1))


def test_p_sweep_endpoints_reproduce_crisp_models():
    model = imprecise_extinction(m1=(0.3, 0.7))
    rows = p_sweep(model, [0.0, 1.0], small_config(), n_paths=0)
    assert [row.p for row in rows] == [0.0, 1.0]
    for row, p in zip(rows, (0.0, 1.0)):
        crisp = crispify(model, p)
        assert row.crisp == crisp
        assert row.report == classify(crisp)
        assert row.stats is None and row.verdict is None and row.error is None


def test_p_sweep_degenerate_intervals_rows_identical():
    model = imprecise_extinction()
    rows = p_sweep(model, [0.0, 0.25, 0.5, 0.75, 1.0], small_config(), n_paths=3)
    first = rows[0]
    for row in rows[1:]:
        assert row.report == first.report
        assert row.stats == first.stats
        assert row.verdict == first.verdict


def test_p_sweep_regime_flip_single_crossing():
    model = imprecise_extinction(m1=(0.3, 0.7))
    grid = np.linspace(0.0, 1.0, 21)
    rows = p_sweep(model, grid, small_config(), n_paths=0)
    r0_vals = np.array([row.report.R0s for row in rows])
    assert np.all(np.diff(r0_vals) > 0.0)  # monotone in p
    crossings = np.sum((r0_vals[:-1] < 1.0) & (r0_vals[1:] >= 1.0))
    assert crossings == 1
    regimes = [row.report.regime for row in rows]
    assert regimes[0] is Regime.BOTH_EXTINCT
    assert regimes[-1] in (Regime.PREY_ONLY, Regime.PERSISTENT)


def test_p_sweep_with_simulation_populates_stats_and_verdicts():
    model = imprecise_extinction(m1=(0.3, 0.7))
    rows = p_sweep(model, [0.0, 1.0], small_config(seed=77), n_paths=6, workers=2)
    for row in rows:
        assert row.error is None
        assert row.stats is not None
        assert row.verdict is not None
        assert set(c.claim_id for c in row.verdict.claims) \
            == set(row.report.predictions.present())


def test_p_sweep_row_error_recorded_not_raised():
    model = imprecise_extinction()
    config = small_config(t_end=100.0)  # below min_horizon: verify refuses per row
    rows = p_sweep(model, [0.0, 1.0], config, n_paths=2)
    for row in rows:
        assert row.error is not None
        assert "horizon" in row.error
        assert row.verdict is None


def test_p_sweep_empty_grid_rejected():
    with pytest.raises(ValueError):
        p_sweep(imprecise_extinction(), [], small_config(), n_paths=0)
