import io
import math

import numpy as np
import pytest

from buyhold.duality import (
    DualityReport,
    VolControl,
    attainment_experiment,
    incompleteness_probe,
    mc_upper_bound_check,
    proximity_diagnostic,
    write_reports_csv,
)
from buyhold.envelope import HedgePair, buy_and_hold_price
from buyhold.models import GBM, Heston, ModelSpec, Scott, simulate
from buyhold.payoff import parse_payoff

SCOTT = Scott(y0=math.log(0.2), kappa=1.0, theta=math.log(0.2), beta=0.5)


def _black_scholes_call(s0, k, sigma, t):
    from math import erf, log, sqrt

    def norm_cdf(z):
        return 0.5 * (1.0 + erf(z / sqrt(2.0)))

    d1 = (log(s0 / k) + 0.5 * sigma * sigma * t) / (sigma * sqrt(t))
    d2 = d1 - sigma * sqrt(t)
    return s0 * norm_cdf(d1) - k * norm_cdf(d2)


def test_gbm_call_matches_closed_form(call):
    spec = ModelSpec(GBM(0.2), 100.0, 1.0, 64)
    hedge = buy_and_hold_price(call, 100.0)
    rep = mc_upper_bound_check(spec, call, hedge, 60_000, seed=31)
    want = _black_scholes_call(100.0, 100.0, 0.2, 1.0)
    assert want == pytest.approx(7.9656, abs=5e-5)  # lognormal closed form
    assert abs(rep.estimate - want) <= 4.0 * rep.stderr
    assert rep.estimate <= hedge.price
    assert rep.violations == 0


def test_constant_payoff_exact():
    spec = ModelSpec(GBM(0.2), 100.0, 1.0, 16)
    c5 = parse_payoff("5")
    rep = mc_upper_bound_check(spec, c5, buy_and_hold_price(c5, 100.0), 500, seed=2)
    assert rep.estimate == 5.0
    assert rep.stderr == 0.0
    assert rep.violations == 0


def test_scott_butterfly_upper_bound(butterfly):
    spec = ModelSpec(SCOTT, 100.0, 1.0, 128)
    hedge = buy_and_hold_price(butterfly, 100.0)
    rep = mc_upper_bound_check(spec, butterfly, hedge, 30_000, seed=5)
    assert rep.estimate <= 10.0 + 3.0 * rep.stderr
    assert rep.violations == 0


def test_batch_reuse_and_wrong_hedge_counts_violations(call):
    spec = ModelSpec(Heston(v0=0.04, kappa=1.5, theta=0.04, xi=0.5), 100.0, 1.0, 64)
    batch = simulate(spec, 20_000, seed=13)
    good = buy_and_hold_price(call, 100.0)
    rep = mc_upper_bound_check(spec, call, good, 0, seed=0, batch=batch)
    assert rep.n_paths == 20_000 and rep.violations == 0
    sabotaged = HedgePair(good.price, 0.0, 100.0)
    bad = mc_upper_bound_check(spec, call, sabotaged, 0, seed=0, batch=batch)
    assert bad.violations > 0
    assert bad.diagnostics["worst_margin"] < 0.0


def test_attainment_concave_payoff_is_exact(concave_min):
    control = VolControl(0.01, 2.0, nu0=0.2)
    rep = attainment_experiment(concave_min, 30.0, control, 1.0, 256, 20_000, seed=3)
    # envelope = payoff, the control freezes instantly, S_T stays below the
    # kink: E[min(S_T, 50)] = E[S_T] = 30 by the martingale property
    assert abs(rep.estimate - 30.0) <= 4.0 * rep.stderr
    assert rep.diagnostics["frozen_fraction"] == 1.0


def test_attainment_estimates_below_envelope(butterfly):
    control = VolControl(0.01, 4.0, nu0=0.2, contact_tol=2.0, exit_tol=8.0)
    rep = attainment_experiment(butterfly, 100.0, control, 1.0, 512, 20_000, seed=4)
    assert rep.estimate <= 10.0 + 3.0 * rep.stderr
    assert rep.estimate >= 8.0  # well inside the envelope already at these sizes


def test_attainment_law_invariance(butterfly):
    # the control is a functional of W only: changing the seed moves the
    # estimate only within Monte Carlo error
    control = VolControl(0.01, 8.0, nu0=0.2, contact_tol=2.0, exit_tol=8.0)
    reps = [
        attainment_experiment(butterfly, 100.0, control, 1.0, 512, 20_000, seed=s)
        for s in (101, 707)
    ]
    diff = abs(reps[0].estimate - reps[1].estimate)
    assert diff <= 5.0 * math.hypot(reps[0].stderr, reps[1].stderr)


def test_attainment_digital_reaches_half(digital):
    control = VolControl(0.01, 8.0, nu0=0.2, contact_tol=0.02, exit_tol=0.1)
    rep = attainment_experiment(digital, 1.0, control, 1.0, 32_768, 10_000, seed=11)
    assert rep.estimate >= 0.45
    assert rep.estimate <= 0.5 + 3.0 * rep.stderr


def test_vol_control_validation():
    with pytest.raises(ValueError):
        VolControl(0.0, 1.0, nu0=0.5)
    with pytest.raises(ValueError):
        VolControl(0.1, 0.05, nu0=0.07)
    with pytest.raises(ValueError):
        VolControl(0.1, 1.0, nu0=2.0)  # alpha_0 = nu0 must sit inside the bounds


def test_probe_realized_alpha_zero_frequency():
    spec = ModelSpec(SCOTT, 100.0, 1.0, 128)
    rep = incompleteness_probe(spec, "realized", eps=0.01, control_gain=0.0, n_paths=2_000, seed=5)
    assert rep.estimate == 0.0
    assert rep.violations == 0
    assert rep.diagnostics["relative_entropy"] == 0.0


def test_probe_gain_drives_frequency_down():
    spec = ModelSpec(SCOTT, 100.0, 1.0, 256)
    freqs = {}
    for gain in (0.0, 10.0, 25.0):
        rep = incompleteness_probe(spec, 0.2, eps=0.1, control_gain=gain, n_paths=8_000, seed=5)
        freqs[gain] = rep.estimate
        assert math.isfinite(rep.diagnostics["relative_entropy"])
    assert freqs[25.0] < 0.1 < freqs[0.0]
    assert freqs[25.0] <= freqs[10.0] <= freqs[0.0]


def test_probe_event_monotone_in_eps():
    spec = ModelSpec(SCOTT, 100.0, 1.0, 128)
    r1 = incompleteness_probe(spec, 0.2, eps=0.1, control_gain=10.0, n_paths=5_000, seed=9)
    r2 = incompleteness_probe(spec, 0.2, eps=0.05, control_gain=10.0, n_paths=5_000, seed=9)
    assert r2.estimate >= r1.estimate


def test_probe_rejects_non_scott(call):
    spec = ModelSpec(GBM(0.2), 100.0, 1.0, 16)
    with pytest.raises(ValueError):
        incompleteness_probe(spec, 0.2, eps=0.1, control_gain=1.0, n_paths=10, seed=1)


def test_proximity_identical_paths_all_zero():
    spec = ModelSpec(SCOTT, 100.0, 1.0, 64)
    batch = simulate(spec, 200, seed=21)
    stats = proximity_diagnostic(batch.vol, batch.vol, batch.d_w, delta=0.05, t_horizon=1.0)
    assert np.all(stats.quadratic == 0.0)
    assert np.all(stats.stochastic == 0.0)
    assert np.all(stats.log_gap == 0.0)
    assert np.all(stats.tau == 1.0)


def test_proximity_deterministic_bound_value():
    # 0.5 * T * delta * (2 ||alpha||_inf + delta) at T=1, delta=0.05, alpha=0.2
    spec = ModelSpec(SCOTT, 100.0, 1.0, 128)
    batch = simulate(spec, 1_000, seed=22)
    alpha = np.full_like(batch.vol, 0.2)
    stats = proximity_diagnostic(alpha, batch.vol, batch.d_w, delta=0.05, t_horizon=1.0)
    assert stats.deterministic_bound == pytest.approx(0.01125, rel=1e-12)
    assert stats.quadratic.max() <= stats.deterministic_bound
    assert stats.isometry_mean <= stats.isometry_bound + 4.0 * stats.isometry_stderr


def test_proximity_log_gap_triangle_inequality():
    spec = ModelSpec(SCOTT, 100.0, 1.0, 128)
    batch = simulate(spec, 500, seed=23)
    alpha = np.full_like(batch.vol, 0.2)
    stats = proximity_diagnostic(alpha, batch.vol, batch.d_w, delta=0.1, t_horizon=1.0)
    assert np.all(stats.log_gap <= stats.quadratic + stats.stochastic + 1e-12)


def test_proximity_misaligned_inputs():
    with pytest.raises(ValueError):
        proximity_diagnostic(np.ones((3, 5)), np.ones((3, 5)), np.ones((3, 5)), 0.1, 1.0)


def test_reports_csv_schema():
    rep = DualityReport(1.5, 0.1, 100, 2, {"a": 1.0, "b": 2.5})
    empty = DualityReport(0.5, 0.0, 10, 0, {})
    buf = io.StringIO()
    write_reports_csv([("exp1", rep), ("exp2", empty)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "experiment,estimate,stderr,n_paths,violations,diag_key,diag_value"
    assert lines[1] == "exp1,1.5,0.1,100,2,a,1.0"
    assert lines[2] == "exp1,1.5,0.1,100,2,b,2.5"
    assert lines[3] == "exp2,0.5,0.0,10,0,,"
