"""Calibration sweep for the attainment experiment (the documented run).

The bang-bang control freezes at sigma_min inside a band around the contact
set and runs sigma_max outside.  Two discretization effects need band
calibration before thresholds are frozen into the acceptance tests:

* the entry band must swallow the initial nu0 ramp step, or a few paths get
  flung away at sigma_max and drag the estimate by more than Monte Carlo
  noise (visible below as the narrow-band column decreasing in sigma_max);
* a frozen path diffuses at sigma_min, so the exit band must be wider than
  the entry band (hysteresis), or the next sigma_max step re-ejects it.

Frozen choices for the butterfly at s0=100: contact_tol=2.0, exit_tol=8.0,
2048 steps.  For the digital at s0=1 the hunt must land on the level with a
per-step move smaller than the overshoot it can afford, hence 32768 steps
and a tight band (contact_tol=0.02, exit_tol=0.1).
"""
from buyhold import VolControl, attainment_experiment, buy_and_hold_price, parse_payoff

butterfly = parse_payoff("pos(x-90)-2*pos(x-100)+pos(x-110)")
price = buy_and_hold_price(butterfly, 100.0).price
print(f"butterfly envelope price at 100: {price}")
print(f"{'sigma_max':>9s} {'tol 0.5 (narrow)':>17s} {'tol 2.0 (frozen)':>17s}")
N = 20_000  # acceptance reruns the frozen column at 1e5 paths
for i, sigma_max in enumerate((2.0, 4.0, 8.0)):
    row = []
    for tol_in, tol_out in ((0.5, 3.0), (2.0, 8.0)):
        control = VolControl(0.01, sigma_max, nu0=0.2, contact_tol=tol_in, exit_tol=tol_out)
        rep = attainment_experiment(butterfly, 100.0, control, 1.0, 2048, N, seed=101 + i)
        row.append(f"{rep.estimate:.4f}+-{rep.stderr:.4f}")
    print(f"{sigma_max:9.1f} {row[0]:>17s} {row[1]:>17s}")
print("frozen thresholds: estimates nondecreasing within 4 stderr, final >= 9.0")

print()
digital = parse_payoff("ind_gt(x,2)")
print("digital at s0=1 (price 0.5), sigma_max=8, band 0.02/0.1:")
for n_steps in (8_192, 32_768):
    control = VolControl(0.01, 8.0, nu0=0.2, contact_tol=0.02, exit_tol=0.1)
    rep = attainment_experiment(digital, 1.0, control, 1.0, n_steps, 10_000, seed=11)
    print(f"  n_steps={n_steps:6d}: estimate {rep.estimate:.4f}+-{rep.stderr:.4f}")
print("frozen threshold: estimate >= 0.45 at 32768 steps")
