"""The stopping-time route to the same price.

The envelope value at the spot is also the supremum of E[g(S_tau)] for the
driftless unit-vol exponential over stopping times.  The perpetual Bellman
iteration on a log grid converges to the grid concave majorant and lands on
the envelope price; finite horizons stay strictly below for discontinuous
claims and close the gap as the horizon grows (the reason the oracle
iterates to convergence instead of stopping at the maturity).
"""
import time

from buyhold import bellman_envelope, buy_and_hold_price, finite_horizon_value, parse_payoff

for text, s0 in (("ind_gt(x,2)", 1.0), ("pos(x-90)-2*pos(x-100)+pos(x-110)", 100.0)):
    ast = parse_payoff(text)
    price = buy_and_hold_price(ast, s0).price
    t0 = time.perf_counter()
    res = bellman_envelope(ast, s0, j_max=600, log_step=0.01, tol=1e-10)
    print(f"payoff {text}, s0={s0:g}")
    print(
        f"  envelope price {price:.6f} | bellman {res.value:.6f} "
        f"({res.iterations} sweeps, residual {res.residual:.1e}, "
        f"{time.perf_counter() - t0:.1f}s)"
    )

print()
print("Finite horizons approach the perpetual value from below (digital, s0=1):")
digital = parse_payoff("ind_gt(x,2)")
for t in (1, 4, 16, 64):
    v = finite_horizon_value(digital, 1.0, n_steps=64 * t, t_horizon=float(t), sigma=1.0)
    print(f"  T={t:3d}: value {v:.4f}")
print("  perpetual limit: 0.5")

print()
print("Concave payoffs stop immediately (the payoff is its own envelope):")
res = bellman_envelope(parse_payoff("min(x,50)"), 30.0, j_max=300)
print(f"  min(x,50) at 30: value {res.value} after {res.iterations} sweep(s)")
