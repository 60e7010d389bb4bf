"""Discrete-event Monte Carlo of the repeater waiting time.

Elementary links retry geometrically with success p_g; each connection waits
for both child pairs, retries with success p_s and restarts its subtree on
failure.  The analytic average uses the 3/2 rule per nesting level, which is
an approximation for the maximum of the two child waiting times; the
simulation shows how good it is.
"""

from rnpm.chain import (expected_max_geometric, simulate_waiting_time,
                        waiting_time_stats)

print("Single connection, instant swapping (n = 1, p_s = 1):")
print("the exact mean of max(G1, G2) is 2/p - 1/(2p - p^2)")
for p_g in (0.02, 0.1, 0.5):
    samples = simulate_waiting_time(1, p_g, 1.0, seed=12, trials=200_000)
    mean, se = waiting_time_stats(samples)
    exact = expected_max_geometric(p_g)
    approx = 1.5 / p_g
    print(f"  p_g = {p_g:4.2f}: MC {mean:9.3f} +- {se:.3f}   "
          f"exact {exact:9.3f}   (3/2)/p_g {approx:9.3f}")
print()

print("Nested chains (time in units of l0/c):")
print(f"  {'n':>3} {'p_g':>5} {'p_s':>5} {'MC mean':>12} {'3/2-rule':>12} {'ratio':>7}")
for n, p_g, p_s, trials in ((1, 0.2, 0.5, 50_000), (2, 0.2, 0.3, 10_000),
                            (3, 0.2, 0.3, 2_000), (4, 0.15, 0.2, 500)):
    samples = simulate_waiting_time(n, p_g, p_s, seed=34, trials=trials)
    mean, _ = waiting_time_stats(samples)
    predicted = 1.5 ** n / (p_g * p_s ** n)
    print(f"  {n:3d} {p_g:5.2f} {p_s:5.2f} {mean:12.1f} {predicted:12.1f} "
          f"{mean / predicted:7.3f}")

print()
print("Sampling is blocked and counter-seeded, so results are bit-identical")
print("for any worker count (RNPM_THREADS) and any rerun with the same seed.")
