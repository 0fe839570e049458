"""Odds that the next price move is up, from the current queue sizes.

In the diffusion limit the two queue sizes perform a correlated Brownian
motion in the positive quadrant, and the next price move is decided by
which axis the motion hits first. That exit-side probability has a closed
form: map the quadrant to a cone of half-angle alpha = arccos(-rho), read
off the angular coordinate, and the answer is 1 - theta0 / alpha.

This script tabulates the closed form against bridge-corrected first-hit
Monte Carlo and prints a small imbalance table.

Run:  python3 demos/02_price_move_odds.py
"""

import math

from lobdiff.analytics import prob_up, prob_up_mc
from lobdiff.diffusion import DiffusionParams

SEED = 7

print("closed form vs Monte Carlo (100k paths per state)")
print(f"{'rho':>5} {'bid':>5} {'ask':>5} {'closed':>8} {'mc':>8} {'z':>6}")
for rho in (-0.7, 0.0, 0.5):
    params = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=rho)
    for x, y in ((1.0, 1.0), (2.0, 1.0), (1.0, 3.0)):
        p = prob_up(x, y, params)
        mc, se = prob_up_mc(x, y, params, n_paths=100_000, seed=SEED)
        print(f"{rho:5.1f} {x:5.1f} {y:5.1f} {p:8.4f} {mc:8.4f} {abs(p - mc) / se:6.2f}")

# With independent queues the formula collapses to (2/pi) arctan(bid/ask):
# a bid queue sqrt(3) times deeper than the ask gives exactly 2:1 odds.
params0 = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=0.0)
p = prob_up(math.sqrt(3.0), 1.0, params0)
print(f"\nindependent queues, bid/ask = sqrt(3): p_up = {p:.6f} (exactly 2/3)")

# Correlation changes how far imbalance moves the odds. Negative rho (the
# empirically relevant sign: buying pressure drains the ask while feeding
# the bid) steepens the response.
print(f"\np_up at (2, 1) as a function of correlation:")
for rho in (-0.8, -0.4, 0.0, 0.4, 0.8):
    params = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=rho)
    print(f"  rho = {rho:+.1f}: {prob_up(2.0, 1.0, params):.4f}")

# Scale invariance: only the ratio of standardized depths matters.
p1 = prob_up(1.0, 2.0, params0)
p2 = prob_up(10.0, 20.0, params0)
print(f"\nscale invariance: p(1,2) = {p1:.6f}, p(10,20) = {p2:.6f}")
