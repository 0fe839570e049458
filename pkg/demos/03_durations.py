"""The waiting time until the next price move: series, tails, and drift.

The duration is the first time the queue diffusion exits the positive
quadrant. Driftless, its survival function is a Bessel-function series over
the harmonics of the cone of half-angle alpha = arccos(-rho), and the tail
is a power law with exponent pi / (2 alpha) -- so the duration has a finite
mean only when the queues are negatively correlated enough (alpha < pi/2).
With drift there is no closed series; an exponential change of measure
reduces the computation to a quadrature against the driftless kernel.

Writes survival_curves.csv next to this script for external plotting.

Run:  python3 demos/03_durations.py
"""

import pathlib

import numpy as np

from lobdiff.analytics import (
    duration_survival,
    duration_survival_drifted,
    duration_tail_index,
)
from lobdiff.diffusion import DiffusionParams

t_grid = np.geomspace(0.05, 20.0, 25)
rhos = (-0.5, 0.0, 0.5)

print("tail exponent pi / (2 arccos(-rho)):")
for rho in rhos:
    params = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=rho)
    idx = duration_tail_index(params)
    mean = "finite" if idx > 1 else "infinite"
    print(f"  rho = {rho:+.1f}: exponent {idx:.4f}, mean duration {mean}")

rows = [t_grid]
for rho in rhos:
    params = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=rho)
    rows.append(duration_survival(t_grid, 1.0, 1.0, params))

out = pathlib.Path(__file__).with_name("survival_curves.csv")
header = "t," + ",".join(f"rho_{rho:+.1f}" for rho in rhos)
np.savetxt(out, np.column_stack(rows), delimiter=",", header=header, comments="")
print(f"\nwrote {out.name}: P[duration > t] from a balanced (1, 1) book")

print(f"\n{'t':>6}" + "".join(f"  rho={rho:+.1f}" for rho in rhos))
for t in (0.1, 0.5, 1.0, 5.0, 20.0):
    vals = [
        float(duration_survival(t, 1.0, 1.0,
              DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=rho)))
        for rho in rhos
    ]
    print(f"{t:6.1f}" + "".join(f"  {v:8.4f}" for v in vals))

# Drift shortens or lengthens the wait. A book whose queues both drain
# (negative size means) moves much sooner than the driftless one.
driftless = DiffusionParams(1.0, 1.0, v2_bid=1.0, v2_ask=1.0, rho=-0.3)
draining = DiffusionParams(
    1.0, 1.0, vbar_bid=-0.3, vbar_ask=-0.2, v2_bid=1.0, v2_ask=1.0, rho=-0.3
)
print("\neffect of drift on P[duration > t] from (1, 1), rho = -0.3:")
for t in (0.5, 1.0, 2.0):
    s0 = float(duration_survival(t, 1.0, 1.0, driftless))
    s1 = duration_survival_drifted(t, 1.0, 1.0, draining)
    print(f"  t = {t:3.1f}: driftless {s0:.4f}, draining book {s1:.4f}")
