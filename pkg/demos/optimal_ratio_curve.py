"""How the cascade-window size depends on the senior/junior loan ratio.

For two uncorrelated ER lending layers, the set of mean-degree pairs where
global cascades are possible forms a region in the (junior, senior) plane.
Along a ray of fixed ratio sigma = <l_S>/<l_J>, the window is the length of
the super-critical stretch of the ray. A well-chosen mix of junior and
senior lending minimizes that window: neither all-junior nor all-senior
books are safest.

Run: python3 demos/optimal_ratio_curve.py
"""

import numpy as np

from seniority_cascades import regions

R1 = 0.18

print(f"Cascade-window measure along rays sigma = <l_S>/<l_J>  (R1 = {R1})\n")
print(f"{'sigma':>6}  {'window':>8}  segments")
for sigma in np.linspace(0.0, 6.0, 13):
    win = regions.cascade_window(sigma, R1)
    segs = ", ".join(f"[{lo:.2f}, {hi:.2f}]" for lo, hi in win.segments)
    print(f"{sigma:6.2f}  {win.measure:8.3f}  {segs}")

res = regions.optimal_seniority_ratio(R1)
print(f"\nOptimal seniority ratio sigma* = {res.sigma_star:.3f}")
print(f"Window at the optimum: {res.window_at_star.measure:.3f} "
      f"(vs {regions.cascade_window(0.0, R1).measure:.3f} for all-junior lending)")

print("\nLowering the solvency threshold R1 pushes the optimum up, with jumps "
      "where 1/R1 crosses an integer:")
sweep = regions.sweep_thresholds([0.12, 0.15, 0.18, 0.199, 0.21])
for r1, res in zip(sweep.r1_values, sweep.results):
    tag = " (degenerate: some rays have an empty window)" if res.degenerate else ""
    print(f"  R1 = {r1:5.3f}  ->  sigma* = {res.sigma_star:.3f}{tag}")
print(f"Detected jumps between consecutive thresholds at: {sweep.jump_locations}")
