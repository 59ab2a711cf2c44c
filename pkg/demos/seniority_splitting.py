"""Splitting one lending network into more seniority levels shrinks the
cascade region.

An ER graph of mean degree z is split into M independent, identically
distributed seniority layers of mean z/M each. The cascade condition is
governed by the trace of the M-layer Jacobian, which decreases with M at
every (R1, z) point; with enough seniority levels the cascade region can
disappear entirely at thresholds where the single-layer region is sizable.

Run: python3 demos/seniority_splitting.py
"""

import numpy as np

from seniority_cascades import regions

res = regions.m_layer_split_regions(
    [1, 2, 3, 4], r1_range=(0.05, 0.4), z_range=(0.0, 12.0),
    resolution=(200, 200))

total = res.membership[1].size
print("Cascade-region size over the (R1, z) grid, by number of seniority levels:\n")
for m in res.m_values:
    cells = int(res.membership[m].sum())
    print(f"  M = {m}: {cells:6d} super-critical cells ({100 * cells / total:.1f}%)")

col = int(np.argmin(np.abs(res.r1_values - 0.3)))
print(f"\nAt R1 = {res.r1_values[col]:.3f}:")
for m in res.m_values:
    zs = res.z_values[res.membership[m][:, col]]
    if zs.size:
        print(f"  M = {m}: cascades possible for z in [{zs.min():.2f}, {zs.max():.2f}]")
    else:
        print(f"  M = {m}: no mean degree supports a cascade "
              "- the region is eliminated")
