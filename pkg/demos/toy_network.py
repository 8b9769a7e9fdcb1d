"""Walk through exposure mapping and estimation on a ten-unit network.

Two of ten units are treated by complete randomization, so there are only
45 possible assignments and every exposure probability can be computed
exactly.
"""

import numpy as np

from netspill import (Graph, dilated_baseline, dilated_outcomes, enumerate_support,
                      exposure_probabilities, hajek_contrast, ht_contrast, map_exposures)

ADJ = np.array([
    [0, 1, 1, 0, 1, 0, 0, 0, 0, 0],
    [1, 0, 1, 1, 0, 0, 0, 0, 0, 1],
    [1, 1, 0, 1, 1, 1, 0, 0, 1, 0],
    [0, 1, 1, 0, 1, 1, 1, 0, 0, 0],
    [1, 0, 1, 1, 0, 1, 0, 1, 0, 0],
    [0, 0, 1, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 1, 0, 1, 0, 1, 1],
    [0, 0, 1, 0, 0, 0, 1, 1, 0, 1],
    [0, 1, 0, 0, 0, 0, 0, 1, 1, 0],
])

g = Graph.from_adjacency(ADJ)
print(g, "degrees:", g.degrees.tolist())

# Treat units 6 and 9 (1-based) and look at who ends up in which condition.
z = np.zeros(10, dtype=np.uint8)
z[[5, 8]] = 1
exposure = map_exposures(g, z, "hop1")
for i, (code, label) in enumerate(zip(exposure.codes(), exposure.labels()), start=1):
    print(f"unit {i:2d}  z={z[i - 1]}  {code}  {label}")

# Exact probabilities from the full support.
support = enumerate_support(10, 0.2)
probs = exposure_probabilities(g, support, "hop1")
print(f"\n{support.r} assignments; probabilities of unit 1:",
      {c: round(float(p), 3) for c, p in zip(probs.mapping.codes, probs.individual[:, 0])})

# Dilated potential outcomes and the estimates from this one assignment.
table = dilated_outcomes(dilated_baseline(g, kappa=0.1, seed=1), "hop1")
y = table.values[exposure.index, np.arange(10)]
for k in ("d10", "d01"):
    ht = ht_contrast(exposure, y, probs, k, "d00", restrict=True)
    hj = hajek_contrast(exposure, y, probs, k, "d00", restrict=True)
    print(f"tau({k},d00): HT {ht.point:.3f} [{ht.ci_low:.3f}, {ht.ci_high:.3f}]"
          f"  Hajek {hj.point:.3f}")
print("d11 has no realized units here, so that contrast is undefined:",
      ht_contrast(exposure, y, probs, "d11", "d00").defined)
