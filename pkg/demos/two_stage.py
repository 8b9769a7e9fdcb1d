"""Two-stage (randomized saturation) design on 18 units in 6 groups.

Half the groups get saturation 2/3 and half 1/3; within each group the
corresponding share of units is treated. Group-level means then give the
direct, indirect, total and overall effects.
"""

import numpy as np

from netspill import HierarchicalDataset, marginal_effects, two_stage_assignment
from netspill.outcomes import hierarchical_outcomes

group_of = np.repeat(np.arange(6), 3)
outcomes = hierarchical_outcomes(group_of, psi=2 / 3, phi=1 / 3, seed=11)
a = two_stage_assignment(group_of, 2 / 3, 1 / 3, share_psi=0.5, seed=12)
y = outcomes.realize(a.z, a.unit_arm())
data = HierarchicalDataset.from_assignment(a, y)

print("group group_tr indiv_tr obs_outcome")
for row in zip(data.group, data.group_tr, data.indiv_tr, data.obs_outcome):
    print(f"{row[0]:5d} {row[1]:8d} {row[2]:8d} {row[3]:11.4f}")

report = marginal_effects(data)
truth = outcomes.estimands()
for name, value in report.as_dict().items():
    if name.endswith("_hat") and not name.startswith("var_"):
        effect = name[:-4]
        print(f"{name:<16}{value:8.4f}   truth {truth[effect]:8.4f}")
