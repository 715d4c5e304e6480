"""
How many affine measurements does a real signal need?
======================================================

Draw Gaussian ensembles of increasing size and decide each one exactly.
Below ``2d`` measurements every ensemble collides somewhere; from ``2d`` on
every draw is injective.
"""

import numpy as np

from affpr import certify_real_exact, measure, sample_generic

# %%
# A single ensemble first.  Three measurements in the plane are too few, and
# the certifier hands back two distinct points it cannot tell apart.
E = sample_generic("real", 3, 2, seed=0)
v = certify_real_exact(E)
print(v.outcome.value, "failing subset", v.stats["failing_subset"])
print("x =", v.witness.x, " y =", v.witness.y)
print("M(x) =", measure(E, v.witness.x))
print("M(y) =", measure(E, v.witness.y))

# %%
# Now the sweep.  Each cell is 100 seeded ensembles.
for d in (2, 3):
    row = []
    for m in range(d, 2 * d + 3):
        frac = np.mean([certify_real_exact(sample_generic("real", m, d, s)).retrievable for s in range(100)])
        row.append(f"m={m}: {frac:.2f}")
    print(f"d={d}  " + "  ".join(row))

# %%
# The same sweep from the command line writes a CSV table instead:
#
#   affpr experiment --kind phase-transition --field real --d 2..3 --m 2..8 \
#       --trials 100 --seed 1 --out transition.csv
