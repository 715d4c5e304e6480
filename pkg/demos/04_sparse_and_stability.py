"""
Sparse signals and stability
============================

Restricting to ``s``-sparse signals lowers the real measurement count to
``2s + 1``.  Separately, on a bounded ball the magnitude map is bi-Lipschitz
in a weighted sense, while globally the ratio ``||M(x) - M(y)|| / ||x - y||``
can be driven to zero.
"""

import numpy as np

from affpr import (
    anisotropy_ratio,
    build_real_minimal,
    certify_sparse_real_exact,
    estimate_lipschitz,
    sample_generic,
)
from affpr.stability import lipschitz_upper_bound

for d, s in ((4, 1), (5, 2)):
    for m in (2 * s, 2 * s + 1):
        n = sum(certify_sparse_real_exact(sample_generic("real", m, d, t), s).retrievable for t in range(50))
        print(f"d={d} s={s} m={m}: {n}/50 retrievable")

v = certify_sparse_real_exact(sample_generic("real", 2, 4, 0), 1)
print("colliding supports", v.support_pair, "x =", v.witness.x, "y =", v.witness.y)

# %%
# Empirical constants on the radius-5 ball.
E = build_real_minimal(2, [(1, 0), (2, 3)])
est = estimate_lipschitz(E, radius=5.0, n=20_000, seed=0)
print(f"c1={est.c1_hat:.4f} C1={est.C1_hat:.4f} (bound {lipschitz_upper_bound(E):.1f})")
print(f"c2={est.c2_hat:.4f} C2={est.C2_hat:.4f}")

# %%
# Far from the origin ``x`` and ``-x`` become hard to separate.
x0 = np.array([1.0, -0.5])
for r in (1, 1e2, 1e4, 1e6):
    print(f"r={r:g}  ratio={anisotropy_ratio(E, x0, r):.3e}")
