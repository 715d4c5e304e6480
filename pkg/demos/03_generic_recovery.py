"""
Recovering a signal from a generic complex ensemble
===================================================

With ``4d - 1`` Gaussian measurements the falsifier finds no collision and
a damped Gauss-Newton solve started from the lifted spectral estimate
recovers the signal.
"""

import numpy as np

from affpr import falsify_complex, measure, recover_gauss_newton, sample_generic, spectral_init

d = 3
E = sample_generic("complex", 4 * d - 1, d, seed=7)
v = falsify_complex(E)
print(v.outcome.value, "best residual", v.stats["best_residual"], "threshold", v.stats["threshold"])

rng = np.random.default_rng(0)
x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
mags = measure(E, x)

x0, _ = spectral_init(E, mags)
print("spectral estimate error", np.linalg.norm(x0 - x))

r = recover_gauss_newton(E, mags)
print("Gauss-Newton error", np.linalg.norm(r.x_hat - x), "iterations", r.iterations, "restarts", r.restarts_used)
print("residual history", np.array(r.history[:8]))

# %%
# One fewer than ``3d`` measurements always admits a collision, and the
# construction is explicit.
from affpr import witness_subminimal_complex  # noqa: E402

E_small = sample_generic("complex", 3 * d - 1, d, seed=7)
w = witness_subminimal_complex(E_small)
print("collision mismatch", w.mismatch(E_small), "separation", np.linalg.norm(w.x - w.y))
