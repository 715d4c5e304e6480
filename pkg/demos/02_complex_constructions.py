"""
Three shifted copies suffice in the complex case
================================================

Stack a nonsingular ``B`` three times and give every coordinate a shift
triple that is not collinear.  Each coordinate is then pinned down by three
distances in the plane, so a closed-form solve recovers the signal.
"""

import numpy as np

from affpr import (
    build_complex_minimal,
    certify_structured,
    falsify_complex,
    measure,
    perturb_complex,
    recover_coordinatewise_complex,
)
from affpr.construct import random_nonsingular

rng = np.random.default_rng(2)
d = 4
B = random_nonsingular(d, seed=5)
triples = rng.standard_normal((d, 3)) + 1j * rng.standard_normal((d, 3))
E = build_complex_minimal(B, triples)
print(certify_structured(E).certificate.value)

x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
r = recover_coordinatewise_complex(E, measure(E, x))
print("recovery error", np.linalg.norm(r.x_hat - x))

# %%
# The set of injective ensembles is not open.  Nudging one entry of the
# identity construction by ``i * delta`` breaks injectivity, however small
# ``delta`` is; the witness pair drifts off to infinity instead.
E0 = build_complex_minimal(np.eye(2), [(1j, 0, 1)] * 2)
for delta in (1e-1, 1e-2, 1e-3):
    rep = perturb_complex(E0, delta)
    print(f"delta={delta:g}  ||A'-A||_F={rep.distance:g}  x={rep.witness.x}  mismatch={rep.witness.mismatch(rep.perturbed):.1e}")

# %%
# The falsifier finds such collisions on its own.
v = falsify_complex(perturb_complex(E0, 0.1).perturbed)
print(v.outcome.value, "after", v.stats["restarts_tried"], "restart(s)")
