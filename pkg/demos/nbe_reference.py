#!/usr/bin/env python3
# Regenerates the frozen reference objective used by
# tests/test_initial.py::test_nbe_reaches_reference_objective.
#
# A deliberately slow, plain projected-gradient run with a tiny fixed step:
# no backtracking, no warm starts, 100k iterations.  Slow but hard to get
# wrong, which is the point of a reference.  Takes a few minutes.

import numpy as np
from scipy.special import expit

from mixedmc.data import from_dense
from mixedmc.families import binomial
from mixedmc.initial import _project_box_nuclear
from mixedmc.likelihood import weighted_loglik

rng = np.random.default_rng(2024)
theta = rng.uniform(-0.9, 0.9, (20, 2))
a = rng.uniform(-0.9, 0.9, (10, 2))
y = rng.binomial(1, expit(theta @ a.T)).astype(float)
data = from_dense(y, np.ones((20, 10), dtype=bool), [binomial(1)] * 10)

rho, r = 2.0, 2
radius = rho * np.sqrt(r * 20 * 10)

m = np.zeros((20, 10))
step = 1e-3
for it in range(100_000):
    # gradient of the observed-entry log-likelihood: y - mean(m) on the mask
    mean = expit(m)
    grad = np.zeros_like(m)
    grad[data.rows, data.cols] = data.vals - mean[data.rows, data.cols]
    m = _project_box_nuclear(m + step * grad, rho, radius, 50)
    if it % 10_000 == 0:
        print(f"iter {it:6d}  obj {weighted_loglik(data, m):.12f}")

print(f"\nfinal objective: {weighted_loglik(data, m)!r}")
print("paste this into NBE_REFERENCE_OBJECTIVE in tests/test_initial.py")
