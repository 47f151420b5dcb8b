"""
Multiplicative noise and the divergence threshold
=================================================

With state-proportional gradient noise (model 2) the second moment of SGD
obeys, mode by mode, the exact per-step factor

    (1 - eta lambda)^2 + eta^2 ns^2,

which crosses 1 at eta* = 2 lambda / (lambda^2 + ns^2).  The modified SDE
for the same mode is geometric Brownian motion with second-moment growth
exponent eta ns^2 - 2 lambda, crossing zero at eta* = 2 lambda / ns^2.
For small lambda the two thresholds agree to O(lambda^2): the continuous
model predicts the discrete blow-up almost exactly.

This demo computes both thresholds, then shows the flip happening in the
exact second-moment recursion as eta steps over the critical value.
"""

import numpy as np

from smelab.analysis import (discrete_divergence_threshold,
                             discrete_growth_factors, divergence_threshold)
from smelab.models import EIGENBASIS_SCALED, from_spectrum
from smelab.sga import AlgoSpec, SGD, exact_moment_recursion

# The interesting mode is the small one: lambda = 0.01 with unit noise.
eigenvalues = [1.0, 0.01]
model = from_spectrum(EIGENBASIS_SCALED, eigenvalues)

sme_star = divergence_threshold(model.spec)
disc_star = discrete_divergence_threshold(0.01)
print("SME threshold       eta* = %.6f" % sme_star)
print("discrete threshold  eta* = %.6f" % disc_star)
print("relative gap        %.2e" % (abs(sme_star - disc_star) / disc_star))

# Per-mode growth factors on either side of the threshold: every factor
# below 1 means decay, any factor above 1 means the mode blows up.
print()
for eta in (0.015, 0.025):
    factors = discrete_growth_factors(model, eta)
    print("eta = %5.3f  growth factors per mode: %s  -> %s"
          % (eta, np.array_str(factors, precision=6),
             "diverges" if np.any(factors > 1) else "bounded"))

# The same flip seen from the trajectory side: E f after 4000 iterations,
# computed with the exact recursion (no sampling noise involved).
print()
x0 = np.array([1.0, 1.0])
for eta in (0.005, 0.015, 0.025, 0.04):
    series = exact_moment_recursion(AlgoSpec(SGD, eta, 4000 * eta), model, x0)
    trend = "grows" if series[-1] > series[len(series) // 2] else "decays"
    print("eta = %5.3f  E f at k=4000: %10.3e  (%s)" % (eta, series[-1], trend))

# Artifact-emitting version with the pass/fail checks:
#   python -m smelab divergence
