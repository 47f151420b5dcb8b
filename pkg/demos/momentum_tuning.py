"""
Momentum damping regimes and the optimal momentum
=================================================

The modified SDE of momentum SGD is an underdamped Langevin equation; per
eigenvalue lambda its 2x2 drift block has eigenvalues

    Lambda_{+-} = (mu -+ sqrt(mu^2 - 4 lambda)) / 2,

so each mode is overdamped (mu^2 > 4 lambda), critical, or underdamped.
The slowest decay rate over all modes is maximised at mu* = 2 sqrt(lambda_min):
smaller mu underdamps the slow mode, larger mu overdamps it.  The discrete
algorithm inherits this tuning rule, which we verify with an exact-recursion
mu scan and a descent-rate fit above the stochastic noise floor.
"""

import numpy as np

from smelab.analysis import (classify_damping, descent_rate, momentum_eigs,
                             optimal_mu)
from smelab.models import ISOTROPIC_SHIFT, from_spectrum
from smelab.repro import discrete_floor
from smelab.sga import AlgoSpec, ConstantMomentum, MSGD, exact_moment_recursion

eigenvalues = [1.0, 0.25]
model = from_spectrum(ISOTROPIC_SHIFT, eigenvalues)
eta = 0.1
mu_star = optimal_mu(model.spec)
print("spectrum %s  ->  mu* = 2 sqrt(lambda_min) = %g" % (eigenvalues, mu_star))

# Damping regime of each mode for a few momenta around the optimum.
print()
print("%6s  %22s  %22s  %10s" % ("mu", "mode lam=1.0", "mode lam=0.25",
                                 "min rate"))
for mu in (0.1, 1.0, 3.0):
    regimes = [classify_damping(mu, lam) for lam in eigenvalues]
    report = momentum_eigs(mu, model.spec)
    print("%6g  %22s  %22s  %10.4f"
          % (mu, regimes[0], regimes[1], report.min_real_part))

# Measured descent rates of the discrete algorithm (exact recursion, so the
# only fitting uncertainty is the window choice; rates are per iteration).
print()
print("measured per-iteration rates of E f, eta = %g:" % eta)
x0 = np.array([30.0, 30.0])
for mu in (0.1, 1.0, 3.0):
    algo = AlgoSpec(MSGD, eta, 40.0, momentum=ConstantMomentum(mu))
    series = exact_moment_recursion(algo, model, x0)
    fit = descent_rate(series, eta, floor=discrete_floor(algo, model))
    # continuous-time prediction: 2 * min Re(Lambda) scaled by eta per step.
    # At mu = mu* the slow mode is critically damped and E f carries a t^2
    # prefactor, so a finite-window fit sits a little below the exponent.
    predicted = 2.0 * momentum_eigs(mu, model.spec).min_real_part * eta
    print("mu = %3g  measured %.4f  predicted %.4f" % (mu, fit.slope, predicted))

# A coarse scan reproduces the tuning rule: the argmax of the measured rate
# sits within a grid step of mu*.
print()
mus = np.round(np.arange(0.4, 1.6001, 0.05), 10)
best_mu, best_rate = None, -np.inf
for mu in mus:
    algo = AlgoSpec(MSGD, eta, 40.0, momentum=ConstantMomentum(float(mu)))
    series = exact_moment_recursion(algo, model, np.array([1e6, 1e6]))
    fit = descent_rate(series, eta, floor=discrete_floor(algo, model))
    if fit.slope > best_rate:
        best_mu, best_rate = float(mu), fit.slope
print("scan over mu in [0.4, 1.6]: argmax at mu = %g (mu* = %g)"
      % (best_mu, mu_star))

# Acceptance-scale version (finer grid, artifacts, floor table):
#   python -m smelab momentum
