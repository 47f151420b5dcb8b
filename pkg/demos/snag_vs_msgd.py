"""
Nesterov lookahead versus plain momentum
========================================

At order 1 the modified SDEs of momentum SGD and Nesterov SGD coincide:
the lookahead changes nothing at O(eta).  The difference appears in the
order-2 drift correction, where the Nesterov variant picks up an extra
-(1/2) eta Hess f v term.  Per eigenvalue lambda, in the underdamped
regime, each Nesterov drift eigenvalue's real part exceeds its momentum
counterpart by eta lambda / 2 -- a concrete, measurable acceleration at
fixed mu.

The second half of the demo runs the time-varying schedule
mu_k = 3/((k+2) eta): its effective damping decays like 3/t, so the decay
of E f is sublinear in the exponent -- the rate keeps falling, and at any
practical horizon the trajectory still sits above the floor a tuned
constant momentum reaches.
"""

import numpy as np

from smelab.analysis import order2_eigs, varying_momentum_eigs
from smelab.models import ISOTROPIC_SHIFT, from_spectrum
from smelab.repro import discrete_floor, windowed_rate
from smelab.sga import (AlgoSpec, ConstantMomentum, MSGD, NesterovSchedule,
                        SNAG, exact_moment_recursion, iteration_count)

eta, mu = 0.1, 0.2
print("order-2 drift spectra at mu = %g, eta = %g:" % (mu, eta))
print("%10s  %18s  %18s  %12s" % ("lam_min", "msgd min Re", "snag min Re",
                                  "gap"))
for lam_d in (0.25, 1.0):
    spec = from_spectrum(ISOTROPIC_SHIFT, [1.0, lam_d]).spec
    m = order2_eigs(MSGD, mu, eta, spec).min_real_part
    s = order2_eigs(SNAG, mu, eta, spec).min_real_part
    print("%10g  %18.6f  %18.6f  %12.6f (= eta lam/2 = %g)"
          % (lam_d, m, s, s - m, 0.5 * eta * lam_d))

# The spectral gap shows up in the measured descent rates of the discrete
# algorithms (E f decays like e^{-2 Re Lambda eta k}).  The gap is a drift
# property, so we switch the noise off and fit the late window, where only
# the slow mode survives and the asymptotic rate is clean.
print()
model = from_spectrum(ISOTROPIC_SHIFT, [1.0, 0.25], noise_scale=0.0)
x0 = np.array([1e4, 1e4])
n = iteration_count(150.0, eta)
rates = {}
for family in (MSGD, SNAG):
    algo = AlgoSpec(family, eta, 150.0, momentum=ConstantMomentum(mu))
    series = exact_moment_recursion(algo, model, x0)
    rates[family] = windowed_rate(series, n // 2, n).slope
gap = order2_eigs(SNAG, mu, eta, model.spec).min_real_part \
    - order2_eigs(MSGD, mu, eta, model.spec).min_real_part
print("measured rates: msgd %.5f, snag %.5f" % (rates[MSGD], rates[SNAG]))
print("rate gap %.5f vs order-2 prediction 2 eta gap = %.5f"
      % (rates[SNAG] - rates[MSGD], 2.0 * eta * gap))

# Nesterov's decreasing schedule: early fast, late slow, low floor.  This
# part needs the noise back on -- the floor is the whole point.
print()
noisy = from_spectrum(ISOTROPIC_SHIFT, [1.0, 0.25])
algo = AlgoSpec(SNAG, eta, 200.0, momentum=NesterovSchedule())
series = exact_moment_recursion(algo, noisy, x0)
n = len(series) - 1
early = windowed_rate(series, n // 10, n // 5).slope
late = windowed_rate(series, n // 2, n).slope
print("schedule mu_k = 3/((k+2) eta): early rate %.4f, late rate %.4f"
      % (early, late))
print("frozen-coefficient damping over [0.1, 200]: min Re Lambda = %.5f"
      % varying_momentum_eigs(200.0, 0.1, noisy.spec).min_real_part)
tuned = AlgoSpec(MSGD, eta, 200.0, momentum=ConstantMomentum(1.0))
print("schedule tail mean %.3e vs tuned-msgd stationary floor %.3e"
      % (np.mean(series[3 * n // 4:]), discrete_floor(tuned, noisy)))

# Full comparison with tuned momenta and artifacts:
#   python -m smelab compare-snag
