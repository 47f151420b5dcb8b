"""Spectral analysis of the momentum systems and rate measurement utilities.

The linear momentum SDEs reduce to per-eigenmode 2x2 blocks; their complex
eigenvalue pairs decide damping regimes, convergence rates, optimal momentum,
and divergence thresholds.  This module also certifies exponential decay
bounds ||e^{-tA}||_F <= C e^{-rate t} with explicit constants, and fits
convergence rates from measured E f trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matkit import Block2x2Family, SpectralDecomp, mat_exp_2x2

_DEGENERATE_TOL = 1e-9

UNDERDAMPED = "underdamped"
OVERDAMPED = "overdamped"
CRITICAL = "critical"


def _eigenvalues_of(spec_or_lambdas):
    if isinstance(spec_or_lambdas, SpectralDecomp):
        return spec_or_lambdas.eigenvalues
    lam = np.asarray(spec_or_lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("expected a SpectralDecomp or a 1-d eigenvalue array")
    return lam


@dataclass(frozen=True)
class EigenReport:
    """Eigenvalue pairs (d, 2) of per-mode 2x2 systems, with classification."""

    eigenvalues: np.ndarray
    min_real_part: float
    classification: tuple
    diagonalizable: bool


def classify_damping(mu, lam, tol=_DEGENERATE_TOL):
    """Damping regime of one momentum mode: mu^2 vs 4 lam with relative tolerance."""
    disc = mu * mu - 4.0 * lam
    if abs(disc) <= tol * max(1.0, 4.0 * lam):
        return CRITICAL
    return OVERDAMPED if disc > 0 else UNDERDAMPED


def momentum_eigs(mu, spec_or_lambdas):
    """Continuous-time momentum eigenvalues Lam_+- = (mu +- sqrt(mu^2-4lam))/2.

    These govern e^{-t Lam} decay, so stability means positive real parts.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    lam = _eigenvalues_of(spec_or_lambdas)
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    disc = np.asarray(mu * mu - 4.0 * lam, dtype=complex)
    root = np.sqrt(disc)
    pairs = np.stack([(mu + root) / 2.0, (mu - root) / 2.0], axis=1)
    cls = tuple(classify_damping(mu, l) for l in lam)
    return EigenReport(pairs, float(np.min(pairs.real)), cls,
                       CRITICAL not in cls)


def optimal_mu(spec_or_lambdas):
    """The rate-optimal constant momentum 2 sqrt(lam_min) (critical damping of
    the slowest mode)."""
    lam = _eigenvalues_of(spec_or_lambdas)
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    return 2.0 * math.sqrt(float(np.min(lam)))


def order2_eigs(family, mu, eta, spec_or_lambdas):
    """Eigenvalues of the order-2 momentum drift blocks, in closed form.

    msgd: (1/4) [mu(eta mu + 2) +- sqrt(mu^2 (eta mu+2)^2 + 4 eta^2 lam^2
          - 8 lam (eta mu + 2))]
    snag: (1/4) [mu(eta mu + 2) + 2 eta lam +- sqrt(eta mu + 2)
          * sqrt(mu^2 (eta mu + 2) + 4 lam (eta mu - 2))]
    In the underdamped regime each snag eigenvalue's real part exceeds its
    msgd counterpart by eta lam / 2: the extra Hessian damping is what speeds
    SNAG up at order eta.
    """
    if family not in ("msgd", "snag"):
        raise ValueError("family must be msgd or snag")
    if mu <= 0 or eta <= 0:
        raise ValueError("mu and eta must be positive")
    lam = _eigenvalues_of(spec_or_lambdas)
    s = eta * mu + 2.0
    if family == "msgd":
        disc = np.asarray(mu * mu * s * s + 4.0 * eta * eta * lam * lam
                          - 8.0 * lam * s, dtype=complex)
        root = np.sqrt(disc)
        plus = 0.25 * (mu * s + root)
        minus = 0.25 * (mu * s - root)
    else:
        inner = np.asarray(mu * mu * s + 4.0 * lam * (eta * mu - 2.0), dtype=complex)
        root = math.sqrt(s) * np.sqrt(inner)
        plus = 0.25 * (mu * s + 2.0 * eta * lam + root)
        minus = 0.25 * (mu * s + 2.0 * eta * lam - root)
    pairs = np.stack([plus, minus], axis=1)
    cls = []
    for row in pairs:
        if abs(row[0] - row[1]) <= _DEGENERATE_TOL * max(1.0, abs(row[0]) + abs(row[1])):
            cls.append(CRITICAL)
        elif abs(row[0].imag) > 0:
            cls.append(UNDERDAMPED)
        else:
            cls.append(OVERDAMPED)
    return EigenReport(pairs, float(np.min(pairs.real)), tuple(cls),
                       CRITICAL not in cls)


def varying_momentum_eigs(t, t0, spec_or_lambdas):
    """Frozen-coefficient eigenvalues of the schedule system averaged on [t0, t]:
    (1/2) [drag +- sqrt(drag^2 - 4 lam)], drag = 3 log(t/t0)/(t - t0)."""
    if not (t > t0 > 0):
        raise ValueError("need t > t0 > 0")
    lam = _eigenvalues_of(spec_or_lambdas)
    drag = 3.0 * math.log(t / t0) / (t - t0)
    disc = np.asarray(drag * drag - 4.0 * lam, dtype=complex)
    root = np.sqrt(disc)
    pairs = np.stack([(drag + root) / 2.0, (drag - root) / 2.0], axis=1)
    cls = tuple(classify_damping(drag, l) for l in lam)
    return EigenReport(pairs, float(np.min(pairs.real)), cls,
                       CRITICAL not in cls)


# ---------------------------------------------------------------------------
# Decay bound certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayBound:
    """Certified bound ||exp(-t A)||_F <= constant * exp(-(rate - eps) t)."""

    rate: float
    constant: float
    eps: float
    holds: bool
    any_defective: bool


def _cond2_2x2(v):
    """2-norm condition number of a real 2x2 matrix, in closed form."""
    g = float(np.sum(v * v))
    det = abs(float(v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]))
    if det == 0.0:
        return math.inf
    inner = max(g * g - 4.0 * det * det, 0.0)
    smax2 = 0.5 * (g + math.sqrt(inner))
    return smax2 / det  # sigma_max/sigma_min = sigma_max^2/|det|


def decay_bound_check(family: Block2x2Family, t_grid):
    """Certify ||e^{-tA}||_F <= C e^{-(rate-eps) t} blockwise and test it on a grid.

    rate is the spectral abscissa min_i Re eig(A_i).  For each diagonalizable
    block the constant picks up its eigenvector conditioning; a defective
    block forces the eps-branch (eps = rate/10) with the explicit constant
    sup_t (1 + t ||N||) e^{-eps t} for its nilpotent part N.  The overall
    constant includes the dimension factor sqrt(2d).  holds reports whether
    the bound was satisfied at every grid time (up to 1e-9 relative slack for
    rounding at equality cases).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(t_grid < 0):
        raise ValueError("t_grid must be a 1-d array of nonnegative times")
    blocks = family.blocks
    d = family.dim
    eigs = family.block_eigenvalues()
    rate = float(np.min(eigs.real))
    defective = []
    for i in range(d):
        tr = blocks[i, 0, 0] + blocks[i, 1, 1]
        det = blocks[i, 0, 0] * blocks[i, 1, 1] - blocks[i, 0, 1] * blocks[i, 1, 0]
        disc = tr * tr - 4.0 * det
        nil = blocks[i] - 0.5 * tr * np.eye(2)
        degenerate = abs(disc) <= _DEGENERATE_TOL * max(1.0, tr * tr)
        defective.append(degenerate and float(np.max(np.abs(nil))) > 1e-14)
    any_def = any(defective)
    eps = 0.0
    if any_def:
        if rate <= 0.0:
            raise ValueError("defective block with nonpositive rate: no eps-branch")
        eps = rate / 10.0
    constant = math.sqrt(2.0 * d)
    for i in range(d):
        a = blocks[i]
        if defective[i]:
            # ||e^{-ta}||_2 <= (1 + t ||N||) e^{-(mean - s) t} with mean = tr/2
            # and s = sqrt(|disc|)/2, so the eps-branch needs eps > s and pays
            # sup_t (1 + t ||N||) e^{-(eps - s) t}.
            tr = a[0, 0] + a[1, 1]
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            s = 0.5 * math.sqrt(abs(tr * tr - 4.0 * det))
            if eps <= s:
                raise ValueError("near-degenerate block too wide for the eps-branch")
            delta = eps - s
            nil = a - 0.5 * tr * np.eye(2)
            nnorm = math.sqrt(float(np.sum(nil * nil)))
            if nnorm <= delta:
                factor = 1.0
            else:
                factor = (nnorm / delta) * math.exp(delta / nnorm - 1.0)
            constant *= max(1.0, factor)
            continue
        lam_p, lam_m = eigs[i]
        if abs(lam_p.imag) > 0:
            v = _complex_eigvec(a, lam_p)
            basis = np.stack([v.real, v.imag], axis=1)
        else:
            basis = np.stack([_real_eigvec(a, lam_p.real),
                              _real_eigvec(a, lam_m.real)], axis=1)
        constant *= max(1.0, _cond2_2x2(basis))
    holds = True
    for t in t_grid:
        frob2 = 0.0
        for i in range(d):
            e = mat_exp_2x2(blocks[i], -float(t))
            frob2 += float(np.sum(e * e))
        bound = constant * math.exp(-(rate - eps) * float(t))
        if math.sqrt(frob2) > bound * (1.0 + 1e-9) + 1e-300:
            holds = False
            break
    return DecayBound(rate, constant, eps, holds, any_def)


def _real_eigvec(a, lam):
    c1 = np.array([a[0, 1], lam - a[0, 0]])
    c2 = np.array([lam - a[1, 1], a[1, 0]])
    v = c1 if float(np.sum(c1 * c1)) >= float(np.sum(c2 * c2)) else c2
    n = math.sqrt(float(np.sum(v * v)))
    if n == 0.0:  # a is lam * I; any direction is an eigenvector
        return np.array([1.0, 0.0])
    return v / n

def _complex_eigvec(a, lam):
    c1 = np.array([a[0, 1], lam - a[0, 0]], dtype=complex)
    c2 = np.array([lam - a[1, 1], a[1, 0]], dtype=complex)
    v = c1 if float(np.sum(np.abs(c1) ** 2)) >= float(np.sum(np.abs(c2) ** 2)) else c2
    return v / math.sqrt(float(np.sum(np.abs(v) ** 2)))


# ---------------------------------------------------------------------------
# Rate fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    window: tuple


def _ols(x, y):
    xb = float(np.mean(x))
    yb = float(np.mean(y))
    sxx = float(np.sum((x - xb) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate fit: all abscissae equal")
    slope = float(np.sum((x - xb) * (y - yb))) / sxx
    intercept = yb - slope * xb
    resid = y - (slope * x + intercept)
    return slope, intercept, math.sqrt(float(np.mean(resid * resid)))


def fit_loglog_slope(xs, ys):
    """OLS slope of log ys against log xs (e.g. error vs step size)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("need two 1-d arrays of equal length >= 2")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive data")
    slope, intercept, resid = _ols(np.log(xs), np.log(ys))
    return RateFit(slope, intercept, resid, (0, xs.size))


def descent_rate(series, eta, floor=None):
    """Per-iteration decay rate of a positive E f trajectory on the k-grid.

    Fits -log series(k) against k by OLS on the window [2, k_b], where k_b is
    the last index with series >= 10 * floor (floor defaults to the mean of
    the final quarter).  The returned slope is the decay rate per iteration;
    divide by eta for a rate per unit rescaled time.
    """
    if not (eta > 0):
        raise ValueError("eta must be positive")
    s = np.asarray(series, dtype=float)
    if s.ndim != 1 or s.size < 8:
        raise ValueError("need a trajectory of at least 8 values")
    if floor is None:
        floor = float(np.mean(s[-(s.size // 4):]))
    thresh = 10.0 * floor
    above = np.nonzero(s >= thresh)[0]
    k_a = 2
    if above.size == 0 or above[-1] <= k_a + 2:
        raise ValueError("descent window is empty: trajectory starts within "
                         "10x of its floor (floor=%g)" % floor)
    k_b = int(above[-1])
    window = s[k_a:k_b + 1]
    if np.any(window <= 0):
        raise ValueError("trajectory is not positive on the fit window")
    k = np.arange(k_a, k_b + 1, dtype=float)
    slope, intercept, resid = _ols(k, -np.log(window))
    return RateFit(slope, intercept, resid, (k_a, k_b))


# ---------------------------------------------------------------------------
# Divergence thresholds
# ---------------------------------------------------------------------------


def divergence_threshold(spec_or_lambdas):
    """SME prediction for the critical step size of the multiplicative-noise
    model at unit noise scale: eta* = 2 lam_min."""
    lam = _eigenvalues_of(spec_or_lambdas)
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive")
    return 2.0 * float(np.min(lam))


def discrete_divergence_threshold(lam, noise_scale=1.0):
    """Exact flip point of one discrete mode: E y^2 grows iff
    (1 - eta lam)^2 + eta^2 ns^2 > 1, i.e. eta > 2 lam/(lam^2 + ns^2)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return 2.0 * lam / (lam * lam + noise_scale ** 2)


def discrete_growth_factors(model, eta):
    """Per-mode one-step factors of E y_i^2 for sgd on eigenbasis_scaled."""
    lam = model.spec.eigenvalues
    return (1.0 - eta * lam) ** 2 + eta * eta * model.noise_scale ** 2
