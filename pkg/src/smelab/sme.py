"""Stochastic modified equations for the discrete algorithms.

Each discrete family has a family of SDEs whose weak order of approximation
to the iterates (on the grid t = k eta) is 1 or 2 depending on how much of
the step-size dependence is kept in the drift:

* sgd,  order 1:  dX = -grad f dt + sqrt(eta) Sigma^{1/2}(X) dW
* sgd,  order 2:  dX = -grad(f + (eta/4)|grad f|^2) dt + sqrt(eta) Sigma^{1/2} dW
* msgd, order 1:  dV = -(mu V + grad f) dt + sqrt(eta) Sigma^{1/2} dW,  dX = V dt
* msgd, order 2:  dV = -[(mu I + (eta/2)(mu^2 I - Hess f)) V + (1 + eta mu/2)
                  grad f] dt + sqrt(eta) Sigma^{1/2} dW
                  dX = [(1 - eta mu/2) V - (eta/2) grad f] dt
* snag, order 2:  same as msgd order 2 with (mu^2 I + Hess f) in the V-drift
  (the lone sign flip on the Hessian term is the entire order-eta difference
  between the two momentum methods); snag order 1 coincides with msgd order 1.
* snag_varying, order 1: dV = -((3/t) V + grad f) dt + sqrt(eta) Sigma^{1/2} dW
  on [t0, T], matching the Nesterov schedule mu_k ~ 3/(k eta + 2 eta).

State ordering for momentum systems is (v, x).  Drift and diffusion callables
take (y, t); autonomous systems ignore t.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import models, rng, sga
from .matkit import Block2x2Family, SpectralDecomp, block_reduce, mat_exp_2x2, mat_exp_dense
from .sga import EnsembleStats, iteration_count

SNAG_VARYING = "snag_varying"
_FAMILIES = (sga.SGD, sga.MSGD, sga.SNAG, SNAG_VARYING)

_CHUNK = 4096
_DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class SmeSystem:
    """One stochastic modified equation, with its drift split b = b0 + eta b1."""

    family: str
    order: int
    model: models.QuadraticModel
    eta: float
    mu: float = None
    t0: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError("unknown sme family %r" % (self.family,))
        if self.order not in (1, 2):
            raise ValueError("weak order must be 1 or 2")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")
        if self.family == SNAG_VARYING:
            if self.order != 1:
                raise ValueError("the varying-coefficient system is order 1 only")
            if not (self.t0 > 0.0):
                raise ValueError("snag_varying needs a start time t0 > 0 "
                                 "(the 3/t drag blows up at 0)")
            if self.mu is not None:
                raise ValueError("snag_varying has no constant mu")
        elif self.family in (sga.MSGD, sga.SNAG):
            if self.mu is None or not (0.0 < self.mu <= 1.0 / self.eta):
                raise ValueError("momentum systems need mu in (0, 1/eta]")
        elif self.mu is not None:
            raise ValueError("sgd takes no mu")

    @property
    def dim_x(self):
        return self.model.dim

    @property
    def state_dim(self):
        return self.dim_x if self.family == sga.SGD else 2 * self.dim_x

    def split_state(self, y):
        """(v, x) views of a state vector (v is None for sgd)."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.state_dim,):
            raise ValueError("state shape %s, expected (%d,)" % ((y.shape,), self.state_dim))
        if self.family == sga.SGD:
            return None, y
        return y[:self.dim_x], y[self.dim_x:]

    def drift_b0(self, y, t=0.0):
        v, x = self.split_state(y)
        g = models.grad_full(self.model, x)
        if self.family == sga.SGD:
            return -g
        if self.family == SNAG_VARYING:
            if t <= 0:
                raise ValueError("varying drift needs t > 0")
            return np.concatenate([-(3.0 / t) * v - g, v])
        return np.concatenate([-self.mu * v - g, v])

    def drift_b1(self, y, t=0.0):
        v, x = self.split_state(y)
        if self.order == 1:
            return np.zeros(self.state_dim)
        model = self.model
        g = models.grad_full(model, x)
        if self.family == sga.SGD:
            # -(1/4) grad |grad f|^2 = -(1/2) Hess f grad f
            return -0.5 * model.spec.from_eigen(
                model.spec.eigenvalues * model.spec.to_eigen(g))
        hv = model.spec.from_eigen(model.spec.eigenvalues * model.spec.to_eigen(v))
        sign = -1.0 if self.family == sga.MSGD else 1.0
        bv = -0.5 * (self.mu * (self.mu * v + g) + sign * hv)
        bx = -0.5 * (self.mu * v + g)
        return np.concatenate([bv, bx])

    def drift(self, y, t=0.0):
        b = self.drift_b0(y, t)
        if self.order == 2:
            b = b + self.eta * self.drift_b1(y, t)
        return b

    def noise_factor(self, y, t=0.0):
        """Full diffusion factor multiplying dW: sqrt(eta) [Sigma^{1/2}; 0]."""
        _, x = self.split_state(y)
        sig = models.sigma_sqrt(self.model, x)
        if self.family == sga.SGD:
            return math.sqrt(self.eta) * sig
        out = np.zeros((self.state_dim, self.dim_x))
        out[:self.dim_x] = math.sqrt(self.eta) * sig
        return out

    def linear_parts(self):
        """(A, S) with dY = A Y dt + S dW, when the system is linear-Gaussian.

        Only isotropic_shift models qualify (state-independent diffusion);
        raises ValueError otherwise.
        """
        if self.model.kind != models.ISOTROPIC_SHIFT:
            raise ValueError("the %s model has state-dependent noise" % self.model.kind)
        if self.family == SNAG_VARYING:
            raise ValueError("the varying-coefficient system is not autonomous")
        d = self.dim_x
        h = self.model.hessian
        ns = self.model.noise_scale
        eta = self.eta
        if self.family == sga.SGD:
            a = -h.copy()
            if self.order == 2:
                a -= 0.5 * eta * h @ h
            s = math.sqrt(eta) * ns * h
            return a, s
        mu = self.mu
        eye = np.eye(d)
        a = np.zeros((2 * d, 2 * d))
        if self.order == 1:
            a[:d, :d] = -mu * eye
            a[:d, d:] = -h
            a[d:, :d] = eye
        else:
            sign = -1.0 if self.family == sga.MSGD else 1.0
            a[:d, :d] = -(mu + 0.5 * eta * mu * mu) * eye - 0.5 * eta * sign * h
            a[:d, d:] = -(1.0 + 0.5 * eta * mu) * h
            a[d:, :d] = (1.0 - 0.5 * eta * mu) * eye
            a[d:, d:] = -0.5 * eta * h
        s = np.zeros((2 * d, d))
        s[:d] = math.sqrt(eta) * ns * h
        return a, s


def build_sme(model, family, order, eta, mu=None, t0=None):
    """Construct the modified equation for a discrete family at weak order 1 or 2."""
    if family == SNAG_VARYING:
        return SmeSystem(family, order, model, eta, None, 0.1 if t0 is None else float(t0))
    return SmeSystem(family, order, model, eta, mu, 0.0)


def _batch_grad_full(model, X):
    q = model.spec.basis
    return (X @ q * model.spec.eigenvalues) @ q.T


def _batch_drift(system, Y, t):
    d = system.dim_x
    model = system.model
    eta = system.eta
    X = Y[:, -d:]
    g = _batch_grad_full(model, X)
    if system.family == sga.SGD:
        b = -g
        if system.order == 2:
            b -= 0.5 * eta * _batch_grad_full(model, g)
        return b
    V = Y[:, :d]
    if system.family == SNAG_VARYING:
        bv = -(3.0 / t) * V - g
        return np.concatenate([bv, V], axis=1)
    mu = system.mu
    bv = -mu * V - g
    bx = V.copy()
    if system.order == 2:
        hv = _batch_grad_full(model, V)
        sign = -1.0 if system.family == sga.MSGD else 1.0
        bv -= 0.5 * eta * (mu * mu * V + sign * hv + mu * g)
        bx -= 0.5 * eta * (mu * V + g)
    return np.concatenate([bv, bx], axis=1)


def _batch_noise(system, Y, Z):
    """sqrt(eta) Sigma^{1/2}(x) z per row, placed in the v (or x for sgd) slot."""
    d = system.dim_x
    model = system.model
    q = model.spec.basis
    root_eta = math.sqrt(system.eta)
    if model.kind == models.ISOTROPIC_SHIFT:
        inc = root_eta * model.noise_scale * (Z @ q * model.spec.eigenvalues) @ q.T
    else:
        yc = np.abs(Y[:, -d:] @ q)
        inc = root_eta * model.noise_scale * (yc * (Z @ q)) @ q.T
    if system.family == sga.SGD:
        return inc
    out = np.zeros_like(Y)
    out[:, :d] = inc
    return out


def em_integrate_ensemble(system, start, T, n_paths, seed, substeps=16,
                          observable="f", threads=1):
    """Euler-Maruyama ensemble statistics on the grid t = t0 + k eta, k = 0..N.

    start is either an x-point (momentum state is padded with v = 0) or the
    full state vector.  substeps Euler steps of size eta/substeps are taken
    per grid interval; Brownian increments are keyed by (seed, path, global
    substep) so results do not depend on chunking or thread count.
    """
    if n_paths < 2:
        raise ValueError("need at least 2 paths")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    start = np.asarray(start, dtype=float)
    if start.shape == (system.dim_x,) and system.state_dim != system.dim_x:
        y0 = np.concatenate([np.zeros(system.dim_x), start])
    elif start.shape == (system.state_dim,):
        y0 = start
    else:
        raise ValueError("start must have length %d or %d"
                         % (system.dim_x, system.state_dim))
    t0 = system.t0
    n = iteration_count(T - t0, system.eta)
    if n < 1:
        raise ValueError("horizon leaves no full eta-interval after t0")
    delta = system.eta / substeps
    g = models.observable_fn(system.model, observable)
    d = system.dim_x

    def worker(bounds):
        lo, hi = bounds
        m = hi - lo
        paths = np.arange(lo, hi, dtype=np.uint64)
        Y = np.tile(y0, (m, 1))
        s1 = np.empty(n + 1)
        s2 = np.empty(n + 1)
        vals = g(Y[:, -d:])
        s1[0] = vals.sum()
        s2[0] = (vals * vals).sum()
        for k in range(n):
            for j in range(substeps):
                idx = k * substeps + j
                t = t0 + idx * delta
                Z = rng.normals(seed, rng.STREAM_EM, paths, idx, 0, d)
                incr = delta * _batch_drift(system, Y, t) \
                    + math.sqrt(delta) * _batch_noise(system, Y, Z)
                Y += incr
            vals = g(Y[:, -d:])
            s1[k + 1] = vals.sum()
            s2[k + 1] = (vals * vals).sum()
        return s1, s2

    chunks = [(lo, min(lo + _CHUNK, n_paths)) for lo in range(0, n_paths, _CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(worker, chunks))
    else:
        partials = [worker(c) for c in chunks]
    s1 = np.zeros(n + 1)
    s2 = np.zeros(n + 1)
    for p1, p2 in partials:
        s1 += p1
        s2 += p2
    mean = s1 / n_paths
    var = np.maximum(s2 - n_paths * mean * mean, 0.0) / (n_paths - 1)
    times = t0 + system.eta * np.arange(n + 1)
    return EnsembleStats(times, mean, np.sqrt(var / n_paths), n_paths, observable)


def one_step_moments(system, y):
    """Weak-order-2 truncation of the one-step moments over one eta interval.

    Returns (first, second, bounded_flag):
      first  = eta b0 + eta^2 (b1 + (1/2) (Db0) b0)          (length D)
      second = eta^2 (b0 b0^T + Sigma_tilde)                  (D x D)
    where Sigma_tilde is the state-noise covariance block.  The directional
    derivative (Db0) b0 is a central difference along b0, exact for the linear
    drifts of the quadratic models.  bounded_flag reports that the implied
    third-absolute-moment bound is finite for this state.
    """
    y = np.asarray(y, dtype=float)
    eta = system.eta
    t = system.t0 if system.family == SNAG_VARYING else 0.0
    if system.family == SNAG_VARYING and t <= 0:
        raise ValueError("varying system needs t0 > 0")
    b0 = system.drift_b0(y, t)
    b1 = system.drift_b1(y, t)
    norm = float(np.linalg.norm(b0))
    if norm == 0.0:
        jb = np.zeros_like(b0)
    else:
        h = 1e-4 * (1.0 + float(np.linalg.norm(y))) / norm
        jb = (system.drift_b0(y + h * b0, t) - system.drift_b0(y - h * b0, t)) / (2.0 * h)
    first = eta * b0 + eta * eta * (b1 + 0.5 * jb)
    sig = system.noise_factor(y, t) / math.sqrt(eta)
    second = eta * eta * (np.outer(b0, b0) + sig @ sig.T)
    kbound = (norm + float(np.linalg.norm(sig))) ** 3
    flag = bool(np.isfinite(kbound))
    return first, second, flag


def linear_sme_moments(system, y0, h=None):
    """Exact one-interval moments of a linear-Gaussian system (isotropic_shift).

    For dY = A Y dt + S dW from the deterministic start y0, over h (default
    one eta interval):
      E[Y_h - y0]            = (e^{hA} - I) y0
      E[(Y_h-y0)(Y_h-y0)^T]  = C(h) + mean mean^T,
      C(h) = int_0^h e^{uA} S S^T e^{uA^T} du   (Gauss-Legendre nodes).
    Independent of the order-2 truncation in one_step_moments, so the two can
    be compared against the discrete algorithms.
    """
    a, s = system.linear_parts()
    h = system.eta if h is None else float(h)
    y0 = np.asarray(y0, dtype=float)
    mean = (mat_exp_dense(a, h) - np.eye(a.shape[0])) @ y0
    nodes, weights = np.polynomial.legendre.leggauss(48)
    u = 0.5 * h * (nodes + 1.0)
    w = 0.5 * h * weights
    ssT = s @ s.T
    cov = np.zeros_like(a)
    for ui, wi in zip(u, w):
        e = mat_exp_dense(a, ui)
        cov += wi * (e @ ssT @ e.T)
    return mean, cov + np.outer(mean, mean)


# ---------------------------------------------------------------------------
# Closed-form expectations of f along the modified equations.
# ---------------------------------------------------------------------------


def _decay_rates(spec, eta, order):
    lam = spec.eigenvalues
    if order == 2:
        return lam * (1.0 + 0.5 * eta * lam)
    return lam.copy()


def ou_expected_f(spec, x0, eta, t, noise_scale=1.0, order=1):
    """E f(X_t) for the sgd modified equation on isotropic_shift (an OU process).

    Per eigenmode with decay m_i (= lam_i at order 1, lam_i(1 + eta lam_i/2)
    at order 2) and noise intensity eta ns^2 lam_i^2:
      E y_i(t)^2 = e^{-2 m_i t} y0_i^2 + eta ns^2 lam_i^2 (1 - e^{-2 m_i t})/(2 m_i).
    t may be a scalar or an array.
    """
    lam = spec.eigenvalues
    y0 = spec.to_eigen(np.asarray(x0, dtype=float))
    m = _decay_rates(spec, eta, order)
    t = np.asarray(t, dtype=float)
    decay = np.exp(-2.0 * m * t[..., None])
    ey2 = decay * y0 ** 2 + eta * noise_scale ** 2 * lam ** 2 * (1.0 - decay) / (2.0 * m)
    out = 0.5 * np.sum(lam * ey2, axis=-1)
    return float(out) if out.ndim == 0 else out


def bs_expected_f(spec, x0, eta, t, noise_scale=1.0, order=1):
    """E f(X_t) for the sgd modified equation on eigenbasis_scaled.

    Each eigenmode is a geometric Brownian motion:
      E y_i(t)^2 = y0_i^2 exp((eta ns^2 - 2 m_i) t),
    with m_i as in ou_expected_f.  The mode diverges iff eta ns^2 > 2 m_i.
    """
    lam = spec.eigenvalues
    y0 = spec.to_eigen(np.asarray(x0, dtype=float))
    m = _decay_rates(spec, eta, order)
    t = np.asarray(t, dtype=float)
    ey2 = y0 ** 2 * np.exp((eta * noise_scale ** 2 - 2.0 * m) * t[..., None])
    out = 0.5 * np.sum(lam * ey2, axis=-1)
    return float(out) if out.ndim == 0 else out


def _damping_regime(mu, lam, tol=_DEGENERATE_TOL):
    disc = mu * mu - 4.0 * lam
    if abs(disc) <= tol * max(1.0, 4.0 * lam):
        return "critical", disc
    return ("overdamped", disc) if disc > 0 else ("underdamped", disc)


def R_function(t, mu, lam):
    """The damping-regime kernel appearing in the momentum noise integral.

    Underdamped (mu^2 < 4 lam, om = sqrt(4 lam - mu^2)):
      R = [mu + om e^{-mu t} sin(om t) - mu e^{-mu t} cos(om t)] / (4 lam)
    Overdamped and critical:
      R = (1 - e^{-mu t}) / mu
    R(0) = 0 and R(inf) = min(mu/(4 lam), 1/mu); the two branches agree at
    mu^2 = 4 lam.
    """
    if mu <= 0 or lam <= 0:
        raise ValueError("R_function needs mu > 0, lam > 0")
    regime, disc = _damping_regime(mu, lam)
    if np.isinf(t):
        return min(mu / (4.0 * lam), 1.0 / mu)
    t = float(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    if mu * t > 700.0:
        return min(mu / (4.0 * lam), 1.0 / mu) if regime == "underdamped" \
            else 1.0 / mu
    if regime == "underdamped":
        om = math.sqrt(-disc)
        return (mu + om * math.exp(-mu * t) * math.sin(om * t)
                - mu * math.exp(-mu * t) * math.cos(om * t)) / (4.0 * lam)
    return (1.0 - math.exp(-mu * t)) / mu


@dataclass(frozen=True)
class LangevinBlockSystem:
    """Per-eigenmode 2x2 reduction dz = -a_i z dt + sqrt(eta) ns lam_i e_v dW.

    variant "order1" is the order-1 momentum system; "msgd2"/"snag2" use the
    order-2 drift blocks (the diffusion is unchanged at this order).
    """

    spec: SpectralDecomp
    mu: float
    eta: float
    noise_scale: float
    variant: str
    blocks: Block2x2Family


def langevin_system(spec, mu, eta, noise_scale=1.0, variant="order1"):
    if variant not in ("order1", "msgd2", "snag2"):
        raise ValueError("variant must be order1, msgd2 or snag2")
    if mu <= 0:
        raise ValueError("mu must be positive")
    if variant == "order1":
        fam = block_reduce((mu, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, 0.0), spec)
    else:
        sign = -0.5 * eta if variant == "msgd2" else 0.5 * eta
        fam = block_reduce((mu + 0.5 * eta * mu * mu, sign),
                           (0.0, 1.0 + 0.5 * eta * mu),
                           (-1.0 + 0.5 * eta * mu, 0.0),
                           (0.0, 0.5 * eta), spec)
    return LangevinBlockSystem(spec, float(mu), float(eta), float(noise_scale),
                               variant, fam)


def _noise_integral_closed(mu, lam, t):
    """int_0^t ([e^{-u a}]_{x,v})^2 du for the order-1 block, in closed form."""
    regime, disc = _damping_regime(mu, lam)
    if regime == "critical":
        raise ValueError("degenerate damping: |mu^2 - 4 lam| below tolerance")
    if np.isinf(t):
        return 1.0 / (2.0 * lam * mu)
    if regime == "overdamped":
        root = math.sqrt(disc)
        lp = 0.5 * (mu + root)
        lm = 0.5 * (mu - root)
        bracket = ((1.0 - math.exp(-2.0 * t * lm)) / (2.0 * lm)
                   + (1.0 - math.exp(-2.0 * t * lp)) / (2.0 * lp)
                   - 2.0 * (1.0 - math.exp(-mu * t)) / mu)
        return bracket / disc
    om2 = -disc
    return 2.0 * ((1.0 - math.exp(-mu * t)) / mu - R_function(t, mu, lam)) / om2


def langevin_expected_f_exact(system, x0, t):
    """E f(X_t) for the block-reduced momentum SDE, start (v, x) = (0, x0).

    The transient term uses the closed-form 2x2 exponentials.  The noise term
    is closed form for the order-1 variant (regime-split integrals; a
    degenerate mode falls back to quadrature) and is delegated to the
    quadrature route for the order-2 variants, whose integrand has no
    comparably clean antiderivative.
    """
    spec = system.spec
    lam = spec.eigenvalues
    y0 = spec.to_eigen(np.asarray(x0, dtype=float))
    ns2 = system.noise_scale ** 2
    if np.isinf(t):
        eigs = system.blocks.block_eigenvalues()
        if float(np.min(eigs.real)) <= 0:
            raise ValueError("system is not asymptotically stable; E f diverges")
        transient = 0.0
    else:
        transient = 0.0
        for i in range(spec.dim):
            e = mat_exp_2x2(system.blocks.blocks[i], -float(t))
            transient += 0.5 * lam[i] * (e[1, 1] * y0[i]) ** 2
    noise = 0.0
    for i in range(spec.dim):
        if system.variant == "order1":
            try:
                integral = _noise_integral_closed(system.mu, lam[i], t)
            except ValueError:
                integral = _mode_quad_integral(system.blocks.blocks[i], t)
        else:
            integral = _mode_quad_integral(system.blocks.blocks[i], t)
        noise += 0.5 * system.eta * ns2 * lam[i] ** 3 * integral
    return transient + noise


def _mode_quad_integral(block, t):
    tr = block[0, 0] + block[1, 1]
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    disc = tr * tr - 4.0 * det
    min_re = 0.5 * (tr - math.sqrt(disc)) if disc > 0 else 0.5 * tr
    if np.isinf(t):
        if min_re <= 0:
            raise ValueError("unstable block; infinite-horizon integral diverges")
        t = max(120.0 / min_re, 120.0)
    t = float(t)
    if t <= 0.0:
        return 0.0
    # piecewise quadrature: segments no longer than half an oscillation period
    freq = math.sqrt(-disc) / 2.0 if disc < 0 else 0.0
    seg = min(t, math.pi / max(freq, 1e-2))
    n_seg = min(20000, max(1, int(math.ceil(t / seg))))
    edges = np.linspace(0.0, t, n_seg + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda u: mat_exp_2x2(block, -u)[1, 0] ** 2, a, b,
                      epsabs=1e-14, epsrel=1e-11, limit=100)
        total += val
    return total


def langevin_expected_f_quadrature(system, x0, t):
    """Same expectation via an independent route: dense matrix exponential for
    the transient and adaptive quadrature for every noise integral."""
    spec = system.spec
    lam = spec.eigenvalues
    y0full = np.concatenate([np.zeros(spec.dim), np.asarray(x0, dtype=float)])
    a = system.blocks.assemble()
    if np.isinf(t):
        transient = 0.0
    else:
        z = mat_exp_dense(a, -float(t)) @ y0full
        x = z[spec.dim:]
        transient = 0.5 * float(x @ spec.matrix() @ x)
    ns2 = system.noise_scale ** 2
    noise = 0.0
    for i in range(spec.dim):
        noise += 0.5 * system.eta * ns2 * lam[i] ** 3 \
            * _mode_quad_integral(system.blocks.blocks[i], t)
    return transient + noise


def asymptotic_noise_msgd(spec, mu, eta, noise_scale=1.0):
    """The stationary value of E f for the order-1 momentum system.

    (eta/2) sum_i lam_i^3 / |mu^2 - 4 lam_i| * [1/(2 Re Lam_+) + 1/(2 Re Lam_-)
    - 2 min(mu/(4 lam_i), 1/mu)], with Lam_+- the continuous-time momentum
    eigenvalues.  Degenerate modes (|mu^2 - 4 lam_i| under tolerance) raise.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    total = 0.0
    for lam in spec.eigenvalues:
        regime, disc = _damping_regime(mu, lam)
        if regime == "critical":
            raise ValueError("degenerate damping at lam=%g: |mu^2-4lam| below tolerance" % lam)
        if regime == "overdamped":
            root = math.sqrt(disc)
            re_p = 0.5 * (mu + root)
            re_m = 0.5 * (mu - root)
        else:
            re_p = re_m = 0.5 * mu
        bracket = (1.0 / (2.0 * re_p) + 1.0 / (2.0 * re_m)
                   - 2.0 * min(mu / (4.0 * lam), 1.0 / mu))
        total += 0.5 * eta * noise_scale ** 2 * lam ** 3 * bracket / abs(disc)
    return total
