"""Stochastic gradient algorithms in rescaled variables.

Three families, all driven by one fresh noise draw gamma_k per iteration:

* sgd:   x' = x - eta * grad f_gamma(x)
* msgd:  v' = v - mu eta v - eta grad f_gamma(x);          x' = x + eta v'
* snag:  v' = v - mu eta v - eta grad f_gamma(x + eta (1 - mu eta) v)
         x' = x + eta v'   (the lookahead gradient reuses the SAME gamma)

The rescaling from textbook variables (step hat_eta, momentum hat_mu) is
eta = sqrt(hat_eta), v = hat_v / sqrt(hat_eta), mu = (1 - hat_mu)/sqrt(hat_eta),
so admissible momenta satisfy 0 < mu <= 1/eta.  The Nesterov schedule
hat_mu_k = (k-1)/(k+2) maps to mu_k = 3/((k+2) eta), clamped by default to the
admissible ceiling 1/eta (so mu_1 = 1/eta exactly); v_0 = 0 makes mu_0
irrelevant and index 0 reuses mu_1.

Iteration counts use N = floor(T/eta + 1e-9); the epsilon guards against IEEE
artifacts such as 2/0.1 = 19.999999999999996.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import models, rng

SGD = "sgd"
MSGD = "msgd"
SNAG = "snag"
_FAMILIES = (SGD, MSGD, SNAG)

_CHUNK = 4096


def iteration_count(horizon, eta):
    return int(math.floor(horizon / eta + 1e-9))


@dataclass(frozen=True)
class ConstantMomentum:
    mu: float


@dataclass(frozen=True)
class NesterovSchedule:
    clamp: bool = True


@dataclass(frozen=True)
class AlgoSpec:
    family: str
    eta: float
    horizon: float
    momentum: object = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError("unknown family %r (expected one of %s)"
                             % (self.family, (_FAMILIES,)))
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1], got %r" % self.eta)
        if self.n_steps < 1:
            raise ValueError("horizon %r admits no full step of size %r"
                             % (self.horizon, self.eta))
        if self.family == SGD:
            if self.momentum is not None:
                raise ValueError("sgd takes no momentum parameter")
        else:
            if isinstance(self.momentum, ConstantMomentum):
                mu = self.momentum.mu
                if not (0.0 < mu <= 1.0 / self.eta):
                    raise ValueError("momentum mu must lie in (0, 1/eta]; "
                                     "got mu=%r at eta=%r" % (mu, self.eta))
            elif not isinstance(self.momentum, NesterovSchedule):
                raise ValueError("%s needs ConstantMomentum or NesterovSchedule"
                                 % self.family)

    @property
    def n_steps(self):
        return iteration_count(self.horizon, self.eta)


def rescale(eta_hat, mu_hat):
    """(hat_eta, hat_mu) -> (eta, mu) in the rescaled variables."""
    if not (0.0 < eta_hat <= 1.0):
        raise ValueError("hat_eta must lie in (0, 1]")
    if not (0.0 <= mu_hat < 1.0):
        raise ValueError("hat_mu must lie in [0, 1)")
    eta = math.sqrt(eta_hat)
    return eta, (1.0 - mu_hat) / eta


def rescale_inverse(eta, mu):
    """(eta, mu) -> (hat_eta, hat_mu); inverse of rescale."""
    if not (0.0 < eta <= 1.0):
        raise ValueError("eta must lie in (0, 1]")
    if not (0.0 < mu <= 1.0 / eta):
        raise ValueError("mu must lie in (0, 1/eta]")
    return eta * eta, 1.0 - mu * eta


def nesterov_mu_hat(k):
    """Unscaled Nesterov momentum factor (k-1)/(k+2) for iterate index k >= 1."""
    if k < 1:
        raise ValueError("Nesterov schedule is indexed from k = 1")
    return (k - 1.0) / (k + 2.0)


def nesterov_mu(k, eta, clamp=True):
    """Rescaled Nesterov momentum mu_k = (1 - hat_mu_k)/eta = 3/((k+2) eta)."""
    mu = (1.0 - nesterov_mu_hat(k)) / eta
    if clamp:
        mu = min(mu, 1.0 / eta)
    return mu


def mu_at(algo, k):
    """Momentum coefficient used by iteration k -> k+1."""
    if algo.family == SGD:
        raise ValueError("sgd has no momentum coefficient")
    if isinstance(algo.momentum, ConstantMomentum):
        return algo.momentum.mu
    return nesterov_mu(max(int(k), 1), algo.eta, algo.momentum.clamp)


@dataclass(frozen=True)
class IterState:
    k: int
    x: np.ndarray
    v: np.ndarray = None


def init_state(algo, x0):
    x0 = np.asarray(x0, dtype=float)
    v0 = None if algo.family == SGD else np.zeros_like(x0)
    return IterState(0, x0, v0)


def step(algo, model, state, stream):
    """One iteration; consumes exactly one gamma draw from the stream."""
    eta = algo.eta
    if algo.family == SGD:
        draw = models.grad_sample(model, state.x, stream)
        return IterState(state.k + 1, state.x - eta * draw.gradient, None)
    mu = mu_at(algo, state.k)
    if algo.family == MSGD:
        draw = models.grad_sample(model, state.x, stream)
    else:
        gamma = models.draw_gamma(model, stream)
        look = state.x + eta * (1.0 - mu * eta) * state.v
        draw = models.GradientDraw(gamma, models.gradient_given_gamma(model, look, gamma))
    v = state.v - mu * eta * state.v - eta * draw.gradient
    return IterState(state.k + 1, state.x + eta * v, v)


def run_path(algo, model, x0, seed, path=0, observable="f"):
    """Observable along a single trajectory; returns array of length N+1."""
    g = models.observable_fn(model, observable)
    state = init_state(algo, x0)
    stream = rng.CounterStream(seed, rng.STREAM_GAMMA, path)
    out = np.empty(algo.n_steps + 1)
    out[0] = g(state.x[None, :])[0]
    for k in range(algo.n_steps):
        state = step(algo, model, state, stream)
        out[k + 1] = g(state.x[None, :])[0]
    return out


@dataclass(frozen=True)
class EnsembleStats:
    """Per-recording-time mean and standard error of an observable."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_paths: int
    observable: object = "f"


def _advance_chunk(algo, model, X, V, paths, k, seed, stream=rng.STREAM_GAMMA):
    """One vectorized iteration for a chunk of paths; mutates X (and V) in place."""
    eta = algo.eta
    d = model.dim
    gammas = model.noise_scale * rng.normals(seed, stream, paths, k, 0, d)
    if algo.family == SGD:
        X -= eta * models._batch_gradient(model, X, gammas)
        return
    mu = mu_at(algo, k)
    at = X if algo.family == MSGD else X + eta * (1.0 - mu * eta) * V
    G = models._batch_gradient(model, at, gammas)
    V *= (1.0 - mu * eta)
    V -= eta * G
    X += eta * V


def run_ensemble(algo, model, x0, n_paths, seed, observable="f", threads=1):
    """Ensemble mean/stderr of an observable at every iterate, k = 0..N.

    Paths are processed in fixed chunks of 4096 and every draw is addressed by
    (seed, stream, path, step), so the result is bit-identical for any thread
    count; threads only parallelize over chunks.
    """
    if n_paths < 2:
        raise ValueError("need at least 2 paths")
    x0 = np.asarray(x0, dtype=float)
    g = models.observable_fn(model, observable)
    n = algo.n_steps

    def worker(bounds):
        lo, hi = bounds
        m = hi - lo
        paths = np.arange(lo, hi, dtype=np.uint64)
        X = np.tile(x0, (m, 1))
        V = None if algo.family == SGD else np.zeros_like(X)
        s1 = np.empty(n + 1)
        s2 = np.empty(n + 1)
        vals = g(X)
        s1[0] = vals.sum()
        s2[0] = (vals * vals).sum()
        for k in range(n):
            _advance_chunk(algo, model, X, V, paths, k, seed)
            vals = g(X)
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
    times = algo.eta * np.arange(n + 1)
    return EnsembleStats(times, mean, np.sqrt(var / n_paths), n_paths, observable)


# ---------------------------------------------------------------------------
# Exact second-moment recursions (no Monte Carlo error).
#
# In the eigenbasis of H the iterations decouple mode by mode.  For
# isotropic_shift the per-mode state z = (v_i, y_i) obeys z' = M_k z + n
# gamma_i with gamma_i ~ N(0, ns^2) and
#   msgd: M = [[1 - mu eta,                -eta lam], [eta(1 - mu eta), 1 - eta^2 lam]]
#   snag: M = [[(1-mu eta)(1-eta^2 lam),   -eta lam], [eta(1-mu eta)(1-eta^2 lam), 1 - eta^2 lam]]
# both with n = (eta lam, eta^2 lam); sgd is the scalar contraction
# y' = (1 - eta lam) y + eta lam gamma_i.  For eigenbasis_scaled only sgd
# decouples: y' = (1 - eta(lam + gamma)) y.
# ---------------------------------------------------------------------------


def _mode_matrices(algo, model, k):
    lam = model.spec.eigenvalues
    eta = algo.eta
    mu = mu_at(algo, k)
    m = np.empty((model.dim, 2, 2))
    damp = 1.0 - mu * eta
    if algo.family == SNAG:
        damp = damp * (1.0 - eta * eta * lam)
    m[:, 0, 0] = damp
    m[:, 0, 1] = -eta * lam
    m[:, 1, 0] = eta * damp
    m[:, 1, 1] = 1.0 - eta * eta * lam
    return m


def supports_exact_moments(algo, model):
    if model.kind == models.ISOTROPIC_SHIFT:
        return True
    return algo.family == SGD


def exact_moment_recursion(algo, model, x0):
    """E f(x_k) for k = 0..N, computed exactly (per-mode moment recursions).

    Supported: isotropic_shift with any family, eigenbasis_scaled with sgd.
    Raises ValueError otherwise (use run_ensemble for those).
    """
    if not supports_exact_moments(algo, model):
        raise ValueError("no exact recursion for %s on %s; use run_ensemble"
                         % (algo.family, model.kind))
    x0 = np.asarray(x0, dtype=float)
    lam = model.spec.eigenvalues
    y0 = model.spec.to_eigen(x0)
    eta = algo.eta
    ns2 = model.noise_scale ** 2
    n = algo.n_steps
    out = np.empty(n + 1)

    if algo.family == SGD:
        p = y0 * y0
        out[0] = 0.5 * float(np.sum(lam * p))
        if model.kind == models.ISOTROPIC_SHIFT:
            a = (1.0 - eta * lam) ** 2
            b = ns2 * (eta * lam) ** 2
        else:
            a = (1.0 - eta * lam) ** 2 + eta * eta * ns2
            b = 0.0 * lam
        for k in range(n):
            p = a * p + b
            out[k + 1] = 0.5 * float(np.sum(lam * p))
        return out

    # momentum families on isotropic_shift
    P = np.zeros((model.dim, 2, 2))
    P[:, 1, 1] = y0 * y0
    noise = np.empty((model.dim, 2, 2))
    nv = np.stack([eta * lam, eta * eta * lam], axis=1)
    noise[:] = ns2 * nv[:, :, None] * nv[:, None, :]
    out[0] = 0.5 * float(np.sum(lam * P[:, 1, 1]))
    constant = isinstance(algo.momentum, ConstantMomentum)
    m = _mode_matrices(algo, model, 0)
    for k in range(n):
        if not constant:
            m = _mode_matrices(algo, model, k)
        P = m @ P @ np.swapaxes(m, 1, 2) + noise
        out[k + 1] = 0.5 * float(np.sum(lam * P[:, 1, 1]))
    return out


@dataclass(frozen=True)
class MomentState:
    """Exact mean and second moment of the full state at one iterate.

    For sgd the state is x (length d); for momentum families it is (v, x)
    (length 2d), both in the original coordinates.
    """

    k: int
    mean: np.ndarray
    second: np.ndarray


def exact_moment_state(algo, model, x0, k_target):
    """Exact MomentState after k_target iterations (same support as the recursion).

    Cross-mode second moments from a deterministic start factor into products
    of the means (the cross covariances satisfy the same homogeneous linear
    recursion with zero initial condition), so only per-mode blocks are evolved.
    """
    if not supports_exact_moments(algo, model):
        raise ValueError("no exact recursion for %s on %s" % (algo.family, model.kind))
    if not (0 <= k_target <= algo.n_steps):
        raise ValueError("k must lie in [0, N]")
    x0 = np.asarray(x0, dtype=float)
    lam = model.spec.eigenvalues
    q = model.spec.basis
    y0 = model.spec.to_eigen(x0)
    eta = algo.eta
    ns2 = model.noise_scale ** 2
    d = model.dim

    if algo.family == SGD:
        mean_y = y0.copy()
        P = np.outer(y0, y0)
        if model.kind == models.ISOTROPIC_SHIFT:
            a = 1.0 - eta * lam
            for _ in range(k_target):
                P = np.outer(a, a) * P + np.diag(ns2 * (eta * lam) ** 2)
                mean_y = a * mean_y
        else:
            a = 1.0 - eta * lam
            for _ in range(k_target):
                P = np.outer(a, a) * P + np.diag(eta * eta * ns2 * np.diag(P))
                mean_y = a * mean_y
        return MomentState(k_target, q @ mean_y, q @ P @ q.T)

    mean = np.zeros((d, 2))
    mean[:, 1] = y0
    P = np.zeros((d, 2, 2))
    P[:, 1, 1] = y0 * y0
    nv = np.stack([eta * lam, eta * eta * lam], axis=1)
    noise = ns2 * nv[:, :, None] * nv[:, None, :]
    for k in range(k_target):
        m = _mode_matrices(algo, model, k)
        P = m @ P @ np.swapaxes(m, 1, 2) + noise
        mean = np.einsum("dij,dj->di", m, mean)
    full_mean = np.concatenate([q @ mean[:, 0], q @ mean[:, 1]])
    second = np.empty((2 * d, 2 * d))
    for a_idx in range(2):
        for b_idx in range(2):
            cross = np.outer(mean[:, a_idx], mean[:, b_idx])
            np.fill_diagonal(cross, P[:, a_idx, b_idx])
            second[a_idx * d:(a_idx + 1) * d, b_idx * d:(b_idx + 1) * d] = q @ cross @ q.T
    return MomentState(k_target, full_mean, second)
