import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad, solve_ivp

from smelab.matkit import haar_orthogonal, mat_exp_dense
from smelab.models import (EIGENBASIS_SCALED, ISOTROPIC_SHIFT, from_spectrum,
                           grad_full, objective)
from smelab.sga import MSGD, SGD, SNAG
from smelab.sme import (SNAG_VARYING, SmeSystem, asymptotic_noise_msgd,
                        bs_expected_f, build_sme, em_integrate_ensemble,
                        langevin_expected_f_exact,
                        langevin_expected_f_quadrature, langevin_system,
                        linear_sme_moments, one_step_moments, ou_expected_f,
                        R_function)

RHO = haar_orthogonal(2, seed=11)


def _iso(lams, ns=1.0):
    return from_spectrum(ISOTROPIC_SHIFT, lams, basis=RHO[:len(lams), :len(lams)]
                         if len(lams) == 2 else None, noise_scale=ns)


# ---------------------------------------------------------------------------
# system construction and validation
# ---------------------------------------------------------------------------


def test_system_validation():
    model = _iso([1.0, 0.25])
    with pytest.raises(ValueError):
        build_sme(model, "adam", 1, 0.1)
    with pytest.raises(ValueError):
        build_sme(model, SGD, 3, 0.1)
    with pytest.raises(ValueError):
        build_sme(model, SGD, 1, 1.5)
    with pytest.raises(ValueError):
        build_sme(model, MSGD, 1, 0.1)               # mu required
    with pytest.raises(ValueError):
        build_sme(model, MSGD, 1, 0.1, mu=10.5)      # mu > 1/eta
    with pytest.raises(ValueError):
        build_sme(model, SGD, 1, 0.1, mu=0.5)        # sgd takes no mu
    with pytest.raises(ValueError):
        build_sme(model, SNAG_VARYING, 2, 0.1, t0=1.0)
    # omitted t0 falls back to a small positive start; zero is rejected
    assert build_sme(model, SNAG_VARYING, 1, 0.1).t0 == 0.1
    with pytest.raises(ValueError):
        SmeSystem(SNAG_VARYING, 1, model, 0.1, None, 0.0)
    sys1 = build_sme(model, SNAG_VARYING, 1, 0.1, t0=2.0)
    assert sys1.state_dim == 4 and sys1.dim_x == 2
    assert build_sme(model, SGD, 1, 0.1).state_dim == 2
    with pytest.raises(ValueError):
        build_sme(model, SGD, 1, 0.1).split_state(np.zeros(3))


def test_drift_closed_forms():
    model = _iso([1.5, 0.5], ns=0.8)
    h = model.spec.matrix()
    x = np.array([0.7, -1.1])
    v = np.array([0.4, 0.2])
    y = np.concatenate([v, x])
    g = grad_full(model, x)
    sgd1 = build_sme(model, SGD, 1, 0.2)
    assert_allclose(sgd1.drift(x), -g, rtol=1e-14)
    sgd2 = build_sme(model, SGD, 2, 0.2)
    assert_allclose(sgd2.drift(x), -g - 0.5 * 0.2 * h @ g, rtol=1e-13)
    mu = 0.9
    msgd1 = build_sme(model, MSGD, 1, 0.2, mu=mu)
    assert_allclose(msgd1.drift(y), np.concatenate([-mu * v - g, v]), rtol=1e-14)
    # order-2 corrections differ between the momentum families by the sign
    # of the Hessian-velocity term in the velocity block
    msgd2 = build_sme(model, MSGD, 2, 0.2, mu=mu)
    snag2 = build_sme(model, SNAG, 2, 0.2, mu=mu)
    dv = (snag2.drift(y) - msgd2.drift(y))[:2]
    assert_allclose(dv, -0.2 * h @ v, rtol=1e-12)
    assert_allclose((snag2.drift(y) - msgd2.drift(y))[2:], 0.0, atol=1e-15)
    varying = build_sme(model, SNAG_VARYING, 1, 0.2, t0=2.5)
    assert_allclose(varying.drift_b0(y, 2.5),
                    np.concatenate([-(3.0 / 2.5) * v - g, v]), rtol=1e-14)
    with pytest.raises(ValueError):
        varying.drift_b0(y, 0.0)


def test_noise_factor_and_linear_parts():
    model = _iso([1.5, 0.5], ns=0.8)
    h = model.spec.matrix()
    eta = 0.2
    sgd2 = build_sme(model, SGD, 2, eta)
    a, s = sgd2.linear_parts()
    assert_allclose(a, -h - 0.5 * eta * h @ h, rtol=1e-13)
    assert_allclose(s, math.sqrt(eta) * 0.8 * h, rtol=1e-14)
    x = np.array([0.3, 0.4])
    assert_allclose(sgd2.noise_factor(x), s, rtol=1e-14)
    mu = 0.9
    msgd1 = build_sme(model, MSGD, 1, eta, mu=mu)
    a, s = msgd1.linear_parts()
    eye = np.eye(2)
    zero = np.zeros((2, 2))
    assert_allclose(a, np.block([[-mu * eye, -h], [eye, zero]]), atol=1e-14)
    assert_allclose(s, np.vstack([math.sqrt(eta) * 0.8 * h, zero]), atol=1e-14)
    # drift of the linear system equals A y
    y = np.array([0.4, 0.2, 0.7, -1.1])
    assert_allclose(msgd1.drift(y), a @ y, rtol=1e-13)
    scaled = from_spectrum(EIGENBASIS_SCALED, [1.5, 0.5], noise_scale=0.8)
    with pytest.raises(ValueError):
        build_sme(scaled, SGD, 1, eta).linear_parts()
    with pytest.raises(ValueError):
        build_sme(model, SNAG_VARYING, 1, eta, t0=1.0).linear_parts()


# ---------------------------------------------------------------------------
# closed-form E f against an independent ODE integrator
# ---------------------------------------------------------------------------


def test_ou_expected_f_against_ode():
    model = _iso([1.0, 0.1], ns=0.7)
    spec = model.spec
    x0 = np.array([1.0, -2.0])
    eta, ns = 0.1, 0.7
    for order in (1, 2):
        m = spec.eigenvalues * (1.0 + 0.5 * eta * spec.eigenvalues
                                if order == 2 else 1.0)
        y0 = spec.to_eigen(x0) ** 2

        def rhs(_, p):
            return -2.0 * m * p + eta * ns ** 2 * spec.eigenvalues ** 2

        sol = solve_ivp(rhs, (0.0, 3.0), y0, t_eval=[0.5, 1.5, 3.0],
                        rtol=1e-11, atol=1e-13)
        want = 0.5 * sol.y.T @ spec.eigenvalues
        got = ou_expected_f(spec, x0, eta, np.array([0.5, 1.5, 3.0]),
                            noise_scale=ns, order=order)
        assert_allclose(got, want, rtol=1e-8)
    assert_allclose(ou_expected_f(spec, x0, eta, 0.0, noise_scale=ns),
                    objective(model, x0), rtol=1e-14)


def test_bs_expected_f_against_ode():
    model = from_spectrum(EIGENBASIS_SCALED, [1.0, 0.1], noise_scale=0.7)
    spec = model.spec
    x0 = np.array([1.0, -2.0])
    eta, ns = 0.1, 0.7
    lam = spec.eigenvalues
    y0 = spec.to_eigen(x0) ** 2

    def rhs(_, p):
        return (eta * ns ** 2 - 2.0 * lam) * p

    sol = solve_ivp(rhs, (0.0, 4.0), y0, t_eval=[1.0, 4.0], rtol=1e-11, atol=1e-13)
    want = 0.5 * sol.y.T @ lam
    got = bs_expected_f(spec, x0, eta, np.array([1.0, 4.0]), noise_scale=ns)
    assert_allclose(got, want, rtol=1e-8)
    # a mode with eta ns^2 > 2 lam grows
    grow = bs_expected_f(spec, x0, 0.5, np.array([10.0, 20.0]), noise_scale=2.0)
    assert grow[1] > grow[0]


def test_ou_zero_noise_is_pure_decay():
    spec = _iso([1.0, 0.25]).spec
    x0 = np.array([2.0, 1.0])
    y0 = spec.to_eigen(x0)
    t = 1.3
    want = 0.5 * np.sum(spec.eigenvalues * np.exp(-2 * spec.eigenvalues * t) * y0 ** 2)
    assert_allclose(ou_expected_f(spec, x0, 0.1, t, noise_scale=0.0), want, rtol=1e-13)


# ---------------------------------------------------------------------------
# R function and the asymptotic noise level
# ---------------------------------------------------------------------------


def test_r_function_underdamped_is_cosine_integral():
    for mu, lam in ((1.0, 1.0), (0.5, 0.3), (1.9, 1.0)):
        om = math.sqrt(4 * lam - mu * mu)
        for t in (0.3, 1.0, 4.0):
            want, _ = quad(lambda s: math.exp(-mu * s) * math.cos(om * s), 0, t)
            assert_allclose(R_function(t, mu, lam), want, rtol=1e-10)


def test_r_function_branches_and_limits():
    assert R_function(0.0, 0.7, 2.0) == 0.0
    assert_allclose(R_function(np.inf, 0.7, 2.0), 0.7 / 8.0, rtol=1e-14)
    assert_allclose(R_function(np.inf, 4.0, 1.0), 0.25, rtol=1e-14)
    # overdamped branch is the exponential relaxation
    assert_allclose(R_function(1.7, 3.0, 1.0), (1 - math.exp(-3.0 * 1.7)) / 3.0,
                    rtol=1e-14)
    # the branches agree across the critical point mu^2 = 4 lam
    lo = R_function(1.1, 2.0 * (1 - 1e-7), 1.0)
    hi = R_function(1.1, 2.0 * (1 + 1e-7), 1.0)
    assert_allclose(lo, hi, rtol=1e-5)
    # deep-time branch switch
    assert_allclose(R_function(2000.0, 0.5, 1.0), R_function(np.inf, 0.5, 1.0),
                    rtol=1e-12)
    with pytest.raises(ValueError):
        R_function(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        R_function(-1.0, 1.0, 1.0)


def test_asymptotic_noise_collapses_to_quarter_mu():
    # in both damping regimes the bracket algebra reduces the sum to
    # (eta / 4 mu) ns^2 sum lam^2
    spec = _iso([1.0, 0.25]).spec
    for mu in (0.1, 3.0):
        got = asymptotic_noise_msgd(spec, mu, 0.1, noise_scale=0.8)
        assert_allclose(got, 0.1 / (4 * mu) * 0.64 * (1.0 + 0.0625), rtol=1e-12)
    with pytest.raises(ValueError):
        asymptotic_noise_msgd(spec, 1.0, 0.1)   # critical at lam = 0.25
    with pytest.raises(ValueError):
        asymptotic_noise_msgd(spec, 0.0, 0.1)


def test_asymptotic_noise_equals_exact_stationary_value():
    spec = _iso([1.0, 0.25]).spec
    for mu in (0.1, 0.7, 3.0):
        system = langevin_system(spec, mu, 0.1, noise_scale=0.8)
        exact = langevin_expected_f_exact(system, np.zeros(2), np.inf)
        assert_allclose(asymptotic_noise_msgd(spec, mu, 0.1, noise_scale=0.8),
                        exact, rtol=1e-10)


# ---------------------------------------------------------------------------
# the Langevin dual route: closed form vs dense quadrature
# ---------------------------------------------------------------------------


def test_langevin_exact_vs_quadrature_random_systems():
    rng_ = np.random.default_rng(2024)
    for _ in range(4):
        d = int(rng_.integers(1, 4))
        lams = np.sort(rng_.uniform(0.1, 2.0, d))[::-1]
        mu = float(rng_.uniform(0.2, 3.0))
        spec = from_spectrum(ISOTROPIC_SHIFT, lams).spec
        if min(abs(mu * mu - 4 * l) for l in lams) < 1e-6:
            mu += 0.01
        system = langevin_system(spec, mu, 0.1, noise_scale=0.9)
        x0 = rng_.uniform(-2, 2, d)
        for t in (0.3, 1.7, 5.0):
            a = langevin_expected_f_exact(system, x0, t)
            b = langevin_expected_f_quadrature(system, x0, t)
            assert_allclose(a, b, rtol=1e-8)


def test_langevin_t_zero_and_critical_fallback():
    spec = _iso([1.0, 0.25]).spec
    x0 = np.array([2.0, -1.0])
    system = langevin_system(spec, 0.7, 0.1, noise_scale=0.9)
    assert_allclose(langevin_expected_f_exact(system, x0, 0.0),
                    0.5 * x0 @ spec.matrix() @ x0, rtol=1e-12)
    # mu = 1 is critically damped for lam = 0.25: the closed-form noise
    # integral refuses, and the exact route falls back to quadrature
    critical = langevin_system(spec, 1.0, 0.1, noise_scale=0.9)
    a = langevin_expected_f_exact(critical, x0, 2.0)
    b = langevin_expected_f_quadrature(critical, x0, 2.0)
    assert_allclose(a, b, rtol=1e-9)


def test_langevin_unstable_asymptote_raises():
    spec = _iso([1.0, 0.25]).spec
    system = langevin_system(spec, 0.7, 0.1)
    assert langevin_expected_f_exact(system, np.zeros(2), np.inf) > 0
    # mu <= 0 rejected outright; a stable system never raises
    with pytest.raises(ValueError):
        langevin_system(spec, -0.5, 0.1)


def test_order2_variants_differ_and_agree_between_routes():
    spec = _iso([1.0, 0.25]).spec
    x0 = np.array([1.0, 1.0])
    vals = {}
    for variant in ("order1", "msgd2", "snag2"):
        system = langevin_system(spec, 0.7, 0.25, noise_scale=0.9, variant=variant)
        a = langevin_expected_f_exact(system, x0, 2.0)
        b = langevin_expected_f_quadrature(system, x0, 2.0)
        assert_allclose(a, b, rtol=1e-8)
        vals[variant] = a
    assert abs(vals["msgd2"] - vals["snag2"]) > 1e-4
    with pytest.raises(ValueError):
        langevin_system(spec, 0.7, 0.25, variant="order3")


# ---------------------------------------------------------------------------
# one-step moments: truncated vs exact-linear vs the discrete algorithms
# ---------------------------------------------------------------------------


def test_one_step_first_moments_match_discrete_exactly():
    # at order 2 the truncated first moment reproduces the discrete one-step
    # mean exactly for sgd and msgd (linear drifts); snag differs at eta^3
    model = _iso([1.3, 0.4], ns=0.6)
    h = model.spec.matrix()
    eta, mu = 0.25, 0.7
    x = np.array([0.8, -1.2])
    v = np.array([0.5, 0.3])
    y = np.concatenate([v, x])
    g = h @ x

    first, second, flag = one_step_moments(build_sme(model, SGD, 2, eta), x)
    assert flag
    assert_allclose(first, -eta * g, rtol=1e-12)
    assert_allclose(second, eta * eta * (np.outer(g, g) + 0.36 * h @ h), rtol=1e-12)

    first, second, _ = one_step_moments(build_sme(model, MSGD, 2, eta, mu=mu), y)
    dv = -mu * eta * v - eta * g
    dx = eta * (v + dv)
    assert_allclose(first, np.concatenate([dv, dx]), rtol=1e-12)
    det_v = mu * v + g
    assert_allclose(second[:2, :2],
                    eta * eta * (np.outer(det_v, det_v) + 0.36 * h @ h), rtol=1e-12)

    first, _, _ = one_step_moments(build_sme(model, SNAG, 2, eta, mu=mu), y)
    # discrete snag evaluates the gradient at the lookahead point
    dv_snag = -mu * eta * v - eta * h @ (x + eta * (1 - mu * eta) * v)
    dx_snag = eta * (v + dv_snag)
    resid = np.concatenate([dv_snag, dx_snag]) - first
    assert_allclose(resid[:2], mu * eta ** 3 * h @ v, rtol=1e-9)
    assert_allclose(resid[2:], -(1 - mu * eta) * eta ** 3 * h @ v, rtol=1e-9)


def test_linear_sme_moments_third_order_residual():
    # exact sgd order-2 increment mean differs from the discrete mean by
    # eta^3 H^3 x / 3 + O(eta^4)
    model = _iso([1.3, 0.4], ns=0.6)
    h = model.spec.matrix()
    x = np.array([0.8, -1.2])
    eta = 0.1
    mean, _ = linear_sme_moments(build_sme(model, SGD, 2, eta), x)
    resid = mean - (-eta * h @ x)
    lead = eta ** 3 * (h @ h @ h @ x) / 3.0
    assert np.linalg.norm(resid - lead) < 0.2 * np.linalg.norm(lead)


def test_linear_sme_covariance_against_lyapunov_ode():
    model = _iso([1.3, 0.4], ns=0.6)
    eta, mu = 0.25, 0.7
    system = build_sme(model, MSGD, 1, eta, mu=mu)
    a, s = system.linear_parts()
    ssT = s @ s.T
    y0 = np.array([0.5, 0.3, 0.8, -1.2])

    def rhs(_, cvec):
        c = cvec.reshape(4, 4)
        return (a @ c + c @ a.T + ssT).ravel()

    sol = solve_ivp(rhs, (0.0, eta), np.zeros(16), rtol=1e-11, atol=1e-13)
    cov = sol.y[:, -1].reshape(4, 4)
    mean, second = linear_sme_moments(system, y0)
    assert_allclose(second - np.outer(mean, mean), cov, rtol=1e-7, atol=1e-12)
    assert_allclose(mean, (mat_exp_dense(a, eta) - np.eye(4)) @ y0, rtol=1e-12)


def test_one_step_moments_varying_drift_at_t0():
    model = _iso([1.0, 0.25])
    system = build_sme(model, SNAG_VARYING, 1, 0.1, t0=3.0)
    y = np.array([0.1, 0.2, 1.0, -1.0])
    first, second, flag = one_step_moments(system, y)
    v, x = y[:2], y[2:]
    h = model.spec.matrix()
    g = h @ x
    b0 = np.concatenate([-v - g, v])       # 3/t0 = 1 at t0 = 3
    # truncation includes the (1/2) (Db0) b0 correction at fixed t = t0
    jb = np.concatenate([-b0[:2] - h @ b0[2:], b0[:2]])
    assert_allclose(first, 0.1 * b0 + 0.01 * 0.5 * jb, rtol=1e-6)
    assert flag


# ---------------------------------------------------------------------------
# Euler-Maruyama ensemble vs the closed forms
# ---------------------------------------------------------------------------


def test_em_matches_ou_closed_form():
    model = _iso([1.0, 0.25], ns=1.0)
    system = build_sme(model, SGD, 1, 0.1)
    stats = em_integrate_ensemble(system, [1.0, 1.0], 1.0, n_paths=4096,
                                  seed=101, substeps=20)
    exact = ou_expected_f(model.spec, np.array([1.0, 1.0]), 0.1, stats.times)
    delta = 0.1 / 20
    tol = 4.0 * stats.stderr + 2.0 * delta * np.abs(exact)
    assert np.all(np.abs(stats.mean - exact) <= tol + 1e-12)


def test_em_matches_langevin_closed_form():
    model = _iso([1.0, 0.25], ns=1.0)
    system = build_sme(model, MSGD, 1, 0.1, mu=0.7)
    stats = em_integrate_ensemble(system, [2.0, 1.0], 1.0, n_paths=4096,
                                  seed=102, substeps=20)
    lang = langevin_system(model.spec, 0.7, 0.1, noise_scale=1.0)
    exact = np.array([langevin_expected_f_exact(lang, np.array([2.0, 1.0]), t)
                      for t in stats.times])
    delta = 0.1 / 20
    tol = 4.0 * stats.stderr + 2.0 * delta * np.abs(exact)
    assert np.all(np.abs(stats.mean - exact) <= tol + 1e-12)


def test_em_matches_gbm_closed_form():
    model = from_spectrum(EIGENBASIS_SCALED, [1.0, 0.25], noise_scale=1.0)
    system = build_sme(model, SGD, 1, 0.1)
    stats = em_integrate_ensemble(system, [1.0, 1.0], 0.5, n_paths=4096,
                                  seed=103, substeps=40)
    exact = bs_expected_f(model.spec, np.array([1.0, 1.0]), 0.1, stats.times)
    delta = 0.1 / 40
    tol = 4.0 * stats.stderr + 5.0 * delta * np.abs(exact)
    assert np.all(np.abs(stats.mean - exact) <= tol + 1e-12)


def test_em_layout_thread_invariance_and_start_forms():
    model = _iso([1.0, 0.25], ns=1.0)
    system = build_sme(model, MSGD, 1, 0.1, mu=0.7)
    one = em_integrate_ensemble(system, [1.0, 1.0], 0.5, n_paths=600, seed=7,
                                substeps=4, threads=1)
    many = em_integrate_ensemble(system, [1.0, 1.0], 0.5, n_paths=600, seed=7,
                                 substeps=4, threads=3)
    assert np.array_equal(one.mean, many.mean)
    assert np.array_equal(one.stderr, many.stderr)
    assert_allclose(one.times, 0.1 * np.arange(6), rtol=1e-15)
    padded = em_integrate_ensemble(system, [0.0, 0.0, 1.0, 1.0], 0.5,
                                   n_paths=600, seed=7, substeps=4)
    assert np.array_equal(one.mean, padded.mean)
    with pytest.raises(ValueError):
        em_integrate_ensemble(system, [1.0, 1.0, 1.0], 0.5, n_paths=16, seed=0)
    with pytest.raises(ValueError):
        em_integrate_ensemble(system, [1.0, 1.0], 0.5, n_paths=1, seed=0)
    with pytest.raises(ValueError):
        em_integrate_ensemble(system, [1.0, 1.0], 0.05, n_paths=16, seed=0)


def test_em_varying_grid_starts_at_t0():
    model = _iso([1.0, 0.25], ns=0.5)
    system = build_sme(model, SNAG_VARYING, 1, 0.1, t0=2.0)
    stats = em_integrate_ensemble(system, [1.0, 1.0], 2.5, n_paths=64, seed=9,
                                  substeps=4)
    assert_allclose(stats.times, 2.0 + 0.1 * np.arange(6), rtol=1e-14)
    assert np.all(np.isfinite(stats.mean))
