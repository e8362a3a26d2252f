import json

import numpy as np
import pytest

from factormom.analytics import AR1Params, NonStationaryError
from factormom.model import (
    ModelParams,
    ParameterError,
    autocovariance_matrices,
    check_autocovariances,
    default_params,
    expected_factor_momentum,
    expected_stock_momentum,
    factor_moment_mc,
    momentum_covariance_check,
    reconstruction_check,
    sample_autocovariance,
    simulate,
    simulate_ar1,
    stock_moment_mc,
    verify_model,
)


def make_params(n=5, alpha=0.3, rho=0.1, mu=0.0, sigma=None, seed=None, w=None):
    if sigma is None:
        sigma = np.eye(n)
    if w is None:
        w = np.ones(n) if seed is None else np.random.default_rng(seed).normal(0, 1, n)
    mu_vec = np.full(n, mu) if np.isscalar(mu) else np.asarray(mu, float)
    return ModelParams(alpha=alpha, w=w, mu=mu_vec, rho=rho, sigma=sigma)


def random_psd(n, seed):
    rng = np.random.default_rng(seed)
    b = rng.normal(0, 1, (n, n))
    return b @ b.T / n + 0.5 * np.eye(n)


# ---------------------------------------------------------------------------
# parameters


def test_w_normalization_makes_a_equal_alpha():
    p = make_params(n=4, alpha=0.37, w=np.array([3.0, -1.0, 2.0, 0.5]))
    assert p.a == pytest.approx(0.37, rel=1e-12)
    assert np.sqrt(p.w @ p.w) == pytest.approx(1.0, rel=1e-12)
    raw = ModelParams(0.2, np.array([1.0, 1.0]), np.zeros(2), 0.0, np.eye(2), normalize_w=False)
    assert raw.a == pytest.approx(0.4)


def exact_unit_w(n):
    # 0.6^2 + 0.8^2 = 1 exactly in floats, so a == alpha without rounding
    w = np.zeros(n)
    w[0], w[1] = 0.6, 0.8
    return w


def test_parameter_validation():
    with pytest.raises(NonStationaryError):
        make_params(alpha=1.2)
    with pytest.raises(NonStationaryError):
        ModelParams(1.0, exact_unit_w(3), np.zeros(3), 0.0, np.eye(3), normalize_w=False)
    with pytest.raises(ParameterError):
        make_params(alpha=-0.1)
    with pytest.raises(ParameterError):
        ModelParams(0.1, np.ones(2), np.zeros(3), 0.0, np.eye(2))
    bad_sigma = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(ParameterError):
        ModelParams(0.1, np.ones(2), np.zeros(2), 0.0, bad_sigma)
    asym = np.array([[1.0, 0.5], [0.1, 1.0]])
    with pytest.raises(ParameterError):
        ModelParams(0.1, np.ones(2), np.zeros(2), 0.0, asym)


def test_params_json_round_trip(tmp_path):
    p = make_params(n=3, alpha=0.25, rho=0.15, mu=0.001, sigma=random_psd(3, 1))
    path = tmp_path / "params.json"
    path.write_text(json.dumps(p.to_dict()))
    q = ModelParams.from_json(path)
    assert q.alpha == p.alpha and q.rho == p.rho
    np.testing.assert_allclose(q.w, p.w, rtol=1e-15)
    np.testing.assert_allclose(q.sigma, p.sigma, rtol=1e-15)

    diag_spec = {"N": 2, "alpha": 0.1, "w": [1, 1], "mu": [0, 0], "rho": 0.0,
                 "sigma": {"diag": [2.0, 3.0]}}
    d = ModelParams.from_dict(diag_spec)
    np.testing.assert_array_equal(d.sigma, np.diag([2.0, 3.0]))
    with pytest.raises(ParameterError):
        ModelParams.from_dict({**diag_spec, "sigma": {}})
    with pytest.raises(ParameterError):
        ModelParams.from_dict({**diag_spec, "N": 5})


def test_derived_quantities():
    p = make_params(n=2, alpha=0.5, rho=0.2, mu=np.array([0.01, 0.03]),
                    w=np.array([1.0, 1.0]))
    # normalized w = (1/sqrt2, 1/sqrt2): drift = 0.04/sqrt2, mean amplified
    assert p.factor_drift == pytest.approx(0.04 / np.sqrt(2))
    assert p.factor_mean == pytest.approx(p.factor_drift / 0.5)
    mean_r = p.mean_returns
    expected = p.mu + p.alpha * p.factor_drift / 0.5 * p.w
    np.testing.assert_allclose(mean_r, expected, rtol=1e-12)


# ---------------------------------------------------------------------------
# simulation


def test_same_seed_gives_bit_identical_paths():
    p = make_params()
    a = simulate(p, 500, seed=123)
    b = simulate(p, 500, seed=123)
    np.testing.assert_array_equal(a.panel.values, b.panel.values)
    c = simulate(p, 500, seed=124)
    assert not np.array_equal(a.panel.values, c.panel.values)


def test_factor_series_equals_w_dot_returns_exactly():
    p = make_params(n=6, alpha=0.4, rho=0.2, seed=3)
    path = simulate(p, 1000, seed=5)
    np.testing.assert_array_equal(path.factor.values, path.panel.values @ p.w)


def test_pure_noise_limit_has_no_autocovariance():
    p = make_params(n=3, alpha=0.0, rho=0.0, mu=0.0)
    path = simulate(p, 200_000, seed=11)
    est, se = sample_autocovariance(path.panel.values, 1)
    assert np.all(np.abs(est) <= 3 * se)


def test_ma1_limit_matches_minus_rho_sigma():
    sigma = random_psd(3, 7)
    p = make_params(n=3, alpha=0.0, rho=0.3, sigma=sigma)
    path = simulate(p, 400_000, seed=17)
    est, se = sample_autocovariance(path.panel.values, 1)
    assert np.all(np.abs(est - (-0.3 * sigma)) <= 3 * se)
    est2, se2 = sample_autocovariance(path.panel.values, 2)
    assert np.all(np.abs(est2) <= 3 * se2)


# ---------------------------------------------------------------------------
# closed-form autocovariances


def test_omega_collapses_without_feedback():
    sigma = random_psd(4, 2)
    p = make_params(n=4, alpha=0.0, rho=0.25, sigma=sigma)
    oms = autocovariance_matrices(p, 3)
    np.testing.assert_allclose(oms.omega(1), -0.25 * sigma, rtol=1e-14)
    np.testing.assert_allclose(oms.omega(2), np.zeros((4, 4)), atol=1e-16)
    np.testing.assert_allclose(oms.omega(3), np.zeros((4, 4)), atol=1e-16)


def test_omega_matches_monte_carlo_generic_params():
    # the module's central consistency requirement, on three regimes
    cases = [
        (make_params(n=5, alpha=0.3, rho=0.1, sigma=random_psd(5, 3), seed=4), 21),
        (make_params(n=4, alpha=0.5, rho=0.0, sigma=random_psd(4, 5), seed=6), 2),
        (make_params(n=3, alpha=0.2, rho=0.4, mu=0.002, sigma=random_psd(3, 8), seed=9), 3),
    ]
    for params, seed in cases:
        path = simulate(params, 400_000, seed=seed)
        checks = check_autocovariances(params, path.panel.values, 3)
        assert all(c.passed for c in checks), [
            (c.name, c.lhs, c.rhs, c.se) for c in checks if not c.passed
        ]


def test_omega_decays_geometrically_at_rate_a():
    p = make_params(n=4, alpha=0.6, rho=0.2, sigma=random_psd(4, 12), seed=13)
    oms = autocovariance_matrices(p, 5)
    for k in range(2, 5):
        np.testing.assert_allclose(
            oms.omega(k + 1), p.a * oms.omega(k), rtol=1e-12, atol=1e-18
        )


# ---------------------------------------------------------------------------
# factor momentum moments


def test_factor_momentum_exact_value_and_dual_oracle():
    p = make_params(n=5, alpha=0.3, rho=0.1, mu=0.0)
    assert p.factor_variance == pytest.approx(1.0)
    mom = expected_factor_momentum(p, 1)
    assert mom.momentum_term == pytest.approx(0.2 * 0.97 / 0.91, rel=1e-14)
    assert mom.mean_term == 0.0
    # route 1: w' Omega_1 w
    oms = autocovariance_matrices(p, 6)
    assert float(p.w @ oms.omega(1) @ p.w) == pytest.approx(
        mom.momentum_term, rel=1e-12
    )
    # route 2: Monte Carlo
    path = simulate(p, 600_000, seed=29)
    mc, se = factor_moment_mc(path.factor.values, 1)
    assert abs(mc - mom.total) <= 3 * se


def test_factor_momentum_boundary_a_equals_rho():
    p = make_params(n=3, alpha=0.2, rho=0.2, mu=0.01, w=exact_unit_w(3))
    assert p.a == 0.2  # exact, so the boundary is exact
    for k in range(1, 7):
        mom = expected_factor_momentum(p, k)
        assert mom.momentum_term == 0.0
        assert mom.total == pytest.approx(p.factor_mean**2)


def test_momentum_sign_follows_a_minus_rho():
    for alpha, rho in [(0.5, 0.1), (0.1, 0.5), (0.3, 0.3), (0.8, 0.0)]:
        p = make_params(n=3, alpha=alpha, rho=rho, w=exact_unit_w(3))
        for k in range(1, 13):
            term = expected_factor_momentum(p, k).momentum_term
            assert np.sign(term) == np.sign(alpha - rho)
    # without feedback the term dies after one lag: only k=1 carries -rho V
    p = make_params(n=3, alpha=0.0, rho=0.2, w=exact_unit_w(3))
    assert expected_factor_momentum(p, 1).momentum_term < 0
    for k in range(2, 13):
        assert expected_factor_momentum(p, k).momentum_term == 0.0


def test_momentum_decay_is_exactly_geometric():
    p = make_params(n=4, alpha=0.55, rho=0.15, sigma=random_psd(4, 20), seed=21)
    for k in range(1, 12):
        lhs = expected_factor_momentum(p, k + 1).momentum_term
        rhs = p.a * expected_factor_momentum(p, k).momentum_term
        assert lhs == pytest.approx(rhs, rel=1e-13)


def test_factor_momentum_with_drift_matches_monte_carlo():
    # nonzero mu and a > 0: the mean term is the squared unconditional
    # factor mean, amplified by 1 / (1 - a) relative to the raw drift
    p = make_params(n=4, alpha=0.4, rho=0.1, mu=0.005, seed=2)
    assert p.factor_mean != pytest.approx(p.factor_drift)
    path = simulate(p, 600_000, seed=31)
    for k in (1, 2):
        mom = expected_factor_momentum(p, k)
        mc, se = factor_moment_mc(path.factor.values, k)
        assert abs(mc - mom.total) <= 3 * se


# ---------------------------------------------------------------------------
# stock momentum moments


def test_stock_momentum_no_feedback_limit():
    sigma = random_psd(4, 30)
    p = make_params(n=4, alpha=0.0, rho=0.2, mu=0.0, sigma=sigma)
    sm = expected_stock_momentum(p, 1)
    assert sm.total == pytest.approx(-0.2 * np.trace(sigma), rel=1e-12)
    assert sm.total < 0


def test_stock_momentum_reduced_equals_trace_for_all_k():
    for params in [
        make_params(n=5, alpha=0.3, rho=0.1, sigma=random_psd(5, 33), seed=34),
        make_params(n=3, alpha=0.7, rho=0.4, sigma=random_psd(3, 35), seed=36),
        make_params(n=2, alpha=0.0, rho=0.3, sigma=random_psd(2, 37)),
    ]:
        for k in range(1, 7):
            sm = expected_stock_momentum(params, k)
            assert sm.reduced_term == pytest.approx(sm.trace_term, rel=1e-12, abs=1e-15)


def test_stock_momentum_matches_monte_carlo():
    p = make_params(n=5, alpha=0.3, rho=0.1, sigma=random_psd(5, 40), seed=41)
    path = simulate(p, 600_000, seed=43)
    for k in (1, 2, 3):
        sm = expected_stock_momentum(p, k)
        mc, se = stock_moment_mc(path.panel.values, k)
        assert abs(mc - sm.total) <= 3 * se


def test_coexistence_of_reversal_and_factor_momentum():
    p = default_params()  # N=20, sigma=I, a=0.6, rho=0.1
    k1 = expected_stock_momentum(p, 1)
    assert k1.total < 0  # rho tr(Sigma) dominates
    for k in range(1, 13):
        assert expected_factor_momentum(p, k).momentum_term > 0
    for k in range(2, 5):
        assert expected_stock_momentum(p, k).total > float(p.mu @ p.mu)


# ---------------------------------------------------------------------------
# return solution reconstruction


def test_reconstruction_exact_without_feedback():
    p = make_params(n=3, alpha=0.0, rho=0.3, mu=0.001, sigma=random_psd(3, 50))
    check = reconstruction_check(p, T=20_000, seed=51, depth=50)
    assert check.max_deviation <= 1e-12


def test_reconstruction_within_tail_bound():
    for alpha in (0.3, 0.8):
        p = make_params(n=4, alpha=alpha, rho=0.1, sigma=random_psd(4, 52), seed=53)
        check = reconstruction_check(p, T=50_000, seed=54, depth=200)
        assert check.max_deviation <= check.tail_bound
        assert check.max_deviation < 1e-10


def test_reconstruction_deviation_decreases_with_depth():
    p = make_params(n=3, alpha=0.85, rho=0.1, seed=55)
    devs = [
        reconstruction_check(p, T=20_000, seed=56, depth=d).max_deviation
        for d in (5, 10, 20, 40)
    ]
    assert all(devs[i + 1] <= devs[i] for i in range(len(devs) - 1))
    assert devs[-1] < devs[0]


# ---------------------------------------------------------------------------
# momentum PNL covariance identity


def test_cov_check_zero_beta():
    check = momentum_covariance_check(
        beta=np.zeros(5),
        factor=AR1Params(0.0, 0.0, 1.0),
        idio_vol=1.0,
        m=1,
        n=1,
        T=200_000,
        seed=60,
    )
    assert abs(check.lhs) <= 3 * check.lhs_se
    assert abs(check.rhs) <= 3 * check.rhs_se


def test_cov_check_scales_with_beta_norm():
    common = dict(
        factor=AR1Params(0.0, 0.0, 1.0), idio_vol=1.0, m=1, n=2, T=400_000, seed=61
    )
    base = momentum_covariance_check(beta=np.full(4, 0.5), **common)
    double = momentum_covariance_check(beta=np.full(4, 0.5 * np.sqrt(2)), **common)
    # same seed, same path: lhs scales exactly with beta'beta up to noise terms
    assert double.lhs == pytest.approx(2 * base.lhs, rel=0.05)


def test_cov_check_zero_persistence_factor_agrees_and_is_positive():
    check = momentum_covariance_check(
        beta=np.full(6, 0.6),
        factor=AR1Params(0.0, 0.0, 1.0),
        idio_vol=1.0,
        m=2,
        n=3,
        T=400_000,
        seed=62,
    )
    assert check.agrees
    assert check.both_positive


def test_cov_positive_across_mn_grid_even_without_persistence():
    specs = [AR1Params(0.0, 0.0, 1.0), AR1Params(0.3, 0.0, 1.0)]
    for si, factor in enumerate(specs):
        rng_seed = 70 + si
        for m in range(1, 7):
            for n in range(1, 7):
                check = momentum_covariance_check(
                    beta=np.full(4, 0.7),
                    factor=factor,
                    idio_vol=1.0,
                    m=m,
                    n=n,
                    T=150_000,
                    seed=rng_seed,
                )
                assert check.lhs > 3 * check.lhs_se, (si, m, n)


# ---------------------------------------------------------------------------
# AR(1) utility and verification battery


def test_sample_autocovariance_scalar_path():
    # hand-rolled AR(1) path as an oracle independent of the simulators
    rng = np.random.default_rng(90)
    rho = 0.3
    x = np.empty(200_000)
    x[0] = 0.0
    eps = rng.standard_normal(len(x))
    for t in range(1, len(x)):
        x[t] = rho * x[t - 1] + eps[t]
    for k in (1, 2):
        est, se = sample_autocovariance(x, k)
        target = rho**k / (1 - rho**2)
        assert abs(est - target) <= 3 * se


def test_simulate_ar1_hits_stationary_moments():
    p = AR1Params.from_sigma_f(rho=0.4, mu=0.2, sigma_f=1.0)
    f = simulate_ar1(p, 2_000_000, seed=80)
    assert f.mean() == pytest.approx(0.2, abs=0.005)
    assert f.std(ddof=1) == pytest.approx(1.0, abs=0.005)
    lag1 = np.corrcoef(f[1:], f[:-1])[0, 1]
    assert lag1 == pytest.approx(0.4, abs=0.005)


def test_verify_model_passes_on_default_params():
    report = verify_model(default_params(), seed=14, T=300_000)
    failed = [c.name for c in report.checks if c.passed is False]
    assert report.passed, failed
    names = {c.name for c in report.checks}
    assert "autocovariance_k1" in names
    assert "factor_momentum_two_path_k6" in names
    assert "return_solution" in names
    info = [c for c in report.checks if c.passed is None]
    assert info, "reduced-form rows should be informational"
    as_dict = report.to_dict()
    assert as_dict["passed"] is True
    assert len(as_dict["checks"]) == len(report.checks)


def test_verify_model_flags_failures():
    # force a failure by checking a wrong parameter set against the path
    p = default_params()
    path = simulate(p, 200_000, seed=3)
    wrong = make_params(n=20, alpha=0.2, rho=0.3)
    checks = check_autocovariances(wrong, path.panel.values, 1)
    assert not all(c.passed for c in checks)
