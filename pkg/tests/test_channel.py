import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rzfmimo.channel import (
    ConfigError,
    CorrelationSpec,
    Scenario,
    SystemConfig,
    derive_powers,
    orthogonal_pilots,
    sample_estimate_direct,
    sample_estimate_faithful,
    sample_true_channel,
    simulate_training,
    simulate_training_with_pilots,
    split_power,
)
from rzfmimo.correlation import exponential_correlation, identity_correlation, psd_sqrt, spectral_model

from conftest import fig2_config


def test_powers_symmetric_split():
    p = split_power(0.5, 10.0, 2.0, 1.0)
    assert p.tau_d == 1.0
    assert p.rho_t == pytest.approx(10.0)
    assert p.rho_d == pytest.approx(10.0)


def test_powers_fig2_setting():
    p = derive_powers(fig2_config())
    assert p.rho_t == pytest.approx(12.5)
    assert p.rho_d == pytest.approx(8.3333333333)


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(1e-3, 1 - 1e-3),
    rho_db=st.floats(-20, 40),
    tau_t=st.floats(1.0, 10.0),
    extra=st.floats(1e-3, 50.0),
)
def test_energy_conservation(alpha, rho_db, tau_t, extra):
    cfg = SystemConfig(tau=tau_t + extra, tau_t=tau_t, rho_db=rho_db, alpha=alpha)
    p = derive_powers(cfg)
    total = cfg.rho * cfg.tau
    assert p.rho_t * tau_t + p.rho_d * p.tau_d == pytest.approx(total, rel=1e-12)


def test_config_validation():
    with pytest.raises(ConfigError, match="alpha"):
        SystemConfig(alpha=1.2)
    with pytest.raises(ConfigError, match="tau"):
        SystemConfig(tau=1.0, tau_t=1.0)
    with pytest.raises(ConfigError, match="tau_t"):
        SystemConfig(tau_t=0.5)
    with pytest.raises(ConfigError, match="lambda"):
        SystemConfig(lam=-0.1)
    with pytest.raises(ConfigError, match="lambda"):
        SystemConfig(lam="best")
    with pytest.raises(ConfigError):
        CorrelationSpec("exponential", 1.0)
    with pytest.raises(ConfigError, match="path"):
        CorrelationSpec("file")


def test_antenna_count_rounds_half_up():
    cfg = SystemConfig(n=5, zeta=1.5)
    assert cfg.m == 8
    assert cfg.achieved_zeta == pytest.approx(1.6)
    assert SystemConfig(n=400, zeta=1.5).m == 600


def test_scenario_reuses_eigendecomposition():
    sc = Scenario(fig2_config())
    other = sc.with_config(sc.cfg.with_(alpha=0.3))
    assert other.model.basis is sc.model.basis
    fresh = Scenario(sc.cfg.with_(alpha=0.3))
    np.testing.assert_allclose(other.model.gamma, fresh.model.gamma, atol=1e-12)
    assert other.powers.rho_d == pytest.approx(fresh.powers.rho_d)


def test_true_channel_identity_variance(rng):
    m, n = 80, 120
    A = sample_true_channel(np.eye(m), n, rng)
    assert abs(A.var() - 1.0) < 3 / math.sqrt(m * n)


def test_true_channel_column_covariance():
    R = exponential_correlation(200, 0.4)
    A = sample_true_channel(psd_sqrt(R), 10_000, np.random.default_rng(1))
    assert np.abs(A @ A.T / A.shape[1] - R.entries).max() < 0.05


def test_true_channel_deterministic():
    S = psd_sqrt(exponential_correlation(10, 0.4))
    a = sample_true_channel(S, 7, np.random.default_rng(3))
    b = sample_true_channel(S, 7, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


def test_training_perfect_csi_limit(rng):
    R = exponential_correlation(30, 0.4)
    model = spectral_model(R, 1.0, 1e9)
    A = sample_true_channel(psd_sqrt(R), 40, rng)
    A_hat = simulate_training(A, model, rng)
    assert np.linalg.norm(A_hat - A) / np.linalg.norm(A) < 1e-3


def test_training_estimate_variance(rng):
    model = spectral_model(identity_correlation(100), 1.0, 12.5)
    A = rng.standard_normal((100, 2000))
    A_hat = simulate_training(A, model, rng)
    assert A_hat.var() == pytest.approx(1 / 1.08, rel=0.02)


def _whitened(X, model, which):
    # map columns with covariance U diag(v) U^T to white noise
    v = model.gamma if which == "hat" else model.d
    return (model.basis.T @ X) / np.sqrt(v)[:, None]


def test_lmmse_orthogonality(rng):
    m, n = 6, 20_000
    R = exponential_correlation(m, 0.4, "standard-exponential")
    model = spectral_model(R, 1.0, 12.5)
    inst = sample_estimate_faithful(model, psd_sqrt(R), n, rng)
    Zh = _whitened(inst.A_hat, model, "hat")
    Zd = _whitened(inst.Delta, model, "delta")
    cross = Zh @ Zd.T / n
    assert np.abs(cross).max() < 3 / math.sqrt(n)
    # aggregate test: n * sum(cross^2) ~ chi2(m^2)
    p = stats.chi2.sf(n * np.sum(cross**2), m * m)
    assert p > 0.01


def test_direct_sampling_perfect_csi(rng):
    model = spectral_model(exponential_correlation(12, 0.4), 1.0, np.inf)
    inst = sample_estimate_direct(model, 9, rng)
    np.testing.assert_array_equal(inst.Delta, 0.0)
    np.testing.assert_array_equal(inst.A, inst.A_hat)


def test_direct_sampling_deterministic():
    model = spectral_model(exponential_correlation(12, 0.4), 1.0, 12.5)
    a = sample_estimate_direct(model, 9, np.random.default_rng(5))
    b = sample_estimate_direct(model, 9, np.random.default_rng(5))
    np.testing.assert_array_equal(a.A_hat, b.A_hat)
    np.testing.assert_array_equal(a.Delta, b.Delta)


def test_generation_paths_equivalent():
    m, n = 20, 10_000
    R = exponential_correlation(m, 0.6, "standard-exponential")
    model = spectral_model(R, 1.0, 5.0)
    direct = sample_estimate_direct(model, n, np.random.default_rng(11))
    faithful = sample_estimate_faithful(model, psd_sqrt(R), n, np.random.default_rng(12))
    statistics = (
        lambda inst: inst.A_hat[0],
        lambda inst: inst.Delta[m // 2],
        lambda inst: np.sum(inst.A_hat**2, axis=0),
        lambda inst: np.sum(inst.Delta**2, axis=0),
        lambda inst: np.sum(inst.A_hat * inst.Delta, axis=0),
    )
    for f in statistics:
        assert stats.ks_2samp(f(direct), f(faithful)).pvalue > 0.01


def test_orthogonal_pilots(rng):
    X = orthogonal_pilots(8, 12, rng)
    np.testing.assert_allclose(X @ X.T, 12 * np.eye(8), atol=1e-10)
    with pytest.raises(ValueError):
        orthogonal_pilots(8, 4, rng)


def test_pilot_training_matches_sufficient_statistic(rng):
    m, n, T_t, rho_t = 30, 40, 40, 12.5
    model = spectral_model(identity_correlation(m), T_t / n, rho_t)
    errs, hats = [], []
    for _ in range(30):
        A = rng.standard_normal((m, n))
        A_hat = simulate_training_with_pilots(A, model, orthogonal_pilots(n, T_t, rng), rho_t, rng)
        hats.append(A_hat)
        errs.append(A_hat - A)
    assert np.var(hats) == pytest.approx(1 / 1.08, rel=0.03)
    assert np.var(errs) == pytest.approx(0.08 / 1.08, rel=0.03)
