import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rzfmimo.correlation import (
    CorrelationError,
    CorrelationMatrix,
    exponential_correlation,
    identity_correlation,
    load_correlation,
    psd_sqrt,
    spectral_model,
    spectral_model_from_noise,
)


def test_exponential_r0_is_identity():
    for model in ("exponential", "standard-exponential"):
        np.testing.assert_array_equal(exponential_correlation(3, 0.0, model).entries, np.eye(3))


def test_exponential_squared_exponent_entries():
    R = exponential_correlation(3, 0.4).entries
    assert R[0, 1] == pytest.approx(0.4)
    assert R[0, 2] == pytest.approx(0.4**4)
    assert R[0, 2] == pytest.approx(0.0256)


def test_standard_exponential_entries():
    R = exponential_correlation(4, 0.4, "standard-exponential").entries
    assert R[0, 2] == pytest.approx(0.16)
    assert R[0, 3] == pytest.approx(0.064)


def test_exponential_large_r_psd():
    for model in ("exponential", "standard-exponential"):
        R = exponential_correlation(50, 0.9, model).entries
        assert np.linalg.eigvalsh(R).min() >= -1e-10


def test_exponential_rejects_bad_r():
    with pytest.raises(CorrelationError):
        exponential_correlation(3, 1.0)
    with pytest.raises(CorrelationError):
        exponential_correlation(3, -0.1)


def test_matrix_rejects_asymmetric_and_indefinite():
    with pytest.raises(CorrelationError):
        CorrelationMatrix(np.array([[1.0, 0.1], [0.2, 1.0]]))
    with pytest.raises(CorrelationError):
        CorrelationMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_matrix_is_read_only():
    R = identity_correlation(3)
    with pytest.raises(ValueError):
        R.entries[0, 0] = 2.0


def test_spectral_model_identity_closed_form():
    sm = spectral_model(identity_correlation(5), tau_t=1.0, rho_t=12.5)
    assert sm.c == pytest.approx(0.08)
    np.testing.assert_allclose(sm.gamma, 1 / 1.08, atol=1e-12)
    np.testing.assert_allclose(sm.d, 0.08 / 1.08, atol=1e-12)
    assert sm.gamma[0] == pytest.approx(0.92593, abs=1e-5)
    assert sm.d[0] == pytest.approx(0.07407, abs=1e-5)


def test_spectral_model_perfect_csi_limit():
    R = exponential_correlation(20, 0.7, "standard-exponential")
    sm = spectral_model(R, tau_t=1.0, rho_t=1e12)
    np.testing.assert_allclose(sm.gamma, sm.delta, atol=1e-10)
    assert np.abs(sm.d).max() < 1e-10
    exact = spectral_model(R, tau_t=1.0, rho_t=np.inf)
    assert exact.c == 0.0
    np.testing.assert_array_equal(exact.d, 0.0)


@settings(max_examples=40, deadline=None)
@given(
    m=st.integers(2, 30),
    r=st.floats(0.0, 0.95),
    c=st.floats(1e-4, 10.0),
    model=st.sampled_from(["exponential", "standard-exponential"]),
)
def test_spectral_maps_invariants(m, r, c, model):
    sm = spectral_model_from_noise(exponential_correlation(m, r, model), c)
    np.testing.assert_allclose(sm.gamma + sm.d, sm.delta, atol=1e-12)
    np.testing.assert_allclose(sm.gamma, sm.delta**2 / (sm.delta + c), atol=1e-12)
    np.testing.assert_allclose(sm.d, sm.delta * c / (sm.delta + c), atol=1e-12)
    assert np.all(np.diff(sm.delta) <= 1e-12)
    # covariances reassemble in the shared eigenbasis
    np.testing.assert_allclose(sm.covariance("R_hat") + sm.covariance("R_delta"), sm.covariance("R"), atol=1e-10)


def test_error_levels_pairings():
    sm = spectral_model_from_noise(exponential_correlation(30, 0.6, "standard-exponential"), 0.1)
    np.testing.assert_array_equal(sm.error_levels("eigen"), sm.d)
    diag = sm.error_levels("diagonal")
    np.testing.assert_allclose(diag, np.diag(sm.covariance("R_delta")), atol=1e-12)
    assert diag.sum() == pytest.approx(sm.d.sum())


def test_psd_sqrt_examples():
    np.testing.assert_allclose(psd_sqrt(np.eye(4)), np.eye(4), atol=1e-14)
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]), atol=1e-14)
    R = exponential_correlation(10, 0.4)
    S = psd_sqrt(R)
    np.testing.assert_allclose(S @ S.T, R.entries, atol=1e-10)
    np.testing.assert_allclose(S, S.T, atol=1e-12)


def test_load_correlation(tmp_path):
    ok = tmp_path / "eye.csv"
    ok.write_text("1,0\n0,1\n")
    np.testing.assert_array_equal(load_correlation(ok).entries, np.eye(2))

    indefinite = tmp_path / "bad.csv"
    indefinite.write_text("1,2\n2,1\n")
    with pytest.raises(CorrelationError, match="PSD|positive"):
        load_correlation(indefinite)

    rect = tmp_path / "rect.csv"
    rect.write_text("1,0,0\n0,1,0\n")
    with pytest.raises(CorrelationError, match="square"):
        load_correlation(rect)

    with pytest.raises(CorrelationError):
        load_correlation(tmp_path / "missing.csv")


def test_diagonal_matrix_spectrum():
    R = CorrelationMatrix(np.diag([1.0, 3.0, 0.0, 2.0]))
    sm = spectral_model_from_noise(R, 0.5)
    np.testing.assert_array_equal(sm.delta, [3.0, 2.0, 1.0, 0.0])
    np.testing.assert_allclose(sm.covariance("R"), R.entries, atol=1e-15)
    np.testing.assert_allclose(psd_sqrt(R), np.diag(np.sqrt([1.0, 3.0, 0.0, 2.0])), atol=1e-15)
    with pytest.raises(CorrelationError):
        CorrelationMatrix(np.diag([1.0, -0.5]))
