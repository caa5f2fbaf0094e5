import numpy as np
import pytest

from rzfmimo.channel import CorrelationSpec, Scenario, SystemConfig
from rzfmimo.correlation import identity_correlation, spectral_model_from_noise


def fig2_config(**changes) -> SystemConfig:
    """zeta=1.5, n=400, r=0.4, T_t=n, T=1000, alpha=0.5, rho=10 dB."""
    cfg = SystemConfig(
        n=400, zeta=1.5, tau=2.5, tau_t=1.0, rho_db=10.0, alpha=0.5, lam="optimal",
        correlation=CorrelationSpec("standard-exponential", 0.4), rdelta="diagonal",
    )
    return cfg.with_(**changes) if changes else cfg


@pytest.fixture(scope="session")
def fig2_scenario() -> Scenario:
    return Scenario(fig2_config())


def perfect_identity(m: int):
    return spectral_model_from_noise(identity_correlation(m), 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
