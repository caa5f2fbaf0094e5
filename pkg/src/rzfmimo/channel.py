"""Scenario configuration, pilot/data power split and channel generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .correlation import (
    CorrelationMatrix,
    SpectralModel,
    exponential_correlation,
    identity_correlation,
    load_correlation,
    psd_sqrt,
    spectral_model,
)


class ConfigError(ValueError):
    """Invalid scenario parameter; the message names the offending key."""


@dataclass(frozen=True)
class CorrelationSpec:
    """Which receive-correlation model to build.

    ``kind`` is one of ``exponential`` (``r**(|i-j|**2)``),
    ``standard-exponential`` (``r**|i-j|``), ``identity`` or ``file``.
    """

    kind: str = "standard-exponential"
    r: float = 0.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("exponential", "standard-exponential", "identity", "file"):
            raise ConfigError(f"correlation.kind: unknown model {self.kind!r}")
        if self.kind in ("exponential", "standard-exponential") and not 0.0 <= self.r < 1.0:
            raise ConfigError(f"correlation.r must lie in [0, 1), got {self.r}")
        if self.kind == "file" and not self.path:
            raise ConfigError("correlation.path is required for kind=file")

    def build(self, m: int) -> CorrelationMatrix:
        if self.kind == "identity":
            return identity_correlation(m)
        if self.kind == "file":
            R = load_correlation(self.path)
            if R.m != m:
                raise ConfigError(f"correlation.path holds a {R.m}x{R.m} matrix but m = {m}")
            return R
        return exponential_correlation(m, self.r, self.kind)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters.

    ``lam`` is either an explicit regularizer ``>= 0`` or the string
    ``"optimal"``. ``rdelta`` selects how the error covariance is paired with
    the estimate spectrum in the asymptotic formulas (``"eigen"`` or
    ``"diagonal"``); it does not affect simulation.
    """

    n: int = 400
    zeta: float = 1.5
    tau: float = 2.5
    tau_t: float = 1.0
    rho_db: float = 10.0
    alpha: float = 0.5
    lam: float | str = "optimal"
    correlation: CorrelationSpec = field(default_factory=CorrelationSpec)
    rdelta: str = "eigen"

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not self.zeta > 0:
            raise ConfigError(f"zeta must be > 0, got {self.zeta}")
        if not self.tau_t >= 1.0:
            raise ConfigError(f"tau_t must be >= 1 (orthogonal pilots need T_t >= n), got {self.tau_t}")
        if not self.tau > self.tau_t:
            raise ConfigError(f"tau must exceed tau_t so that tau_d > 0 (tau={self.tau}, tau_t={self.tau_t})")
        if not math.isfinite(self.rho_db):
            raise ConfigError("rho_db must be finite")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if isinstance(self.lam, str):
            if self.lam != "optimal":
                raise ConfigError(f"lambda must be a number >= 0 or 'optimal', got {self.lam!r}")
        elif not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.rdelta not in ("eigen", "diagonal"):
            raise ConfigError(f"rdelta must be 'eigen' or 'diagonal', got {self.rdelta!r}")
        if self.m < 1:
            raise ConfigError(f"zeta * n rounds to m = {self.m}; need m >= 1")

    @property
    def m(self) -> int:
        # round half up
        return int(math.floor(self.zeta * self.n + 0.5))

    @property
    def achieved_zeta(self) -> float:
        return self.m / self.n

    @property
    def tau_d(self) -> float:
        return self.tau - self.tau_t

    @property
    def rho(self) -> float:
        return 10.0 ** (self.rho_db / 10.0)

    def with_(self, **changes) -> SystemConfig:
        if "r" in changes:
            changes["correlation"] = replace(self.correlation, r=changes.pop("r"))
        return replace(self, **changes)


@dataclass(frozen=True)
class PowerSplit:
    rho_t: float
    rho_d: float
    tau_d: float


def split_power(alpha: float, rho: float, tau: float, tau_t: float) -> PowerSplit:
    """Split the block energy ``rho * tau`` into pilot and data powers."""
    tau_d = tau - tau_t
    if tau_d <= 0:
        raise ConfigError(f"tau_d = tau - tau_t must be > 0, got {tau_d}")
    return PowerSplit(
        rho_t=(1.0 - alpha) * rho * tau / tau_t,
        rho_d=alpha * rho * tau / tau_d,
        tau_d=tau_d,
    )


def derive_powers(cfg: SystemConfig) -> PowerSplit:
    return split_power(cfg.alpha, cfg.rho, cfg.tau, cfg.tau_t)


class Scenario:
    """Quantities derived once from a :class:`SystemConfig` and shared read-only.

    Building the correlation matrix and its eigendecomposition is the only
    expensive step, so sweeps that keep ``R`` fixed should reuse it through
    :meth:`with_config`.
    """

    def __init__(self, cfg: SystemConfig, R: CorrelationMatrix | None = None, base: SpectralModel | None = None):
        self.cfg = cfg
        self.powers = derive_powers(cfg)
        self.R = R if R is not None else cfg.correlation.build(cfg.m)
        if base is None:
            self.model = spectral_model(self.R, cfg.tau_t, self.powers.rho_t)
        else:
            self.model = base.with_noise_level(1.0 / (cfg.tau_t * self.powers.rho_t))

    @cached_property
    def R_sqrt(self) -> np.ndarray:
        return psd_sqrt(self.R)

    def with_config(self, cfg: SystemConfig) -> Scenario:
        if cfg.m == self.cfg.m and cfg.correlation == self.cfg.correlation:
            return Scenario(cfg, self.R, self.model)
        return Scenario(cfg)


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    A: np.ndarray
    A_hat: np.ndarray
    Delta: np.ndarray


def sample_true_channel(R_sqrt: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """``A = R^{1/2} H`` with i.i.d. standard normal ``H``."""
    H = rng.standard_normal((R_sqrt.shape[1], n))
    return R_sqrt @ H


def _lmmse_filter(model: SpectralModel) -> np.ndarray:
    # R (R + cI)^-1 shares the eigenbasis of R
    if model.c == 0.0:
        shrink = np.ones_like(model.delta)
    else:
        shrink = model.delta / (model.delta + model.c)
    return (model.basis * shrink) @ model.basis.T


def simulate_training(A: np.ndarray, model: SpectralModel, rng: np.random.Generator) -> np.ndarray:
    """LMMSE channel estimate from the per-column sufficient statistic.

    Each column observes ``a_k + e_k`` with ``e_k ~ N(0, c I)`` and is mapped
    through ``R (R + c I)^-1``; the output covariance is ``R_hat`` and the
    error ``A_hat - A`` has covariance ``R_delta``, independent of ``A_hat``.
    """
    if A.ndim != 2 or A.shape[0] != model.m:
        raise ValueError(f"channel has {A.shape[0] if A.ndim == 2 else '?'} rows, model has m = {model.m}")
    noisy = A + math.sqrt(model.c) * rng.standard_normal(A.shape)
    return _lmmse_filter(model) @ noisy


def orthogonal_pilots(n: int, T_t: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``n x T_t`` pilot matrix with ``X X^T = T_t I``."""
    if T_t < n:
        raise ValueError(f"orthogonal pilots need T_t >= n (T_t={T_t}, n={n})")
    G = rng.standard_normal((T_t, n))
    Qm, _ = np.linalg.qr(G)
    return math.sqrt(T_t) * Qm.T


def simulate_training_with_pilots(
    A: np.ndarray,
    model: SpectralModel,
    pilots: np.ndarray,
    rho_t: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Debug path: transmit explicit orthogonal pilots and estimate from ``Y_t``.

    ``Y_t = sqrt(rho_t/n) A X_t + W_t``. The sufficient statistic is
    ``sqrt(n/rho_t) Y_t X_t^T / T_t``, which equals ``A`` plus white noise of
    variance ``n / (T_t rho_t)`` per entry.
    """
    m, n = A.shape
    T_t = pilots.shape[1]
    W = rng.standard_normal((m, T_t))
    Y_t = math.sqrt(rho_t / n) * A @ pilots + W
    stat = math.sqrt(n / rho_t) * (Y_t @ pilots.T) / T_t
    return _lmmse_filter(model) @ stat


def sample_estimate_direct(model: SpectralModel, n: int, rng: np.random.Generator) -> ChannelInstance:
    """Draw ``A_hat`` and ``Delta`` independently from their covariances; ``A = A_hat - Delta``."""
    U = model.basis
    A_hat = (U * np.sqrt(model.gamma)) @ rng.standard_normal((model.m, n))
    if model.c == 0.0:
        Delta = np.zeros_like(A_hat)
    else:
        Delta = (U * np.sqrt(model.d)) @ rng.standard_normal((model.m, n))
    return ChannelInstance(A=A_hat - Delta, A_hat=A_hat, Delta=Delta)


def sample_estimate_faithful(
    model: SpectralModel, R_sqrt: np.ndarray, n: int, rng: np.random.Generator
) -> ChannelInstance:
    A = sample_true_channel(R_sqrt, n, rng)
    A_hat = simulate_training(A, model, rng)
    return ChannelInstance(A=A, A_hat=A_hat, Delta=A_hat - A)
