"""Large-system MSE/BER predictions for the RZF receiver.

Everything reduces to the scalar saddle point of

    F(nu, mu) = 1/(2n) sum_j (gamma_j rho_d nu + rho_d d_j + 1) / (1/2 + rho_d gamma_j / mu)
                + lam rho_d (nu + 1) - nu mu / 2 - 2 lam^2 rho_d^2 / mu,

minimised over ``nu > 0`` and maximised over ``mu > 0``. ``nu*`` is the
limiting MSE. ``mu*`` solves a scalar fixed-point equation, and ``nu*``
follows in closed form from the stationarity of ``F`` in ``mu``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .correlation import SpectralModel

log = logging.getLogger(__name__)

MU_TOL = 1e-12
MAX_ITER = 10_000


class AsymptoticError(ArithmeticError):
    """No valid asymptotic prediction exists for these parameters."""


class GridBoundaryError(AsymptoticError):
    """Grid saddle landed on the boundary; the grid must be expanded."""


def q_function(x):
    """Standard normal upper-tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class FixedPoint:
    nu_star: float
    mu_star: float
    iterations: int
    residual: float
    converged: bool
    method: str = "iteration"


@dataclass(frozen=True)
class AsymptoticPrediction:
    mse: float
    ber: float
    s_gamma: float
    lambda_used: float
    fixed_point: FixedPoint


def _spectrum(model: SpectralModel, rdelta: str) -> tuple[np.ndarray, np.ndarray]:
    return model.gamma, model.error_levels(rdelta)


def objective_F(nu, mu, model: SpectralModel, rho_d: float, lam: float, n: int, rdelta: str = "eigen"):
    """Scalar minimax objective; broadcasts over array-valued ``nu`` and ``mu``."""
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(nu <= 0) or np.any(mu <= 0):
        raise ValueError("objective_F needs nu > 0 and mu > 0")
    g, d = _spectrum(model, rdelta)
    nu_, mu_ = nu[..., None], mu[..., None]
    terms = (g * rho_d * nu_ + rho_d * d + 1.0) / (0.5 + rho_d * g / mu_)
    out = (
        terms.sum(axis=-1) / (2.0 * n)
        + lam * rho_d * (nu + 1.0)
        - nu * mu / 2.0
        - 2.0 * lam**2 * rho_d**2 / mu
    )
    return float(out) if out.ndim == 0 else out


def _mu_map(mu: float, g: np.ndarray, rho_d: float, lam: float, n: int) -> float:
    return float(np.sum(mu * rho_d * g / (mu / 2.0 + rho_d * g)) / n + 2.0 * lam * rho_d)


def _solve_mu(model: SpectralModel, rho_d: float, lam: float, n: int) -> tuple[float, int, float, str]:
    g = model.gamma
    if lam < 0:
        raise ValueError(f"regularizer must be >= 0, got {lam}")
    if lam == 0 and np.count_nonzero(g > 0) <= n:
        raise AsymptoticError(
            "ZF regime infeasible: lambda = 0 needs more active receive dimensions than "
            f"transmitters (m={model.m}, n={n})"
        )
    mu0 = 2.0 * lam * rho_d + rho_d * float(np.sum(g)) / n
    mu = mu0
    for it in range(1, MAX_ITER + 1):
        h = _mu_map(mu, g, rho_d, lam, n)
        if abs(h - mu) <= MU_TOL * mu:
            return mu, it, abs(h - mu) / mu, "iteration"
        mu = 0.5 * mu + 0.5 * h
        if not (mu > 0 and math.isfinite(mu)):
            break
    log.debug("damped mu iteration stalled after %d steps, bracketing", it)

    def gap(x):
        return _mu_map(x, g, rho_d, lam, n) - x

    lo, hi = 1e-12, mu0 * 1e3
    if not (gap(lo) > 0 > gap(hi)):
        raise AsymptoticError(f"could not bracket the mu fixed point in [{lo}, {hi}]")
    mu = brentq(gap, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return mu, it, abs(gap(mu)) / mu, "bracket"


def solve_mu(model: SpectralModel, rho_d: float, lam: float, n: int) -> float:
    """Positive root of ``mu = (1/n) sum_j mu rho_d g_j / (mu/2 + rho_d g_j) + 2 lam rho_d``."""
    return _solve_mu(model, rho_d, lam, n)[0]


def solve_nu(mu_star: float, model: SpectralModel, rho_d: float, lam: float, n: int, rdelta: str = "eigen") -> float:
    """Limiting MSE from the ``mu``-stationarity of ``F`` at ``mu_star``."""
    g, d = _spectrum(model, rdelta)
    den = mu_star / 2.0 + rho_d * g
    D = 1.0 - float(np.sum(rho_d**2 * g**2 / den**2)) / n
    if D <= 0:
        raise AsymptoticError(f"asymptotic MSE diverges (stationarity denominator {D:.3g} <= 0)")
    num = float(np.sum(rho_d * g * (rho_d * d + 1.0) / den**2)) / n + 4.0 * lam**2 * rho_d**2 / mu_star**2
    return num / D


def solve_fixed_point(model: SpectralModel, rho_d: float, lam: float, n: int, rdelta: str = "eigen") -> FixedPoint:
    mu, it, resid, method = _solve_mu(model, rho_d, lam, n)
    nu = solve_nu(mu, model, rho_d, lam, n, rdelta)
    return FixedPoint(nu_star=nu, mu_star=mu, iterations=it, residual=resid, converged=resid <= 1e-10, method=method)


def s_gamma(nu: float, mu: float, model: SpectralModel, rho_d: float, n: int, rdelta: str = "eigen", form: str = "derived") -> float:
    """Spectral sum ``(1/n) sum_j (rho_d g_j^2 nu + g_j (rho_d d_j + 1)) / (1/2 + rho_d g_j / mu)^2``.

    ``form="printed"`` multiplies the second numerator term by an extra
    ``rho_d``; that variant only exists to pair with ``ber_formula="printed"``.
    """
    if nu <= 0 or mu <= 0:
        raise ValueError("s_gamma needs nu > 0 and mu > 0")
    g, d = _spectrum(model, rdelta)
    noise_scale = {"derived": 1.0, "printed": rho_d}[form]
    num = rho_d * g**2 * nu + noise_scale * g * (rho_d * d + 1.0)
    return float(np.sum(num / (0.5 + rho_d * g / mu) ** 2)) / n


def asymptotic_ber(fp: FixedPoint, s_gamma: float, rho_d: float, lam: float, formula: str = "derived") -> float:
    """Limiting bit error rate.

    The soft output error behaves as ``-sqrt(nu) (2 lam sqrt(rho_d) - sqrt(S) s) / sqrt(4 rho_d lam^2 + S)``
    with ``s`` standard normal, so the error probability is
    ``Q((sqrt(4 rho_d lam^2 + S) - 2 lam sqrt(rho_d nu)) / sqrt(nu S))``.
    """
    nu = fp.nu_star
    if not (s_gamma > 0 and nu > 0):
        raise AsymptoticError(f"BER undefined for nu*={nu}, S_gamma={s_gamma}")
    if formula == "derived":
        arg = (math.sqrt(4.0 * rho_d * lam**2 + s_gamma) - 2.0 * lam * math.sqrt(rho_d * nu)) / math.sqrt(nu * s_gamma)
    elif formula == "printed":
        rad = (4.0 * lam**2 * rho_d * (1.0 - nu) + s_gamma) / (nu * s_gamma)
        if rad < 0:
            raise AsymptoticError(
                f"negative Q-argument radicand {rad:.3g} (nu*={nu}, S_gamma={s_gamma}, lambda={lam}, rho_d={rho_d})"
            )
        arg = math.sqrt(rad)
    else:
        raise ValueError(f"unknown BER formula {formula!r}")
    return float(q_function(arg))


def q_argument(fp: FixedPoint, rho_d: float, lam: float) -> float:
    """BER Q-argument written with the saddle values only: ``(mu - 2 rho_d lam) / sqrt(mu^2 nu - 4 lam^2 rho_d^2)``."""
    mu, nu = fp.mu_star, fp.nu_star
    return (mu - 2.0 * rho_d * lam) / math.sqrt(mu**2 * nu - 4.0 * lam**2 * rho_d**2)


def optimal_lambda(model: SpectralModel, rho_d: float, m: int | None = None) -> float:
    """MSE/BER-optimal regularizer ``1/rho_d + tr(R_delta)/m``."""
    m = model.m if m is None else m
    return 1.0 / rho_d + float(np.sum(model.d)) / m


def predict(
    model: SpectralModel,
    rho_d: float,
    lam: float,
    n: int,
    rdelta: str = "eigen",
    ber_formula: str = "derived",
) -> AsymptoticPrediction:
    fp = solve_fixed_point(model, rho_d, lam, n, rdelta)
    S = s_gamma(fp.nu_star, fp.mu_star, model, rho_d, n, rdelta, form=ber_formula)
    ber = asymptotic_ber(fp, S, rho_d, lam, formula=ber_formula)
    return AsymptoticPrediction(mse=fp.nu_star, ber=ber, s_gamma=S, lambda_used=lam, fixed_point=fp)


@dataclass(frozen=True)
class OracleResult:
    nu: float
    mu: float
    value: float
    nu_step: float
    mu_step: float


def grid_minimax_oracle(
    model: SpectralModel,
    rho_d: float,
    lam: float,
    n: int,
    nu_grid,
    mu_grid,
    rdelta: str = "eigen",
) -> OracleResult:
    """Brute-force ``min`` over ``nu_grid`` of ``max`` over ``mu_grid`` of ``F``.

    ``F`` is affine in ``nu``, so the full grid is filled from two
    evaluations per ``mu`` column.
    """
    nu_grid = np.asarray(nu_grid, dtype=float)
    mu_grid = np.asarray(mu_grid, dtype=float)
    F1 = objective_F(1.0, mu_grid, model, rho_d, lam, n, rdelta)
    F2 = objective_F(2.0, mu_grid, model, rho_d, lam, n, rdelta)
    table = F1[None, :] + (nu_grid[:, None] - 1.0) * (F2 - F1)[None, :]
    inner = table.argmax(axis=1)
    upper = table[np.arange(nu_grid.size), inner]
    i = int(upper.argmin())
    j = int(inner[i])
    if i in (0, nu_grid.size - 1):
        raise GridBoundaryError(f"nu saddle on grid boundary ({nu_grid[i]:.4g}); expand nu grid")
    if j in (0, mu_grid.size - 1):
        raise GridBoundaryError(f"mu saddle on grid boundary ({mu_grid[j]:.4g}); expand mu grid")
    nu_step = max(nu_grid[i + 1] - nu_grid[i], nu_grid[i] - nu_grid[i - 1])
    mu_step = max(mu_grid[j + 1] - mu_grid[j], mu_grid[j] - mu_grid[j - 1])
    return OracleResult(float(nu_grid[i]), float(mu_grid[j]), float(upper[i]), float(nu_step), float(mu_step))


def locate_saddle(
    model: SpectralModel,
    rho_d: float,
    lam: float,
    n: int,
    rdelta: str = "eigen",
    resolution: float = 1e-3,
    points: int = 400,
    span: tuple[float, float] = (1e-4, 1e2),
) -> OracleResult:
    """Grid oracle with automatic expansion and zoom until both steps are <= ``resolution``."""
    nu_lo, nu_hi = span
    mu_lo, mu_hi = span
    log_scale = True
    for _ in range(60):
        mk = np.geomspace if log_scale else np.linspace
        nu_grid = mk(nu_lo, nu_hi, points)
        mu_grid = mk(mu_lo, mu_hi, points)
        try:
            res = grid_minimax_oracle(model, rho_d, lam, n, nu_grid, mu_grid, rdelta)
        except GridBoundaryError as exc:
            if "nu saddle" in str(exc):
                nu_lo, nu_hi = _widen(nu_lo, nu_hi, log_scale)
            else:
                mu_lo, mu_hi = _widen(mu_lo, mu_hi, log_scale)
            continue
        if res.nu_step <= resolution and res.mu_step <= resolution:
            return res
        log_scale = False
        nu_lo, nu_hi = max(res.nu - 3 * res.nu_step, res.nu * 1e-3), res.nu + 3 * res.nu_step
        mu_lo, mu_hi = max(res.mu - 3 * res.mu_step, res.mu * 1e-3), res.mu + 3 * res.mu_step
    raise GridBoundaryError("grid oracle failed to localise the saddle")


def _widen(lo: float, hi: float, log_scale: bool) -> tuple[float, float]:
    if log_scale:
        return lo / 100.0, hi * 100.0
    mid, half = 0.5 * (lo + hi), hi - lo
    return max(mid - 1.5 * half, lo * 1e-3), mid + 1.5 * half
