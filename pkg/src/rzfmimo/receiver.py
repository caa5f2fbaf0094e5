"""Data phase, RZF estimation, sign detection and empirical metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

RESIDUAL_TOL = 1e-8


class ZFRankError(np.linalg.LinAlgError):
    """Zero-forcing (lambda = 0) requested on a rank-deficient channel estimate."""


@dataclass(frozen=True, eq=False)
class DataPhase:
    x0: np.ndarray
    y: np.ndarray
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class DetectionResult:
    x_hat: np.ndarray
    x_star: np.ndarray
    mse: float
    ber: float


def bpsk_symbols(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.random(n) < 0.5, -1.0, 1.0)


def simulate_data_phase(
    A: np.ndarray,
    x0: np.ndarray,
    rho_d: float,
    rng: np.random.Generator | None = None,
    noiseless: bool = False,
) -> DataPhase:
    """``y = sqrt(rho_d / n) A x0 + w`` with ``w ~ N(0, I_m)``."""
    m, n = A.shape
    if x0.shape != (n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
    if noiseless:
        w = np.zeros(m)
    else:
        w = rng.standard_normal(m)
    y = math.sqrt(rho_d / n) * (A @ x0) + w
    return DataPhase(x0=x0, y=y, w=w)


def rzf_estimate(A_hat: np.ndarray, y: np.ndarray, rho_d: float, lam: float) -> np.ndarray:
    """Regularised zero-forcing estimate ``(At^T At + rho_d lam I)^-1 At^T y``.

    ``At = sqrt(rho_d / n) A_hat``. Solved by Cholesky on the ``n x n``
    regularised Gram matrix; ``lam = 0`` is plain zero-forcing and needs
    ``A_hat`` to have full column rank.
    """
    m, n = A_hat.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if lam < 0:
        raise ValueError(f"regularizer must be >= 0, got {lam}")
    At = math.sqrt(rho_d / n) * A_hat
    G = At.T @ At
    G[np.diag_indices_from(G)] += rho_d * lam
    b = At.T @ y
    if lam == 0 and m < n:
        raise ZFRankError(f"zero-forcing needs m >= n for an invertible Gram matrix (m={m}, n={n})")
    try:
        factor = scipy.linalg.cho_factor(G, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ZFRankError(
            "regularised Gram matrix is not positive definite; with lambda = 0 the "
            "zero-forcing receiver needs a full-column-rank channel estimate"
        ) from exc
    # pivots of the Cholesky factor bound the condition number of G from below
    piv = np.abs(np.diag(factor[0]))
    if piv.min() ** 2 < n * np.finfo(float).eps * piv.max() ** 2:
        raise ZFRankError(
            f"regularised Gram matrix is numerically singular (lambda = {lam}); "
            "zero-forcing needs a full-column-rank channel estimate"
        )
    x_hat = scipy.linalg.cho_solve(factor, b, check_finite=False)
    resid = np.linalg.norm(G @ x_hat - b)
    if resid > RESIDUAL_TOL * max(np.linalg.norm(b), np.finfo(float).tiny):
        raise ZFRankError(f"normal-equation residual {resid:.3g} exceeds tolerance; system is ill-conditioned")
    return x_hat


def detect(x_hat: np.ndarray) -> np.ndarray:
    """Entrywise sign; exact zeros (either sign) map to +1."""
    return np.where(np.asarray(x_hat) >= 0, 1.0, -1.0)


def empirical_metrics(x0: np.ndarray, x_hat: np.ndarray) -> tuple[float, float]:
    x0 = np.asarray(x0, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x0.shape != x_hat.shape:
        raise ValueError(f"length mismatch: x0 {x0.shape} vs x_hat {x_hat.shape}")
    mse = float(np.mean((x0 - x_hat) ** 2))
    ber = float(np.mean(detect(x_hat) != x0))
    return mse, ber


def rzf_detect(A_hat: np.ndarray, data: DataPhase, rho_d: float, lam: float) -> DetectionResult:
    x_hat = rzf_estimate(A_hat, data.y, rho_d, lam)
    mse, ber = empirical_metrics(data.x0, x_hat)
    return DetectionResult(x_hat=x_hat, x_star=detect(x_hat), mse=mse, ber=ber)
