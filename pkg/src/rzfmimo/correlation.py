"""Receive-correlation matrices and their shared eigenbasis.

The channel estimate covariance ``R_hat = R (R + c I)^-1 R`` and the
estimation-error covariance ``R_delta = R - R_hat`` are rational functions of
``R``, so one eigendecomposition of ``R`` diagonalises all three.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

PSD_TOL = 1e-10
SYMMETRY_TOL = 1e-8

CORRELATION_MODELS = ("exponential", "standard-exponential", "identity")


class CorrelationError(ValueError):
    """Raised for matrices that cannot serve as a receive correlation."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Validated real symmetric PSD ``m x m`` correlation matrix."""

    entries: np.ndarray

    def __post_init__(self):
        R = _frozen(self.entries)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise CorrelationError(f"correlation matrix must be square, got shape {R.shape}")
        if R.shape[0] == 0:
            raise CorrelationError("correlation matrix must have m >= 1")
        if not np.all(np.isfinite(R)):
            raise CorrelationError("correlation matrix has non-finite entries")
        if not np.array_equal(R, R.T):
            raise CorrelationError("correlation matrix is not symmetric")
        lo = np.diag(R).min() if _is_diagonal(R) else np.linalg.eigvalsh(R)[0]
        if lo < -PSD_TOL:
            raise CorrelationError(
                f"correlation matrix is not positive semi-definite (min eigenvalue {lo:.3g})"
            )
        object.__setattr__(self, "entries", R)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def normalized_trace(self) -> float:
        return float(np.trace(self.entries)) / self.m


def exponential_correlation(m: int, r: float, model: str = "exponential") -> CorrelationMatrix:
    """Exponential correlation model.

    ``model="exponential"`` gives ``r**(|i-j|**2)`` (squared index distance);
    ``model="standard-exponential"`` gives the usual ``r**|i-j|``.
    """
    if m < 1:
        raise CorrelationError("m must be a positive integer")
    if not 0.0 <= r < 1.0:
        raise CorrelationError(f"r must lie in [0, 1), got {r}")
    idx = np.arange(m)
    dist = np.abs(idx[:, None] - idx[None, :])
    if model == "exponential":
        power = dist**2
    elif model == "standard-exponential":
        power = dist
    else:
        raise CorrelationError(f"unknown exponential model {model!r}")
    # 0.0**0 == 1.0, so r=0 yields the identity
    return CorrelationMatrix(float(r) ** power.astype(float))


def identity_correlation(m: int) -> CorrelationMatrix:
    if m < 1:
        raise CorrelationError("m must be a positive integer")
    return CorrelationMatrix(np.eye(m))


def _is_diagonal(R: np.ndarray) -> bool:
    return np.count_nonzero(R) == np.count_nonzero(np.diag(R))


def _eigh_descending(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if _is_diagonal(R):
        # skip the dense solver; the basis is a column permutation of I
        order = np.argsort(-np.diag(R), kind="stable")
        w, U = np.diag(R)[order], np.eye(R.shape[0])[:, order]
    else:
        w, U = np.linalg.eigh(R)
        w, U = w[::-1], U[:, ::-1]
    if w.size and w[-1] < -PSD_TOL:
        raise CorrelationError(f"matrix is not PSD (min eigenvalue {w[-1]:.3g})")
    return np.clip(w, 0.0, None), U


def psd_sqrt(R: CorrelationMatrix | np.ndarray) -> np.ndarray:
    """Symmetric PSD square root ``S`` with ``S @ S.T == R``."""
    entries = R.entries if isinstance(R, CorrelationMatrix) else np.asarray(R, dtype=float)
    w, U = _eigh_descending(entries)
    return (U * np.sqrt(w)) @ U.T


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Eigen-description of ``R``, ``R_hat`` and ``R_delta`` in their common basis.

    Attributes
    ----------
    basis : (m, m) orthonormal eigenvectors (columns), shared by all three.
    delta : eigenvalues of ``R``, descending.
    gamma : eigenvalues of ``R_hat`` paired with ``delta``.
    d : eigenvalues of ``R_delta`` paired with ``delta``.
    c : estimation noise level ``1 / (tau_t * rho_t)``; 0 means perfect CSI.
    """

    basis: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    d: np.ndarray
    c: float

    @property
    def m(self) -> int:
        return self.delta.size

    def error_diagonal(self) -> np.ndarray:
        """Raw diagonal entries ``[R_delta]_jj`` in antenna order."""
        return (self.basis**2) @ self.d

    def error_levels(self, rdelta: str = "eigen") -> np.ndarray:
        """Per-index error level paired with ``gamma`` in the asymptotic formulas.

        ``"eigen"`` pairs each ``gamma_j`` with the matching eigenvalue of
        ``R_delta``; ``"diagonal"`` pairs it with the ``j``-th raw diagonal
        entry of ``R_delta`` instead.
        """
        if rdelta == "eigen":
            return self.d
        if rdelta == "diagonal":
            return self.error_diagonal()
        raise ValueError(f"unknown R_delta convention {rdelta!r}")

    def covariance(self, which: str = "R") -> np.ndarray:
        vals = {"R": self.delta, "R_hat": self.gamma, "R_delta": self.d}[which]
        return (self.basis * vals) @ self.basis.T

    def with_noise_level(self, c: float) -> SpectralModel:
        """Same ``R``, different pilot energy; no new eigendecomposition."""
        gamma, d = _split_spectrum(self.delta, c)
        return SpectralModel(self.basis, self.delta, _frozen(gamma), _frozen(d), float(c))


def _split_spectrum(delta: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    if c < 0 or not np.isfinite(c):
        raise ValueError(f"estimation noise level must be finite and >= 0, got {c}")
    if c == 0.0:
        return delta.copy(), np.zeros_like(delta)
    denom = delta + c
    return delta * delta / denom, delta * c / denom


def spectral_model(R: CorrelationMatrix, tau_t: float, rho_t: float) -> SpectralModel:
    """Eigendecompose ``R`` once and map its spectrum through the LMMSE covariances.

    ``rho_t = inf`` gives the perfect-CSI model (``c = 0``).
    """
    if not (tau_t > 0 and rho_t > 0):
        raise ValueError("tau_t * rho_t must be positive")
    c = 0.0 if np.isinf(tau_t * rho_t) else 1.0 / (tau_t * rho_t)
    return spectral_model_from_noise(R, c)


def spectral_model_from_noise(R: CorrelationMatrix, c: float) -> SpectralModel:
    if not isinstance(R, CorrelationMatrix):
        R = CorrelationMatrix(R)
    try:
        delta, U = _eigh_descending(R.entries)
    except np.linalg.LinAlgError as exc:
        raise CorrelationError(f"eigendecomposition failed: {exc}") from exc
    gamma, d = _split_spectrum(delta, c)
    return SpectralModel(_frozen(U), _frozen(delta), _frozen(gamma), _frozen(d), float(c))


def load_correlation(path: str | Path) -> CorrelationMatrix:
    """Read a comma-separated dense matrix (one row per line, no header)."""
    path = Path(path)
    try:
        R = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except OSError as exc:
        raise CorrelationError(f"{path}: cannot read correlation file ({exc})") from exc
    except ValueError as exc:
        raise CorrelationError(f"{path}: could not parse matrix ({exc})") from exc
    if R.shape[0] != R.shape[1]:
        raise CorrelationError(f"{path}: matrix is non-square ({R.shape[0]}x{R.shape[1]})")
    asym = np.max(np.abs(R - R.T)) if R.size else 0.0
    if asym > SYMMETRY_TOL:
        raise CorrelationError(f"{path}: matrix is asymmetric (max |R - R^T| = {asym:.3g})")
    R = 0.5 * (R + R.T)
    try:
        return CorrelationMatrix(R)
    except CorrelationError as exc:
        raise CorrelationError(f"{path}: {exc}") from exc
