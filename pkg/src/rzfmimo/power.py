"""Pilot/data power allocation from the asymptotic MSE and BER."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .asymptotics import predict, optimal_lambda, solve_fixed_point
from .channel import Scenario, SystemConfig

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ALPHA_BOUNDS = (1e-3, 1.0 - 1e-3)


class UnimodalityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchResult:
    x: float
    fx: float
    evaluations: int
    method: str  # "golden" or "grid"


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-5, max_iter: int = 200) -> SearchResult:
    """Minimise a unimodal ``f`` on ``[a, b]``.

    Raises :class:`UnimodalityError` if an interior probe ever exceeds both
    bracket-end values, which a unimodal function cannot do.
    """
    fa, fb = f(a), f(b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 4
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if max(fc, fd) > max(fa, fb):
            raise UnimodalityError(f"bracket [{a:.6g}, {b:.6g}] is inconsistent with a unimodal objective")
        if fc <= fd:
            b, fb = d, fd
            d, fd = c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, fa = c, fc
            c, fc = d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return SearchResult(x=x, fx=fx, evaluations=evals, method="golden")


def grid_scan(f: Callable[[float], float], a: float, b: float, points: int = 1000) -> SearchResult:
    xs = np.linspace(a, b, points)
    fs = np.array([f(x) for x in xs])
    i = int(np.nanargmin(fs))
    return SearchResult(x=float(xs[i]), fx=float(fs[i]), evaluations=points, method="grid")


def closed_form_alpha(rho: float, tau: float, tau_d: float) -> float:
    """Uncorrelated-channel optimum data power ratio (linear ``rho``)."""
    if tau_d == 1.0:
        return 0.5
    theta = (1.0 + rho * tau) / (rho * tau * (1.0 - 1.0 / tau_d))
    disc = theta * (theta - 1.0)
    if disc < 0:
        raise ValueError(f"closed form undefined: theta*(theta-1) = {disc:.3g} < 0")
    alpha = theta - math.sqrt(disc) if tau_d > 1.0 else theta + math.sqrt(disc)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"closed-form alpha {alpha:.6g} outside (0, 1); parameters outside its validity")
    return alpha


def alpha_objective(
    cfg: SystemConfig,
    objective: str = "mse",
    lambda_policy: str = "optimal",
    base: Scenario | None = None,
) -> Callable[[float], float]:
    """Scalar function of ``alpha`` to *minimise*.

    ``mse`` returns ``nu*``; ``ber`` returns the asymptotic BER; ``mu``
    returns ``-mu*``. With ``lambda_policy="optimal"`` the regularizer is
    re-optimised at every ``alpha``, otherwise ``cfg.lam`` is held fixed.
    """
    if objective not in ("mse", "ber", "mu"):
        raise ValueError(f"unknown objective {objective!r}")
    base = base if base is not None else Scenario(cfg)

    def f(alpha: float) -> float:
        sc = base.with_config(cfg.with_(alpha=float(alpha)))
        rho_d = sc.powers.rho_d
        if lambda_policy == "optimal":
            lam = optimal_lambda(sc.model, rho_d)
        elif cfg.lam == "optimal":
            raise ValueError("lambda_policy='fixed' needs an explicit cfg.lam")
        else:
            lam = float(cfg.lam)
        if objective == "mu":
            return -solve_fixed_point(sc.model, rho_d, lam, cfg.n, cfg.rdelta).mu_star
        pred = predict(sc.model, rho_d, lam, cfg.n, cfg.rdelta)
        return pred.mse if objective == "mse" else pred.ber

    return f


def optimize_alpha(
    cfg: SystemConfig,
    objective: str = "mse",
    lambda_policy: str = "optimal",
    tol: float = 1e-5,
    base: Scenario | None = None,
) -> SearchResult:
    f = alpha_objective(cfg, objective, lambda_policy, base)
    try:
        return golden_section(f, *ALPHA_BOUNDS, tol=tol)
    except UnimodalityError as exc:
        log.warning("%s; falling back to a grid scan", exc)
        return grid_scan(f, *ALPHA_BOUNDS)


@dataclass(frozen=True)
class PowerAllocationResult:
    alpha_mse: float
    alpha_ber: float
    alpha_closed_form: float
    objective_curve: np.ndarray  # rows of (alpha, mse, ber)
    method: str = "golden"


def power_allocation(cfg: SystemConfig, curve_points: int = 0, tol: float = 1e-5) -> PowerAllocationResult:
    """Optimal ``alpha`` under both objectives plus the uncorrelated closed form.

    ``curve_points > 0`` additionally samples the (alpha, MSE, BER) curve on
    a uniform grid inside the search bounds.
    """
    base = Scenario(cfg)
    res_mse = optimize_alpha(cfg, "mse", tol=tol, base=base)
    res_ber = optimize_alpha(cfg, "ber", tol=tol, base=base)
    try:
        closed = closed_form_alpha(cfg.rho, cfg.tau, cfg.tau_d)
    except ValueError:
        closed = float("nan")
    curve = np.empty((0, 3))
    if curve_points:
        f_mse = alpha_objective(cfg, "mse", base=base)
        f_ber = alpha_objective(cfg, "ber", base=base)
        alphas = np.linspace(*ALPHA_BOUNDS, curve_points)
        curve = np.array([(a, f_mse(a), f_ber(a)) for a in alphas])
    method = "golden" if res_mse.method == res_ber.method == "golden" else "grid"
    return PowerAllocationResult(res_mse.x, res_ber.x, closed, curve, method)
