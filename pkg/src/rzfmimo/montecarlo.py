"""Reproducible finite-dimensional trials of the full receive chain."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import AsymptoticPrediction, optimal_lambda, predict
from .channel import Scenario, SystemConfig, sample_estimate_direct, sample_estimate_faithful
from .receiver import bpsk_symbols, rzf_estimate, empirical_metrics, simulate_data_phase

log = logging.getLogger(__name__)

# purpose tags for per-trial substreams; append, never renumber
STREAM_CHANNEL = 0
STREAM_SYMBOLS = 1
STREAM_NOISE = 2

SWEEP_VARIABLES = ("lambda", "rho_db", "alpha", "r")


class TrialError(RuntimeError):
    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial} failed: {cause}")
        self.trial = trial


@dataclass(frozen=True)
class TrialAggregate:
    trials: int
    mean_mse: float
    mean_ber: float
    stderr_mse: float
    stderr_ber: float
    master_seed: int
    achieved_zeta: float


def trial_rng(master_seed: int, trial: int, tag: int, stream: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(master_seed, stream, trial, tag)``."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, trial, tag))
    return np.random.default_rng(seq)


def resolve_lambda(cfg: SystemConfig, scenario: Scenario) -> float:
    if cfg.lam == "optimal":
        return optimal_lambda(scenario.model, scenario.powers.rho_d)
    return float(cfg.lam)


def _one_trial(scenario: Scenario, lam: float, master_seed: int, stream: int, t: int, faithful: bool, noiseless: bool):
    cfg = scenario.cfg
    rng_ch = trial_rng(master_seed, t, STREAM_CHANNEL, stream)
    if faithful:
        inst = sample_estimate_faithful(scenario.model, scenario.R_sqrt, cfg.n, rng_ch)
    else:
        inst = sample_estimate_direct(scenario.model, cfg.n, rng_ch)
    x0 = bpsk_symbols(cfg.n, trial_rng(master_seed, t, STREAM_SYMBOLS, stream))
    data = simulate_data_phase(
        inst.A, x0, scenario.powers.rho_d, trial_rng(master_seed, t, STREAM_NOISE, stream), noiseless=noiseless
    )
    x_hat = rzf_estimate(inst.A_hat, data.y, scenario.powers.rho_d, lam)
    return empirical_metrics(x0, x_hat)


def run_trials(
    cfg: SystemConfig,
    trials: int,
    master_seed: int,
    *,
    workers: int = 1,
    faithful_training: bool = False,
    noiseless: bool = False,
    stream: int = 0,
    scenario: Scenario | None = None,
) -> TrialAggregate:
    """Average empirical MSE/BER over ``trials`` independent channel/symbol/noise draws.

    Per-trial results are stored and reduced in trial order, so the result
    does not depend on ``workers``. ``noiseless`` zeroes the data-phase noise
    (debug switch); ``faithful_training`` draws ``A`` first and runs the
    LMMSE estimator instead of sampling ``(A_hat, Delta)`` directly.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scenario = scenario if scenario is not None else Scenario(cfg)
    lam = resolve_lambda(cfg, scenario)

    def work(t: int):
        try:
            return _one_trial(scenario, lam, master_seed, stream, t, faithful_training, noiseless)
        except Exception as exc:
            raise TrialError(t, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(trials)))
    else:
        results = [work(t) for t in range(trials)]
    arr = np.array(results, dtype=float)
    mean = arr.mean(axis=0)
    if trials >= 2:
        se = arr.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        se = np.full(2, np.nan)
    return TrialAggregate(
        trials=trials,
        mean_mse=float(mean[0]),
        mean_ber=float(mean[1]),
        stderr_mse=float(se[0]),
        stderr_ber=float(se[1]),
        master_seed=master_seed,
        achieved_zeta=cfg.achieved_zeta,
    )


@dataclass(frozen=True)
class SweepRow:
    var: str
    value: float
    aggregate: TrialAggregate | None
    prediction: AsymptoticPrediction | None
    lambda_star: float | None
    status: str = "ok"


def apply_sweep_value(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    if variable == "lambda":
        return cfg.with_(lam=float(value))
    if variable == "rho_db":
        return cfg.with_(rho_db=float(value))
    if variable == "alpha":
        return cfg.with_(alpha=float(value))
    if variable == "r":
        return cfg.with_(r=float(value))
    raise ValueError(f"unknown sweep variable {variable!r}; expected one of {SWEEP_VARIABLES}")


def sweep(
    cfg: SystemConfig,
    variable: str,
    values,
    trials: int,
    master_seed: int,
    *,
    workers: int = 1,
    faithful_training: bool = False,
    label: str | None = None,
) -> list[SweepRow]:
    """Analytic prediction and (if ``trials > 0``) Monte Carlo at each sweep value.

    A failing point is recorded in its row's ``status`` and the sweep moves on.
    """
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"unknown sweep variable {variable!r}; expected one of {SWEEP_VARIABLES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    label = label or variable
    rows = []
    base: Scenario | None = None
    for k, value in enumerate(values):
        pred = agg = lam_star = None
        status = "ok"
        try:
            point = apply_sweep_value(cfg, variable, value)
            base = Scenario(point) if base is None else base.with_config(point)
            sc = base
            lam_star = optimal_lambda(sc.model, sc.powers.rho_d)
            lam = resolve_lambda(point, sc)
            try:
                pred = predict(sc.model, sc.powers.rho_d, lam, point.n, point.rdelta)
            except ArithmeticError as exc:
                status = f"analytic error: {exc}"
            if trials > 0:
                agg = run_trials(
                    point, trials, master_seed, workers=workers,
                    faithful_training=faithful_training, stream=k, scenario=sc,
                )
        except Exception as exc:  # record and continue; one bad point must not kill a figure
            log.warning("sweep %s=%s failed: %s", variable, value, exc)
            status = f"error: {exc}"
        rows.append(SweepRow(label, float(value), agg, pred, lam_star, status))
    return rows
