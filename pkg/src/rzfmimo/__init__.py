"""Regularized zero-forcing detection for correlated massive MIMO with estimated CSI.

Asymptotic MSE/BER predictions, a matching Monte Carlo simulator and a
pilot/data power allocator.
"""

from .asymptotics import (
    AsymptoticError,
    AsymptoticPrediction,
    FixedPoint,
    asymptotic_ber,
    grid_minimax_oracle,
    locate_saddle,
    objective_F,
    optimal_lambda,
    predict,
    q_function,
    s_gamma,
    solve_fixed_point,
)
from .channel import ConfigError, CorrelationSpec, Scenario, SystemConfig, derive_powers, split_power
from .correlation import (
    CorrelationError,
    CorrelationMatrix,
    SpectralModel,
    exponential_correlation,
    identity_correlation,
    load_correlation,
    spectral_model,
    spectral_model_from_noise,
)
from .montecarlo import TrialAggregate, run_trials, sweep
from .power import closed_form_alpha, golden_section, optimize_alpha, power_allocation
from .receiver import detect, rzf_detect, rzf_estimate

__version__ = "0.1.0"
