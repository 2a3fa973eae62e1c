"""Shrinkage weighted least squares and penalized model selection for regressions
observed on a grid with Ornstein-Uhlenbeck-Levy noise."""

from ._validation import ValidationError
from .analytics import (H2Constants, d_zero, eps_check, gram_gaussian, h2_constants,
                        improvement_bound, p_zero, pinsker_constant, tau)
from .basis import dirichlet_excess, grid_inner_product, psi_eval, trig_value
from .estimators import (CoeffSet, ReconstructedSignal, dictionary_projection, evaluate_on_grid,
                         fourier_coeffs, proxy_variance, reconstruct, shrink)
from .grid import GridSpec, SignalModel, make_grid, signal_s1, signal_s2
from .noise import (FamilyBounds, NoiseModel, ObservationPath, simulate_noise_increments,
                    simulate_observations)
from .selection import SelectionResult, objective_J, penalty, select
from .selector import ImprovedModelSelection, WeightedLeastSquares
from .weights import WeightFamily, WeightVector, build_family

__version__ = "0.1.0"

__all__ = [
    "CoeffSet", "FamilyBounds", "GridSpec", "H2Constants", "ImprovedModelSelection",
    "NoiseModel", "ObservationPath", "ReconstructedSignal", "SelectionResult", "SignalModel",
    "ValidationError", "WeightFamily", "WeightVector", "WeightedLeastSquares", "build_family",
    "d_zero", "dictionary_projection", "dirichlet_excess", "eps_check", "evaluate_on_grid",
    "fourier_coeffs", "gram_gaussian", "grid_inner_product", "h2_constants",
    "improvement_bound", "make_grid", "objective_J", "p_zero", "penalty", "pinsker_constant",
    "proxy_variance", "psi_eval", "reconstruct", "select", "shrink", "signal_s1", "signal_s2",
    "simulate_noise_increments", "simulate_observations", "tau", "trig_value",
]
