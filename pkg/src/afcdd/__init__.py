"""Simulation and analysis of spin-wave storage in an atomic frequency comb memory
under dynamical decoupling.

Modules
-------
afc        field configuration, operating constraints, efficiency budget
ou         Ornstein-Uhlenbeck spectral diffusion with exact segment sampling
sequences  XX / XY4 / XY8 pulse trains
spinsim    Monte Carlo ensemble propagation
coherence  closed-form decay models and asymptotic T2 formulas
pulses     hyperbolic-secant pulse Bloch integration
holeburn   comb preparation with spectral side-holes
fitting    decay-curve fitting (scikit-learn style regressors)
"""

__version__ = "0.1.0"

from .afc import (CombSpec, ConstraintReport, EfficiencyBudget, FieldConfig, OperatingEnvelope,
                  Splittings, check_constraints, compute_splittings, total_efficiency)
from .coherence import (eta_ou, eta_ou_simplified, gamma_ou, t2_1_from_ou, t2_combined,
                        t2_ou_limit, t2_pulse_error)
from .curves import DecayCurve
from .fitting import (DecayCurveRegressor, FitModel, FitResult, OUGlobalRegressor,
                      PowerLawRegressor, PulseErrorRegressor, compare_models, fit_decay,
                      fit_epsilon_from_t2, fit_ou_global, fit_power_law)
from .ou import OuParams
from .sequences import DdSequence, SequenceKind, build_sequence
from .spinsim import (EnsembleConfig, MonteCarloDecay, SimResult, simulate,
                      simulate_decay_fixed_n, simulate_decay_fixed_tau)

__all__ = [
    "CombSpec", "ConstraintReport", "EfficiencyBudget", "FieldConfig", "OperatingEnvelope",
    "Splittings", "check_constraints", "compute_splittings", "total_efficiency",
    "eta_ou", "eta_ou_simplified", "gamma_ou", "t2_1_from_ou", "t2_combined", "t2_ou_limit",
    "t2_pulse_error", "DecayCurve", "DecayCurveRegressor", "FitModel", "FitResult",
    "OUGlobalRegressor", "PowerLawRegressor", "PulseErrorRegressor", "compare_models",
    "fit_decay", "fit_epsilon_from_t2", "fit_ou_global", "fit_power_law", "OuParams",
    "DdSequence", "SequenceKind", "build_sequence", "EnsembleConfig", "MonteCarloDecay",
    "SimResult", "simulate", "simulate_decay_fixed_n", "simulate_decay_fixed_tau",
]
