"""Oscillation amplitudes of parallel queues driven by periodically
updated state information."""

from .model import (ModelParams, SolverConfig, Trajectory, EmpiricalAmplitude,
                    choice_probabilities, choice_probability, critical_delay,
                    dense_solution, step_map, initial_state, simulate,
                    empirical_amplitude, settle_interval)
from .amplitude2d import (AmplitudeResult, LogitExpansion, NoRealRootError,
                          logit_expansion, table_expansion,
                          fixed_point_residual, solve_fixed_point,
                          linear_approx_amplitude, quadratic_approx_amplitude,
                          quadratic_table_amplitude)
from .amplitude_nd import (OddAmplitudeResult, OddLinearization,
                           reduced_even_params, even_amplitude, g_value,
                           g_prime, odd_linearization, odd_residuals,
                           odd_linear_approx, odd_solve)

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "SolverConfig", "Trajectory", "EmpiricalAmplitude",
    "choice_probabilities", "choice_probability", "critical_delay",
    "dense_solution", "step_map", "initial_state", "simulate",
    "empirical_amplitude", "settle_interval",
    "AmplitudeResult", "LogitExpansion", "NoRealRootError",
    "logit_expansion", "table_expansion", "fixed_point_residual",
    "solve_fixed_point", "linear_approx_amplitude",
    "quadratic_approx_amplitude", "quadratic_table_amplitude",
    "OddAmplitudeResult", "OddLinearization", "reduced_even_params",
    "even_amplitude", "g_value", "g_prime", "odd_linearization",
    "odd_residuals", "odd_linear_approx", "odd_solve",
    "__version__",
]
