"""Global optimization with adaptive state-dependent noise.

Stochastic gradient descent whose noise level switches on the current
objective value: small below a decaying cutoff, large above it.  The package
bundles the solver variants, the schedules that drive them, sublevel-volume
and curvature estimation, and a multi-run benchmark harness.
"""

__version__ = "0.1.0"

from .objective import (BoxDomain, Quadratic, Rastrigin, StochasticRastrigin,
                        finite_diff_grad, make_objective)
from .sampler import RngStream, derive_stream, gaussian_vector, uniform_in_box
from .schedule import (ClassicalSchedule, CurvatureBounds, LogarithmicSchedule,
                       PracticalSchedule, QuantileTracker, TheoreticalSchedule,
                       critical_constants, practical_sigma, theoretical_sigma,
                       unit_ball_radius, update_cutoff)
from .solver import RunTrace, SolverConfig, run
from .estimation import (CurvatureEstimate, EmpiricalCdf, build_cdf_iid,
                         build_cdf_online, cutoff_sequence, estimate_bounds,
                         estimate_b1b2_iterative, inverse_cdf, pooled_online_cdf)
from .experiments import (ConvergenceCurve, ExperimentConfig,
                          OccupationHistogram, convergence_experiment,
                          occupation_measure, region_mass, wilson_interval)

__all__ = [
    "__version__",
    "BoxDomain", "Quadratic", "Rastrigin", "StochasticRastrigin",
    "finite_diff_grad", "make_objective",
    "RngStream", "derive_stream", "gaussian_vector", "uniform_in_box",
    "ClassicalSchedule", "CurvatureBounds", "LogarithmicSchedule",
    "PracticalSchedule", "QuantileTracker", "TheoreticalSchedule",
    "critical_constants", "practical_sigma", "theoretical_sigma",
    "unit_ball_radius", "update_cutoff",
    "RunTrace", "SolverConfig", "run",
    "CurvatureEstimate", "EmpiricalCdf", "build_cdf_iid", "build_cdf_online",
    "cutoff_sequence", "estimate_bounds", "estimate_b1b2_iterative",
    "inverse_cdf", "pooled_online_cdf",
    "ConvergenceCurve", "ExperimentConfig", "OccupationHistogram",
    "convergence_experiment", "occupation_measure", "region_mass",
    "wilson_interval",
]
