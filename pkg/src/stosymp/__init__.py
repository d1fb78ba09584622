"""Semi-explicit symplectic integrators for nonseparable stochastic
Hamiltonian systems, with a multi-symplectic stochastic Schrodinger lattice
scheme, baseline integrators, benchmark models, and convergence harnesses."""

from .core import (ExtendedState, HamiltonianModel, LinearInvariant, NoiseGrid,
                   PhaseState, QuadraticInvariant, StepIncrements,
                   build_noise_grid, build_noise_grid_batch, coarsen,
                   eval_linear, eval_quadratic, step_windows, verify_gradients)
from .splitflow import (CompositionRecipe, FlowId, compose, flow_f1, flow_f2,
                        flow_f3, lie_recipe, strang_recipe,
                        symplectic_residual_extended, symplectic_residual_phase)
from .project import (NoConvergence, ProjectionConfig, ProjectionReport,
                      Trajectory, lift, project_map, projection_step, restrict,
                      simulate)
from .baseline import ImplicitSolverConfig, midpoint_step, symplectic_euler_step
from .modelzoo import EXAMPLES, ExampleSpec, get_example
from .harness import (SCHEMES, ConvergenceSpec, OrderReport, TimingRow,
                      cpu_compare, fit_slope, make_stepper, ms_error, track)
from . import nls

__version__ = "0.1.0"

__all__ = [
    "ExtendedState", "HamiltonianModel", "LinearInvariant", "NoiseGrid",
    "PhaseState", "QuadraticInvariant", "StepIncrements", "build_noise_grid",
    "build_noise_grid_batch", "coarsen", "eval_linear", "eval_quadratic",
    "step_windows", "verify_gradients",
    "CompositionRecipe", "FlowId", "compose", "flow_f1", "flow_f2", "flow_f3",
    "lie_recipe", "strang_recipe", "symplectic_residual_extended",
    "symplectic_residual_phase",
    "NoConvergence", "ProjectionConfig", "ProjectionReport", "Trajectory",
    "lift", "project_map", "projection_step", "restrict", "simulate",
    "ImplicitSolverConfig", "midpoint_step", "symplectic_euler_step",
    "EXAMPLES", "ExampleSpec", "get_example",
    "SCHEMES", "ConvergenceSpec", "OrderReport", "TimingRow", "cpu_compare",
    "fit_slope", "make_stepper", "ms_error", "track",
    "nls",
]
