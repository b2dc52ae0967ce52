"""frontlim: sharp-interface limits of bistable reaction-diffusion flows.

A desk-scale laboratory for fronts moving through a medium whose speed
jumps across an interface: the regularized reaction-diffusion dynamics,
the limiting level-set flows (first order, and with mean curvature), the
control-theoretic arrival-time picture, and a harness measuring how the
regularized fronts converge to the limit.
"""

from .arrival import (ArrivalField, CHAMFER_FACTOR, arrival_time,
                      no_interior_check, represent_field, represent_value)
from .asymptotics import (ArrivalReference, ConvergenceReport, EpsilonLadder,
                          GenerationResult, generation_scale, generation_time,
                          half_limit_agreement, phase_regions, reaction_ode,
                          relaxed_limits, run_convergence_study, scaled_offset)
from .errors import FrontlimError, NoInterfaceError, NumericalError, SpecError
from .fields import (FrontTriple, Grid, ScalarField, front_size,
                     hausdorff_distance, interior_band_measure, read_field,
                     signed_distance, write_field, write_field_csv,
                     zero_level_set)
from .hamilton_jacobi import (BracketResult, HJConfig, HJSolution, bracket_run,
                              mcf_run, speed_field)
from .hamilton_jacobi import run as hj_run
from .models import (BistableModel, ModelReport, VelocityModel,
                     circle_interface, constant_speed_model, far_interface,
                     hyperplane_interface, two_speed_model, validate_model,
                     wave_equation_residual, wave_front_initial)
from .reaction_diffusion import (RDConfig, RDTrajectory, equilibrium_fraction,
                                 front_position, front_speed)
from .reaction_diffusion import run as rd_run
from .reaction_diffusion import stable_dt as rd_stable_dt

__version__ = "0.1.0"

__all__ = [
    "ArrivalField", "ArrivalReference", "BistableModel", "BracketResult",
    "CHAMFER_FACTOR", "ConvergenceReport", "EpsilonLadder", "FrontTriple",
    "FrontlimError", "GenerationResult", "Grid", "HJConfig", "HJSolution",
    "ModelReport", "NoInterfaceError", "NumericalError", "RDConfig",
    "RDTrajectory", "ScalarField", "SpecError", "VelocityModel",
    "arrival_time", "bracket_run", "circle_interface", "constant_speed_model",
    "equilibrium_fraction", "far_interface", "front_position", "front_size",
    "front_speed", "generation_scale", "generation_time", "half_limit_agreement",
    "hausdorff_distance",
    "hj_run", "hyperplane_interface", "interior_band_measure", "mcf_run",
    "no_interior_check", "phase_regions", "rd_run", "rd_stable_dt",
    "reaction_ode", "read_field", "relaxed_limits", "represent_field",
    "represent_value", "run_convergence_study", "scaled_offset",
    "signed_distance", "speed_field", "two_speed_model", "validate_model",
    "wave_equation_residual", "wave_front_initial", "write_field",
    "write_field_csv", "zero_level_set",
]
