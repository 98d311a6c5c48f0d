"""Pseudo-spectral simulator and diagnostics toolkit for the 2D cubic
focusing NLS at critical mass: smoothing-multiplier apparatus, blowup
parameters, mass-concentration windows, and exponent bookkeeping."""

__version__ = "0.1.0"

from .grid import (
    ComplexField2D,
    GridSpec,
    SpectrumField2D,
    apply_symbol,
    energy,
    hs_norm,
    inverse,
    kinetic,
    l4norm4,
    mass,
    mass_in_ball,
    sup_mass_over_cubes,
    transform,
)
from .multiplier import AuditReport, MultiplierProfile, apply_I, apply_I_D, lp_project
from .ground_state import GroundState, c_opt, embed, j_functional, shooting_oracle, solve_petviashvili
from .dynamics import (
    BlowupReport,
    SolverConfig,
    TrajectoryRecord,
    doubling_check,
    estimate_t_star,
    evolve,
    lwp_window,
    step_strang,
    variance_check,
)
from .diagnostics import (
    ConcentrationReport,
    RescaledProfile,
    almost_conservation_experiment,
    concentration_scan,
    limit_profile_mass,
    modified_energy,
    rescale_profile,
)
from .theory import ExponentParams, n_of_lambda, p_of_s, s_q
