"""Numerical laboratory for a two-component critical Emden-Fowler system.

Integrates the logarithmic-radial ODE system with a conserved-energy audit,
evaluates the radial Pohozaev functionals, classifies orbits by the sign of
the invariant, and drives reproducible batch experiments.
"""

from . import errors
from .classify import (
    BLOW_UP,
    BOTH_SINGULAR,
    ENTIRE,
    INCONCLUSIVE,
    SEMI_SINGULAR,
    SIGN_CHANGING,
    VERDICTS,
    Classification,
    EstimateReport,
    classify,
    decay_rate,
    proportionality_probe,
    sharp_constants,
)
from .dynamics import (
    Event,
    IntegratorSettings,
    Trajectory,
    detect_extrema,
    integrate,
    rhs,
    to_fowler,
    to_radial,
)
from .experiments import (
    ExperimentReport,
    InitialData,
    SamplerSpec,
    semi_singular_search,
    shoot_entire,
    shoot_settings,
    sign_change_experiment,
    sweep,
)
from .invariants import (
    InvariantReport,
    f_pair,
    monitor,
    pohozaev_scalar,
    pohozaev_system,
    psi,
)
from .params import (
    CouplingSolution,
    SystemParams,
    bubble_amplitude,
    bubble_fowler,
    bubble_radial,
    cylinder_amplitudes,
    cylinder_state,
    make_params,
    scalar_bubble_radial,
    solve_coupling,
)
from .serialize import (
    export_csv,
    export_plot_data,
    load_trajectory,
    save_trajectory,
)
from .state import FowlerState

__version__ = "0.1.0"

__all__ = [
    "BLOW_UP",
    "BOTH_SINGULAR",
    "ENTIRE",
    "INCONCLUSIVE",
    "SEMI_SINGULAR",
    "SIGN_CHANGING",
    "VERDICTS",
    "Classification",
    "CouplingSolution",
    "EstimateReport",
    "Event",
    "ExperimentReport",
    "FowlerState",
    "InitialData",
    "IntegratorSettings",
    "InvariantReport",
    "SamplerSpec",
    "SystemParams",
    "Trajectory",
    "bubble_amplitude",
    "bubble_fowler",
    "bubble_radial",
    "classify",
    "cylinder_amplitudes",
    "cylinder_state",
    "decay_rate",
    "detect_extrema",
    "errors",
    "export_csv",
    "export_plot_data",
    "f_pair",
    "integrate",
    "load_trajectory",
    "make_params",
    "monitor",
    "pohozaev_scalar",
    "pohozaev_system",
    "proportionality_probe",
    "psi",
    "rhs",
    "save_trajectory",
    "scalar_bubble_radial",
    "semi_singular_search",
    "sharp_constants",
    "shoot_entire",
    "shoot_settings",
    "sign_change_experiment",
    "solve_coupling",
    "sweep",
    "to_fowler",
    "to_radial",
]
