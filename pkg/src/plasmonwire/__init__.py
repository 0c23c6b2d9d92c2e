"""Surface plasmons of a metallic nanowire coupled to quantum-dot excitons:
dispersion relations, mode fields, spontaneous-emission rates, band-edge
decay dynamics and super-radiant pair entanglement."""

from .dispersion import (
    BandEdge,
    DispersionCurve,
    ModePoint,
    attach_band_edges,
    curve_to_csv,
    eval_S,
    find_band_edges,
    find_root_complex,
    find_root_real,
    group_velocity,
    solve_on_branch,
    trace_mode,
)
from .dynamics import (
    AmplitudeTrace,
    DynamicsConfig,
    config_from_edge,
    edge_coupling,
    evolve_single,
    laplace_amplitude,
    memory_kernel,
)
from .emission import CouplingTable, RatePoint, rate_sweep, se_rate
from .media import MediumParams, UnitSystem, medium_by_name, permittivity
from .modefields import (
    DipoleSpec,
    ModeProfile,
    coupling_g,
    cross_section_energy,
    eval_fields,
    normalize_mode,
    solve_mode_coefficients,
)
from .specfun import cyl_fun, cyl_fun_deriv
from .twodot import (
    TwoDotConfig,
    TwoDotTrace,
    concurrence,
    entangled_state_phase,
    evolve_two,
    markovian_amplitudes,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeTrace", "BandEdge", "CouplingTable", "DipoleSpec",
    "DispersionCurve", "DynamicsConfig", "MediumParams", "ModePoint",
    "ModeProfile", "RatePoint", "TwoDotConfig", "TwoDotTrace", "UnitSystem",
    "attach_band_edges", "concurrence", "config_from_edge", "coupling_g",
    "cross_section_energy", "curve_to_csv", "cyl_fun", "cyl_fun_deriv",
    "edge_coupling", "entangled_state_phase", "eval_S", "eval_fields",
    "evolve_single", "evolve_two", "find_band_edges", "find_root_complex",
    "find_root_real", "group_velocity", "laplace_amplitude",
    "markovian_amplitudes", "medium_by_name", "memory_kernel",
    "normalize_mode", "permittivity", "rate_sweep", "se_rate",
    "solve_mode_coefficients", "solve_on_branch", "trace_mode",
]
