"""Numerical laboratory for travelling waves of the nonlocal Fisher-KPP equation."""

from .analysis import (
    DispersionReport,
    Thresholds,
    bistable_condition,
    connectivity_condition,
    critical_speed,
    dispersion_growth,
    k0_constant,
    rapid_speed_threshold,
    turing_analysis,
)
from .errors import (
    BlowUp,
    ConfigError,
    DegenerateIntegral,
    DivergentMoment,
    InconclusiveScan,
    InsufficientSamples,
    InvalidKernel,
    NlfisherError,
    NoCrossing,
    NonpositiveMu,
    StencilOverrun,
    TruncationFailure,
    ValidationError,
)
from .kernels import (
    Gaussian,
    Kernel,
    Laplace,
    PowerTail,
    TabulatedKernel,
    Tabulated,
    TopHat,
    ValidationReport,
    parse_kernel_spec,
)
from .solver import (
    Field,
    Grid,
    LocalFisher,
    ModelParams,
    NonlocalBistable,
    NonlocalFisher,
    SimConfig,
    Trajectory,
    convolve,
    evolve,
    mollified_step,
    reaction_term,
    steady_residual,
    step,
    uniform_field,
    wave_tail_rate,
)
from .diagnostics import (
    SpeedFit,
    TailState,
    WaveReport,
    build_report,
    classify_tail,
    energy_audit,
    front_position,
    l2_gradient,
    measure_speed,
    run_report_dict,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUp",
    "ConfigError",
    "DegenerateIntegral",
    "DispersionReport",
    "DivergentMoment",
    "Field",
    "Gaussian",
    "Grid",
    "InconclusiveScan",
    "InsufficientSamples",
    "InvalidKernel",
    "Kernel",
    "Laplace",
    "LocalFisher",
    "ModelParams",
    "NlfisherError",
    "NoCrossing",
    "NonlocalBistable",
    "NonlocalFisher",
    "NonpositiveMu",
    "PowerTail",
    "SimConfig",
    "SpeedFit",
    "StencilOverrun",
    "Tabulated",
    "TabulatedKernel",
    "TailState",
    "Thresholds",
    "TopHat",
    "Trajectory",
    "TruncationFailure",
    "ValidationError",
    "ValidationReport",
    "WaveReport",
    "bistable_condition",
    "build_report",
    "classify_tail",
    "connectivity_condition",
    "convolve",
    "critical_speed",
    "dispersion_growth",
    "energy_audit",
    "evolve",
    "front_position",
    "k0_constant",
    "l2_gradient",
    "measure_speed",
    "mollified_step",
    "parse_kernel_spec",
    "rapid_speed_threshold",
    "reaction_term",
    "run_report_dict",
    "steady_residual",
    "step",
    "turing_analysis",
    "uniform_field",
    "wave_tail_rate",
]
