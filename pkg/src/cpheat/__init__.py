"""Eigenvalue and heat-content numerics for pure-jump processes killed
outside bounded domains, with rearrangement-based shape comparisons."""

__version__ = "0.1.0"

from .geometry import (
    Ball,
    Box,
    Domain,
    Ellipsoid,
    GridSet,
    Interval,
    LinearImage,
    Translate,
    apply_linear,
    monte_carlo_volume,
    self_difference_subset,
    symmetric_rearrangement,
)
from .jumps import (
    GaussianIsotropic,
    JumpDensity,
    ProcessSpec,
    RadialDecreasing,
    UniformOnSet,
    rearranged_density,
    validate_assumptions,
)
from .eigenvalue import (
    QuadratureSpec,
    alpha,
    closed_form_uniform,
    faber_krahn_gap,
    principal_eigenvalue,
)
from .shc import (
    EstimateCI,
    ShcCurve,
    estimate_Q,
    lambda_from_shc,
    q_series,
    stay_integral,
    survive_one_path,
)
from .rearrangement import (
    GridField,
    check_riesz,
    convolve,
    decreasing_rearrangement,
    indicator_field,
    riesz_functional,
    stay_integral_symmetrization_gap,
)
from .asymptotics import conditional_charfun, conditional_containment, uniform_fourier
from .experiments import (
    EqualityCaseSpec,
    equality_case_check,
    fk_sweep,
    nonuniqueness_counterexample,
)
from .errors import (
    AcceptanceRateError,
    ConfigError,
    CpheatError,
    PreconditionError,
    SamplingError,
)
