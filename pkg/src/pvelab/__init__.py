"""Numerical laboratory for quasi-static poro-visco-elastic consolidation."""

from .errors import (
    ConfigError,
    DenseModeUnavailable,
    EigenFailure,
    InvalidParams,
    InvalidRegime,
    InvalidResolution,
    MissingTimeDerivative,
    NonPositiveSeries,
    NonZeroMean,
    OverspecifiedInconsistent,
    PvelabError,
    RegimeMismatch,
    SingularSystem,
    SolveFailure,
    SpaceMismatch,
    Underspecified,
    UnresolvedRange,
    UnsupportedSource,
)
from .fem import (
    FieldVec,
    Mesh,
    OperatorBundle,
    Space,
    assemble_forms,
    build_mesh,
    embed_displacement,
    norm,
    project_function,
    remove_mean,
)
from .initial import InitialSpec, ResolvedInitialState, resolve_initial_state
from .operators import Operators, OperatorPropertyReport, SolverConfig
from .params import (
    Compressibility,
    PhysParams,
    RegimeKind,
    RegimeTag,
    classify_regime,
    validate_params,
)
from .sources import SourceSpec, ZERO_SOURCES
from .timestepper import (
    State,
    TimeStepper,
    Trajectory,
    recover_u_variation_of_constants,
    run,
    step_full,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
