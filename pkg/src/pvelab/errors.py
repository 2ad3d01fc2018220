"""Exception types shared across the package."""


class PvelabError(Exception):
    """Base class for all package errors."""


class InvalidParams(PvelabError):
    """Physical parameter set violates an invariant."""


class InvalidRegime(PvelabError):
    """Operation not defined in the active parameter regime."""


class InvalidResolution(PvelabError):
    """Mesh resolution out of range."""


class SpaceMismatch(PvelabError):
    """Field vector belongs to the wrong function space."""


class NonZeroMean(PvelabError):
    """Pressure data violates the zero-mean constraint."""


class Underspecified(PvelabError):
    """Initial data combination is not admissible for the regime."""


class OverspecifiedInconsistent(PvelabError):
    """Redundant initial data disagrees beyond tolerance."""


class SolveFailure(PvelabError):
    """A linear solve did not reach the requested residual."""


class SingularSystem(PvelabError):
    """Block system factorization failed; indicates an assembly bug."""


class EigenFailure(PvelabError):
    """Eigenvalue computation failed to converge."""


class DenseModeUnavailable(PvelabError):
    """Problem dimension exceeds the dense-mode threshold."""


class RegimeMismatch(PvelabError):
    """Requested diagnostic is incompatible with the trajectory regime."""


class NonPositiveSeries(PvelabError):
    """Decay fit requested on a series with non-positive values."""


class UnresolvedRange(PvelabError):
    """Requested probe times are not resolved by the mesh/data."""


class UnsupportedSource(PvelabError):
    """Closed-form oracle does not cover this source time dependence."""


class MissingTimeDerivative(PvelabError):
    """Reduced formulation needs an analytic source time derivative."""


class ConfigError(PvelabError):
    """Scenario configuration file is invalid."""
