"""Physical parameters and regime classification.

The coupled model is controlled by the elastic moduli (lambda_e, mu), the
pressure coupling alpha, the storage coefficient c0, the permeability kappa,
and three damping-type coefficients: delta1 (strain-rate damping of the full
stress), delta2 (strain-rate contribution to the fluid content, tied to
delta1 by delta2 = alpha*delta1), and lambda_star (dilation-rate damping
only, "secondary consolidation").  The zero/nonzero pattern of
(delta1, delta2, lambda_star, c0) selects one of four structurally different
evolution problems; ``classify_regime`` makes that selection explicit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidParams

# Relative tolerance for the coefficient identity delta2 = alpha*delta1.
DELTA2_REL_TOL = 1e-12


class RegimeKind(Enum):
    CLASSICAL_BIOT = "ClassicalBiot"
    VISCO_STANDARD_CONTENT = "ViscoStandardContent"
    VISCO_ADJUSTED_CONTENT = "ViscoAdjustedContent"
    SECONDARY_CONSOLIDATION = "SecondaryConsolidation"


class Compressibility(Enum):
    INCOMPRESSIBLE = "Incompressible"  # c0 = 0
    COMPRESSIBLE = "Compressible"      # c0 > 0


@dataclass(frozen=True)
class RegimeTag:
    kind: RegimeKind
    compressibility: Compressibility


@dataclass(frozen=True)
class PhysParams:
    """All physical coefficients of the coupled model.

    Attributes
    ----------
    lambda_e : float
        First Lame parameter, > 0.
    mu : float
        Shear modulus, > 0.
    alpha : float
        Pressure-dilation coupling coefficient, > 0 (dimensionless).
    c0 : float
        Storage coefficient, >= 0; c0 = 0 is the incompressible case.
    kappa : float
        Permeability (constant in space and time), > 0.
    delta1 : float
        Strain-rate (Kelvin-Voigt) damping coefficient, >= 0.
    delta2 : float
        Dilation-rate coefficient in the fluid content, >= 0.  Nonzero
        values must satisfy delta2 = alpha*delta1.
    lambda_star : float
        Secondary-consolidation viscosity, >= 0.  Nonzero only with
        delta1 = 0 (full strain-rate damping would make it redundant).
    """

    lambda_e: float
    mu: float
    alpha: float = 1.0
    c0: float = 0.0
    kappa: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    lambda_star: float = 0.0

    @property
    def lame_p_wave(self) -> float:
        """Combined modulus lambda_e + 2*mu (the 1D elastic coefficient)."""
        return self.lambda_e + 2.0 * self.mu


def validate_params(params: PhysParams) -> list[str]:
    """Check every parameter invariant; return the list of violations.

    An empty list means the parameter set is valid.  Physically dubious but
    mathematically admissible combinations emit warnings instead of
    violations.
    """
    v: list[str] = []
    if not params.mu > 0:
        v.append("mu > 0 required")
    if not params.lambda_e > 0:
        v.append("lambda_e > 0 required")
    if not params.alpha > 0:
        v.append("alpha > 0 required")
    if not params.kappa > 0:
        v.append("kappa > 0 required")
    if params.c0 < 0:
        v.append("c0 >= 0 required")
    if params.delta1 < 0:
        v.append("delta1 >= 0 required")
    if params.delta2 < 0:
        v.append("delta2 >= 0 required")
    if params.lambda_star < 0:
        v.append("lambda_star >= 0 required")
    if params.delta2 > 0:
        if params.delta1 <= 0:
            v.append("delta2 > 0 requires delta1 > 0")
        else:
            target = params.alpha * params.delta1
            if abs(params.delta2 - target) > DELTA2_REL_TOL * abs(target):
                v.append(
                    "delta2 != alpha*delta1 "
                    f"(delta2={params.delta2!r}, alpha*delta1={target!r})"
                )
    if params.lambda_star > 0 and params.delta1 != 0:
        v.append("lambda_star > 0 requires delta1 = 0")
    if not v:
        if params.c0 == 0 and params.delta1 == 0 and params.alpha != 1.0:
            warnings.warn(
                "c0 = 0 with delta1 = 0 usually implies alpha = 1; "
                f"got alpha={params.alpha}",
                UserWarning,
                stacklevel=2,
            )
        if params.c0 == 0 and params.delta2 > 0:
            warnings.warn(
                "c0 = 0 with delta2 > 0 is mathematically admissible but "
                "may not be physically relevant",
                UserWarning,
                stacklevel=2,
            )
    return v


def classify_regime(params: PhysParams) -> RegimeTag:
    """Map a valid parameter set to its unique regime tag.

    Raises
    ------
    InvalidParams
        If the parameters violate an invariant (e.g. delta2 > 0 with
        delta1 = 0, or lambda_star > 0 with delta1 > 0).
    """
    violations = validate_params(params)
    if violations:
        raise InvalidParams("; ".join(violations))

    if params.lambda_star > 0:
        kind = RegimeKind.SECONDARY_CONSOLIDATION
    elif params.delta1 > 0 and params.delta2 > 0:
        kind = RegimeKind.VISCO_ADJUSTED_CONTENT
    elif params.delta1 > 0:
        kind = RegimeKind.VISCO_STANDARD_CONTENT
    else:
        kind = RegimeKind.CLASSICAL_BIOT
    comp = (
        Compressibility.COMPRESSIBLE
        if params.c0 > 0
        else Compressibility.INCOMPRESSIBLE
    )
    return RegimeTag(kind=kind, compressibility=comp)
