"""Resolution of a complete initial state from admissible data combinations.

Which initial quantities may be prescribed depends on the regime:

====================  ======================================
regime                admissible combinations
====================  ======================================
ClassicalBiot         {p0} or {d0}
delta2=0, c0=0        {p0, u0} (full) or {p0} (pressure-only)
delta2=0, c0>0        {p0, u0} or {p0, p1}
delta2>0, c0=0        {p0, u0} (full) or {p0} (pressure-only)
delta2>0, c0>0        {p0, u0} (full) or {p0} (pressure-only)
SecondaryConsol.      {p0, u0}; with c0=0 in 1D also {u0}
====================  ======================================

Anything else raises ``Underspecified``.  Redundant-but-consistent extras
are accepted (and verified to 1e-10 relative); a pressure-only resolution
carries ``pressure_only=True`` and supports the reduced pressure solvers
but not full-trajectory displacement output.

All derived quantities are produced by deterministic discrete read-off
chains, so feeding a resolved state back through the resolver reproduces
it to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    InvalidRegime,
    NonZeroMean,
    OverspecifiedInconsistent,
    Underspecified,
)
from .fem import FieldVec, remove_mean
from .operators import Operators
from .params import RegimeKind, classify_regime
from .sources import (
    SourceSpec,
    ZERO_SOURCES,
    displacement_load_vector,
    pressure_source_vector,
)

CONSISTENCY_REL_TOL = 1e-10
MEAN_REL_TOL = 1e-12


@dataclass(frozen=True)
class InitialSpec:
    """User-supplied initial quantities; any subset of the four fields."""

    p0: np.ndarray | None = None
    u0: np.ndarray | None = None
    d0: np.ndarray | None = None
    p1: np.ndarray | None = None

    def given(self) -> set[str]:
        return {name for name in ("p0", "u0", "d0", "p1")
                if getattr(self, name) is not None}


@dataclass
class ResolvedInitialState:
    """Complete initial state for the integrators (or pressure-only subset)."""

    p: np.ndarray
    u: np.ndarray | None
    u_dot: np.ndarray | None
    p_dot: np.ndarray | None
    zeta: np.ndarray | None
    provenance: dict = field(default_factory=dict)
    combo: tuple = ()
    pressure_only: bool = False
    rough_start: bool = False      # d0-only data: damp the first step
    kernel_defect: float = 0.0


def _coeffs(x) -> np.ndarray | None:
    if x is None:
        return None
    if isinstance(x, FieldVec):
        return np.asarray(x.coeffs, dtype=float)
    return np.asarray(x, dtype=float)


def _combos(kind: RegimeKind, c0: float, dim: int):
    if kind is RegimeKind.CLASSICAL_BIOT:
        return [("p0",), ("d0",)]
    if kind is RegimeKind.VISCO_STANDARD_CONTENT:
        if c0 > 0:
            return [("p0", "u0"), ("p0", "p1")]
        return [("p0", "u0"), ("p0",)]
    if kind is RegimeKind.VISCO_ADJUSTED_CONTENT:
        return [("p0", "u0"), ("p0",)]
    if kind is RegimeKind.SECONDARY_CONSOLIDATION:
        if c0 == 0 and dim == 1:
            return [("p0", "u0"), ("u0",)]
        return [("p0", "u0")]
    raise InvalidRegime(str(kind))


def resolve_initial_state(
    ops: Operators,
    init: InitialSpec,
    sources: SourceSpec = ZERO_SOURCES,
) -> ResolvedInitialState:
    """Resolve a full initial state from an admissible data combination.

    Raises
    ------
    Underspecified
        When no admissible combination is contained in the given data, or
        when a supplied extra quantity cannot be consumed in this regime.
    OverspecifiedInconsistent
        When redundant data disagrees with the derived state by more than
        1e-10 relative.
    NonZeroMean
        When supplied pressure-space data is not zero-mean.
    """
    bundle = ops.bundle
    params = ops.params
    regime = classify_regime(params)
    kind = regime.kind
    c0, al, d1 = params.c0, params.alpha, params.delta1

    data = {name: _coeffs(getattr(init, name)) for name in
            ("p0", "u0", "d0", "p1")}
    given = {k for k, v in data.items() if v is not None}

    for name in ("p0", "d0", "p1"):
        v = data[name]
        if v is None:
            continue
        nrm = np.linalg.norm(v)
        if nrm > 0 and abs(bundle.meanvec @ v) > MEAN_REL_TOL * nrm:
            raise NonZeroMean(f"{name} violates the zero-mean constraint")

    combos = _combos(kind, c0, bundle.mesh.dim)
    combo = next((c for c in combos if set(c) <= given), None)
    if combo is None:
        raise Underspecified(
            f"{kind.value} (c0={'>0' if c0 > 0 else '0'}) accepts "
            f"{[set(c) for c in combos]}; got {sorted(given) or 'nothing'}"
        )
    extras = given - set(combo)

    f0 = displacement_load_vector(bundle, sources.F, 0.0)
    s0 = pressure_source_vector(bundle, sources.S, 0.0)
    Mp, Ap, Ke = bundle.Mp, bundle.Ap, bundle.Ke
    G, Ddiv = bundle.G, bundle.Ddiv
    mp_norm = lambda v: float(np.sqrt(max(v @ (Mp @ v), 0.0)))
    mu_norm = lambda v: float(np.sqrt(max(v @ (bundle.Mu @ v), 0.0)))

    prov: dict[str, str] = {}
    defect = 0.0
    pressure_only = False
    rough_start = False
    p = u = u_dot = p_dot = None

    if kind is RegimeKind.CLASSICAL_BIOT:
        if combo == ("p0",):
            p = data["p0"]
            prov["p"] = "given"
        else:
            w_f = ops.elastic_solve(f0)
            div_f = remove_mean(bundle, ops._mp_lu.solve(Ddiv @ w_f))
            rhs = data["d0"] - al * div_f
            p, defect = ops.solve_content_operator(rhs, return_defect=True)
            prov["p"] = "derived"
            rough_start = True
        u = ops.elastic_solve(f0 - al * (G @ p))
        prov["u"] = "derived"

    elif combo == ("p0", "u0") or (combo == ("p0",) and kind in (
            RegimeKind.VISCO_STANDARD_CONTENT,
            RegimeKind.VISCO_ADJUSTED_CONTENT)):
        p = data["p0"]
        prov["p"] = "given"
        if "u0" in combo:
            u = data["u0"]
            prov["u"] = "given"
            if kind is RegimeKind.SECONDARY_CONSOLIDATION:
                u_dot = _secondary_u_dot(ops, p, u, f0)
                prov["u_dot"] = "derived" if u_dot is not None else "unavailable"
                if c0 > 0 and u_dot is not None:
                    p_dot = remove_mean(bundle, ops._mp_lu.solve(
                        s0 - Ap @ p - al * (Ddiv @ u_dot)) / c0)
                    prov["p_dot"] = "derived"
            else:
                u_dot = (ops.elastic_solve(f0 - al * (G @ p)) - u) / d1
                prov["u_dot"] = "derived"
                if c0 > 0 and kind is RegimeKind.VISCO_STANDARD_CONTENT:
                    p_dot = remove_mean(bundle, ops._mp_lu.solve(
                        s0 - Ap @ p - al * (Ddiv @ u_dot)) / c0)
                    prov["p_dot"] = "derived"
        else:
            pressure_only = True

    elif combo == ("p0", "p1"):
        # u_t(0) from the pressure equation, closed as a gradient-type field;
        # u(0) from the momentum equation at t = 0.
        p = data["p0"]
        prov["p"] = "given"
        g_dual = (s0 - Ap @ p - c0 * (Mp @ data["p1"])) / al
        lam, defect = _dilation_dual_solve(ops, g_dual)
        u_dot = -ops.elastic_solve(G @ lam)
        u = ops.elastic_solve(f0 - al * (G @ p)) - d1 * u_dot
        p_dot = remove_mean(bundle, ops._mp_lu.solve(
            s0 - Ap @ p - al * (Ddiv @ u_dot)) / c0)
        prov.update({"u": "derived", "u_dot": "derived", "p_dot": "derived"})

    elif combo == ("u0",):  # secondary consolidation, c0 = 0, 1D
        u = data["u0"]
        prov["u"] = "given"
        p = _secondary_initial_pressure(ops, u, f0, s0)
        prov["p"] = "derived"
        u_dot = _secondary_u_dot(ops, p, u, f0)
        prov["u_dot"] = "derived"
    else:  # pragma: no cover
        raise Underspecified(f"unhandled combination {combo}")

    zeta = None
    if u is not None:
        zdual = c0 * (Mp @ p) + al * (Ddiv @ u)
        if params.delta2 > 0:
            zdual = zdual + params.delta2 * (Ddiv @ u_dot)
        zeta = ops._mp_lu.solve(zdual)
        prov.setdefault("zeta", "derived")

    # Incompressible visco starts: the midpoint scheme carries an undamped
    # constraint mode, so flag data whose t=0 content equation does not
    # close (its defect decays only in the continuous problem) for a damped
    # (backward Euler) first step.
    if c0 == 0 and d1 > 0 and u_dot is not None:
        if params.delta2 > 0:
            rough_start = True
        else:
            r0 = s0 - Ap @ p - al * (Ddiv @ u_dot)
            scale = max(np.linalg.norm(Ap @ p), np.linalg.norm(s0),
                        al * np.linalg.norm(Ddiv @ u_dot), 1e-300)
            if np.linalg.norm(r0) > 1e-8 * scale:
                rough_start = True

    # Consistency checks on redundant data.
    for name in sorted(extras):
        if name == "d0":
            if zeta is None:
                raise Underspecified(
                    "d0 cannot be consumed without u0 in this regime")
            ref = data["d0"]
            err = mp_norm(zeta - ref) / max(mp_norm(ref), 1e-300)
            if err > CONSISTENCY_REL_TOL and mp_norm(ref) > 0:
                raise OverspecifiedInconsistent(
                    f"d0 disagrees with derived fluid content ({err:.2e} rel)")
        elif name == "u0":
            if u is None:
                raise Underspecified("u0 extra could not be checked")
            ref = data["u0"]
            err = mu_norm(u - ref) / max(mu_norm(ref), 1e-300)
            if err > CONSISTENCY_REL_TOL and mu_norm(ref) > 0:
                raise OverspecifiedInconsistent(
                    f"u0 disagrees with derived displacement ({err:.2e} rel)")
        elif name == "p1":
            if p_dot is None:
                raise Underspecified(
                    "p1 cannot be consumed in this regime")
            ref = data["p1"]
            err = mp_norm(p_dot - ref) / max(mp_norm(ref), 1e-300)
            if err > CONSISTENCY_REL_TOL and mp_norm(ref) > 0:
                raise OverspecifiedInconsistent(
                    f"p1 disagrees with derived pressure rate ({err:.2e} rel)")
        elif name == "p0":
            ref = data["p0"]
            err = mp_norm(p - ref) / max(mp_norm(ref), 1e-300)
            if err > CONSISTENCY_REL_TOL and mp_norm(ref) > 0:
                raise OverspecifiedInconsistent(
                    f"p0 disagrees with derived pressure ({err:.2e} rel)")

    return ResolvedInitialState(
        p=remove_mean(bundle, p), u=u, u_dot=u_dot, p_dot=p_dot, zeta=zeta,
        provenance=prov, combo=combo, pressure_only=pressure_only,
        rough_start=rough_start, kernel_defect=defect,
    )


def _dilation_dual_solve(ops: Operators, g_dual: np.ndarray):
    """Solve (Ddiv Ke^-1 Ddiv^T) lam = g_dual, deflating the spurious kernel."""
    ops._require_dense("gradient-potential recovery")
    Z = ops.dilation_kernel()
    coeff = Z.T @ g_dual
    nb = np.linalg.norm(g_dual)
    defect = float(np.linalg.norm(coeff) / nb) if nb > 0 else 0.0
    b = g_dual - Z @ coeff
    w, Q = ops._cache["kb_eig"]
    cut = 1e-10 * max(w.max(), 1e-300)
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    return Q @ (inv * (Q.T @ b)), defect


def _secondary_u_dot(ops: Operators, p, u, f0):
    """u_t(0) from the momentum row; None in 2D (dilation stiffness singular)."""
    bundle = ops.bundle
    if bundle.mesh.dim != 1:
        return None
    params = ops.params
    rhs = f0 - bundle.Ke @ u - params.alpha * (bundle.G @ p)
    key = "kdd_lu"
    if key not in ops._cache:
        ops._cache[key] = spla.splu(
            (params.lambda_star * bundle.Kdivdiv).tocsc())
    return ops._cache[key].solve(rhs)


def _secondary_initial_pressure(ops: Operators, u, f0, s0):
    """Initial pressure from the coupled t=0 system (c0 = 0, 1D)."""
    bundle = ops.bundle
    params = ops.params
    ops._require_dense("secondary-consolidation pressure recovery")
    key = "kdd_lu"
    if key not in ops._cache:
        ops._cache[key] = spla.splu(
            (params.lambda_star * bundle.Kdivdiv).tocsc())
    lu = ops._cache[key]
    Ddiv = bundle.Ddiv.toarray()
    W = Ddiv @ lu.solve(Ddiv.T)
    A = bundle.Ap.toarray() + params.alpha**2 * W
    mv = bundle.meanvec
    A = A + np.outer(mv, mv) / bundle.domain_measure
    rhs = s0 - params.alpha * (bundle.Ddiv @ lu.solve(f0 - bundle.Ke @ u))
    p = np.linalg.solve(0.5 * (A + A.T), rhs)
    return remove_mean(bundle, p)
