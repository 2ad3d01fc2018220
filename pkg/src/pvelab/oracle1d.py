"""Closed-form modal solutions on the unit interval.

On (0,1) the pressure stiffness and the pressure-to-dilation map are
simultaneously diagonal on the cosine basis phi_k = sqrt(2) cos(k pi x)
(with displacements on psi_k = sqrt(2) sin(k pi x)); in particular the
dilation map acts as multiplication by 1/(lambda + 2 mu).  Each mode k then
evolves by a scalar or 2x2 linear ODE whose matrix is written down here per
regime, giving exact references for every solver in the package.

Modal symbols: a_k = kappa (k pi)^2, e_k = (lambda + 2 mu)(k pi)^2,
b = 1/(lambda + 2 mu).

For the incompressible (c0 = 0) regimes the full system is a constrained
DAE per mode: the content equation pins u_k to p_k (see
``compatible_u0``).  The modal dynamics below integrate the reduced form,
which tolerates incompatible pairs by adding an exp(-t/delta1) defect
mode, mirroring the continuous solution map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRegime, UnsupportedSource
from .fem import FieldVec, OperatorBundle, Space, project_function
from .params import PhysParams, RegimeKind, RegimeTag, classify_regime

_EIG_GAP_TOL = 1e-9


@dataclass(frozen=True)
class ModalSource:
    """Separable modal forcing F_k(t) = F_amp * exp(F_rate t), same for S."""

    F_amp: float = 0.0
    F_rate: float = 0.0
    S_amp: float = 0.0
    S_rate: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.F_amp == 0.0 and self.S_amp == 0.0


@dataclass
class ModalSystem:
    """First-order modal ODE dy/dt = M y + g(t) with output map to (p, u, u_dot)."""

    k: int
    params: PhysParams
    regime: RegimeTag
    a_k: float
    e_k: float
    b: float
    state: tuple[str, ...]
    M: np.ndarray

    @property
    def K(self) -> float:
        return self.k * np.pi


def modal_matrix(k: int, params: PhysParams,
                 regime: RegimeTag | None = None) -> ModalSystem:
    """Build the per-mode first-order system for the active regime."""
    if regime is None:
        regime = classify_regime(params)
    K = k * np.pi
    a = params.kappa * K**2
    e = params.lame_p_wave * K**2
    b = 1.0 / params.lame_p_wave
    al, c0, d1 = params.alpha, params.c0, params.delta1
    kind = regime.kind

    if kind is RegimeKind.CLASSICAL_BIOT:
        beta = c0 + al**2 * b
        M = np.array([[-a / beta]])
        state = ("p",)
    elif kind is RegimeKind.VISCO_STANDARD_CONTENT and c0 > 0:
        M = np.array([
            [-(a + al**2 * b / d1) / c0, al * K / (d1 * c0)],
            [al * K / (d1 * e), -1.0 / d1],
        ])
        state = ("p", "u")
    elif kind is RegimeKind.VISCO_STANDARD_CONTENT:
        denom = al**2 * b + d1 * a
        M = np.array([
            [-a / denom, 0.0],
            [al * K / (d1 * e), -1.0 / d1],
        ])
        state = ("p", "u")
    elif kind is RegimeKind.VISCO_ADJUSTED_CONTENT:
        beta = c0 + al**2 * b
        M = np.array([
            [-a / beta, 0.0],
            [al * K / (d1 * e), -1.0 / d1],
        ])
        state = ("p", "u")
    elif kind is RegimeKind.SECONDARY_CONSOLIDATION:
        l = params.lambda_star * K**2
        if c0 > 0:
            M = np.array([
                [-(a + al**2 * K**2 / l) / c0, al * K * e / (l * c0)],
                [al * K / l, -e / l],
            ])
            state = ("p", "u")
        else:
            M = np.array([[-e * a / (l * a + al**2 * K**2)]])
            state = ("u",)
    else:  # pragma: no cover
        raise InvalidRegime(f"no modal system for {kind}")
    return ModalSystem(k=k, params=params, regime=regime,
                       a_k=a, e_k=e, b=b, state=state, M=M)


def _forcing_maps(ms: ModalSystem):
    """Linear maps from (F, dF/dt, S, dS/dt) to the state forcing g."""
    p = ms.params
    al, c0, d1 = p.alpha, p.c0, p.delta1
    K, a, e, b = ms.K, ms.a_k, ms.e_k, ms.b
    kind = ms.regime.kind
    n = ms.M.shape[0]
    N = np.zeros((n, 4))  # columns: F, F', S, S'
    if kind is RegimeKind.CLASSICAL_BIOT:
        beta = c0 + al**2 * b
        N[0] = [0.0, -al * K / (e * beta), 1.0 / beta, 0.0]
    elif kind is RegimeKind.VISCO_STANDARD_CONTENT and c0 > 0:
        N[0] = [-al * K / (d1 * e * c0), 0.0, 1.0 / c0, 0.0]
        N[1] = [1.0 / (d1 * e), 0.0, 0.0, 0.0]
    elif kind is RegimeKind.VISCO_STANDARD_CONTENT:
        denom = al**2 * b + d1 * a
        N[0] = [0.0, -al * K / (e * denom), 1.0 / denom, d1 / denom]
        N[1] = [1.0 / (d1 * e), 0.0, 0.0, 0.0]
    elif kind is RegimeKind.VISCO_ADJUSTED_CONTENT:
        beta = c0 + al**2 * b
        N[0] = [0.0, -al * K / (e * beta), 1.0 / beta, 0.0]
        N[1] = [1.0 / (d1 * e), 0.0, 0.0, 0.0]
    elif kind is RegimeKind.SECONDARY_CONSOLIDATION:
        l = p.lambda_star * K**2
        if c0 > 0:
            N[0] = [-al * K / (l * c0), 0.0, 1.0 / c0, 0.0]
            N[1] = [1.0 / l, 0.0, 0.0, 0.0]
        else:
            denom = a + al**2 * K**2 / l
            # u' = (al K p - e u + F)/l with p = (S - al K F / l + al K e u / l)/denom
            N[0] = [(1.0 - al**2 * K**2 / (l * denom)) / l, 0.0,
                    al * K / (l * denom), 0.0]
    return N


def _output_maps(ms: ModalSystem):
    """(p, u) = O_y y + O_s (F, F', S, S'); u_dot assembled separately."""
    p = ms.params
    al = p.alpha
    K, a, e = ms.K, ms.a_k, ms.e_k
    kind = ms.regime.kind
    n = ms.M.shape[0]
    O_y = np.zeros((2, n))
    O_s = np.zeros((2, 4))
    if kind is RegimeKind.CLASSICAL_BIOT:
        O_y[0, 0] = 1.0
        O_y[1, 0] = al * K / e
        O_s[1] = [1.0 / e, 0.0, 0.0, 0.0]
    elif ms.state == ("p", "u"):
        O_y[0, 0] = 1.0
        O_y[1, 1] = 1.0
    elif kind is RegimeKind.SECONDARY_CONSOLIDATION:  # c0 = 0, state (u,)
        l = p.lambda_star * K**2
        denom = a + al**2 * K**2 / l
        O_y[0, 0] = al * K * e / (l * denom)
        O_y[1, 0] = 1.0
        O_s[0] = [-al * K / (l * denom), 0.0, 1.0 / denom, 0.0]
    return O_y, O_s


def _expm_closed(M: np.ndarray, t: float) -> np.ndarray:
    """exp(M t) by eigendecomposition, with the repeated-root branch for 2x2."""
    n = M.shape[0]
    if n == 1:
        return np.array([[np.exp(M[0, 0] * t)]])
    lam, V = np.linalg.eig(M)
    scale = max(np.abs(lam).max(), 1.0)
    if abs(lam[0] - lam[1]) > _EIG_GAP_TOL * scale:
        E = (V * np.exp(lam * t)) @ np.linalg.inv(V)
        return E.real
    # Defective (or nearly defective) pair: exp(Mt) = e^{lt}(I + t(M - l I)).
    l = lam.mean().real
    return np.exp(l * t) * (np.eye(2) + t * (M - l * np.eye(2)))


def _source_values(source: ModalSource, t: float) -> np.ndarray:
    F = source.F_amp * np.exp(source.F_rate * t)
    S = source.S_amp * np.exp(source.S_rate * t)
    return np.array([F, source.F_rate * F, S, source.S_rate * S])


def exact_modal_solution(
    ms: ModalSystem,
    ic: dict[str, float],
    t: float | np.ndarray,
    source: ModalSource | None = None,
    return_derivative: bool = False,
):
    """Evaluate the exact modal coefficients (p_k, u_k, u_dot_k) at time(s) t.

    ``ic`` supplies the state coefficients named in ``ms.state``.  Sources
    are restricted to exponential-in-time profiles (constants included);
    resonant rates raise UnsupportedSource.
    """
    source = source or ModalSource()
    y0 = np.array([float(ic[name]) for name in ms.state])
    N = _forcing_maps(ms)
    O_y, O_s = _output_maps(ms)
    M = ms.M
    n = M.shape[0]

    # Particular solutions for each exponential channel.
    particulars = []  # (rate, vector yp) with y_p(t) = yp * exp(rate t)
    for amp, rate, cols in (
        (source.F_amp, source.F_rate, (0, 1)),
        (source.S_amp, source.S_rate, (2, 3)),
    ):
        if amp == 0.0:
            continue
        gvec = N[:, cols[0]] * amp + N[:, cols[1]] * amp * rate
        A = rate * np.eye(n) - M
        if abs(np.linalg.det(A)) < 1e-12 * max(np.abs(A).max() ** n, 1e-30):
            raise UnsupportedSource(
                f"source rate {rate} resonates with the modal spectrum"
            )
        particulars.append((rate, np.linalg.solve(A, gvec), amp, cols))
    y0_hom = y0 - sum((yp for _, yp, _, _ in particulars), np.zeros(n))

    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = {"p": np.empty_like(ts), "u": np.empty_like(ts),
           "u_dot": np.empty_like(ts)}
    if return_derivative:
        out["ydot"] = np.empty((len(ts), n))
        out["y"] = np.empty((len(ts), n))
    for i, ti in enumerate(ts):
        E = _expm_closed(M, ti)
        y = E @ y0_hom
        for rate, yp, _, _ in particulars:
            y = y + yp * np.exp(rate * ti)
        svals = _source_values(source, ti)
        pu = O_y @ y + O_s @ svals
        ydot = M @ y + N @ svals
        pudot = O_y @ ydot + O_s @ np.array(
            [svals[1], source.F_rate * svals[1], svals[3],
             source.S_rate * svals[3]]
        )
        out["p"][i] = pu[0]
        out["u"][i] = pu[1]
        # u is a state for 2-state systems; otherwise differentiate the output map.
        if "u" in ms.state:
            out["u_dot"][i] = ydot[ms.state.index("u")]
        else:
            out["u_dot"][i] = pudot[1]
        if return_derivative:
            out["ydot"][i] = ydot
            out["y"][i] = y
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return {k: v[0] for k, v in out.items()}
    return out


def compatible_u0(k: int, params: PhysParams, p0: float,
                  F0: float = 0.0, S0: float = 0.0) -> float:
    """Displacement coefficient consistent with the c0 = 0 content equation.

    For delta1 > 0, c0 = 0 the mode-k content and momentum equations pin
    u_k to p_k; pairs violating this carry an exp(-t/delta1) defect.
    """
    if params.c0 != 0 or params.delta1 <= 0:
        raise InvalidRegime("compatibility constraint applies to c0=0, delta1>0")
    K = k * np.pi
    a = params.kappa * K**2
    e = params.lame_p_wave * K**2
    al, d1 = params.alpha, params.delta1
    return p0 * (al * K / e + d1 * a / (al * K)) + F0 / e - d1 * S0 / (al * K)


def compatible_field_u0(ops, p0: np.ndarray, f0: np.ndarray | None = None,
                        s0: np.ndarray | None = None) -> np.ndarray:
    """Discretely content-compatible displacement for c0 = 0, delta2 = 0 (1D).

    Solves the t = 0 content row alpha*Ddiv(u_t) = s0 - Ap p0 for the rate
    (exact in 1D, where the divergence coupling has full column rank) and
    backs out u0 from the momentum row.  Starting the midpoint scheme from
    such a pair keeps the undamped constraint mode unexcited.
    """
    b = ops.bundle
    pr = ops.params
    if b.mesh.dim != 1:
        raise InvalidRegime("discrete compatibility closure is 1D")
    if pr.c0 != 0 or pr.delta1 <= 0 or pr.delta2 != 0:
        raise InvalidRegime("compatibility closure applies to c0=0, delta2=0")
    rhs = (s0 if s0 is not None else 0.0) - b.Ap @ p0
    udot, *_ = np.linalg.lstsq(b.Ddiv.toarray(), rhs / pr.alpha, rcond=None)
    load = (f0 if f0 is not None else 0.0) - pr.alpha * (b.G @ p0)
    return ops.elastic_solve(np.asarray(load)) - pr.delta1 * udot


def modal_pressure_field(mesh, k: int) -> np.ndarray:
    """Nodal values of sqrt(2) cos(k pi x) (1D)."""
    if mesh.dim != 1:
        raise InvalidRegime("modal oracle is one-dimensional")
    x = mesh.nodes[:, 0]
    return np.sqrt(2.0) * np.cos(k * np.pi * x)


def modal_displacement_field(mesh, k: int) -> np.ndarray:
    """Interior nodal values of sqrt(2) sin(k pi x) (1D)."""
    if mesh.dim != 1:
        raise InvalidRegime("modal oracle is one-dimensional")
    x = mesh.nodes[mesh.interior_nodes, 0]
    return np.sqrt(2.0) * np.sin(k * np.pi * x)


def oracle_field_solution(
    bundle: OperatorBundle,
    modes: list[tuple[int, dict[str, float]]],
    t: float,
    source_by_mode: dict[int, ModalSource] | None = None,
) -> tuple[FieldVec, FieldVec]:
    """Superpose exact modal solutions, interpolated on the mesh at time t."""
    mesh = bundle.mesh
    params = bundle.params
    regime = classify_regime(params)
    p = np.zeros(mesh.n_nodes)
    u = np.zeros(len(mesh.interior_nodes))
    seen = set()
    for k, ic in modes:
        if k in seen:
            raise InvalidRegime(f"duplicate mode {k}")
        seen.add(k)
        ms = modal_matrix(k, params, regime)
        src = (source_by_mode or {}).get(k, None)
        sol = exact_modal_solution(ms, ic, t, source=src)
        p += sol["p"] * modal_pressure_field(mesh, k)
        u += sol["u"] * modal_displacement_field(mesh, k)
    pv = project_function(bundle, p, Space.PRESSURE_ZERO_MEAN)
    uv = FieldVec(u, Space.DISPLACEMENT, mesh)
    return pv, uv
