"""Reduced formulations of the coupled dynamics and their spectral analysis.

Three reductions are implemented, each eliminating the displacement:

* the implicit pressure equation  d/dt[(c0 I + a^2 B) p] + A p = S~,
  valid for the classical and adjusted-content regimes (B denotes the
  pressure-to-dilation map, A the pressure stiffness);
* the damped second-order form  c0 p_tt + D p_t + (1/d1) A p = S^  for the
  compressible visco regime, together with its first-order generator on
  the state (p, p_t) and dense spectrum reports;
* the zeroth-order ODE form  q_t + A (a^2 B + d1 A)^{-1} q = S-  obtained
  for the incompressible visco regime through the change of variable
  q = (a^2 B + d1 A) p.

Dense-mode exact propagators (eigendecompositions) serve as reference
implementations; theta schemes are the scalable path.  All reduced source
terms require analytic time derivatives of the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as dla
import scipy.sparse.linalg as spla

from .errors import (
    EigenFailure,
    InvalidRegime,
    SolveFailure,
)
from .fem import remove_mean
from .operators import Operators
from .sources import (
    SourceSpec,
    ZERO_SOURCES,
    displacement_load_vector,
    pressure_source_vector,
)


@dataclass
class PressureTrajectory:
    times: np.ndarray
    p: np.ndarray
    bundle: object
    params: object
    meta: dict = field(default_factory=dict)


@dataclass
class WaveTrajectory:
    times: np.ndarray
    p: np.ndarray
    p_t: np.ndarray
    bundle: object
    params: object
    meta: dict = field(default_factory=dict)


@dataclass
class GeneratorMatrix:
    """Dense first-order generator on the state (p, p_t).

    Represented in the mass-orthonormalized zero-mean pressure basis in
    which the pressure stiffness is diagonal.
    """

    A: np.ndarray            # (2m, 2m)
    m: int
    a: np.ndarray            # diagonalized pressure stiffness
    V: np.ndarray            # basis columns, V^T Mp V = I
    params: object


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    spectral_abscissa: float
    sector_ratio: float
    min_real_gap: float


def _reduced_source(ops: Operators, sources: SourceSpec, t: float) -> np.ndarray:
    """Dual vector of S~ = S - div(elastic_solve(F_t)) at time t."""
    b = ops.bundle
    s = pressure_source_vector(b, sources.S, t)
    if sources.F is not None:
        sources.require_F_t()
        ft = displacement_load_vector(b, sources.F_t, t)
        s = s - b.Ddiv @ ops.elastic_solve(ft)
    return s


def solve_reduced_biot(
    ops: Operators,
    p0: np.ndarray | None = None,
    d0: np.ndarray | None = None,
    sources: SourceSpec = ZERO_SOURCES,
    dt: float = 1e-3,
    T: float = 1.0,
    theta: float = 0.5,
) -> PressureTrajectory:
    """Theta scheme for the implicit pressure equation.

    Exactly one of ``p0`` (pressure) or ``d0`` (content datum, mapped
    through the inverse content operator) must be given.  d0-initialized
    runs damp the first step with theta = 1.
    """
    if (p0 is None) == (d0 is None):
        raise InvalidRegime("give exactly one of p0, d0")
    b = ops.bundle
    pr = ops.params
    rough = False
    defect = 0.0
    if d0 is not None:
        rhs = np.asarray(d0, dtype=float)
        if sources.F is not None:
            f0 = displacement_load_vector(b, sources.F, 0.0)
            divf = remove_mean(b, ops._mp_lu.solve(b.Ddiv @ ops.elastic_solve(f0)))
            rhs = rhs - pr.alpha * divf
        p0, defect = ops.solve_content_operator(rhs, return_defect=True)
        rough = True
    p = remove_mean(b, np.asarray(p0, dtype=float))

    n_steps = int(round(T / dt)) if T > 0 else 0
    if T > 0 and abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")

    dense = b.n_pressure <= ops.config.dense_threshold
    mv = b.meanvec
    meas = b.domain_measure
    Ap = b.Ap

    if dense:
        Mcal = pr.c0 * b.Mp.toarray() + pr.alpha**2 * ops.dense_dilation_gram()
        Mcal = 0.5 * (Mcal + Mcal.T)
        Apd = Ap.toarray()

        def make_solver(th):
            A = Mcal / dt + th * Apd + np.outer(mv, mv) / meas
            lu = dla.lu_factor(A)
            return lambda r: dla.lu_solve(lu, r)

        def apply_mcal(v):
            return Mcal @ v
    else:
        def apply_mcal(v):
            return ops.content_gram(v)

        def make_solver(th):
            def op(v):
                return apply_mcal(v) / dt + th * (Ap @ v) + mv * ((mv @ v) / meas)

            return lambda r: ops._cg(op, r)

    solvers = {theta: make_solver(theta)}
    times = [0.0]
    traj = [p.copy()]
    s_prev = _reduced_source(ops, sources, 0.0)
    for n in range(n_steps):
        th = 1.0 if (n == 0 and rough and theta != 1.0) else theta
        if th not in solvers:
            solvers[th] = make_solver(th)
        s_next = _reduced_source(ops, sources, (n + 1) * dt)
        s_c = th * s_next + (1 - th) * s_prev
        rhs = apply_mcal(p) / dt - (1 - th) * (Ap @ p) + s_c
        p = remove_mean(b, solvers[th](rhs))
        s_prev = s_next
        times.append((n + 1) * dt)
        traj.append(p.copy())
    return PressureTrajectory(
        times=np.array(times), p=np.stack(traj), bundle=b, params=pr,
        meta={"theta": theta, "dt": dt, "rough_start": rough,
              "kernel_defect": defect, "sources": sources},
    )


def reduced_route_trajectory(
    ops: Operators,
    p0: np.ndarray,
    u0: np.ndarray,
    sources: SourceSpec = ZERO_SOURCES,
    dt: float = 1e-3,
    T: float = 1.0,
    theta: float = 0.5,
):
    """Second-order trajectory for the adjusted-content regime.

    The monolithic integrator stores the strain rate as a lagged backward
    difference, which costs one order of accuracy when delta2 > 0.  This
    route follows the reduction instead: pressure from the implicit
    equation, displacement from the variation-of-constants formula, and
    the rate read off the momentum row, all second order.
    """
    from .timestepper import Trajectory, recover_u_variation_of_constants

    pr = ops.params
    if pr.delta2 <= 0:
        raise InvalidRegime("reduced route is for the adjusted-content regime")
    b = ops.bundle
    pt = solve_reduced_biot(ops, p0=p0, sources=sources, dt=dt, T=T,
                            theta=theta)
    U = recover_u_variation_of_constants(ops, pt.times, pt.p, u0, sources)
    Ud = np.empty_like(U)
    for i, t in enumerate(pt.times):
        f = displacement_load_vector(b, sources.F, t)
        Ud[i] = (ops.elastic_solve(f - pr.alpha * (b.G @ pt.p[i])) - U[i]) / pr.delta1
    Z = np.empty_like(pt.p)
    for i in range(len(pt.times)):
        zdual = (pr.c0 * (b.Mp @ pt.p[i]) + pr.alpha * (b.Ddiv @ U[i])
                 + pr.delta2 * (b.Ddiv @ Ud[i]))
        Z[i] = ops._mp_lu.solve(zdual)
    from .params import classify_regime

    return Trajectory(times=pt.times, p=pt.p, u=U, u_dot=Ud, zeta=Z,
                      params=pr, regime=classify_regime(pr), theta=theta,
                      dt=dt, bundle=b, sources=sources,
                      meta={"route": "reduced"})


def build_first_order_generator(ops: Operators) -> GeneratorMatrix:
    """Dense generator of the damped second-order form (needs c0, delta1 > 0)."""
    pr = ops.params
    if pr.c0 <= 0 or pr.delta1 <= 0:
        raise InvalidRegime("first-order generator needs c0 > 0 and delta1 > 0")
    V, a = ops.modal_basis()
    kb = ops.dense_dilation_gram()
    Bhat = V.T @ (0.5 * (kb + kb.T)) @ V
    m = len(a)
    Dhat = np.diag(a) + (pr.c0 * np.eye(m) + pr.alpha**2 * Bhat) / pr.delta1
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = np.eye(m)
    A[m:, :m] = -np.diag(a) / (pr.delta1 * pr.c0)
    A[m:, m:] = -Dhat / pr.c0
    return GeneratorMatrix(A=A, m=m, a=a, V=V, params=pr)


def spectrum_report(gen: GeneratorMatrix) -> SpectrumReport:
    """Full dense eigendecomposition of the generator."""
    try:
        eigs = np.linalg.eigvals(gen.A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    abscissa = float(eigs.real.max())
    scale = max(np.abs(eigs).max(), 1e-300)
    re = np.abs(eigs.real)
    ratios = np.where(re > 1e-14 * scale, np.abs(eigs.imag) / re, np.inf)
    finite = ratios[np.isfinite(ratios)]
    sector = float(finite.max()) if len(finite) else float("inf")
    return SpectrumReport(
        eigenvalues=eigs, spectral_abscissa=abscissa,
        sector_ratio=sector, min_real_gap=-abscissa,
    )


def _wave_source(ops: Operators, sources: SourceSpec, t: float) -> np.ndarray:
    """Dual vector of S^ = (1/d1)[S - alpha div(elastic_solve(F_t))] + S_t."""
    b = ops.bundle
    pr = ops.params
    s = pressure_source_vector(b, sources.S, t)
    if sources.S is not None:
        sources.require_S_t()
        st = pressure_source_vector(b, sources.S_t, t)
    else:
        st = np.zeros(b.n_pressure)
    out = s / pr.delta1 + st
    if sources.F is not None:
        sources.require_F_t()
        ft = displacement_load_vector(b, sources.F_t, t)
        out = out - (pr.alpha / pr.delta1) * (b.Ddiv @ ops.elastic_solve(ft))
    return out


def solve_strongly_damped_wave(
    ops: Operators,
    p0: np.ndarray,
    p1: np.ndarray,
    sources: SourceSpec = ZERO_SOURCES,
    dt: float = 1e-3,
    T: float = 1.0,
    theta: float = 0.5,
) -> WaveTrajectory:
    """Theta integration of the damped second-order pressure equation.

    First-order in the pair (p, p_t); both components are returned.
    Requires c0 > 0 and delta1 > 0 and the pair (p0, p1) of initial data.
    """
    pr = ops.params
    if pr.c0 <= 0 or pr.delta1 <= 0:
        raise InvalidRegime("strongly damped form needs c0 > 0 and delta1 > 0")
    b = ops.bundle
    p = remove_mean(b, np.asarray(p0, dtype=float))
    v = remove_mean(b, np.asarray(p1, dtype=float))
    n_steps = int(round(T / dt)) if T > 0 else 0
    if T > 0 and abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")

    Ap = b.Ap
    dense = b.n_pressure <= ops.config.dense_threshold
    if dense:
        Dmat = (Ap.toarray()
                + (pr.c0 * b.Mp.toarray() + pr.alpha**2 * ops.dense_dilation_gram())
                / pr.delta1)
        C = Dmat + theta * dt * Ap.toarray() / pr.delta1
        Mat = pr.c0 * b.Mp.toarray() / dt + theta * C
        lu = dla.lu_factor(0.5 * (Mat + Mat.T))
        solve = lambda r: dla.lu_solve(lu, r)
        apply_C = lambda x: C @ x
    else:
        def apply_C(x):
            return (ops.apply_damping(x)
                    + theta * dt * (Ap @ x) / pr.delta1)

        def solve(r):
            def op(x):
                return pr.c0 * (b.Mp @ x) / dt + theta * apply_C(x)

            return ops._cg(op, r)

    times = [0.0]
    ps = [p.copy()]
    vs = [v.copy()]
    s_prev = _wave_source(ops, sources, 0.0)
    for n in range(n_steps):
        s_next = _wave_source(ops, sources, (n + 1) * dt)
        s_c = theta * s_next + (1 - theta) * s_prev
        rhs = (s_c + pr.c0 * (b.Mp @ v) / dt - (1 - theta) * apply_C(v)
               - (Ap @ p) / pr.delta1)
        v_new = solve(rhs)
        v_mid = theta * v_new + (1 - theta) * v
        p = remove_mean(b, p + dt * v_mid)
        v = remove_mean(b, v_new)
        s_prev = s_next
        times.append((n + 1) * dt)
        ps.append(p.copy())
        vs.append(v.copy())
    return WaveTrajectory(
        times=np.array(times), p=np.stack(ps), p_t=np.stack(vs),
        bundle=b, params=pr,
        meta={"theta": theta, "dt": dt, "sources": sources},
    )


def solve_ode_q_form(
    ops: Operators,
    p0: np.ndarray,
    sources: SourceSpec = ZERO_SOURCES,
    dt: float = 1e-3,
    T: float = 1.0,
    theta: float = 0.5,
    exact_propagator: bool = False,
) -> PressureTrajectory:
    """Integrate the zeroth-order ODE form of the incompressible visco case.

    Transforms p0 -> q0, evolves q by a theta scheme (or, in dense mode,
    by the exact eigendecomposition propagator for homogeneous sources),
    and inverts the change of variable at every output time.
    """
    pr = ops.params
    if pr.c0 != 0 or pr.delta1 <= 0:
        raise InvalidRegime("q-form needs c0 = 0 and delta1 > 0")
    b = ops.bundle
    p0 = remove_mean(b, np.asarray(p0, dtype=float))
    n_steps = int(round(T / dt)) if T > 0 else 0
    if T > 0 and abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")

    def sbar(t):
        s = pressure_source_vector(b, sources.S, t)
        if sources.S is not None:
            sources.require_S_t()
            s = s + pr.delta1 * pressure_source_vector(b, sources.S_t, t)
        if sources.F is not None:
            sources.require_F_t()
            ft = displacement_load_vector(b, sources.F_t, t)
            s = s - pr.alpha * (b.Ddiv @ ops.elastic_solve(ft))
        return s

    dense = b.n_pressure <= ops.config.dense_threshold
    if not dense and exact_propagator:
        raise InvalidRegime("exact propagator is a dense-mode feature")

    if dense:
        V, a = ops.modal_basis()
        kb = ops.dense_dilation_gram()
        Bhat = V.T @ (0.5 * (kb + kb.T)) @ V
        Chat = pr.alpha**2 * Bhat + pr.delta1 * np.diag(a)
        Chat = 0.5 * (Chat + Chat.T)
        Rhat = np.diag(a) @ np.linalg.inv(Chat)
        qhat = Chat @ (V.T @ (b.Mp @ p0))
        times = [0.0]
        out = [p0.copy()]
        c_lu = dla.lu_factor(Chat)
        if exact_propagator:
            if sources.S is not None or sources.F is not None:
                raise InvalidRegime("exact propagator covers homogeneous runs")
            lam, W = np.linalg.eig(Rhat)
            Winv = np.linalg.inv(W)
            for n in range(1, n_steps + 1):
                t = n * dt
                qh = (W @ (np.exp(-lam * t) * (Winv @ qhat))).real
                phat = dla.lu_solve(c_lu, qh)
                out.append(remove_mean(b, V @ phat))
                times.append(t)
        else:
            I = np.eye(len(a))
            lu = dla.lu_factor(I / dt + theta * Rhat)
            s_prev = V.T @ sbar(0.0)
            qh = qhat
            for n in range(n_steps):
                s_next = V.T @ sbar((n + 1) * dt)
                s_c = theta * s_next + (1 - theta) * s_prev
                qh = dla.lu_solve(lu, qh / dt - (1 - theta) * (Rhat @ qh) + s_c)
                s_prev = s_next
                phat = dla.lu_solve(c_lu, qh)
                out.append(remove_mean(b, V @ phat))
                times.append((n + 1) * dt)
        return PressureTrajectory(
            times=np.array(times), p=np.stack(out), bundle=b, params=pr,
            meta={"theta": theta, "dt": dt, "exact": exact_propagator,
                  "sources": sources},
        )

    # Matrix-free path: q kept as a primal pressure vector.
    mv, meas = b.meanvec, b.domain_measure
    q = remove_mean(b, pr.alpha**2 * ops.pressure_to_dilation(p0)
                    + pr.delta1 * remove_mean(b, ops._mp_lu.solve(b.Ap @ p0)))

    def apply_R(x):
        return ops.apply_q_generator(x)

    n = b.n_pressure
    lin = spla.LinearOperator(
        (n, n), matvec=lambda x: x / dt + theta * apply_R(x))
    times = [0.0]
    out = [p0.copy()]
    s_prev_d = sbar(0.0)
    for k in range(n_steps):
        s_next_d = sbar((k + 1) * dt)
        s_c = remove_mean(b, ops._mp_lu.solve(
            theta * s_next_d + (1 - theta) * s_prev_d))
        rhs = q / dt - (1 - theta) * apply_R(q) + s_c
        q_new, info = spla.gmres(lin, rhs, rtol=ops.config.inner_tol,
                                 maxiter=ops.config.max_iter)
        if info != 0:
            raise SolveFailure(f"q-form GMRES did not converge (info={info})")
        q = remove_mean(b, q_new)
        s_prev_d = s_next_d
        # invert the change of variable
        bq = b.Mp @ q

        def op(v):
            return (pr.alpha**2 * ops.dilation_gram(v) + pr.delta1 * (b.Ap @ v)
                    + mv * ((mv @ v) / meas))

        p = remove_mean(b, ops._cg(op, bq))
        out.append(p)
        times.append((k + 1) * dt)
    return PressureTrajectory(
        times=np.array(times), p=np.stack(out), bundle=b, params=pr,
        meta={"theta": theta, "dt": dt, "exact": False,
              "sources": sources},
    )
