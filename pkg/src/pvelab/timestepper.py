"""Monolithic theta-scheme integrator for the coupled two-field system.

One step solves the 2x2 block system in (u^{n+1}, p^{n+1}):

  momentum:  Ke u^{n+th} + (d1/dt) Ke (u^{n+1}-u^n)
             + (ls/dt) Kdivdiv (u^{n+1}-u^n) + alpha G p^{n+th} = f^{n+th}
  content:   [zeta^{n+1} - zeta^n]/dt + Ap p^{n+th} = s^{n+th}

with w^{n+th} = th*w^{n+1} + (1-th)*w^n, zeta = c0 Mp p + alpha Ddiv u
+ d2 Ddiv u_dot, and u_dot the backward difference of accepted states.
Source vectors enter as the same theta combination of nodal loads, which
keeps the scheme algebraically equivalent to the eliminated (reduced)
pressure schemes on identical grids.

When c0 = 0 the pressure block is defined up to constants; a single
Lagrange multiplier pins the zero mean.  Rough initial data (d0-only
classical runs) take the first step with theta = 1 to damp the
order-reduction transient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularSystem, Underspecified
from .fem import remove_mean
from .initial import InitialSpec, ResolvedInitialState, resolve_initial_state
from .operators import Operators
from .params import RegimeTag, classify_regime
from .sources import (
    SourceSpec,
    ZERO_SOURCES,
    displacement_load_vector,
    pressure_source_vector,
)


@dataclass
class State:
    t: float
    p: np.ndarray
    u: np.ndarray
    u_dot: np.ndarray | None
    zeta: np.ndarray


@dataclass
class Trajectory:
    """Time-ordered solution snapshots on a uniform grid."""

    times: np.ndarray
    p: np.ndarray          # (nt, n_pressure)
    u: np.ndarray          # (nt, n_displacement)
    u_dot: np.ndarray      # (nt, n_displacement)
    zeta: np.ndarray       # (nt, n_pressure), primal representation
    params: object
    regime: RegimeTag
    theta: float
    dt: float
    bundle: object
    sources: SourceSpec = ZERO_SOURCES
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def state(self, i: int) -> State:
        return State(t=float(self.times[i]), p=self.p[i], u=self.u[i],
                     u_dot=self.u_dot[i], zeta=self.zeta[i])


class TimeStepper:
    """Factorized one-step map for fixed (dt, theta)."""

    def __init__(self, ops: Operators, dt: float, theta: float,
                 sources: SourceSpec = ZERO_SOURCES):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.5 <= theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        self.ops = ops
        self.bundle = ops.bundle
        self.params = ops.params
        self.dt = float(dt)
        self.theta = float(theta)
        self.sources = sources
        b, pr = self.bundle, self.params
        th = self.theta
        self.pin_mean = pr.c0 == 0.0
        A_uu = th * b.Ke + (pr.delta1 / dt) * b.Ke
        if pr.lambda_star > 0:
            A_uu = A_uu + (pr.lambda_star / dt) * b.Kdivdiv
        A_up = th * pr.alpha * b.G
        self._cpl = pr.alpha / dt + pr.delta2 / dt**2
        A_pu = self._cpl * b.Ddiv
        A_pp = (pr.c0 / dt) * b.Mp + th * b.Ap
        if self.pin_mean:
            mv = sp.csr_matrix(b.meanvec.reshape(-1, 1))
            blocks = [
                [A_uu, A_up, None],
                [A_pu, A_pp, mv],
                [None, mv.T, None],
            ]
        else:
            blocks = [[A_uu, A_up], [A_pu, A_pp]]
        mat = sp.bmat(blocks, format="csc")
        try:
            self._lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SingularSystem(
                f"block system factorization failed: {exc}") from exc
        self._nu = b.n_displacement
        self._np = b.n_pressure

    def _load_combo(self, t0: float) -> tuple[np.ndarray, np.ndarray]:
        th, dt = self.theta, self.dt
        f0 = displacement_load_vector(self.bundle, self.sources.F, t0)
        f1 = displacement_load_vector(self.bundle, self.sources.F, t0 + dt)
        s0 = pressure_source_vector(self.bundle, self.sources.S, t0)
        s1 = pressure_source_vector(self.bundle, self.sources.S, t0 + dt)
        return th * f1 + (1 - th) * f0, th * s1 + (1 - th) * s0

    def step(self, state: State) -> State:
        b, pr = self.bundle, self.params
        th, dt = self.theta, self.dt
        f_c, s_c = self._load_combo(state.t)
        u0, p0 = state.u, state.p
        rhs_u = (f_c - (1 - th) * (b.Ke @ u0) + (pr.delta1 / dt) * (b.Ke @ u0)
                 - (1 - th) * pr.alpha * (b.G @ p0))
        if pr.lambda_star > 0:
            rhs_u = rhs_u + (pr.lambda_star / dt) * (b.Kdivdiv @ u0)
        rhs_p = (s_c + (pr.c0 / dt) * (b.Mp @ p0) + self._cpl * (b.Ddiv @ u0)
                 - (1 - th) * (b.Ap @ p0))
        if pr.delta2 > 0:
            if state.u_dot is None:
                raise Underspecified(
                    "adjusted-content stepping needs u_dot in the state")
            rhs_p = rhs_p + (pr.delta2 / dt) * (b.Ddiv @ state.u_dot)
        rhs = np.concatenate(
            [rhs_u, rhs_p, [0.0]] if self.pin_mean else [rhs_u, rhs_p])
        sol = self._lu.solve(rhs)
        u1 = sol[:self._nu]
        p1 = remove_mean(b, sol[self._nu:self._nu + self._np])
        u_dot1 = (u1 - u0) / dt
        zdual = pr.c0 * (b.Mp @ p1) + pr.alpha * (b.Ddiv @ u1)
        if pr.delta2 > 0:
            zdual = zdual + pr.delta2 * (b.Ddiv @ u_dot1)
        zeta1 = self.ops._mp_lu.solve(zdual)
        return State(t=state.t + dt, p=p1, u=u1, u_dot=u_dot1, zeta=zeta1)


def step_full(ops: Operators, state: State, dt: float, theta: float,
              sources: SourceSpec = ZERO_SOURCES) -> State:
    """Single theta step (convenience wrapper; ``run`` reuses factorizations)."""
    return TimeStepper(ops, dt, theta, sources).step(state)


def run(
    ops: Operators,
    initial: InitialSpec | ResolvedInitialState,
    sources: SourceSpec = ZERO_SOURCES,
    dt: float = 1e-3,
    T: float = 1.0,
    theta: float = 0.5,
    store_every: int = 1,
) -> Trajectory:
    """Integrate from t = 0 to T and collect the trajectory.

    ``initial`` may be raw data (resolved here) or an already resolved
    state.  A pressure-only resolution cannot drive the full integrator.
    """
    if isinstance(initial, InitialSpec):
        resolved = resolve_initial_state(ops, initial, sources)
    else:
        resolved = initial
    if resolved.pressure_only or resolved.u is None:
        raise Underspecified(
            "full-trajectory integration needs displacement initial data "
            "(pressure-only resolutions drive the reduced solvers only)"
        )
    n_steps = int(round(T / dt)) if T > 0 else 0
    if T > 0 and abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")

    b = ops.bundle
    params = ops.params
    zeta0 = resolved.zeta
    if zeta0 is None:
        zdual = params.c0 * (b.Mp @ resolved.p) + params.alpha * (b.Ddiv @ resolved.u)
        zeta0 = ops._mp_lu.solve(zdual)
    state = State(t=0.0, p=resolved.p.copy(), u=resolved.u.copy(),
                  u_dot=None if resolved.u_dot is None else resolved.u_dot.copy(),
                  zeta=zeta0)

    states = [state]
    stepper = None
    for n in range(n_steps):
        if n == 0 and resolved.rough_start and theta != 1.0:
            first = TimeStepper(ops, dt, 1.0, sources)
            state = first.step(state)
        else:
            if stepper is None:
                stepper = TimeStepper(ops, dt, theta, sources)
            state = stepper.step(state)
        states.append(state)

    keep = list(range(0, len(states), store_every))
    if keep[-1] != len(states) - 1:
        keep.append(len(states) - 1)
    nt = len(keep)
    times = np.array([states[i].t for i in keep])
    P = np.stack([states[i].p for i in keep])
    U = np.stack([states[i].u for i in keep])
    Z = np.stack([states[i].zeta for i in keep])
    Ud = np.empty_like(U)
    for row, i in enumerate(keep):
        if states[i].u_dot is not None:
            Ud[row] = states[i].u_dot
        elif len(states) > 1:
            # t=0 fallback: forward difference of the first accepted step.
            Ud[row] = (states[1].u - states[0].u) / dt
        else:
            Ud[row] = 0.0
    return Trajectory(
        times=times, p=P, u=U, u_dot=Ud, zeta=Z, params=params,
        regime=classify_regime(params), theta=theta, dt=dt * store_every,
        bundle=b, sources=sources,
        meta={"rough_start": resolved.rough_start, "step_dt": dt},
    )


def recover_u_variation_of_constants(
    ops: Operators,
    times: np.ndarray,
    p_traj: np.ndarray,
    u0: np.ndarray,
    sources: SourceSpec = ZERO_SOURCES,
) -> np.ndarray:
    """Rebuild the displacement trajectory from the stored pressure.

    Evaluates the closed-form solution of the momentum row as an ODE in
    time: u(t) = exp(-t/d1) u0 + convolution of exp((tau-t)/d1) with
    Q(tau) = (1/d1) elastic_solve(f(tau) - alpha G p(tau)).  The
    convolution uses trapezoidal (piecewise-linear) quadrature of Q with
    the exponential kernel integrated exactly, so constant-in-time Q is
    reproduced to round-off.
    """
    params = ops.params
    if params.delta1 <= 0:
        from .errors import InvalidRegime

        raise InvalidRegime("variation-of-constants recovery needs delta1 > 0")
    d1 = params.delta1
    b = ops.bundle
    times = np.asarray(times, dtype=float)
    nt = len(times)
    dts = np.diff(times)
    if nt > 2 and not np.allclose(dts, dts[0], rtol=1e-8):
        raise ValueError("pressure trajectory must use a uniform time grid")

    Q = np.empty((nt, b.n_displacement))
    for j in range(nt):
        f = displacement_load_vector(b, sources.F, times[j])
        Q[j] = ops.elastic_solve(f - params.alpha * (b.G @ p_traj[j])) / d1

    out = np.empty_like(Q)
    out[0] = u0
    conv = np.zeros(b.n_displacement)
    for j in range(1, nt):
        dt = times[j] - times[j - 1]
        m = dt / d1
        decay = np.exp(-m)
        w_new = d1 - (d1**2 / dt) * (1.0 - decay)
        w_old = d1 * (1.0 - decay) - w_new
        conv = decay * conv + w_old * Q[j - 1] + w_new * Q[j]
        out[j] = np.exp(-(times[j] - times[0]) / d1) * u0 + conv
    return out
