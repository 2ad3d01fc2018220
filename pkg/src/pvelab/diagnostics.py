"""Numerical verdicts: energy ledgers, identity residuals, decay rates.

Quadrature conventions (chosen so every equality residual converges at the
scheme's order):

* state quadratics (elastic energy, a(p,p), storage) sampled at grid nodes
  and integrated by the trapezoid rule;
* rate quadratics use the stored backward differences, which are
  second-order samples at interval midpoints, and are integrated by the
  midpoint rule;
* endpoint values of rates are reconstructed to second order (stored
  analytic value at t=0, one-sided three-point difference at t=T).

Inequalities are reported as signed slack (negative means satisfied).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla

from .errors import (
    EigenFailure,
    InvalidRegime,
    NonPositiveSeries,
    RegimeMismatch,
    UnresolvedRange,
)
from .operators import Operators
from .reductions import PressureTrajectory, WaveTrajectory, _reduced_source, _wave_source
from .sources import displacement_load_vector, pressure_source_vector
from .timestepper import Trajectory

DENSE_EIG_LIMIT = 2048


# ---------------------------------------------------------------------------
# Energy ledger
# ---------------------------------------------------------------------------

@dataclass
class EnergyLedger:
    """Per-snapshot energies and cumulative dissipation/work integrals.

    The balance column is the discrete standard-content identity
    d/dt[(1/2) e(u,u) + (c0/2)||p||^2] + dissipation - source work, formed
    with the scheme's own midpoint quantities; at theta = 1/2 with
    delta2 = 0 it vanishes to round-off.
    """

    times: np.ndarray
    elastic: np.ndarray
    storage: np.ndarray
    viscous_cum: np.ndarray
    darcy_cum: np.ndarray
    consolidation_cum: np.ndarray
    work_cum: np.ndarray
    balance_residual: np.ndarray   # per interval, aligned with right endpoint

    @property
    def total_energy(self) -> np.ndarray:
        return self.elastic + self.storage


def energy_ledger(traj: Trajectory) -> EnergyLedger:
    b = traj.bundle
    pr = traj.params
    th = traj.theta
    nt = len(traj.times)
    elastic = 0.5 * np.einsum("ij,ij->i", traj.u, (b.Ke @ traj.u.T).T)
    storage = 0.5 * pr.c0 * np.einsum("ij,ij->i", traj.p, (b.Mp @ traj.p.T).T)
    visc = np.zeros(nt)
    darcy = np.zeros(nt)
    consol = np.zeros(nt)
    work = np.zeros(nt)
    bal = np.zeros(nt)
    total = elastic + storage
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        ud = traj.u_dot[n]
        p_mid = 0.5 * (traj.p[n] + traj.p[n - 1])
        d_visc = pr.delta1 * float(ud @ (b.Ke @ ud))
        d_darcy = float(p_mid @ (b.Ap @ p_mid))
        d_cons = pr.lambda_star * float(ud @ (b.Kdivdiv @ ud))
        f0 = displacement_load_vector(b, traj.sources.F, traj.times[n - 1])
        f1 = displacement_load_vector(b, traj.sources.F, traj.times[n])
        s0 = pressure_source_vector(b, traj.sources.S, traj.times[n - 1])
        s1 = pressure_source_vector(b, traj.sources.S, traj.times[n])
        w = float((th * f1 + (1 - th) * f0) @ ud) + float(
            (th * s1 + (1 - th) * s0) @ p_mid)
        visc[n] = visc[n - 1] + dt * d_visc
        darcy[n] = darcy[n - 1] + dt * d_darcy
        consol[n] = consol[n - 1] + dt * d_cons
        work[n] = work[n - 1] + dt * w
        bal[n] = (total[n] - total[n - 1]) / dt + d_visc + d_darcy + d_cons - w
    return EnergyLedger(
        times=traj.times, elastic=elastic, storage=storage, viscous_cum=visc,
        darcy_cum=darcy, consolidation_cum=consol, work_cum=work,
        balance_residual=bal,
    )


# ---------------------------------------------------------------------------
# Identity residuals
# ---------------------------------------------------------------------------

@dataclass
class IdentityResult:
    name: str
    kind: str                  # "equality" or "inequality"
    times: np.ndarray          # interval right endpoints
    series: np.ndarray         # per-interval residual (or slack) density
    integrated: float          # accumulated residual over [0, T]
    scale: float               # normalization for relative comparisons


def _nodal_rates(traj: Trajectory) -> np.ndarray:
    """Second-order u_t at grid nodes (centered interior, one-sided at T)."""
    nt, dt = len(traj.times), traj.dt
    out = np.empty_like(traj.u)
    out[0] = traj.u_dot[0]
    for n in range(1, nt - 1):
        out[n] = (traj.u[n + 1] - traj.u[n - 1]) / (2 * dt)
    if nt >= 3:
        out[-1] = (3 * traj.u[-1] - 4 * traj.u[-2] + traj.u[-3]) / (2 * dt)
    elif nt == 2:
        out[-1] = traj.u_dot[-1]
    return out


def _require_zero_sources(traj, name):
    if traj.sources.F is not None or traj.sources.S is not None:
        raise RegimeMismatch(f"identity {name} is checked on source-free runs")


def identity_residual(ops: Operators, traj, which: str) -> IdentityResult:
    """Residual time series of a named energy identity or inequality.

    ``traj`` is a full Trajectory for the balance identities, a
    WaveTrajectory for the damped-wave identity, and a PressureTrajectory
    for the reduced-equation identity.
    """
    pr = ops.params
    b = ops.bundle
    if which == "energyest":
        if pr.delta2 != 0:
            raise RegimeMismatch("energyest applies to standard-content runs")
        return _energyest(ops, traj)
    if which in ("firstone", "secondone", "thirdone"):
        if not (pr.c0 == 0 and pr.delta1 > 0 and pr.delta2 == 0
                and pr.lambda_star == 0):
            raise RegimeMismatch(f"{which} needs the incompressible visco regime")
        _require_zero_sources(traj, which)
        return {"firstone": _firstone, "secondone": _secondone,
                "thirdone": _thirdone}[which](ops, traj)
    if which == "finest":
        if pr.delta2 <= 0:
            raise RegimeMismatch("finest applies to adjusted-content runs")
        if traj.sources.F is not None:
            raise RegimeMismatch("finest is checked with F = 0")
        return _finest(ops, traj)
    if which == "EED1C0":
        if not isinstance(traj, WaveTrajectory):
            raise RegimeMismatch("EED1C0 needs a damped-wave trajectory")
        return _eed1c0(ops, traj)
    if which == "mod2":
        if not isinstance(traj, PressureTrajectory):
            raise RegimeMismatch("mod2 needs a reduced pressure trajectory")
        return _mod2(ops, traj)
    raise RegimeMismatch(f"unknown identity {which!r}")


def _interval_times(times):
    return times[1:]


def _energyest(ops, traj: Trajectory) -> IdentityResult:
    led = energy_ledger(traj)
    b, pr = ops.bundle, ops.params
    nt = len(traj.times)
    series = np.zeros(nt - 1)
    E = led.total_energy
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        ud = traj.u_dot[n]
        a_trap = 0.5 * (float(traj.p[n] @ (b.Ap @ traj.p[n]))
                        + float(traj.p[n - 1] @ (b.Ap @ traj.p[n - 1])))
        d_visc = pr.delta1 * float(ud @ (b.Ke @ ud))
        d_cons = pr.lambda_star * float(ud @ (b.Kdivdiv @ ud))
        t_mid = 0.5 * (traj.times[n] + traj.times[n - 1])
        f_mid = displacement_load_vector(b, traj.sources.F, t_mid)
        s0 = pressure_source_vector(b, traj.sources.S, traj.times[n - 1])
        s1 = pressure_source_vector(b, traj.sources.S, traj.times[n])
        w = float(f_mid @ ud) + 0.5 * (float(s0 @ traj.p[n - 1])
                                       + float(s1 @ traj.p[n]))
        series[n - 1] = (E[n] - E[n - 1]) / dt + d_visc + d_cons + a_trap - w
    scale = max(E[0], abs(E).max(), 1e-300)
    return IdentityResult("energyest", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * traj.dt), scale)


def _firstone(ops, traj: Trajectory) -> IdentityResult:
    b, pr = ops.bundle, ops.params
    nt = len(traj.times)
    series = np.zeros(nt - 1)
    eu = np.einsum("ij,ij->i", traj.u, (b.Ke @ traj.u.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        ud = traj.u_dot[n]
        series[n - 1] = ((eu[n] - eu[n - 1]) / (2 * dt)
                         + pr.delta1 * float(ud @ (b.Ke @ ud))
                         + 0.5 * (ap[n] + ap[n - 1]))
    scale = max(0.5 * eu[0], 1e-300)
    return IdentityResult("firstone", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * traj.dt), scale)


def _secondone(ops, traj: Trajectory) -> IdentityResult:
    # Derivable form: e(u_t,u_t) + (d1/2) d/dt e(u_t,u_t) + (1/2) d/dt a(p,p) = 0.
    b, pr = ops.bundle, ops.params
    nt = len(traj.times)
    ut = _nodal_rates(traj)
    eut = np.einsum("ij,ij->i", ut, (b.Ke @ ut.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    series = np.zeros(nt - 1)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        ud = traj.u_dot[n]
        series[n - 1] = (float(ud @ (b.Ke @ ud))
                         + 0.5 * pr.delta1 * (eut[n] - eut[n - 1]) / dt
                         + 0.5 * (ap[n] - ap[n - 1]) / dt)
    scale = max(0.5 * pr.delta1 * eut[0] + 0.5 * ap[0], 1e-300)
    return IdentityResult("secondone", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * traj.dt), scale)


def _thirdone(ops, traj: Trajectory) -> IdentityResult:
    b, pr = ops.bundle, ops.params
    cp = poincare_korn_constant(ops)
    k = pr.kappa
    w1 = k / (pr.alpha**2 * cp)
    nt = len(traj.times)
    eu = np.einsum("ij,ij->i", traj.u, (b.Ke @ traj.u.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    series = np.zeros(nt - 1)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        series[n - 1] = (0.5 * w1 * 0.5 * (eu[n] + eu[n - 1])
                         + 0.5 * pr.delta1 * w1 * (eu[n] - eu[n - 1]) / dt
                         - 0.25 * (ap[n] + ap[n - 1]))
    scale = max(0.5 * w1 * eu[0], 0.5 * ap[0], 1e-300)
    return IdentityResult("thirdone", "inequality", _interval_times(traj.times),
                          series, float(np.sum(series) * traj.dt), scale)


def _finest(ops, traj: Trajectory) -> IdentityResult:
    b, pr = ops.bundle, ops.params
    nt = len(traj.times)
    ut = _nodal_rates(traj)
    w = pr.delta1 * ut + traj.u
    ew = np.einsum("ij,ij->i", w, (b.Ke @ w.T).T)
    pn = np.einsum("ij,ij->i", traj.p, (b.Mp @ traj.p.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    psi = 0.5 * ew + 0.5 * pr.c0 * pn
    series = np.zeros(nt - 1)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        s0 = pressure_source_vector(b, traj.sources.S, traj.times[n - 1])
        s1 = pressure_source_vector(b, traj.sources.S, traj.times[n])
        wsrc = 0.5 * (float(s0 @ traj.p[n - 1]) + float(s1 @ traj.p[n]))
        series[n - 1] = ((psi[n] - psi[n - 1]) / dt
                         + 0.5 * (ap[n] + ap[n - 1]) - wsrc)
    scale = max(psi[0], abs(psi).max(), 1e-300)
    return IdentityResult("finest", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * traj.dt), scale)


def _eed1c0(ops, traj: WaveTrajectory) -> IdentityResult:
    b, pr = ops.bundle, ops.params
    if pr.c0 <= 0 or pr.delta1 <= 0:
        raise RegimeMismatch("EED1C0 needs c0 > 0 and delta1 > 0")
    nt = len(traj.times)
    vn = np.einsum("ij,ij->i", traj.p_t, (b.Mp @ traj.p_t.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    phi = 0.5 * (pr.c0 * vn + ap / pr.delta1)
    # (content applied to p_t, p_t): one elastic solve per node.
    cv = np.array([float(traj.p_t[i] @ ops.content_gram(traj.p_t[i]))
                   for i in range(nt)])
    av = np.einsum("ij,ij->i", traj.p_t, (b.Ap @ traj.p_t.T).T)
    src = traj.meta.get("sources")
    series = np.zeros(nt - 1)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        diss = 0.5 * (av[n] + av[n - 1]) + 0.5 * (cv[n] + cv[n - 1]) / pr.delta1
        wsrc = 0.0
        if src is not None and (src.S is not None or src.F is not None):
            sh0 = _wave_source(ops, src, traj.times[n - 1])
            sh1 = _wave_source(ops, src, traj.times[n])
            wsrc = 0.5 * (float(sh0 @ traj.p_t[n - 1]) + float(sh1 @ traj.p_t[n]))
        series[n - 1] = (phi[n] - phi[n - 1]) / dt + diss - wsrc
    dt = traj.times[1] - traj.times[0] if nt > 1 else 1.0
    scale = max(phi[0], abs(phi).max(), 1e-300)
    return IdentityResult("EED1C0", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * dt), scale)


def _mod2(ops, traj: PressureTrajectory) -> IdentityResult:
    b, pr = ops.bundle, ops.params
    nt = len(traj.times)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    src = traj.meta.get("sources")
    series = np.zeros(nt - 1)
    for n in range(1, nt):
        dt = traj.times[n] - traj.times[n - 1]
        pt = (traj.p[n] - traj.p[n - 1]) / dt
        cpt = float(pt @ ops.content_gram(pt))
        wsrc = 0.0
        if src is not None and (src.S is not None or src.F is not None):
            s0 = _reduced_source(ops, src, traj.times[n - 1])
            s1 = _reduced_source(ops, src, traj.times[n])
            wsrc = float((0.5 * (s0 + s1)) @ pt)
        series[n - 1] = (ap[n] - ap[n - 1]) / (2 * dt) + cpt - wsrc
    dt = traj.times[1] - traj.times[0] if nt > 1 else 1.0
    scale = max(0.5 * ap[0], abs(ap).max(), 1e-300)
    return IdentityResult("mod2", "equality", _interval_times(traj.times),
                          series, float(np.sum(series) * dt), scale)


# ---------------------------------------------------------------------------
# Constants, bounds and fits
# ---------------------------------------------------------------------------

def poincare_korn_constant(ops: Operators) -> float:
    """Largest generalized Ritz value of the displacement mass against the
    elastic stiffness (discrete optimal constant in ||u||^2 <= C e(u,u))."""
    key = "poincare"
    if key not in ops._cache:
        n = ops.bundle.n_displacement
        if n > DENSE_EIG_LIMIT:
            raise EigenFailure(
                f"displacement dimension {n} exceeds dense eigensolve limit")
        w = dla.eigh(ops.bundle.Mu.toarray(), ops.bundle.Ke.toarray(),
                     eigvals_only=True)
        ops._cache[key] = float(w[-1])
    return ops._cache[key]


def gamma_bound(params, C_P: float) -> float:
    """Explicit decay-rate bound for the incompressible visco regime.

    Returns 0.99 * min(1, kappa / (delta1*kappa + alpha^2 C_P)); the 0.99
    keeps the strict inequality of the underlying Gronwall argument.
    """
    if params.c0 != 0 or params.delta1 <= 0:
        raise InvalidRegime("decay bound needs c0 = 0 and delta1 > 0")
    return 0.99 * min(1.0, params.kappa /
                      (params.delta1 * params.kappa + params.alpha**2 * C_P))


@dataclass
class DecayFit:
    gamma_fit: float
    window: tuple
    rsquared: float
    quantity: str = ""


def fit_decay_rate(times, values, window: tuple | None = None,
                   quantity: str = "") -> DecayFit:
    """Least-squares exponential rate of a positive series.

    The default window skips the first 10% of the time span (analytic
    smoothing of rough data distorts the early rate).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        span = times[-1] - times[0]
        window = (times[0] + 0.1 * span, times[-1])
    mask = (times >= window[0]) & (times <= window[1])
    t, v = times[mask], values[mask]
    if len(t) < 2:
        raise NonPositiveSeries("window contains fewer than two samples")
    if np.any(v <= 0):
        raise NonPositiveSeries("series is not positive on the fit window")
    logs = np.log(v)
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 0.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return DecayFit(gamma_fit=float(-coef[0]), window=window,
                    rsquared=r2, quantity=quantity)


def gronwall_energy(ops: Operators, traj: Trajectory, C_P: float,
                    variant: str = "weighted") -> np.ndarray:
    """Decay functional for the incompressible visco regime.

    ``weighted`` uses 0.5[(1 + d1 k/(a^2 C_P)) e(u,u) + d1 e(u_t,u_t)
    + a(p,p)]; ``natural`` drops the weight on the elastic term.
    """
    b, pr = ops.bundle, ops.params
    w = 1.0 + (pr.delta1 * pr.kappa / (pr.alpha**2 * C_P)
               if variant == "weighted" else 0.0)
    eu = np.einsum("ij,ij->i", traj.u, (b.Ke @ traj.u.T).T)
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    ut = traj.u_dot
    eut = np.einsum("ij,ij->i", ut, (b.Ke @ ut.T).T)
    return 0.5 * (w * eu + pr.delta1 * eut + ap)


def wave_state_energy(ops: Operators, traj: WaveTrajectory) -> np.ndarray:
    """Squared state norm a(p,p) + c0 ||p_t||^2 of a damped-wave trajectory."""
    b, pr = ops.bundle, ops.params
    ap = np.einsum("ij,ij->i", traj.p, (b.Ap @ traj.p.T).T)
    vn = np.einsum("ij,ij->i", traj.p_t, (b.Mp @ traj.p_t.T).T)
    return ap + pr.c0 * vn


# ---------------------------------------------------------------------------
# Parabolic smoothing
# ---------------------------------------------------------------------------

@dataclass
class SmoothingReport:
    T_list: np.ndarray
    ap_norms: np.ndarray
    slope: float
    rsquared: float
    sup_bound: float         # max over T of T * ||A p(T)|| / ||d0||
    significant_modes: int


def smoothing_rate_check(
    ops: Operators,
    d0: np.ndarray,
    T_list,
    steps_per_T: int = 400,
    theta: float = 1.0,
) -> SmoothingReport:
    """Log-log slope of ||A p(T)|| against T for rough content data.

    Runs the reduced classical solver from d0 for each probe time.  The
    data must be broadband (a single decaying exponential has no power-law
    regime) and the smallest probe time must still resolve the fastest
    significant mode.
    """
    from .reductions import solve_reduced_biot

    pr = ops.params
    b = ops.bundle
    if pr.delta1 != 0 or pr.delta2 != 0 or pr.lambda_star != 0:
        raise InvalidRegime("smoothing check applies to the classical regime")
    if b.mesh.dim != 1:
        raise InvalidRegime("spectral-content detection is one-dimensional")
    T_list = np.sort(np.asarray(T_list, dtype=float))

    # Modal content of d0 against the sampled cosine family.
    n = b.mesh.n
    x = b.mesh.nodes[:, 0]
    kmax_mesh = n // 2
    amps = np.empty(kmax_mesh)
    for k in range(1, kmax_mesh + 1):
        phi = np.sqrt(2.0) * np.cos(k * np.pi * x)
        amps[k - 1] = (d0 @ (b.Mp @ phi)) / (phi @ (b.Mp @ phi))
    strong = np.abs(amps) >= 1e-3 * max(np.abs(amps).max(), 1e-300)
    n_sig = int(strong.sum())
    if n_sig < 8:
        raise UnresolvedRange(
            f"smoothing check needs broadband data; found {n_sig} significant "
            "modes (a narrowband field decays as a plain exponential)")
    k_sig = int(np.nonzero(strong)[0].max() + 1)
    beta = pr.c0 + pr.alpha**2 / pr.lame_p_wave
    r_fast = pr.kappa * (k_sig * np.pi) ** 2 / beta
    if r_fast * T_list[0] < 1.5:
        raise UnresolvedRange(
            f"T_min={T_list[0]:g} does not resolve mode {k_sig} "
            f"(rate {r_fast:.3g}); transients contaminate the power law")

    norms = np.empty(len(T_list))
    d0_norm = float(np.sqrt(d0 @ (b.Mp @ d0)))
    for i, T in enumerate(T_list):
        run = solve_reduced_biot(ops, d0=d0, dt=T / steps_per_T, T=T,
                                 theta=theta)
        p = run.p[-1]
        apd = b.Ap @ p
        x_ap = ops._mp_lu.solve(apd)
        norms[i] = float(np.sqrt(max(apd @ x_ap, 0.0)))
    logT, logN = np.log(T_list), np.log(norms)
    A = np.column_stack([logT, np.ones_like(logT)])
    coef, *_ = np.linalg.lstsq(A, logN, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((logN - fitted) ** 2))
    ss_tot = float(np.sum((logN - logN.mean()) ** 2))
    r2 = 0.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return SmoothingReport(
        T_list=T_list, ap_norms=norms, slope=float(coef[0]), rsquared=r2,
        sup_bound=float((T_list * norms).max() / max(d0_norm, 1e-300)),
        significant_modes=n_sig,
    )
