import warnings

import numpy as np
import pytest
import scipy.linalg as dla

from pvelab import (
    InitialSpec,
    InvalidRegime,
    MissingTimeDerivative,
    PhysParams,
    assemble_forms,
    build_mesh,
    remove_mean,
)
from pvelab.diagnostics import fit_decay_rate
from pvelab.operators import Operators
from pvelab.oracle1d import modal_displacement_field, modal_pressure_field
from pvelab.reductions import (
    build_first_order_generator,
    reduced_route_trajectory,
    solve_ode_q_form,
    solve_reduced_biot,
    solve_strongly_damped_wave,
    spectrum_report,
)
from pvelab.sources import SourceSpec
from pvelab.timestepper import run

MESH = build_mesh(1, 64)


def make_ops(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Operators(assemble_forms(MESH, PhysParams(lambda_e=1.0, mu=1.0, **kw)))


def test_reduced_zero_data():
    ops = make_ops(alpha=1.0, c0=1.0)
    tr = solve_reduced_biot(ops, p0=np.zeros(65), dt=1e-2, T=0.05)
    assert np.abs(tr.p).max() == 0.0


def test_reduced_modal_decay_rate():
    # c0=0, alpha=1, lambda+2mu=3, kappa=1, k=1: rate = 3 pi^2 within 1%.
    ops = make_ops(alpha=1.0, c0=0.0)
    b = ops.bundle
    p0 = remove_mean(b, modal_pressure_field(MESH, 1))
    tr = solve_reduced_biot(ops, p0=p0, dt=1e-4, T=0.05, theta=0.5)
    q1 = modal_pressure_field(MESH, 1)
    amps = (tr.p @ (b.Mp @ q1)) / (q1 @ (b.Mp @ q1))
    fit = fit_decay_rate(tr.times, amps)
    assert abs(fit.gamma_fit - 3 * np.pi**2) / (3 * np.pi**2) <= 0.01


def test_reduced_requires_exactly_one_datum():
    ops = make_ops(alpha=1.0, c0=1.0)
    with pytest.raises(InvalidRegime):
        solve_reduced_biot(ops, dt=1e-2, T=0.02)
    with pytest.raises(InvalidRegime):
        solve_reduced_biot(ops, p0=np.zeros(65), d0=np.zeros(65),
                           dt=1e-2, T=0.02)


def test_reduced_missing_Ft_rejected():
    ops = make_ops(alpha=1.0, c0=1.0)
    src = SourceSpec(F=lambda x, t: np.sin(np.pi * x) * np.exp(-t))
    with pytest.raises(MissingTimeDerivative):
        solve_reduced_biot(ops, p0=np.zeros(65), sources=src, dt=1e-2, T=0.02)


def test_generator_single_mode_formula():
    # N=1 block: [[0, 1], [-a/(d1 c0), -(a + (c0 + a^2 b)/d1)/c0]] with the
    # discrete stiffness/dilation symbols of the coarse mode.
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5)
    gen = build_first_order_generator(ops)
    m = gen.m
    a1 = gen.a[0]
    assert np.abs(gen.A[:m, :m]).max() == 0.0
    assert np.abs(gen.A[:m, m:] - np.eye(m)).max() == 0.0
    assert gen.A[m, 0] == pytest.approx(-a1 / (0.5 * 1.0), rel=1e-12)


def test_generator_regime_guards():
    with pytest.raises(InvalidRegime):
        build_first_order_generator(make_ops(alpha=1.0, c0=0.0, delta1=0.5))
    with pytest.raises(InvalidRegime):
        build_first_order_generator(make_ops(alpha=1.0, c0=1.0))


def test_spectrum_stable_and_conjugate_symmetric():
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5)
    rep = spectrum_report(build_first_order_generator(ops))
    assert rep.spectral_abscissa < 0
    assert rep.min_real_gap == -rep.spectral_abscissa
    eigs = np.sort_complex(rep.eigenvalues)
    assert np.abs(eigs - np.sort_complex(eigs.conj())).max() <= 1e-12
    assert len(eigs) == 2 * 64


def test_wave_matches_generator_exponential():
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5)
    gen = build_first_order_generator(ops)
    ww, VV = np.linalg.eig(gen.A)
    v = VV[:, int(np.argmax(ww.real))].real
    p0 = gen.V @ v[:gen.m]
    p1 = gen.V @ v[gen.m:]
    wt = solve_strongly_damped_wave(ops, p0, p1, dt=1e-3, T=0.2)
    yT = dla.expm(gen.A * 0.2) @ v
    pT = gen.V @ yT[:gen.m]
    vT = gen.V @ yT[gen.m:]
    assert np.linalg.norm(wt.p[-1] - pT) / np.linalg.norm(pT) <= 1e-4
    assert np.linalg.norm(wt.p_t[-1] - vT) / np.linalg.norm(vT) <= 1e-4


def test_wave_zero_and_guards():
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5)
    wt = solve_strongly_damped_wave(ops, np.zeros(65), np.zeros(65),
                                    dt=1e-2, T=0.05)
    assert np.abs(wt.p).max() == 0.0 and np.abs(wt.p_t).max() == 0.0
    with pytest.raises(InvalidRegime):
        solve_strongly_damped_wave(make_ops(alpha=1.0, c0=0.0, delta1=0.5),
                                   np.zeros(65), np.zeros(65), dt=1e-2, T=0.02)


def test_qform_zero_and_modal_rate():
    ops = make_ops(alpha=1.0, c0=0.0, delta1=0.5)
    b = ops.bundle
    tr = solve_ode_q_form(ops, np.zeros(65), dt=1e-2, T=0.05)
    assert np.abs(tr.p).max() == 0.0
    p0 = remove_mean(b, modal_pressure_field(MESH, 1))
    tr = solve_ode_q_form(ops, p0, dt=1e-3, T=0.5)
    q1 = modal_pressure_field(MESH, 1)
    amps = (tr.p @ (b.Mp @ q1)) / (q1 @ (b.Mp @ q1))
    fit = fit_decay_rate(tr.times, amps)
    r1 = np.pi**2 / (1.0 / 3.0 + 0.5 * np.pi**2)
    assert abs(fit.gamma_fit - r1) / r1 <= 0.01


def test_qform_exact_propagator_vs_theta():
    ops = make_ops(alpha=1.0, c0=0.0, delta1=0.5)
    b = ops.bundle
    p0 = remove_mean(b, modal_pressure_field(MESH, 1)
                     + 0.5 * modal_pressure_field(MESH, 2))
    ref = solve_ode_q_form(ops, p0, dt=0.05, T=0.5, exact_propagator=True)
    e1 = np.linalg.norm(solve_ode_q_form(ops, p0, dt=0.05, T=0.5).p[-1]
                        - ref.p[-1])
    e2 = np.linalg.norm(solve_ode_q_form(ops, p0, dt=0.025, T=0.5).p[-1]
                        - ref.p[-1])
    assert 3.0 <= e1 / e2 <= 5.0  # O(dt^2) at theta = 1/2


def test_qform_matrix_free_path_agrees():
    pr = PhysParams(lambda_e=1.0, mu=1.0, alpha=1.0, c0=0.0, delta1=0.5)
    bundle = assemble_forms(build_mesh(1, 24), pr)
    dense = Operators(bundle)
    from pvelab.operators import SolverConfig

    free = Operators(bundle, config=SolverConfig(dense_threshold=4))
    p0 = remove_mean(bundle, modal_pressure_field(bundle.mesh, 1))
    td = solve_ode_q_form(dense, p0, dt=5e-3, T=0.05)
    tf = solve_ode_q_form(free, p0, dt=5e-3, T=0.05)
    assert np.linalg.norm(td.p[-1] - tf.p[-1]) <= 1e-6 * np.linalg.norm(td.p[-1])


def test_qform_generator_spectrum_positive():
    ops = make_ops(alpha=1.0, c0=0.0, delta1=0.5)
    V, a = ops.modal_basis()
    kb = ops.dense_dilation_gram()
    Bhat = V.T @ (0.5 * (kb + kb.T)) @ V
    Chat = Bhat + 0.5 * np.diag(a)
    Rhat = np.diag(a) @ np.linalg.inv(Chat)
    eigs = np.linalg.eigvals(Rhat)
    assert np.abs(eigs.imag).max() <= 1e-8 * np.abs(eigs).max()
    assert eigs.real.min() > 0
    assert eigs.real.max() <= 1.0 / 0.5 + 1e-10


def test_adjusted_equivalence_theta_one():
    for c0 in (0.0, 1.0):
        ops = make_ops(alpha=1.0, c0=c0, delta1=0.5, delta2=0.5)
        b = ops.bundle
        p0 = remove_mean(b, modal_pressure_field(MESH, 1)
                         + 0.4 * modal_pressure_field(MESH, 3))
        u0 = 0.2 * modal_displacement_field(MESH, 2)
        full = run(ops, InitialSpec(p0=p0, u0=u0), dt=2e-3, T=0.05, theta=1.0)
        red = solve_reduced_biot(ops, p0=p0, dt=2e-3, T=0.05, theta=1.0)
        for i in range(len(red.times)):
            denom = max(np.linalg.norm(red.p[i]), 1e-300)
            assert np.linalg.norm(full.p[i] - red.p[i]) / denom <= 1e-9


def test_adjusted_pressure_independent_of_u0():
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5, delta2=0.5)
    b = ops.bundle
    p0 = remove_mean(b, modal_pressure_field(MESH, 1))
    uA = 0.2 * modal_displacement_field(MESH, 2)
    uB = -0.5 * modal_displacement_field(MESH, 4)
    trA = run(ops, InitialSpec(p0=p0, u0=uA), dt=2e-3, T=0.05, theta=1.0)
    trB = run(ops, InitialSpec(p0=p0, u0=uB), dt=2e-3, T=0.05, theta=1.0)
    assert np.abs(trA.p[-1] - trB.p[-1]).max() <= 1e-10


def test_reduced_route_second_order():
    ops = make_ops(alpha=1.0, c0=1.0, delta1=0.5, delta2=0.5)
    b = ops.bundle
    p0 = remove_mean(b, modal_pressure_field(MESH, 1))
    u0 = 0.2 * modal_displacement_field(MESH, 1)
    finals = {}
    for dt in (4e-3, 2e-3, 1e-3):
        tr = reduced_route_trajectory(ops, p0, u0, dt=dt, T=0.1, theta=0.5)
        finals[dt] = tr.u[-1]
    d1 = np.linalg.norm(finals[4e-3] - finals[2e-3])
    d2 = np.linalg.norm(finals[2e-3] - finals[1e-3])
    assert np.log2(d1 / d2) >= 1.8
