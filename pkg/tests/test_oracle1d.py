import numpy as np
import pytest
import scipy.linalg as dla
from scipy.integrate import solve_ivp

from pvelab import PhysParams, assemble_forms, build_mesh
from pvelab.errors import InvalidRegime, UnsupportedSource
from pvelab.oracle1d import (
    ModalSource,
    compatible_u0,
    exact_modal_solution,
    modal_matrix,
    oracle_field_solution,
    _forcing_maps,
    _source_values,
)

PR_VISCO = PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.1, kappa=1, delta1=0.5)


def test_classical_decay_rate():
    # c0 = 0, alpha = 1: rate a_1/b = kappa pi^2 (lambda + 2 mu) = 3 pi^2.
    pr = PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.0, kappa=1)
    ms = modal_matrix(1, pr)
    assert ms.state == ("p",)
    assert ms.M[0, 0] == pytest.approx(-3 * np.pi**2, rel=1e-12)
    sol = exact_modal_solution(ms, {"p": 1.0}, 0.1)
    assert sol["p"] == pytest.approx(np.exp(-3 * np.pi**2 * 0.1), rel=1e-12)


def test_visco_characteristic_polynomial():
    # c0 l^2 + (a + (c0 + a^2 b)/d1) l + a/d1 = 0 matches eig(M).
    ms = modal_matrix(1, PR_VISCO)
    a, bsym = np.pi**2, 1.0 / 3.0
    roots = np.roots([0.1, a + (0.1 + bsym) / 0.5, a / 0.5])
    assert np.allclose(sorted(np.linalg.eigvals(ms.M)), sorted(roots),
                       rtol=1e-10)


def test_qform_rate_symbol():
    pr = PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.0, kappa=1, delta1=0.5)
    ms = modal_matrix(2, pr)
    a = 4 * np.pi**2
    r = a / (1.0 / 3.0 + 0.5 * a)
    assert ms.M[0, 0] == pytest.approx(-r, rel=1e-12)


def test_t0_returns_initial_data():
    ms = modal_matrix(3, PR_VISCO)
    sol = exact_modal_solution(ms, {"p": 0.4, "u": -0.7}, 0.0)
    assert sol["p"] == pytest.approx(0.4, abs=1e-14)
    assert sol["u"] == pytest.approx(-0.7, abs=1e-14)


@pytest.mark.parametrize("t", [0.02, 0.3, 1.5])
def test_matches_matrix_exponential(t):
    ms = modal_matrix(1, PR_VISCO)
    y0 = np.array([0.8, -0.1])
    sol = exact_modal_solution(ms, {"p": y0[0], "u": y0[1]}, t)
    ref = dla.expm(ms.M * t) @ y0
    assert abs(sol["p"] - ref[0]) <= 1e-11
    assert abs(sol["u"] - ref[1]) <= 1e-11


def test_double_root_branch():
    # The visco quadratic keeps a positive discriminant for these modes, so
    # exercise the repeated-root branch on a defective 2x2 directly: the
    # solution must carry the t*exp(l t) secular term.
    from pvelab.oracle1d import _expm_closed

    M = np.array([[-2.0, 1.0], [0.0, -2.0]])
    for t in (0.1, 0.7):
        E = _expm_closed(M, t)
        assert np.abs(E - dla.expm(M * t)).max() <= 1e-10
        assert E[0, 1] == pytest.approx(t * np.exp(-2 * t), rel=1e-12)


def test_exponential_source_against_ivp():
    ms = modal_matrix(1, PR_VISCO)
    src = ModalSource(F_amp=0.4, F_rate=-0.8, S_amp=0.2, S_rate=0.0)
    N = _forcing_maps(ms)

    def f(t, y):
        return ms.M @ y + N @ _source_values(src, t)

    ref = solve_ivp(f, (0, 0.3), [0.7, -0.2], rtol=1e-12, atol=1e-14)
    sol = exact_modal_solution(ms, {"p": 0.7, "u": -0.2}, 0.3, source=src)
    assert abs(sol["p"] - ref.y[0, -1]) <= 1e-10
    assert abs(sol["u"] - ref.y[1, -1]) <= 1e-10


def test_resonant_source_rejected():
    ms = modal_matrix(1, PR_VISCO)
    lam = np.linalg.eigvals(ms.M).real.max()
    with pytest.raises(UnsupportedSource):
        exact_modal_solution(ms, {"p": 1.0, "u": 0.0}, 0.1,
                             source=ModalSource(S_amp=1.0, S_rate=float(lam)))


def test_ode_residual_analytic_derivative():
    ms = modal_matrix(2, PR_VISCO)
    src = ModalSource(S_amp=0.3, S_rate=-1.0)
    out = exact_modal_solution(ms, {"p": 1.0, "u": 0.2},
                               np.array([0.05, 0.2, 0.6]), source=src,
                               return_derivative=True)
    N = _forcing_maps(ms)
    for i, t in enumerate((0.05, 0.2, 0.6)):
        resid = out["ydot"][i] - (ms.M @ out["y"][i]
                                  + N @ _source_values(src, t))
        assert np.abs(resid).max() <= 1e-12


def test_compatible_u0_constraint():
    pr = PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.0, kappa=1, delta1=0.5)
    k, p0 = 2, 0.7
    u0 = compatible_u0(k, pr, p0)
    ms = modal_matrix(k, pr)
    # With a compatible pair the content equation holds at t = 0:
    # alpha K u_dot + a p = 0.
    sol = exact_modal_solution(ms, {"p": p0, "u": u0}, 0.0,
                               return_derivative=True)
    K = k * np.pi
    resid = K * sol["ydot"][1] + ms.a_k * p0
    assert abs(resid) <= 1e-10
    with pytest.raises(InvalidRegime):
        compatible_u0(k, PR_VISCO, p0)


def test_secondary_modal_systems():
    prc = PhysParams(lambda_e=1, mu=1, alpha=1, c0=1.0, kappa=1,
                     lambda_star=2.0)
    ms = modal_matrix(1, prc)
    assert ms.state == ("p", "u")
    pr0 = PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.0, kappa=1,
                     lambda_star=2.0)
    ms0 = modal_matrix(1, pr0)
    assert ms0.state == ("u",)
    K, a, e, l = np.pi, np.pi**2, 3 * np.pi**2, 2 * np.pi**2
    assert ms0.M[0, 0] == pytest.approx(-e * a / (l * a + K**2), rel=1e-12)
    sol = exact_modal_solution(ms0, {"u": 1.0}, 0.3)
    assert sol["u"] == pytest.approx(np.exp(ms0.M[0, 0] * 0.3), rel=1e-12)
    # algebraic output map: p slaved to u
    assert sol["p"] == pytest.approx(
        (K * e / l) / (a + K**2 / l) * sol["u"], rel=1e-10)


def test_field_superposition():
    bundle = assemble_forms(build_mesh(1, 32), PR_VISCO)
    p1, u1 = oracle_field_solution(bundle, [(1, {"p": 1.0, "u": 0.2})], 0.05)
    p2, u2 = oracle_field_solution(bundle, [(3, {"p": 0.5, "u": 0.0})], 0.05)
    p12, u12 = oracle_field_solution(
        bundle, [(1, {"p": 1.0, "u": 0.2}), (3, {"p": 0.5, "u": 0.0})], 0.05)
    assert np.allclose(p12.coeffs, p1.coeffs + p2.coeffs, atol=1e-13)
    assert np.allclose(u12.coeffs, u1.coeffs + u2.coeffs, atol=1e-13)
    pe, ue = oracle_field_solution(bundle, [], 0.05)
    assert np.all(pe.coeffs == 0) and np.all(ue.coeffs == 0)
    with pytest.raises(InvalidRegime):
        oracle_field_solution(bundle, [(1, {"p": 1.0, "u": 0.0}),
                                       (1, {"p": 0.1, "u": 0.0})], 0.0)
