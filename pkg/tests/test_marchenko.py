import numpy as np
import pytest

from thirdscat import direct as dr
from thirdscat import marchenko as mk
from thirdscat.geometry import DomainError, XGrid
from thirdscat.numerics import rel_l2
from thirdscat.potentials import paired_gaussian


@pytest.fixture(scope="module")
def exp_kernel():
    return mk.RhoKernel.from_functions(lambda s: np.exp(-s), lambda s: np.exp(s), s_max=60.0)


def test_rho_hat_closed_forms(exp_kernel):
    w = np.linspace(-4, 4, 9)
    plus = 1 / (2 * np.pi * (1 + 1j * (w - 0.3j)))
    minus = 1 / (2 * np.pi * (1 - 1j * (w + 0.3j)))
    assert np.max(np.abs(mk.rho_hat(exp_kernel, 1, w - 0.3j) - plus)) < 1e-10
    assert np.max(np.abs(mk.rho_hat(exp_kernel, -1, w + 0.3j) - minus)) < 1e-10
    d = -1j / (2 * np.pi * (1 + 1j * w) ** 2)
    assert np.max(np.abs(mk.rho_hat(exp_kernel, 1, w, deriv=1) - d)) < 1e-10
    assert np.allclose(mk.rho_hat_full(exp_kernel, w), 1 / (np.pi * (1 + w ** 2)), atol=1e-10)


def test_rho_hat_half_plane_guard(exp_kernel):
    with pytest.raises(DomainError):
        mk.rho_hat(exp_kernel, 1, [1.0 + 0.5j])
    with pytest.raises(DomainError):
        mk.rho_hat(exp_kernel, -1, [1.0 - 0.5j])


def test_quadrature_grid_integrates_smooth_functions():
    s, w = mk.rho_quadrature_grid()
    assert abs(w @ np.exp(-s) - (1 - np.exp(-8.0))) < 1e-12


def test_neumann_series_agrees_for_small_kernel(exp_kernel):
    k = exp_kernel.scaled(1e-3)
    sl = mk.solve_marchenko(k, 0.3)
    F, G = mk.neumann_iterate(k, 0.3, iterations=3)
    assert np.max(np.abs(F - sl.F)) < 1e-10 * np.max(np.abs(sl.F)) + 1e-14
    assert np.max(np.abs(G - sl.G)) < 1e-10 * np.max(np.abs(sl.G)) + 1e-14
    assert sl.residual < 1e-12


def test_recovery_is_linear_at_small_amplitude(exp_kernel):
    x = np.linspace(-2, 2, 41)
    a = mk.recover_from_F(mk.solve_marchenko_grid(exp_kernel.scaled(1e-4), x))
    b = mk.recover_from_F(mk.solve_marchenko_grid(exp_kernel.scaled(2e-4), x))
    assert rel_l2(b.Q, 2 * a.Q) < 1e-3


def test_threads_do_not_change_results(exp_kernel):
    x = np.linspace(-1, 1, 9)
    a = mk.solve_marchenko_grid(exp_kernel.scaled(0.1), x)
    b = mk.solve_marchenko_grid(exp_kernel.scaled(0.1), x, threads=3)
    assert np.array_equal(a.F, b.F) and np.array_equal(a.G0, b.G0)


def test_full_driving_gives_matching_routes(exp_kernel):
    x = np.linspace(-1, 1, 41)
    sol = mk.solve_marchenko_grid(exp_kernel.scaled(0.05), x)
    assert np.max(np.abs(sol.F0 + sol.G0)) < 1e-12
    assert rel_l2(mk.recover_from_G(sol).Q, mk.recover_from_F(sol).Q) < 1e-10


def test_model_violations(grid):
    d = dr.sweep_rays(paired_gaussian(0.05), [0.05, 1.0], grid, tail=False)
    with pytest.raises(mk.ModelViolation):
        mk.build_rho(d, m_n_tol=1e-3)
    d.bound_states = [object()]
    with pytest.raises(mk.ModelViolation):
        mk.build_rho(d, enforce=False)


def test_kernel_json_roundtrip(exp_kernel):
    k = mk.RhoKernel.from_json_dict(exp_kernel.to_json_dict())
    assert np.array_equal(k.rho_plus, exp_kernel.rho_plus) and np.array_equal(k.s_minus, exp_kernel.s_minus)


@pytest.fixture(scope="module")
def paired_runs():
    out = {}
    s, w = mk.rho_quadrature_grid()
    x = np.linspace(-6, 6, 121)
    for eps in (0.05, 0.0125):
        pot = paired_gaussian(eps)
        kernel = mk.build_rho(dr.sweep_rays(pot, s, XGrid(), tail=False), w, enforce=False)
        rf = mk.recover_from_F(mk.solve_marchenko_grid(kernel, x))
        q, _ = pot(x)
        out[eps] = rel_l2(rf.Q, q)
    return out


@pytest.mark.slow
def test_paired_recovery_error_is_linear_in_eps(paired_runs):
    """With M, N cancelled at first order the inversion error falls like eps."""
    e1, e2 = paired_runs[0.05], paired_runs[0.0125]
    assert e2 < 0.10
    assert 3.0 < e1 / e2 < 5.0


@pytest.mark.slow
def test_paired_support_residual_is_linear_in_eps():
    c = [float(np.max(mk.support_check(paired_gaussian(e), x=[0.0]).cauchy)) for e in (0.05, 0.0125)]
    assert 3.0 < c[0] / c[1] < 5.0
    assert c[1] < 0.01
