import numpy as np
import pytest

from thirdscat import direct as dr
from thirdscat import riemann_hilbert as rh
from thirdscat.geometry import Z, DomainError, XGrid
from thirdscat.numerics import rel_l2
from thirdscat.potentials import free, gaussian

from conftest import REGULAR_POLE


def test_pole_validation():
    with pytest.raises(DomainError):
        rh.validate_poles([(1.0 + 0.5j, 1.0)])          # outside P+
    with pytest.raises(DomainError):
        rh.validate_poles([(-1.0, 1.0)])                # on a ray
    with pytest.raises(ValueError):
        rh.validate_poles([(REGULAR_POLE, 0.0)])


def test_residue_rotation_lands_in_omega3():
    for a in (0.75 * np.pi, 0.9 * np.pi, 1.1 * np.pi, 1.3 * np.pi):
        k = np.exp(1j * a)
        q = rh.residue_rotation(k)
        assert abs(np.angle(q * k)) < np.pi / 3


def test_soliton_solves_the_equation(regular_soliton):
    sol, _, grid = regular_soliton
    x = grid.x
    assert sol.residue_residual(x) < 1e-12
    ks = np.array([2.0, -1.5j, 0.7 + 1.1j, 3 * Z])
    assert sol.ode_residual(ks, x) < 1e-8


def test_soliton_derivatives_consistent(regular_soliton):
    sol, _, grid = regular_soliton
    x = grid.x
    dq = np.gradient(sol.Q(x), x)
    assert np.max(np.abs(dq - sol.dQ(x))[10:-10]) < 1e-3 * np.max(np.abs(sol.dQ(x)))


def test_soliton_forward_transmission(regular_soliton):
    sol, pot, grid = regular_soliton
    ks = np.array([1.5 * np.exp(0.8j * np.pi), 0.6 * np.exp(1.3j * np.pi)])
    tinv = dr.transmission_from_wronskian(ks, pot, grid)
    assert np.max(np.abs(tinv * sol.transmission_left(ks) - 1)) < 1e-8


def test_upper_pole_roundtrip():
    from thirdscat import boundstates as bs
    k1 = 1.1 * np.exp(0.8j * np.pi)
    grid = XGrid(-14.0, 14.0, 2401)
    pot = rh.solve_reflectionless([(k1, -1.0)], grid.x).potentials()
    rec = bs.bound_state_record(k1, pot, grid)
    assert abs(rec.gamma_j + 1.0) < 1e-8
    d = dr.sweep_rays(pot, [0.5, 2.0], grid, tail=False)
    assert max(np.max(np.abs(v)) for v in (d.L, d.M, d.R, d.N)) < 1e-8


def test_free_phi_is_exponential():
    p = rh.phi_plus(free(), [3.0 * np.exp(0.9j * np.pi), 2.0 * np.exp(-0.5j * np.pi)])
    m = rh.phi_minus(free(), [2.0 * np.exp(0.4j * np.pi), 1.0])
    assert np.max(np.abs(p.r0 - 1)) < 1e-10 and np.max(np.abs(m.r0 - 1)) < 1e-10


def test_large_k_recovery_both_halves(gauss, grid):
    t1, t2 = dr.transmission_tail_constants(gauss, grid)
    rp = rh.recover_from_plus(rh.phi_plus(gauss, rh.large_k_points("plus"), grid), t1, t2)
    rm = rh.recover_from_minus(rh.phi_minus(gauss, rh.large_k_points("minus"), grid))
    q, p = gauss(grid.x)
    assert rel_l2(rp.Q, q) < 1e-5 and rel_l2(rm.Q, q) < 1e-5
    assert rel_l2(rp.P, p) < 1e-4 and rel_l2(rm.P, p) < 1e-4


def test_jump_relation_scaling():
    """The jump relation assumes M = N = 0, so its residual measures the secondary reflections.

    Generic pairs have M, N = O(eps) and a residual O(eps^2); the paired preset
    cancels M, N at first order and the residual drops to O(eps^3).
    """
    from thirdscat.potentials import paired_gaussian
    s = [-1.0, 1.0]
    generic = [rh.jump_residual(gaussian(e, 0.3 * e), s) for e in (0.05, 0.025)]
    paired = [rh.jump_residual(paired_gaussian(e), s) for e in (0.05, 0.025)]
    assert 3.5 < generic[0] / generic[1] < 4.5
    assert 7.0 < paired[0] / paired[1] < 9.0
    assert paired[1] < 1e-6


def test_glue_detects_secondary_reflections(gauss):
    with pytest.raises(rh.InconsistentData):
        rh.assemble_phi(gauss, [2.0 * np.exp(0.9j * np.pi)], [1.0], glue_tol=1e-5)
