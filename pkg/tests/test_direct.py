import numpy as np
import pytest

from thirdscat import direct as dr
from thirdscat.geometry import DomainError, XGrid
from thirdscat.potentials import PotentialPair, free, gaussian


def test_free_jost_solution_is_exponential():
    k = 1.3 * np.exp(1.1j * np.pi)
    f = dr.solve_basic("f", k, free())
    assert np.max(np.abs(f.r0 - 1)) < 1e-12
    assert np.max(np.abs(f.r1 - k)) < 1e-11


def test_domain_guard():
    with pytest.raises(DomainError):
        dr.solve_basic("f", 1.0 + 0.2j, free())
    with pytest.raises(DomainError):
        dr.solve_basic("g", -1.0, free())


def test_ode_residual_small(gauss, grid):
    f = dr.solve_basic("f", 2.0 * np.exp(0.9j * np.pi), gauss, grid)
    assert dr.ode_residual(f, gauss) < 1e-6


def test_scale_invariance_of_transmission(gauss, grid):
    """x -> a x with Q -> a^2 Q(ax), P -> a^3 P(ax) maps k to a k and keeps T, L."""
    a = 2.0
    scaled = gaussian(q_amp=a ** 2, p_amp=0.3 * a ** 3, width=1 / a)
    fine = XGrid(-6.0, 6.0, 2048)
    ks = np.array([1.5 * np.exp(0.85j * np.pi), 0.8 * np.exp(1.2j * np.pi)])
    t = dr.transmission_from_wronskian(ks, gauss, grid)
    ts = dr.transmission_from_wronskian(a * ks, scaled, fine)
    assert np.max(np.abs(ts / t - 1)) < 1e-8
    d = dr.sweep_rays(gauss, [0.7], grid, tail=False)
    ds = dr.sweep_rays(scaled, [1.4], fine, tail=False)
    assert abs(ds.L[0] - d.L[0]) < 1e-8 and abs(ds.Tr["R+"][0] - d.Tr["R+"][0]) < 1e-8


def test_translation_invariance_of_transmission(gauss, grid):
    x0 = 1.5
    g = gauss
    shifted = PotentialPair(lambda x: g.Q(x - x0), lambda x: g.P(x - x0), lambda x: g.dQ(x - x0))
    ks = np.array([1.2 * np.exp(0.95j * np.pi), 2.0 * np.exp(1.15j * np.pi)])
    t0 = dr.transmission_from_wronskian(ks, g, grid)
    t1 = dr.transmission_from_wronskian(ks, shifted, grid)
    assert np.max(np.abs(t1 / t0 - 1)) < 1e-8


def test_tail_constants_quadrature_vs_fit(gauss, grid):
    q = np.array(dr.transmission_tail_constants(gauss, grid))
    f = np.array(dr.fit_tail_constants(gauss, grid))
    assert np.max(np.abs(q - f)) < 1e-7
    # t_l1 = -(1/3) int Q = -sqrt(pi)/3 for the unit Gaussian
    assert abs(q[0] + np.sqrt(np.pi) / 3) < 1e-10


def test_dataset_json_roundtrip(gauss, grid):
    d = dr.sweep_rays(gauss, [0.5, 1.0], grid)
    e = dr.ScatteringDataset.from_json_dict(d.to_json_dict())
    assert np.array_equal(e.L, d.L) and np.array_equal(e.Tl["L1"], d.Tl["L1"])
    assert e.tail == d.tail and e.delta == d.delta


def test_fit_inverse_powers_exact():
    ks = np.array([10.0, 14.0, 20.0, 28.0, 40.0]) * np.exp(1j * np.pi)
    v = 1 + 0.3 / ks - 0.2j / ks ** 2
    c = dr.fit_inverse_powers(ks, v, 3)
    assert np.allclose(c, [0.3, -0.2j, 0.0], atol=1e-12)


def test_sweep_rejects_nonpositive_s(gauss):
    with pytest.raises(DomainError):
        dr.sweep_rays(gauss, [0.0, 1.0])


def test_mn_profiles_match_asymptotics(gauss, grid):
    k = 3.0 * np.exp(-0.5j * np.pi)
    left, right = dr.mn_asymptotic_residual("m", [k], gauss, grid)
    assert left[0] < 1e-5 and right[0] < 1e-5
