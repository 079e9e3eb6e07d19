import numpy as np
import pytest

from thirdscat.geometry import (Z, Z2, DomainError, Sector, XGrid, arg, classify_k, in_closure, in_plus,
                                line_parameter, ray_points)


def test_cube_roots():
    assert abs(Z ** 3 - 1) < 1e-15
    assert abs(1 + Z + Z2) < 1e-15


@pytest.mark.parametrize("angle, tag", [
    (0.9 * np.pi, Sector.OMEGA1_UP), (1.1 * np.pi, Sector.OMEGA1_DOWN), (-0.5 * np.pi, Sector.OMEGA2),
    (-0.1 * np.pi, Sector.OMEGA3_DOWN), (0.1 * np.pi, Sector.OMEGA3_UP), (0.5 * np.pi, Sector.OMEGA4),
])
def test_open_sectors(angle, tag):
    lab = classify_k(2.0 * np.exp(1j * angle))
    assert lab.tag == tag and not lab.closed


@pytest.mark.parametrize("k, tag", [(Z, Sector.L1), (Z2, Sector.L2), (-Z, Sector.L3), (-Z2, Sector.L4),
                                    (-1.0, Sector.NEG_REAL), (1.0, Sector.POS_REAL)])
def test_rays(k, tag):
    lab = classify_k(3.0 * k)
    assert lab.tag == tag and lab.is_ray


def test_branch_of_argument():
    assert np.isclose(arg(np.exp(1.25j * np.pi)), 1.25 * np.pi)
    assert np.isclose(arg(np.exp(-0.5j * np.pi)), -0.5 * np.pi)


def test_ray_points_and_line_parameter():
    k = ray_points(Sector.L3, [2.0])[0]
    assert np.isclose(line_parameter(k), -2.0)
    assert np.isclose(line_parameter(Z * 1.5), 1.5)
    with pytest.raises(DomainError):
        line_parameter(1.0 + 1.0j)


def test_half_planes():
    assert in_plus(-1.0) and in_plus(Z) and in_plus(Z2)
    assert not in_plus(1.0)
    assert in_closure(-1.0, Sector.OMEGA1) and not in_closure(1j, Sector.OMEGA1)


def test_grid_validation():
    g = XGrid(-2.0, 3.0, 11)
    assert np.isclose(g.dx, 0.5) and g.index_of(0.0) == 4
    with pytest.raises(ValueError):
        XGrid(1.0, 3.0, 11)
