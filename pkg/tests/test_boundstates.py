import numpy as np
import pytest
from scipy.integrate import trapezoid

from thirdscat import boundstates as bs
from thirdscat.direct import DependencyError
from thirdscat.geometry import Z, Z2

from conftest import REGULAR_POLE


def test_dependency_branch():
    assert bs.dependency_branch(np.exp(1.2j * np.pi)) == Z
    assert bs.dependency_branch(np.exp(0.75j * np.pi)) == Z2
    with pytest.raises(DependencyError):
        bs.dependency_branch(-1.0)


def test_cauchy_derivative_of_free_transmission_is_zero(grid):
    from thirdscat.potentials import free
    val, der = bs.cauchy_derivative(free(), grid, 1.2 * np.exp(1.1j * np.pi))
    assert abs(val - 1) < 1e-12 and abs(der) < 1e-10


def test_newton_finds_soliton_zero(regular_soliton):
    _, pot, grid = regular_soliton
    c = bs.newton_refine(pot, grid, REGULAR_POLE * 1.03)
    assert c.converged
    assert abs(c.k - REGULAR_POLE) < 1e-10
    assert bs.root_residual(c) < 1e-8


def test_constants_match_closed_form(regular_soliton):
    """gamma from residue times dependency constant; c_r = c_l |D|; T_l closed form."""
    sol, pot, grid = regular_soliton
    rec = bs.bound_state_record(REGULAR_POLE, pot, grid)
    assert abs(rec.gamma_j + 1.0) < 1e-8
    assert rec.spread < 1e-6
    assert abs(rec.c_r - rec.c_l * abs(rec.D_j)) / rec.c_r < 1e-12
    k = 2.0 * np.exp(0.95j * np.pi)
    tinv = bs._tinv(pot, grid, k)[0]
    assert abs(tinv * sol.transmission_left(k) - 1) < 1e-8


def test_normalization_against_closed_form_profile(regular_soliton):
    """1 / c_l^2 = int |f(k1, x)|^2 dx, with f built from the exact reflectionless Phi."""
    sol, pot, grid = regular_soliton
    c_l, _ = bs.normalization_constants(REGULAR_POLE, pot, grid)
    k = REGULAR_POLE
    x = np.linspace(-14, 14, 20001)
    # f(k1) is proportional to the residue of Phi at k1: a_1(x) e^{k1 x}
    a = sol.coefficients(x, 0)[0][:, 0] * np.exp(k * x)
    # fix the scale from the right end: f ~ e^{k x}
    scale = np.exp(k * x[-1]) / a[-1]
    norm = np.sqrt(trapezoid(np.abs(scale * a) ** 2, x))
    assert abs(c_l * norm - 1) < 1e-6


@pytest.mark.slow
def test_find_bound_states_on_soliton(regular_soliton):
    _, pot, grid = regular_soliton
    region = bs.SearchRegion(0.5, 2.0, 7 * np.pi / 6 + 0.05, 4 * np.pi / 3 - 0.05)
    found = bs.find_bound_states(pot, grid, region, grid_density=(6, 5))
    assert len(found) == 1 and abs(found[0].k - REGULAR_POLE) < 1e-8


def test_no_bound_states_for_weak_gaussian(grid):
    from thirdscat.potentials import weak_gaussian
    region = bs.SearchRegion(0.3, 3.0)
    assert bs.bound_state_records(weak_gaussian(0.05), grid, region, grid_density=(5, 4)) == []


def test_record_roundtrip_with_nan():
    import json
    r = bs.BoundStateRecord(1j, np.nan, np.nan, np.nan, 1.0, np.nan, np.nan, ["rejected"])
    d = json.loads(json.dumps(r.to_dict()))
    back = bs.BoundStateRecord.from_dict(d)
    assert back.k_j == 1j and np.isnan(back.c_l)
