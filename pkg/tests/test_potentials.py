import numpy as np
import pytest

from thirdscat.geometry import Z2
from thirdscat.potentials import PRESETS, from_samples, paired_gaussian, preset


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_decay_and_derivative(name):
    p = preset(name)
    assert p.tail_check(-12.0, 12.0) < 1e-12
    x = np.linspace(-3, 3, 601)
    dq = np.gradient(p.Q(x), x)
    assert np.max(np.abs(dq - p.dQ(x))[5:-5]) < 1e-3


def test_adjoint_is_an_involution():
    p = preset("phase-gauss")
    pp = p.adjoint().adjoint()
    x = np.linspace(-2, 2, 9)
    assert np.allclose(pp.Q(x), p.Q(x)) and np.allclose(pp.P(x), p.P(x))


def test_paired_relation():
    p = paired_gaussian(0.1)
    x = np.linspace(-2, 2, 9)
    assert np.allclose(p.P(x), 1j * Z2 / np.sqrt(3) * p.dQ(x))


def test_from_samples_reproduces_and_vanishes_outside():
    x = np.linspace(-5, 5, 401)
    g = preset("gauss")
    s = from_samples(x, *g(x))
    t = np.linspace(-4, 4, 37)
    assert np.max(np.abs(s.Q(t) - g.Q(t))) < 1e-6
    assert s.Q(np.array([6.0]))[0] == 0


def test_unknown_preset():
    with pytest.raises(ValueError):
        preset("nope")
