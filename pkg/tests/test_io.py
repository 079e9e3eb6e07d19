import numpy as np
import pytest

from thirdscat import io
from thirdscat.direct import solve_basic
from thirdscat.potentials import gaussian


def test_potential_csv_roundtrip(tmp_path):
    x = np.linspace(-1, 1, 5)
    Q, P = x + 1j * x ** 2, np.exp(1j * x)
    io.write_potential_csv(x, Q, P, tmp_path / "p.csv")
    x2, Q2, P2 = io.read_potential_csv(tmp_path / "p.csv")
    assert np.array_equal(x2, x) and np.array_equal(Q2, Q) and np.array_equal(P2, P)


def test_profile_csv_columns(tmp_path):
    f = solve_basic("f", 1.5 * np.exp(1.1j * np.pi), gaussian())
    f.to_csv(tmp_path / "f.csv")
    a = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    assert a.shape == (f.x.size, 7)
    assert np.allclose(a[:, 1] + 1j * a[:, 2], f.psi)


def test_poles_roundtrip_and_errors(tmp_path):
    poles = [(1.1 * np.exp(1.2j * np.pi), 1.0 + 0.5j)]
    io.write_poles(poles, tmp_path / "p.json")
    assert io.read_poles(tmp_path / "p.json") == poles
    (tmp_path / "bad.json").write_text('[{"k_re": 1}]')
    with pytest.raises(ValueError):
        io.read_poles(tmp_path / "bad.json")
