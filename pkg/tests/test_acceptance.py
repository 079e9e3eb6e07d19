"""Acceptance criteria 1-12, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary).
Derived reference values are computed independently of the code under test
and frozen here.
"""
import time

import numpy as np
import pytest

from thirdscat import direct as dr
from thirdscat import harness as hs
from thirdscat import selftest as st
from thirdscat.cli import main

from conftest import ACCEPTANCE_LINES

# -3z(1-z) = -3(z - z^2) = -3 (i sqrt 3): the free lower-branch 3-Wronskian over k^3
FREE_W3_DOWN_EXPECTED = -3j * np.sqrt(3.0)


def _report():
    return hs.RunReport("acceptance", "-")


def _record(n, title, report, extra="", elapsed=None, limit=None):
    ok = all(c.passed for c in report.checks) and (limit is None or elapsed < limit)
    worst = ", ".join(f"{c.name}={c.value:.2e}/{c.tolerance:.0e}" for c in report.checks
                      if np.isfinite(c.tolerance))
    t = "" if elapsed is None else f" [{elapsed:.1f} s" + (f" < {limit:.0f} s]" if limit else "]")
    ACCEPTANCE_LINES[n] = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title}{t}; {worst}" \
        + (f"; {extra}" if extra else "")
    print(ACCEPTANCE_LINES[n])
    failed = [c.name for c in report.checks if not c.passed]
    assert not failed, failed
    if limit is not None:
        assert elapsed < limit


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_01_free_exactness():
    r = _report()
    _, dt = _timed(st.check_free, r, 24)
    _record(1, "free-case exactness, 24 samples per ray and in Omega1", r, elapsed=dt, limit=5.0)


def test_02_wronskian_constancy():
    r = _report()
    st.check_wronskian_constancy(r)
    _record(2, "3-Wronskian constant in x, Gaussian pair, 16 k", r)


def test_03_free_wronskian_constant():
    assert abs(dr.FREE_W3_DOWN - FREE_W3_DOWN_EXPECTED) < 1e-14
    r = _report()
    st.check_free_wronskian_constant(r)
    up = dr.FREE_W3_UP / dr.PRINTED_W3_UP
    _record(3, "free 3-Wronskian equals -3z(1-z)k^3 at k = -1, -2, 1.5z", r,
            extra=f"upper-branch constant calibrated, printed/calibrated ratio {1 / up:.4f}")


@pytest.fixture(scope="module")
def soliton():
    r = _report()
    (sol, rec), dt = _timed(st.soliton_roundtrip, r)
    return r, sol, rec, dt


def test_04_coupling_identities(soliton):
    r = _report()
    st.check_coupling_identities(r)
    red = next(c for c in soliton[0].checks if c.name == "soliton_reduced_identities")
    r.checks.append(red)
    _record(4, "coupling identities (Gaussian 16 per ray), reduced forms on soliton data", r)


def test_05_dual_route():
    r = _report()
    st.check_dual_route(r)
    _record(5, "Wronskian vs asymptotic-fit T_l^-1", r)


def test_06_large_k():
    r = _report()
    st.check_large_k(r)
    _record(6, "large-k u1 vs quadrature; remainder slope -3 within 20%", r)


def test_07_mn_asymptotics():
    r = _report()
    st.check_mn_asymptotics(r)
    _record(7, "m, n match their asymptotics at both grid ends", r)


def test_08_soliton_roundtrip(soliton):
    r, sol, rec, dt = soliton
    k = 2.0 * np.exp(0.9j * np.pi)
    # closed-form T_l = (k - q k1)/(k - k1) from the residue closure vs the forward solve
    tinv = dr.transmission_from_wronskian(np.array([k]), sol.potentials(), hs.XGrid(*st.SOLITON_GRID))[0]
    r.check("soliton_Tl_closed_form", abs(tinv * sol.transmission_left(k) - 1), 1e-4)
    _record(8, "one-pole soliton k1 = 1.1e^{1.2i pi}, gamma = 1 round trip", r, elapsed=dt, limit=60.0)


@pytest.fixture(scope="module")
def marchenko_weak():
    r = _report()
    m, dt = _timed(st.marchenko_roundtrip, r)
    return r, m, dt


def test_09_marchenko_roundtrip(marchenko_weak):
    r, m, dt = marchenko_weak
    _record(9, "Marchenko round trip on the weak Gaussian", r, elapsed=dt, limit=600.0,
            extra=f"delta = {m['delta']:.3f} makes the bounds max(5%,10 delta) and max(2%,10 delta) "
                  f"non-binding; measured recovery {m['recovery']:.3f}, rho {m['rho']:.3f}")


def test_10_support(marchenko_weak):
    r = _report()
    rep = st.check_support(r, delta=marchenko_weak[1]["delta"])
    _record(10, "negative-y mass of F and Cauchy integral on L3 below 1e-4 + delta", r,
            extra=f"mass fraction {np.max(rep.mass_fraction):.3f}, Cauchy {np.max(rep.cauchy):.3f}")


def test_11_closed_form_rho_hat():
    r = _report()
    st.check_rho_hat_closed_form(r)
    _record(11, "rho_+ = e^-s gives rho_hat_+ = 1/(2pi(1+iw)) at 20 points", r)


def test_12_selftest(tmp_path):
    t0 = time.perf_counter()
    code = main(["selftest", "--out", str(tmp_path)])
    dt = time.perf_counter() - t0
    r = _report()
    r.check("selftest_exit_code", code, 0)
    _record(12, "full selftest green", r, elapsed=dt, limit=900.0)
