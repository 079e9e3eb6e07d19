"""Property and round-trip checks run by ``thirdscat selftest``.

Each function appends named checks to a ``RunReport`` and returns any
intermediate data worth reusing.
"""
from __future__ import annotations

import time

import numpy as np

from . import boundstates as bs
from . import direct as dr
from . import marchenko as mk
from . import riemann_hilbert as rh
from .geometry import Z, Z2, XGrid
from .numerics import rel_l2
from .potentials import free, gaussian, weak_gaussian

SOLITON_POLE = 1.1 * np.exp(1.2j * np.pi)
SOLITON_GRID = (-18.0, 18.0, 3073)   # the gamma = 1 soliton has a spike of width ~0.04


def omega1_samples():
    """16 interior points of Omega1 (4 radii x 4 angles, both halves)."""
    return np.array([r * np.exp(1j * a) for r in (0.5, 1.0, 2.0, 4.0)
                     for a in (0.75 * np.pi, 0.9 * np.pi, 1.1 * np.pi, 1.25 * np.pi)])


def _max_dev(data: dr.ScatteringDataset) -> dict:
    t = lambda vals: float(np.max(np.abs(np.concatenate(vals) - 1.0)))
    r = lambda v: float(np.max(np.abs(v)))
    return {"Tl": t(list(data.Tl.values())), "Tr": t(list(data.Tr.values())),
            "L": r(data.L), "M": r(data.M), "R": r(data.R), "N": r(data.N)}


def check_free(report, n=24):
    """Free pair: T = 1 and zero reflections on every ray, T_l = 1 inside Omega1."""
    grid = XGrid()
    data = dr.sweep_rays(free(), np.geomspace(0.05, 8.0, n), grid)
    ks = np.array([r * np.exp(1j * a) for r, a in zip(np.geomspace(0.1, 8.0, n),
                                                      np.linspace(0.7 * np.pi, 1.3 * np.pi, n))])
    tinv = dr.transmission_from_wronskian(ks, free(), grid)
    dev = _max_dev(data)
    dev["Tl_interior"] = float(np.max(np.abs(tinv - 1.0)))
    for name, v in dev.items():
        report.check(f"free_{name}", v, 1e-8)
    return data


def free_wronskian(k, x=(-3.0, 0.0, 2.5), order=(1.0, Z, Z2)):
    """[e^{l0 kx}; e^{l1 kx}; e^{l2 kx}] at several x (rows are psi, psi', psi'')."""
    lam = k * np.asarray(order)
    return np.array([np.linalg.det(np.array([np.exp(lam * xi), lam * np.exp(lam * xi),
                                             lam ** 2 * np.exp(lam * xi)])) for xi in x])


def check_free_wronskian_constant(report):
    """Free determinant against -3z(1-z)k^3; the upper-branch constant is reported."""
    for k in (-1.0, -2.0, 1.5 * Z):
        w = free_wronskian(k)
        report.check(f"free_w3_k={k:.3g}", np.max(np.abs(w / (dr.FREE_W3_DOWN * k ** 3) - 1)), 1e-12)
    up = free_wronskian(1.0, order=(1.0, Z2, Z))
    report.check("free_w3_upper_calibrated", np.max(np.abs(up / dr.FREE_W3_UP - 1)), 1e-12)
    report.check("free_w3_upper_printed_discrepancy", abs(dr.FREE_W3_UP / dr.PRINTED_W3_UP - 1), np.inf,
                 note="calibrated 3*sqrt(3)*i vs printed 3(1-z^2); informational", passed=True)


def check_wronskian_constancy(report, pot=None, grid=None):
    pot, grid = pot or gaussian(), grid or XGrid()
    report.check("wronskian_constancy", np.max(dr.wronskian_spread(omega1_samples(), pot, grid)), 1e-6)


def check_coupling_identities(report, pot=None, grid=None, n=16):
    pot, grid = pot or gaussian(), grid or XGrid()
    data = dr.sweep_rays(pot, np.geomspace(0.1, 6.0, n), grid, tail=False)
    report.check("coupling_identity_left", max(dr.coupling_identity_residual("left", data, Z * s)
                                               for s in data.s), 1e-6)
    report.check("coupling_identity_right", max(dr.coupling_identity_residual("right", data, -Z * s)
                                                for s in data.s), 1e-6)
    return data


def check_dual_route(report, pot=None, grid=None):
    pot, grid = pot or gaussian(), grid or XGrid()
    ks = omega1_samples()
    tw = dr.transmission_from_wronskian(ks, pot, grid)
    te = np.array([dr.extract_left(f)[0] for f in
                   dr.solve_basic_many("f", ks, pot, grid, x_eval=np.array([grid.x_min]))])
    report.check("dual_route_transmission", np.max(np.abs(tw - te) / np.abs(te)), 1e-5)


def check_large_k(report, pot=None, grid=None):
    """Fitted 1/k coefficient against quadrature, and the k^-3 remainder slope."""
    pot, grid = pot or gaussian(), grid or XGrid()
    te = dr.tail_expansion(pot, grid)
    t1, t2 = dr.transmission_tail_constants(pot, grid)
    rec = rh.recover_from_plus(rh.phi_plus(pot, rh.large_k_points("plus"), grid), t1, t2)
    report.check("large_k_u1", rel_l2(rec.c1, te.u1), 1e-4)
    slope, _ = dr.remainder_slope(pot, grid)
    report.check("large_k_remainder_slope", abs(slope + 3.0) / 3.0, 0.2, note=f"slope {slope:.3f}")
    return rec


def check_mn_asymptotics(report, pot=None, grid=None):
    pot, grid = pot or gaussian(), grid or XGrid()
    km = np.array([r * np.exp(1j * a) for r in (2, 3, 4) for a in (-0.6 * np.pi, -0.5 * np.pi, -0.4 * np.pi)])
    for kind, ks in (("m", km), ("n", -km)):
        left, right = dr.mn_asymptotic_residual(kind, ks, pot, grid)
        report.check(f"{kind}_asymptotics_left", np.max(left), 1e-5)
        report.check(f"{kind}_asymptotics_right", np.max(right), 1e-5)


def soliton_roundtrip(report, pole=SOLITON_POLE, gamma=1.0, grid=None, s=(0.3, 1.0, 3.0), start=1.01):
    """Reflectionless solve, then forward: reflections, pole location and gamma."""
    grid = grid or XGrid(*SOLITON_GRID)
    sol = rh.solve_reflectionless([(pole, gamma)], grid.x)
    pot = sol.potentials()
    report.check("soliton_residue_equations", sol.residue_residual(grid.x), 1e-12)
    data = dr.sweep_rays(pot, np.asarray(s, float), grid, tail=False)
    refl = max(np.max(np.abs(v)) for v in (data.L, data.M, data.R, data.N))
    report.check("soliton_reflections", refl, 1e-4)
    red = max(max(dr.coupling_identity_residual("left", data, Z * si, reduced=True),
                  dr.coupling_identity_residual("right", data, -Z * si, reduced=True)) for si in data.s)
    report.check("soliton_reduced_identities", red, 1e-4)
    c = bs.newton_refine(pot, grid, pole * start)
    report.check("soliton_pole_location", abs(c.k - pole), 1e-5, note=" ".join(c.flags))
    rec = bs.bound_state_record(c, pot, grid)
    report.check("soliton_gamma", abs(rec.gamma_j - gamma) / abs(gamma), 1e-4)
    return sol, rec


def marchenko_roundtrip(report, pot=None, grid=None, x=None, threads=1, prefix="marchenko"):
    """Forward data -> rho -> Marchenko -> (Q, P) -> forward again."""
    pot, grid = pot or weak_gaussian(0.05), grid or XGrid()
    x = np.linspace(-6.0, 6.0, 241) if x is None else x
    s, w = mk.rho_quadrature_grid()
    data = dr.sweep_rays(pot, s, grid, tail=False)
    delta = data.delta
    kernel = mk.build_rho(data, w, enforce=False)
    sol = mk.solve_marchenko_grid(kernel, x, threads=threads)
    rf, rg = mk.recover_from_F(sol), mk.recover_from_G(sol)
    q, p = pot(x)
    err = max(rel_l2(rf.Q, q), rel_l2(rf.P, p))
    report.check(f"{prefix}_certified_delta", delta, np.inf, note="max |M|,|N| on the sweep", passed=True)
    report.check(f"{prefix}_recovery", err, max(0.05, 10 * delta))
    report.check(f"{prefix}_F_vs_G", max(rel_l2(rf.Q, rg.Q), rel_l2(rf.P, rg.P)), 0.01)
    _, rho_err = mk.reextract_rho(rf, kernel, grid)
    report.check(f"{prefix}_reextracted_rho", rho_err, max(0.02, 10 * delta))
    return {"delta": delta, "recovery": err, "rho": rho_err}


def check_support(report, pot=None, x=(-1.0, 0.0, 1.0), delta=None):
    pot = pot or weak_gaussian(0.05)
    if delta is None:
        delta = dr.sweep_rays(pot, mk.rho_quadrature_grid()[0], XGrid(), tail=False).delta
    r = mk.support_check(pot, x, which="F")
    bound = 1e-4 + delta
    report.check("support_negative_y_mass", np.max(r.mass_fraction), bound, note=f"delta {delta:.3g}")
    report.check("support_cauchy_on_L3", np.max(r.cauchy), bound, note=f"delta {delta:.3g}")
    return r


def check_rho_hat_closed_form(report):
    kern = mk.RhoKernel.from_functions(lambda s: np.exp(-s), None, s_max=60.0)
    w = np.concatenate([np.linspace(-5.0, 5.0, 10), np.linspace(-5.0, 5.0, 10) - 0.7j])
    err = np.max(np.abs(mk.rho_hat(kern, 1, w) - 1.0 / (2 * np.pi * (1 + 1j * w))))
    report.check("closed_form_rho_hat", err, 1e-8)


def run_all(report, threads=1, timing=None):
    """Every check; wall-clock seconds per group go to ``timing`` (kept out of the report)."""
    timing = {} if timing is None else timing
    steps = [("free", check_free), ("free_wronskian", check_free_wronskian_constant),
             ("wronskian", check_wronskian_constancy), ("identities", check_coupling_identities),
             ("dual_route", check_dual_route), ("large_k", check_large_k),
             ("mn", check_mn_asymptotics), ("soliton", soliton_roundtrip)]
    for name, fn in steps:
        t0 = time.perf_counter()
        fn(report)
        timing[name] = time.perf_counter() - t0
    t0 = time.perf_counter()
    m = marchenko_roundtrip(report, threads=threads)
    timing["marchenko"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    check_support(report, delta=m["delta"])
    timing["support"] = time.perf_counter() - t0
    check_rho_hat_closed_form(report)
    return report
