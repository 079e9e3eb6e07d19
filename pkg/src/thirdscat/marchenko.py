"""Marchenko-type integral equation on the line ``k = z s``.

The reflection data enter through the scalar ``rho(s)`` and its half-line
Fourier transforms ``rho_hat_+`` (s > 0) and ``rho_hat_-`` (s < 0).  The
kernel ``rho_hat_pm(sqrt(3) x - z zeta + y)`` is separable in ``y`` and
``zeta`` once ``rho_hat`` is written as a quadrature sum over ``s``, so the
Nystrom matrix is assembled as two thin matrix products.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .direct import ScatteringDataset
from .geometry import Z, Z2, DomainError
from .numerics import derivative, gauss_legendre_panels, rel_l2
from .potentials import PotentialPair, from_samples

log = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)
DRIVING = ("full", "printed")


class ModelViolation(RuntimeError):
    """Data outside the M = N = 0, bound-state-free model."""


class ResolutionError(RuntimeError):
    pass


def rho_quadrature_grid(s_max: float = 8.0, panel: float = 0.1, nodes: int = 16, s_min: float = 2e-3,
                        n_geometric: int = 8):
    """Composite Gauss-Legendre nodes on (0, s_max], graded towards s = 0."""
    inner = np.geomspace(s_min, panel, n_geometric)
    outer = np.arange(2 * panel, s_max + 0.5 * panel, panel)
    breaks = np.concatenate([[0.0], inner, outer])
    return gauss_legendre_panels(breaks, nodes)


@dataclass
class RhoKernel:
    """``rho_+`` on positive nodes and ``rho_-`` on negative nodes, with weights."""

    s_plus: np.ndarray
    w_plus: np.ndarray
    rho_plus: np.ndarray
    s_minus: np.ndarray
    w_minus: np.ndarray
    rho_minus: np.ndarray
    delta: float = 0.0

    def side(self, sign: int):
        if sign > 0:
            return self.s_plus, self.w_plus * self.rho_plus / (2 * np.pi)
        return self.s_minus, self.w_minus * self.rho_minus / (2 * np.pi)

    @property
    def sup(self) -> float:
        return float(max(np.max(np.abs(self.rho_plus), initial=0.0),
                         np.max(np.abs(self.rho_minus), initial=0.0)))

    def scaled(self, c: complex) -> "RhoKernel":
        return RhoKernel(self.s_plus, self.w_plus, c * self.rho_plus, self.s_minus, self.w_minus,
                         c * self.rho_minus, self.delta)

    @classmethod
    def from_functions(cls, rho_plus=None, rho_minus=None, s_max: float = 30.0, panel: float = 0.25,
                       nodes: int = 16) -> "RhoKernel":
        """Kernel from callables on s > 0 and s < 0 (either may be None)."""
        s, w = gauss_legendre_panels(np.arange(0.0, s_max + 0.5 * panel, panel), nodes)
        rp = np.zeros(s.size, complex) if rho_plus is None else np.asarray(rho_plus(s), complex)
        rm = np.zeros(s.size, complex) if rho_minus is None else np.asarray(rho_minus(-s), complex)
        return cls(s, w, rp, -s, w, rm)

    def to_json_dict(self) -> dict:
        def enc(s, w, r):
            return {"s": s.tolist(), "w": w.tolist(), "re": r.real.tolist(), "im": r.imag.tolist()}
        return {"plus": enc(self.s_plus, self.w_plus, self.rho_plus),
                "minus": enc(self.s_minus, self.w_minus, self.rho_minus), "delta": self.delta}

    @classmethod
    def from_json_dict(cls, d: dict) -> "RhoKernel":
        def dec(part):
            p = d[part]
            w = np.asarray(p["w"]) if "w" in p else np.gradient(np.asarray(p["s"]))
            return np.asarray(p["s"], float), np.abs(w), np.asarray(p["re"]) + 1j * np.asarray(p["im"])
        return cls(*dec("plus"), *dec("minus"), float(d.get("delta", 0.0)))


def build_rho(data: ScatteringDataset, weights=None, m_n_tol: float = 1e-3, enforce: bool = True) -> RhoKernel:
    """``rho_+(s) = L(zs)`` and ``rho_-(-s) = -R T_r(L4) / T_r(L3)`` on the dataset rays.

    ``weights`` are quadrature weights for ``data.s`` (trapezoid when absent).
    Raises ``ModelViolation`` if bound states are present or the secondary
    reflections exceed ``m_n_tol`` (unless ``enforce`` is False).
    """
    if data.bound_states:
        raise ModelViolation("the Marchenko system here is bound-state free")
    delta = data.delta
    if enforce and delta > m_n_tol:
        raise ModelViolation(f"secondary reflections exceed m_n_tol: max(|M|,|N|) = {delta:.3g} > {m_n_tol:.3g}")
    s = np.asarray(data.s, float)
    w = np.gradient(s) if weights is None else np.asarray(weights, float)
    rp = np.asarray(data.L, complex)
    rm = -np.asarray(data.R) * np.asarray(data.Tr["L4"]) / np.asarray(data.Tr["L3"])
    return RhoKernel(s, w, rp, -s, w, rm, delta)


def rho_hat(kernel: RhoKernel, side: int, w, deriv: int = 0, tol: float = 1e-12):
    """``(1/2pi) int e^{-isw} rho_side(s) ds`` (``deriv``-th derivative in ``w``).

    ``side=+1`` needs ``Im w <= 0``, ``side=-1`` needs ``Im w >= 0``.
    """
    w = np.asarray(w, dtype=complex)
    im = w.imag
    if side > 0 and np.any(im > tol):
        raise DomainError("rho_hat_+ needs Im w <= 0")
    if side < 0 and np.any(im < -tol):
        raise DomainError("rho_hat_- needs Im w >= 0")
    s, c = kernel.side(side)
    flat = w.reshape(-1)
    out = np.exp(-1j * np.outer(flat, s)) @ (c * (-1j * s) ** deriv)
    return out.reshape(w.shape)


def rho_hat_full(kernel: RhoKernel, w, deriv: int = 0):
    """``rho_hat = rho_hat_+ + rho_hat_-`` at real arguments."""
    return rho_hat(kernel, 1, w, deriv) + rho_hat(kernel, -1, w, deriv)


# Nystrom solve ---------------------------------------------------------------


@dataclass
class MarchenkoSlice:
    x: float
    y: np.ndarray          # positive nodes; G lives on -y
    weights: np.ndarray
    F: np.ndarray
    G: np.ndarray
    F0: complex
    Fy0: complex
    G0: complex
    Gy0: complex
    residual: float


class _Assembler:
    """Separable pieces of the kernel for one node set."""

    def __init__(self, kernel: RhoKernel, zeta: np.ndarray, wz: np.ndarray):
        self.kernel = kernel
        self.zeta, self.wz = zeta, wz
        sp, self.cp = kernel.side(1)
        sm, self.cm = kernel.side(-1)
        self.sp, self.sm = sp, sm
        # e^{i s z zeta}: zeta > 0 with s > 0 and zeta < 0 with s < 0; both decay
        self.Ep = np.exp(1j * np.outer(zeta, sp) * Z) * wz[:, None]
        self.Em = np.exp(-1j * np.outer(zeta, sm) * Z) * wz[:, None]
        # Im of the kernel argument a + y - z*zeta is -(sqrt3/2) zeta: <= 0 on the F side, >= 0 on the G side
        assert np.all(-np.imag(Z) * zeta <= 0.0)

    def rows(self, side, arg, deriv=0):
        """``[rho_hat_side^{(deriv)}(arg_i - z zeta_j) * w_j]`` for real ``arg``."""
        s, c, E = (self.sp, self.cp, self.Ep) if side > 0 else (self.sm, self.cm, self.Em)
        left = np.exp(-1j * np.outer(arg, s)) * (c * (-1j * s) ** deriv)
        return left @ E.T

    def driving(self, which, arg, driving, deriv=0):
        if driving == "full":
            return rho_hat(self.kernel, 1, arg, deriv) + rho_hat(self.kernel, -1, arg, deriv)
        return rho_hat(self.kernel, which, arg, deriv)


def _driving_parts(asm, a, y, driving, deriv=0):
    """Driving terms at ``+y`` (F equation) and ``-y`` (G equation)."""
    return asm.driving(1, a + y, driving, deriv), asm.driving(-1, a - y, driving, deriv)


def solve_marchenko(kernel: RhoKernel, x: float, Y: float = 30.0, nodes: int = 96, panels: int = 12,
                    driving: str = "full",
                    asm: _Assembler | None = None) -> MarchenkoSlice:
    """One x-slice of the coupled system for ``F_hat`` (y > 0) and ``G_hat`` (y < 0).

    ``driving="full"`` uses ``rho_hat = rho_hat_+ + rho_hat_-`` in both driving
    terms; ``"printed"`` uses ``rho_hat_+`` for y > 0 and ``rho_hat_-`` for y < 0.
    Integral terms always use ``rho_hat_+`` against ``F_hat`` and
    ``rho_hat_-`` against ``G_hat``.  Boundary traces and their y-derivatives
    come from the Nystrom interpolant, differentiating the kernel exactly.
    """
    if driving not in DRIVING:
        raise ValueError(f"driving must be one of {DRIVING}")
    if asm is None:
        zeta, wz = _nodes(Y, nodes, panels)
        asm = _Assembler(kernel, zeta, wz)
    zeta = asm.zeta
    n = zeta.size
    a = SQRT3 * x
    Kpp = asm.rows(1, a + zeta)       # F-equation rows (y = +zeta), F columns
    Kpm = asm.rows(-1, a + zeta)      # F rows, G columns (G at -zeta)
    Kmp = asm.rows(1, a - zeta)
    Kmm = asm.rows(-1, a - zeta)
    Dp, Dm = _driving_parts(asm, a, zeta, driving)
    A = np.block([[np.eye(n) - Kpp, -Kpm], [Kmp, np.eye(n) + Kmm]])
    b = np.concatenate([Dp, -Dm])
    try:
        u = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular Nystrom matrix at x={x}") from exc
    residual = float(np.linalg.norm(A @ u - b) / max(np.linalg.norm(b), 1e-300))
    Fh, Gh = u[:n], u[n:]

    def trace(deriv):
        ip = asm.rows(1, np.array([a]), deriv)[0] @ Fh
        im = asm.rows(-1, np.array([a]), deriv)[0] @ Gh
        d_plus, d_minus = _driving_parts(asm, a, np.zeros(1), driving, deriv)
        return complex(d_plus[0] + ip + im), complex(-d_minus[0] - ip - im)

    (F0, G0), (Fy0, Gy0) = trace(0), trace(1)
    return MarchenkoSlice(x, zeta, asm.wz, Fh, Gh, F0, Fy0, G0, Gy0, residual)


def _nodes(Y, nodes, panels):
    if nodes % panels:
        raise ValueError("nodes must be a multiple of panels")
    return gauss_legendre_panels(np.linspace(0.0, Y, panels + 1), nodes // panels)


@dataclass
class MarchenkoSolution:
    x: np.ndarray
    y: np.ndarray
    F: np.ndarray
    G: np.ndarray
    F0: np.ndarray
    Fy0: np.ndarray
    G0: np.ndarray
    Gy0: np.ndarray
    residual: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, path, which: str = "F") -> None:
        from .io import write_marchenko_csv
        write_marchenko_csv(self, path, which)


def solve_marchenko_grid(kernel: RhoKernel, x, Y: float = 30.0, nodes: int = 96, panels: int = 12,
                         driving: str = "full", threads: int = 1) -> MarchenkoSolution:
    """All x-slices; with ``threads > 1`` slices run in a thread pool (results keep x order)."""
    x = np.asarray(x, float)
    zeta, wz = _nodes(Y, nodes, panels)
    asm = _Assembler(kernel, zeta, wz)

    def one(xi):
        return solve_marchenko(kernel, xi, driving=driving, asm=asm)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            slices = list(pool.map(one, x))
    else:
        slices = [one(xi) for xi in x]
    return MarchenkoSolution(
        x, zeta,
        np.array([s.F for s in slices]), np.array([s.G for s in slices]),
        np.array([s.F0 for s in slices]), np.array([s.Fy0 for s in slices]),
        np.array([s.G0 for s in slices]), np.array([s.Gy0 for s in slices]),
        np.array([s.residual for s in slices]),
        meta={"Y": Y, "nodes": nodes, "panels": panels, "driving": driving},
    )


def neumann_iterate(kernel: RhoKernel, x: float, Y: float = 30.0, nodes: int = 96, panels: int = 12,
                    driving: str = "full", iterations: int = 1):
    """Neumann-series approximation of one slice (0 iterations = driving term)."""
    zeta, wz = _nodes(Y, nodes, panels)
    asm = _Assembler(kernel, zeta, wz)
    a = SQRT3 * x
    Kpp, Kpm = asm.rows(1, a + zeta), asm.rows(-1, a + zeta)
    Kmp, Kmm = asm.rows(1, a - zeta), asm.rows(-1, a - zeta)
    Dp, Dm = _driving_parts(asm, a, zeta, driving)
    F, G = Dp.copy(), -Dm.copy()
    for _ in range(iterations):
        F, G = Dp + Kpp @ F + Kpm @ G, -Dm - Kmp @ F - Kmm @ G
    return F, G


# recovery -------------------------------------------------------------------


@dataclass
class RecoveredPotentials:
    x: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    route: str
    refinement_gap: float

    def as_pair(self) -> PotentialPair:
        return from_samples(self.x, self.Q, self.P, name=f"marchenko-{self.route}")


def _derivs(v, dx, acc):
    return derivative(v, dx, 1, acc), derivative(v, dx, 2, acc)


def _recover(x, trace, trace_y, sign, resolution_tol, route):
    x = np.asarray(x, float)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise ValueError("recovery needs a uniform x-grid")

    def pots(acc):
        d1, d2 = _derivs(trace, dx, acc)
        dy = derivative(trace_y, dx, 1, acc)
        Q = -sign * 3j * Z * d1
        P = -3 * Z2 * trace * d1 - sign * 3j * Z * d2 + sign * 3 * Z2 * dy
        return Q, P

    Q, P = pots(6)
    Qc, Pc = pots(4)
    gap = max(rel_l2(Qc, Q), rel_l2(Pc, P))
    if gap > resolution_tol:
        raise ResolutionError(f"x-derivative refinement disagreement {gap:.3g} exceeds {resolution_tol:.3g}")
    return RecoveredPotentials(x, Q, P, route, gap)


def recover_from_F(sol: MarchenkoSolution, resolution_tol: float = 1e-2) -> RecoveredPotentials:
    """``Q = -3iz dF0/dx``, ``P = -3z^2 F0 F0' - 3iz F0'' + 3z^2 d(Fy0)/dx``."""
    return _recover(sol.x, sol.F0, sol.Fy0, 1, resolution_tol, "F")


def recover_from_G(sol: MarchenkoSolution, resolution_tol: float = 1e-2) -> RecoveredPotentials:
    """``Q = 3iz dG0/dx``, ``P = -3z^2 G0 G0' + 3iz G0'' - 3z^2 d(Gy0)/dx``."""
    return _recover(sol.x, sol.G0, sol.Gy0, -1, resolution_tol, "G")


def v1_from_G(sol: MarchenkoSolution) -> np.ndarray:
    """Large-k coefficient ``v1 = -iz G_hat(x, 0-)``."""
    return -1j * Z * sol.G0


def v2_from_G(sol: MarchenkoSolution) -> np.ndarray:
    return Z2 * sol.Gy0


# independent checks on forward data -----------------------------------------


def line_values(pot: PotentialPair, s, x, grid=None, which: str = "F") -> np.ndarray:
    """``F(x,s) = e^{-zsx} Phi_+(zs,x) - 1`` (or ``G`` with ``Phi_-``) for real s.

    ``Phi_+`` is ``T_l f`` on L1 (s > 0) and ``m`` on L3 (s < 0); ``Phi_-`` is
    ``n`` on L1 and ``g`` on L3.  Returns shape (len(s), len(x)).
    """
    from .direct import build_mn_many, extract_left, solve_basic_many
    from .geometry import XGrid

    grid = grid or XGrid()
    s = np.asarray(s, float)
    x = np.sort(np.atleast_1d(np.asarray(x, float)))
    if np.any(s == 0):
        raise DomainError("s = 0 is excluded")
    out = np.empty((s.size, x.size), complex)
    pos, neg = np.nonzero(s > 0)[0], np.nonzero(s < 0)[0]
    k = Z * s
    if which == "F":
        if pos.size:
            xe = np.unique(np.concatenate([[grid.x_min], x]))
            cols = np.searchsorted(xe, x)
            for i, f in zip(pos, solve_basic_many("f", k[pos], pot, grid, x_eval=xe)):
                out[i] = f.r0[cols] / extract_left(f)[0] - 1.0
        mn_kind, mn_idx = "m", neg
    elif which == "G":
        if neg.size:
            for i, g in zip(neg, solve_basic_many("g", k[neg], pot, grid, x_eval=x)):
                out[i] = g.r0 - 1.0
        mn_kind, mn_idx = "n", pos
    else:
        raise ValueError("which must be 'F' or 'G'")
    if mn_idx.size:
        for i, p in zip(mn_idx, build_mn_many(mn_kind, k[mn_idx], pot, grid, x_eval=x)):
            out[i] = p.r0 * np.exp((p.exponent - k[i]) * x) - 1.0
    return out


@dataclass
class SupportReport:
    which: str
    x: np.ndarray
    mass_fraction: np.ndarray
    cauchy: np.ndarray
    s_test: np.ndarray


def support_check(pot: PotentialPair, x=(-1.0, 0.0, 1.0), grid=None, which: str = "F",
                  s_max: float = 30.0, panel: float = 1.0, nodes: int = 16, y_max: float = 20.0,
                  ny: int = 801, s_test=(0.5, 1.0, 2.0, 4.0)) -> SupportReport:
    """Half-line support of ``F_hat`` (or ``G_hat``) and the vanishing Cauchy integral.

    ``F(x,.)`` extends analytically to Im s > 0, so ``F_hat(x, y)`` should vanish
    for y < 0 and ``(1/2pi i) int F(x,eta)/(eta - alpha) d eta`` should vanish
    at ``alpha = z s`` with s < 0.  ``G`` mirrors this with the half planes
    swapped.  The slow ``1/s`` tail is removed first with terms
    ``a/(s+i) + b/(s+i)^2`` (poles on the non-analytic side), fitted at
    |s| > s_max/3, so the remainder decays like ``s^-3``.
    """
    sign = 1 if which == "F" else -1
    sp, wp = rho_quadrature_grid(s_max, panel, nodes, s_min=2e-3)
    s = np.concatenate([-sp[::-1], sp])
    w = np.concatenate([wp[::-1], wp])
    x = np.sort(np.atleast_1d(np.asarray(x, float)))
    F = line_values(pot, s, x, grid, which)
    pole = -1j * sign                          # on the side where F is not analytic
    basis = np.stack([1.0 / (s - pole), 1.0 / (s - pole) ** 2], axis=1)
    far = np.abs(s) > s_max / 3
    coef, *_ = np.linalg.lstsq(basis[far], F[far], rcond=None)
    Fr = F - basis @ coef

    # wrong-side mass: the subtracted terms transform to zero there
    y = np.linspace(0.0, y_max, ny)[1:] * (-sign)
    Fh = np.exp(-1j * np.outer(y, s)) @ (w[:, None] * Fr) / (2 * np.pi)
    wrong = trapezoid(np.abs(Fh) ** 2, -sign * y, axis=0)
    tail = 2.0 * np.abs(coef[0]) ** 2 / s_max
    total = (w @ np.abs(F) ** 2 + tail) / (2 * np.pi)
    frac = wrong / total

    alpha = Z * (-sign) * np.asarray(s_test, float)
    C = (w[None, :] / (s[None, :] - alpha[:, None])) @ Fr / (2j * np.pi)
    scale = np.max(np.abs(F), axis=0)
    cauchy = np.max(np.abs(C), axis=0) / scale
    return SupportReport(which, x, frac, cauchy, -sign * np.asarray(s_test, float))


def reextract_rho(recovered: RecoveredPotentials, kernel: RhoKernel, grid=None):
    """Forward-solve recovered potentials on the kernel's s-nodes and rebuild rho.

    Returns ``(new_kernel, rel_err)`` with ``rel_err`` the relative L2 distance
    of (rho_+, rho_-) over the nodes, weighted by the quadrature weights.
    """
    from .direct import sweep_rays

    if not np.allclose(kernel.s_plus, -kernel.s_minus):
        raise ValueError("re-extraction expects mirrored rho_+ / rho_- nodes")
    data = sweep_rays(recovered.as_pair(), kernel.s_plus, grid, tail=False)
    new = build_rho(data, kernel.w_plus, enforce=False)
    num = kernel.w_plus @ np.abs(new.rho_plus - kernel.rho_plus) ** 2 \
        + kernel.w_minus @ np.abs(new.rho_minus - kernel.rho_minus) ** 2
    den = kernel.w_plus @ np.abs(kernel.rho_plus) ** 2 + kernel.w_minus @ np.abs(kernel.rho_minus) ** 2
    return new, float(np.sqrt(num / den))
