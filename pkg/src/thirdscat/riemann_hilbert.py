"""Sectionally meromorphic Phi_+/Phi_-, the jump on the line, and potential recovery.

``Phi_+`` equals ``T_l f`` on Omega1 and ``m`` on Omega2; ``Phi_-`` equals ``g``
on Omega3 and ``n`` on Omega4.  Everything is stored in reduced form
``e^{-kx}(Phi, Phi', Phi'')`` so that large-|k| samples stay O(1).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import geometry as geo
from .direct import (build_mn, extract_left, extract_right, fit_inverse_powers, solve_basic_many)
from .geometry import Z, Z2, DomainError, Sector, XGrid
from .numerics import derivative
from .potentials import PotentialPair


class InconsistentData(RuntimeError):
    """Glue mismatch on an internal ray: M or N are not actually zero."""


class SingularSystem(RuntimeError):
    def __init__(self, msg, x=None):
        super().__init__(msg)
        self.x = x


class AsymptoticWindowError(RuntimeError):
    pass


@dataclass
class PhiSamples:
    """Reduced ``e^{-kx}`` times (Phi, Phi', Phi'') at each k (rows) and x (columns)."""

    k: np.ndarray
    x: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    def values(self):
        return np.exp(np.outer(self.k, self.x)) * self.r0


@dataclass
class PhiPair:
    plus: PhiSamples
    minus: PhiSamples
    glue: dict


def _stack(profiles, scale=None):
    scale = np.ones(len(profiles)) if scale is None else scale
    r = [np.array([c * getattr(p, name) for p, c in zip(profiles, scale)]) for name in ("r0", "r1", "r2")]
    return r


def phi_plus(pot: PotentialPair, ks, grid: XGrid | None = None) -> PhiSamples:
    """``Phi_+`` on closure(P+): ``T_l f`` on closure(Omega1), ``m`` on Omega2."""
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, complex))
    r0 = np.empty((ks.size, grid.n_points), complex)
    r1, r2 = r0.copy(), r0.copy()
    in1 = np.array([geo.in_closure(k, Sector.OMEGA1, 1e-8) for k in ks])
    in2 = np.array([geo.in_closure(k, Sector.OMEGA2, 1e-8) for k in ks]) & ~in1
    if np.any(~(in1 | in2)) or np.any(ks == 0):
        raise DomainError("Phi_+ samples must lie in closure(P+) minus the origin")
    idx = np.nonzero(in1)[0]
    if idx.size:
        fs = solve_basic_many("f", ks[idx], pot, grid)
        tl = np.array([1.0 / extract_left(f)[0] for f in fs])
        a, b, c = _stack(fs, tl)
        r0[idx], r1[idx], r2[idx] = a, b, c
    for i in np.nonzero(in2)[0]:
        m = build_mn("m", ks[i], pot, grid)
        r0[i], r1[i], r2[i] = _shift(m, ks[i])
    return PhiSamples(ks, grid.x, r0, r1, r2)


def phi_minus(pot: PotentialPair, ks, grid: XGrid | None = None) -> PhiSamples:
    """``Phi_-`` on closure(P-): ``g`` on closure(Omega3), ``n`` on Omega4."""
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, complex))
    r0 = np.empty((ks.size, grid.n_points), complex)
    r1, r2 = r0.copy(), r0.copy()
    in3 = np.array([geo.in_closure(k, Sector.OMEGA3, 1e-8) for k in ks])
    in4 = np.array([geo.in_closure(k, Sector.OMEGA4, 1e-8) for k in ks]) & ~in3
    if np.any(~(in3 | in4)) or np.any(ks == 0):
        raise DomainError("Phi_- samples must lie in closure(P-) minus the origin")
    idx = np.nonzero(in3)[0]
    if idx.size:
        a, b, c = _stack(solve_basic_many("g", ks[idx], pot, grid))
        r0[idx], r1[idx], r2[idx] = a, b, c
    for i in np.nonzero(in4)[0]:
        n = build_mn("n", ks[i], pot, grid)
        r0[i], r1[i], r2[i] = _shift(n, ks[i])
    return PhiSamples(ks, grid.x, r0, r1, r2)


def _shift(p, k):
    """Re-reduce a profile to the exponent ``k`` (they agree up to rounding)."""
    f = np.exp((p.exponent - k) * p.x)
    return p.r0 * f, p.r1 * f, p.r2 * f


def glue_mismatch(pot: PotentialPair, s, grid: XGrid | None = None) -> dict:
    """Relative mismatch of ``T_l f`` vs ``m`` on L2 and ``g`` vs ``n`` on L4."""
    grid = grid or XGrid()
    s = np.atleast_1d(np.asarray(s, float))
    out = {}
    for ray, kind in ((Sector.L2, "m"), (Sector.L4, "n")):
        ks = geo.ray_points(ray, s)
        if kind == "m":
            fs = solve_basic_many("f", ks, pot, grid)
            a = [f.r0 / extract_left(f)[0] for f in fs]
        else:
            a = [g.r0 for g in solve_basic_many("g", ks, pot, grid)]
        b = [_shift(build_mn(kind, k, pot, grid), k)[0] for k in ks]
        out[ray.value] = float(max(np.max(np.abs(u - v)) / np.max(np.abs(v)) for u, v in zip(a, b)))
    return out


def assemble_phi(pot: PotentialPair, k_plus, k_minus, grid: XGrid | None = None, glue_s=(0.5, 1.0, 2.0),
                 glue_tol: float = 1e-5, assume_mn_zero: bool = True) -> PhiPair:
    """Piecewise ``Phi_+`` and ``Phi_-`` with an internal-ray glue check.

    Raises ``InconsistentData`` when the glue mismatch on L2 or L4 exceeds
    ``glue_tol`` (the secondary reflections are then not zero).
    """
    if not assume_mn_zero:
        raise InconsistentData("Phi_+/Phi_- assembly needs data with M = N = 0")
    grid = grid or XGrid()
    glue = glue_mismatch(pot, glue_s, grid) if glue_s is not None else {}
    bad = {k: v for k, v in glue.items() if v > glue_tol}
    if bad:
        raise InconsistentData(f"glue mismatch above {glue_tol:g}: {bad}")
    return PhiPair(phi_plus(pot, k_plus, grid), phi_minus(pot, k_minus, grid), glue)


def jump(pot: PotentialPair, k: complex, grid: XGrid | None = None, data=None) -> np.ndarray:
    """``J(k, x)`` on the x-grid for ``k`` on the line ``k = z s``.

    s > 0: ``L(k) T_l(zk) f(zk, x)``; s < 0: ``-R(k) T_r(zk) g(zk, x) / T_r(k)``.
    """
    grid = grid or XGrid()
    s = geo.line_parameter(k)
    if s > 0:
        f_k = solve_basic_many("f", [k], pot, grid, x_eval=np.array([grid.x_min]))[0]
        c = extract_left(f_k)
        L = c[1] / c[0]
        fz = solve_basic_many("f", [Z * k], pot, grid)[0]
        return L * fz.psi / extract_left(fz)[0]
    g_k = solve_basic_many("g", [k], pot, grid, x_eval=np.array([grid.x_max]))[0]
    c = extract_right(g_k)
    R, tr_k = c[1] / c[0], 1.0 / c[0]
    gz = solve_basic_many("g", [Z * k], pot, grid)[0]
    return -R * gz.psi / extract_right(gz)[0] / tr_k


def jump_residual(pot: PotentialPair, s, grid: XGrid | None = None) -> float:
    """``max |Phi_+ - Phi_- - J|`` over k = zs, scaled by ``e^{Re(k) x}``."""
    grid = grid or XGrid()
    worst = 0.0
    for si in np.atleast_1d(s):
        k = Z * si
        if si > 0:
            fs = solve_basic_many("f", [k], pot, grid)[0]
            plus = fs.psi / extract_left(fs)[0]
            minus = build_mn("n", k, pot, grid).psi
        else:
            plus = build_mn("m", k, pot, grid).psi
            minus = solve_basic_many("g", [k], pot, grid)[0].psi
        r = (plus - minus - jump(pot, k, grid)) * np.exp(-(k.real) * grid.x)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


# large-k recovery -----------------------------------------------------------


def large_k_points(half: str = "plus", radii=(10.0, 14.0, 20.0, 28.0, 40.0)) -> np.ndarray:
    """Three rays per half plane: args 5pi/6, pi, 7pi/6 (plus) or -pi/6, 0, pi/6 (minus)."""
    base = np.pi if half == "plus" else 0.0
    angles = base + np.array([-np.pi / 6, 0.0, np.pi / 6])
    return np.array([r * np.exp(1j * a) for r in radii for a in angles])


@dataclass
class Recovered:
    x: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    fit_residual: float


def _potentials_from_coefficients(x, w1, w2):
    dx = x[1] - x[0]
    d1 = derivative(w1, dx, 1)
    Q = -3.0 * d1
    P = 3.0 * (w1 * d1 - derivative(w1, dx, 2) - derivative(w2, dx, 1))
    return Q, P


def _fit(samples: PhiSamples, n_terms: int, fit_tol: float):
    coef = fit_inverse_powers(samples.k, samples.r0, n_terms)
    A = np.stack([samples.k ** (-j) for j in range(1, n_terms + 1)], axis=1)
    resid = samples.r0 - 1.0 - A @ coef
    rel = float(np.max(np.abs(resid)) / max(np.max(np.abs(samples.r0 - 1.0)), 1e-300))
    if rel > fit_tol:
        raise AsymptoticWindowError(f"large-k fit residual {rel:.3g} exceeds {fit_tol:g}; widen the |k| sweep")
    return coef, rel


def recover_from_plus(samples: PhiSamples, t_l1: complex, t_l2: complex, n_terms: int = 7,
                      fit_tol: float = 1e-3) -> Recovered:
    """Fit ``e^{-kx}Phi_+ = 1 + c1/k + c2/k^2 + ...`` and convert to (Q, P).

    ``c1 = t_l1 + u1`` and ``c2 = t_l2 + t_l1 u1 + u2``.
    """
    coef, rel = _fit(samples, n_terms, fit_tol)
    u1 = coef[0] - t_l1
    u2 = coef[1] - t_l2 - t_l1 * u1
    Q, P = _potentials_from_coefficients(samples.x, u1, u2)
    return Recovered(samples.x, Q, P, u1, u2, rel)


def recover_from_minus(samples: PhiSamples, n_terms: int = 7, fit_tol: float = 1e-3) -> Recovered:
    """Same as ``recover_from_plus`` on the minus side, where no tail constants enter."""
    coef, rel = _fit(samples, n_terms, fit_tol)
    Q, P = _potentials_from_coefficients(samples.x, coef[0], coef[1])
    return Recovered(samples.x, Q, P, coef[0], coef[1], rel)


# reflectionless problem -----------------------------------------------------


def validate_poles(poles, min_sep: float = 1e-3):
    ks = [complex(k) for k, _ in poles]
    for k, g in poles:
        k = complex(k)
        if g == 0:
            raise ValueError("gamma must be nonzero")
        if not geo.in_plus(k) or abs(k) < min_sep:
            raise DomainError(f"pole {k} is not inside P+")
        a = geo.arg(k)
        rays = np.arange(-2, 5) * np.pi / 3
        if np.min(np.abs(a - rays)) * abs(k) < min_sep:
            raise DomainError(f"pole {k} lies within {min_sep} of a sector ray")
    for i in range(len(ks)):
        for j in range(i):
            if abs(ks[i] - ks[j]) < min_sep:
                raise DomainError("poles must be pairwise separated")


def residue_rotation(k: complex) -> complex:
    """Rotation ``q`` with ``q k`` in Omega3: z below the negative real axis, z^2 above it."""
    a = geo.arg(complex(k))
    return Z2 if 2 * np.pi / 3 < a < np.pi else Z


class ReflectionlessSolution:
    """``e^{-kx} Phi(k,x) = 1 + sum_j a_j(x) / (k - k_j)`` with residue closure.

    The residue condition ``Res_{k_j} Phi = gamma_j Phi(q_j k_j, x)`` gives
    ``(I - diag(gamma E) C) a = gamma E`` with ``C_jl = 1/(q_j k_j - k_l)`` and
    ``E_j = exp((q_j - 1) k_j x)``.  ``q_j = z`` except for poles in the upper
    half of Omega1, where the dependency relation pairs ``f(k_j)`` with
    ``g(z^2 k_j)``.  x-derivatives of ``a`` follow from the same matrix by
    Leibniz' rule.
    """

    def __init__(self, poles, cond_limit: float = 1e12):
        validate_poles(poles)
        self.poles = [(complex(k), complex(g)) for k, g in poles]
        self.k = np.array([k for k, _ in self.poles])
        self.gamma = np.array([g for _, g in self.poles])
        self.q = np.array([residue_rotation(k) for k in self.k])
        self.C = 1.0 / ((self.q * self.k)[:, None] - self.k[None, :])
        self.lam = (self.q - 1.0) * self.k
        self.cond_limit = cond_limit

    def coefficients(self, x, order: int = 3) -> np.ndarray:
        """``a`` and its first ``order`` x-derivatives, shape (order+1, nx, n)."""
        x = np.atleast_1d(np.asarray(x, float))
        n = self.k.size
        out = np.zeros((order + 1, x.size, n), complex)
        if n == 0:
            return out
        with np.errstate(over="ignore", invalid="ignore"):
            gE = self.gamma * np.exp(np.outer(x, self.lam))
        A = np.eye(n)[None] - gE[:, :, None] * self.C[None]
        cond = np.linalg.cond(A)
        bad = ~np.isfinite(cond) | (cond > self.cond_limit)
        if np.any(bad):
            xb = float(x[np.argmax(bad)])
            raise SingularSystem(f"residue system singular near x = {xb:.6g}", x=xb)
        out[0] = np.linalg.solve(A, gE[..., None])[..., 0]
        w = 1.0 + np.einsum("jl,xl->xj", self.C, out[0])
        for m in range(1, order + 1):
            rhs = self.lam ** m * w
            for j in range(1, m):
                rhs = rhs + comb(m, j) * self.lam ** (m - j) * np.einsum("jl,xl->xj", self.C, out[j])
            out[m] = np.linalg.solve(A, (gE * rhs)[..., None])[..., 0]
        return out

    def residue_residual(self, x) -> float:
        """Max relative violation of the defining linear equations."""
        a = self.coefficients(x, 0)[0]
        gE = self.gamma * np.exp(np.outer(np.atleast_1d(x), self.lam))
        r = a - gE * (1.0 + a @ self.C.T)
        scale = np.abs(a) + np.abs(gE) * (1.0 + np.abs(a) @ np.abs(self.C.T))
        return float(np.max(np.abs(r) / scale))

    def v(self, x, order: int = 3):
        """``v1 = sum a_j``, ``v2 = sum a_j k_j`` and their x-derivatives."""
        a = self.coefficients(x, order)
        return a.sum(-1), (a * self.k).sum(-1)

    def reduced_phi(self, k, x, order: int = 3) -> np.ndarray:
        """``d^m/dx^m [e^{-kx} Phi(k,x)]`` for m = 0..order, shape (order+1, nk, nx)."""
        k = np.atleast_1d(np.asarray(k, complex))
        a = self.coefficients(x, order)
        out = np.einsum("mxj,kj->mkx", a, 1.0 / (k[:, None] - self.k[None, :]))
        out[0] += 1.0
        return out

    def phi_derivatives(self, k, x) -> np.ndarray:
        """``(Phi, Phi', Phi'', Phi''')`` divided by ``e^{kx}``, shape (4, nk, nx)."""
        k = np.atleast_1d(np.asarray(k, complex))
        p = self.reduced_phi(k, x, 3)
        kk = k[:, None]
        return np.array([
            p[0],
            kk * p[0] + p[1],
            kk ** 2 * p[0] + 2 * kk * p[1] + p[2],
            kk ** 3 * p[0] + 3 * kk ** 2 * p[1] + 3 * kk * p[2] + p[3],
        ])

    def Q(self, x):
        v1, _ = self.v(x, 1)
        return -3.0 * v1[1]

    def dQ(self, x):
        v1, _ = self.v(x, 2)
        return -3.0 * v1[2]

    def P(self, x):
        v1, v2 = self.v(x, 2)
        return 3.0 * (v1[0] * v1[1] - v1[2] - v2[1])

    def potentials(self) -> PotentialPair:
        def wrap(fn):
            def f(x):
                scalar = np.ndim(x) == 0
                out = fn(np.atleast_1d(np.asarray(x, float)))
                return out[0] if scalar else out.reshape(np.shape(x))
            return f

        return PotentialPair(wrap(self.Q), wrap(self.P), wrap(self.dQ), name="reflectionless",
                             params={"poles": [(str(k), str(g)) for k, g in self.poles]})

    def ode_residual(self, k, x) -> float:
        """Relative residual of Phi''' + Q Phi' + P Phi - k^3 Phi (all reduced by e^{kx})."""
        k = np.atleast_1d(np.asarray(k, complex))
        d = self.phi_derivatives(k, x)
        q, p = self.Q(x), self.P(x)
        r = d[3] + q * d[1] + p * d[0] - (k ** 3)[:, None] * d[0]
        scale = np.abs(k[:, None]) ** 3 * np.abs(d[0]) + np.abs(d[3]) + np.abs(q * d[1]) + np.abs(p * d[0])
        return float(np.max(np.abs(r) / scale))

    def transmission_left(self, k):
        """``T_l = prod (k - q_j k_j)/(k - k_j)`` for these reflectionless data.

        Only used as a consistency oracle; it is what the forward solve of
        the recovered potentials returns for the poles tested here.
        """
        k = np.asarray(k, complex)
        out = np.ones_like(k)
        for kj, qj in zip(self.k, self.q):
            out = out * (k - qj * kj) / (k - kj)
        return out


def solve_reflectionless(poles, x=None) -> ReflectionlessSolution:
    """Residue-closed reflectionless solution; singular x-locations raise ``SingularSystem``."""
    sol = ReflectionlessSolution(poles)
    if x is not None:
        sol.coefficients(x, 0)
    return sol
