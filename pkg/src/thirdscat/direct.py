"""Direct scattering: basic solutions, Wronskians and scattering coefficients.

Every solution is stored in *reduced* form: for a solution with exponent
``a`` (``psi ~ exp(a x)``) the profile keeps ``exp(-a x)`` times
``(psi, psi', psi'')``.  Wronskians of triples whose exponents sum to zero
are then evaluated without ever forming ``exp(a x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import Z, Z2, DomainError, Sector, XGrid
from .numerics import cumulative_from_left, cumulative_from_right, derivative
from .ode import ATOL, RTOL, integrate_factored
from .potentials import PotentialPair, adjoint_potentials

FREE_W3_DOWN = -3.0 * Z * (1.0 - Z)      # [e^{kx}; e^{zkx}; e^{z^2kx}] / k^3
PRINTED_W3_UP = 3.0 * (1.0 - Z * Z)      # constant printed for the upper branch


def _calibrate_up_constant() -> complex:
    """Free-case value of [e^{kx}; e^{z^2 kx}; e^{zkx}] / k^3."""
    lam = np.array([1.0, Z2, Z])
    return complex(np.linalg.det(np.vander(lam, 3, increasing=True).T))


FREE_W3_UP = _calibrate_up_constant()


class ConditioningError(RuntimeError):
    pass


class DependencyError(RuntimeError):
    pass


@dataclass
class SolutionProfile:
    """One basic solution at one ``k`` on an x-grid, in reduced form."""

    kind: str
    k: complex
    x: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    exponent: complex | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.exponent is None:
            self.exponent = self.k

    @property
    def psi(self):
        return np.exp(self.exponent * self.x) * self.r0

    @property
    def psi_x(self):
        return np.exp(self.exponent * self.x) * self.r1

    @property
    def psi_xx(self):
        return np.exp(self.exponent * self.x) * self.r2

    def reduced(self, i):
        return np.array([self.r0[i], self.r1[i], self.r2[i]])

    def conj(self, kind: str | None = None) -> "SolutionProfile":
        return SolutionProfile(kind or self.kind + "*", np.conj(self.k), self.x, np.conj(self.r0),
                               np.conj(self.r1), np.conj(self.r2), exponent=np.conj(self.exponent))

    def scaled(self, c: complex) -> "SolutionProfile":
        return SolutionProfile(self.kind, self.k, self.x, c * self.r0, c * self.r1, c * self.r2,
                               exponent=self.exponent, meta=dict(self.meta))

    def to_csv(self, path) -> None:
        from .io import write_profile_csv
        write_profile_csv(self, path)


_KIND = {
    "f": (Sector.OMEGA1, "right", False),
    "fbar": (Sector.OMEGA1, "right", True),
    "g": (Sector.OMEGA3, "left", False),
    "gbar": (Sector.OMEGA3, "left", True),
}


def _check_k(kind, k):
    sector = _KIND[kind][0]
    for kk in np.atleast_1d(k):
        if kk == 0:
            raise DomainError("k = 0 is excluded")
        if not geo.in_closure(complex(kk), sector, tol=1e-8):
            raise DomainError(f"k={kk} is outside the closure of {sector.value} required for {kind}")


def solve_basic_many(kind: str, ks, pot: PotentialPair, grid: XGrid | None = None,
                     x_stop: float | None = None, x_eval=None, rtol: float = RTOL,
                     atol: float = ATOL, adjoint: PotentialPair | None = None) -> list[SolutionProfile]:
    """Jost solutions ``f``, ``g`` (or adjoint ``fbar``, ``gbar``) for many ``k``.

    ``f`` is normalized at ``x_max`` and marched left, ``g`` at ``x_min`` and
    marched right.  ``x_stop`` truncates the march (profiles then cover only
    the traversed part of the grid).
    """
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    _check_k(kind, ks)
    _, side, is_adj = _KIND[kind]
    if is_adj:
        pot = adjoint if adjoint is not None else adjoint_potentials(pot)
    x = grid.x
    if side == "right":
        start = grid.x_max
        stop = grid.x_min if x_stop is None else x_stop
        xe = x[x >= stop - 1e-12] if x_eval is None else x_eval
    else:
        start = grid.x_min
        stop = grid.x_max if x_stop is None else x_stop
        xe = x[x <= stop + 1e-12] if x_eval is None else x_eval
    xe, phi, dphi, ddphi = integrate_factored(pot, ks, start, stop, xe, rtol=rtol, atol=atol)
    out = []
    for i, k in enumerate(ks):
        r0 = phi[i]
        r1 = k * phi[i] + dphi[i]
        r2 = k * k * phi[i] + 2.0 * k * dphi[i] + ddphi[i]
        out.append(SolutionProfile(kind, complex(k), xe, r0, r1, r2))
    return out


def solve_basic(kind: str, k: complex, pot: PotentialPair, grid: XGrid | None = None,
                tol: float = RTOL, **kw) -> SolutionProfile:
    return solve_basic_many(kind, [k], pot, grid, rtol=tol, **kw)[0]


# Wronskians ----------------------------------------------------------------


def _same_grid(*profiles):
    x0 = profiles[0].x
    for p in profiles[1:]:
        if p.x.shape != x0.shape or not np.allclose(p.x, x0, rtol=0, atol=1e-12):
            raise ValueError("profiles live on different grids")


def wronskian2(a: SolutionProfile, b: SolutionProfile, x_index=None):
    """``a b' - a' b``; full array when ``x_index`` is None."""
    _same_grid(a, b)
    sl = slice(None) if x_index is None else x_index
    red = a.r0[sl] * b.r1[sl] - a.r1[sl] * b.r0[sl]
    return np.exp((a.exponent + b.exponent) * a.x[sl]) * red


def wronskian3(a: SolutionProfile, b: SolutionProfile, c: SolutionProfile, x_index=None):
    """3x3 determinant of values and first two derivatives."""
    _same_grid(a, b, c)
    sl = slice(None) if x_index is None else x_index
    det = (a.r0[sl] * (b.r1[sl] * c.r2[sl] - b.r2[sl] * c.r1[sl])
           - b.r0[sl] * (a.r1[sl] * c.r2[sl] - a.r2[sl] * c.r1[sl])
           + c.r0[sl] * (a.r1[sl] * b.r2[sl] - a.r2[sl] * b.r1[sl]))
    return np.exp((a.exponent + b.exponent + c.exponent) * a.x[sl]) * det


# m and n from adjoint Jost solutions ---------------------------------------


def mn_arguments(kind: str, k: complex):
    """Adjoint arguments (for fbar, gbar) and the T_r argument for m or n."""
    kc = np.conj(k)
    if kind == "m":
        return -Z2 * kc, -Z * kc, Z * k
    if kind == "n":
        return -Z * kc, -Z2 * kc, Z2 * k
    raise ValueError(kind)


def wronskian_of_adjoints(fbar: SolutionProfile, gbar: SolutionProfile, pot: PotentialPair,
                          kind: str) -> SolutionProfile:
    """``[fbar*; gbar*]`` as a solution of the original equation.

    The second derivative uses ``W'' = F'G'' - F''G' - Q W``, which follows
    from the adjoint equation for ``F = fbar*`` and ``G = gbar*``.
    """
    F, G = fbar.conj(), gbar.conj()
    _same_grid(F, G)
    w0 = F.r0 * G.r1 - F.r1 * G.r0
    w1 = F.r0 * G.r2 - F.r2 * G.r0
    w2 = F.r1 * G.r2 - F.r2 * G.r1 - pot.Q(F.x) * w0
    expo = F.exponent + G.exponent
    return SolutionProfile(kind + "~", expo, F.x, w0, w1, w2, exponent=expo)


def build_mn(kind: str, k: complex, pot: PotentialPair, grid: XGrid | None = None,
             tr_inv: complex | None = None, raw: bool = False, x_stop=None,
             rtol: float = RTOL) -> SolutionProfile:
    """Basic solution ``m`` (``k`` in closure of Omega2) or ``n`` (Omega4).

    ``tr_inv`` is ``T_r^{-1}`` at ``zk`` (for m) or ``z^2 k`` (for n); it is
    computed from a right-marched ``g`` when not supplied.  With ``raw=True``
    the analytic 2-Wronskian itself is returned, without the T_r prefactor.
    """
    grid = grid or XGrid()
    k = complex(k)
    if k == 0:
        raise DomainError("k = 0 is excluded")
    sector = Sector.OMEGA2 if kind == "m" else Sector.OMEGA4
    if not geo.in_closure(k, sector, tol=1e-8):
        raise DomainError(f"k={k} outside closure of {sector.value}")
    kf, kg, kt = mn_arguments(kind, k)
    adj = adjoint_potentials(pot)
    if x_stop is None:
        fb = solve_basic("fbar", kf, pot, grid, tol=rtol, adjoint=adj)
        gb = solve_basic("gbar", kg, pot, grid, tol=rtol, adjoint=adj)
    else:
        xe = np.array([x_stop])
        fb = solve_basic("fbar", kf, pot, grid, tol=rtol, adjoint=adj, x_stop=x_stop, x_eval=xe)
        gb = solve_basic("gbar", kg, pot, grid, tol=rtol, adjoint=adj, x_stop=x_stop, x_eval=xe)
    w = wronskian_of_adjoints(fb, gb, pot, kind)
    if raw:
        return w
    if tr_inv is None:
        tr_inv = extract_right(solve_basic("g", kt, pot, grid, tol=rtol))[0]
    denom = Z * (1.0 - Z) * k if kind == "m" else -Z * (1.0 - Z) * k
    prof = w.scaled(1.0 / (tr_inv * denom))
    prof.kind, prof.k = kind, k
    prof.meta["tr_inv"] = tr_inv
    return prof


def build_mn_many(kind: str, ks, pot: PotentialPair, grid: XGrid | None = None, x_eval=None,
                  rtol: float = RTOL) -> list[SolutionProfile]:
    """Batched ``build_mn`` over many ``k``; profiles on ``x_eval`` (default: full grid)."""
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    sector = Sector.OMEGA2 if kind == "m" else Sector.OMEGA4
    for k in ks:
        if k == 0 or not geo.in_closure(complex(k), sector, tol=1e-8):
            raise DomainError(f"k={k} outside closure of {sector.value}")
    args = [mn_arguments(kind, k) for k in ks]
    adj = adjoint_potentials(pot)
    xe = grid.x if x_eval is None else np.asarray(x_eval, float)
    fb = solve_basic_many("fbar", [a[0] for a in args], pot, grid, x_eval=xe, rtol=rtol, adjoint=adj)
    gb = solve_basic_many("gbar", [a[1] for a in args], pot, grid, x_eval=xe, rtol=rtol, adjoint=adj)
    gs = solve_basic_many("g", [a[2] for a in args], pot, grid, x_eval=np.array([grid.x_max]), rtol=rtol)
    out = []
    for k, f1, g1, gt in zip(ks, fb, gb, gs):
        tr_inv = extract_right(gt)[0]
        denom = Z * (1.0 - Z) * k if kind == "m" else -Z * (1.0 - Z) * k
        prof = wronskian_of_adjoints(f1, g1, pot, kind).scaled(1.0 / (tr_inv * denom))
        prof.kind, prof.k = kind, complex(k)
        prof.meta["tr_inv"] = tr_inv
        out.append(prof)
    return out


# extraction of scattering coefficients -------------------------------------


def _mode_solve(r, k, x_end):
    """Split reduced data at ``x_end`` into amplitudes of e^{kx}, e^{zkx}, e^{z^2kx}."""
    lam = k * np.array([1.0, Z, Z2])
    V = np.vander(lam, 3, increasing=True).T
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError(f"extraction matrix condition {cond:.3g} at k={k}")
    a = np.linalg.solve(V, r)
    with np.errstate(over="ignore", invalid="ignore"):
        c = a * np.exp(-(lam - k) * x_end)
    return c, cond


def extract_left(f: SolutionProfile, k: complex | None = None):
    """``(T_l^{-1}, L T_l^{-1}, M T_l^{-1})`` from ``f`` at ``x_min``.

    Only the first entry is meaningful for interior Omega1 samples; the
    second is physical on L1, the third on L2.
    """
    k = f.k if k is None else k
    c, cond = _mode_solve(f.reduced(0), k, f.x[0])
    return complex(c[0]), complex(c[1]), complex(c[2])


def extract_right(g: SolutionProfile, k: complex | None = None):
    """``(T_r^{-1}, R T_r^{-1}, N T_r^{-1})`` from ``g`` at ``x_max``."""
    k = g.k if k is None else k
    c, cond = _mode_solve(g.reduced(-1), k, g.x[-1])
    return complex(c[0]), complex(c[1]), complex(c[2])


def _branch(k: complex) -> str:
    a = geo.arg(complex(k))
    return "down" if a >= np.pi - 1e-12 else "up"


def transmission_from_wronskian(ks, pot: PotentialPair, grid: XGrid | None = None,
                                x0: float = 0.0, rtol: float = RTOL, return_parts: bool = False):
    """``T_l^{-1}(k)`` from the 3-Wronskian identities.

    Lower half of Omega1: ``[f(k); g(zk); n(z^2 k)] = -3z(1-z) k^3 / T_l``.
    Upper half: ``[f(k); g(z^2 k); m(zk)] = C k^3 / T_l`` with ``C`` the
    calibrated free-case constant ``FREE_W3_UP``.
    """
    grid = grid or XGrid()
    scalar = np.ndim(ks) == 0
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    _check_k("f", ks)
    adj = adjoint_potentials(pot)
    xe = np.array([x0])
    out = np.empty(ks.size, dtype=complex)
    branches = np.array([_branch(k) for k in ks])
    for br in ("down", "up"):
        sel = np.nonzero(branches == br)[0]
        if sel.size == 0:
            continue
        kk = ks[sel]
        rot = Z if br == "down" else Z2             # argument of g
        mn_kind = "n" if br == "down" else "m"
        q = (Z2 if br == "down" else Z) * kk        # argument of n or m
        f = solve_basic_many("f", kk, pot, grid, x_stop=x0, x_eval=xe, rtol=rtol)
        g_full = solve_basic_many("g", rot * kk, pot, grid, x_eval=np.array([x0, grid.x_max]), rtol=rtol)
        args = [mn_arguments(mn_kind, qq) for qq in q]
        fb = solve_basic_many("fbar", [a[0] for a in args], pot, grid, x_stop=x0, x_eval=xe,
                              rtol=rtol, adjoint=adj)
        gb = solve_basic_many("gbar", [a[1] for a in args], pot, grid, x_stop=x0, x_eval=xe,
                              rtol=rtol, adjoint=adj)
        const = FREE_W3_DOWN if br == "down" else FREE_W3_UP
        for j, i in enumerate(sel):
            g_at = _restrict(g_full[j], 0)
            tr_inv = extract_right(g_full[j])[0]   # T_r^{-1} at rot*k = z^2 q (n) or z q (m)
            w = wronskian_of_adjoints(fb[j], gb[j], pot, mn_kind)
            denom = -Z * (1.0 - Z) * q[j] if mn_kind == "n" else Z * (1.0 - Z) * q[j]
            mn = w.scaled(1.0 / (tr_inv * denom))
            w3 = wronskian3(f[j], g_at, mn, 0)
            out[i] = w3 / (const * ks[i] ** 3)
    return complex(out[0]) if scalar else out


def _restrict(p: SolutionProfile, i: int) -> SolutionProfile:
    return SolutionProfile(p.kind, p.k, p.x[i:i + 1], p.r0[i:i + 1], p.r1[i:i + 1], p.r2[i:i + 1],
                           exponent=p.exponent)


# ODE residual ----------------------------------------------------------------


def ode_residual(p: SolutionProfile, pot: PotentialPair, interior: float = 0.9) -> float:
    """Relative residual of ``psi''' + Q psi' + P psi - k^3 psi`` on the interior.

    ``psi'''`` is obtained by differentiating the stored ``psi''`` samples.
    """
    x = p.x
    dx = x[1] - x[0]
    a = p.exponent
    k3 = p.k ** 3 if p.kind in ("f", "g", "m", "n") else p.exponent ** 3
    q, pp = pot(x)
    r3 = derivative(p.r2, dx, 1, accuracy=6) + a * p.r2
    res = r3 + q * p.r1 + pp * p.r0 - k3 * p.r0
    n = x.size
    cut = int(round(n * (1.0 - interior) / 2.0))
    sl = slice(cut, n - cut)
    scale = np.max(np.abs(p.r0[sl])) * max(1.0, abs(a) ** 3)
    return float(np.max(np.abs(res[sl])) / scale)


# large-k tail expansion -----------------------------------------------------


@dataclass
class TailExpansion:
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


def tail_expansion(pot: PotentialPair, grid: XGrid | None = None) -> TailExpansion:
    """Coefficients of the 1/k and 1/k^2 terms of ``e^{-kx} f`` and ``e^{-kx} g``."""
    grid = grid or XGrid()
    x = grid.x
    iq_r = cumulative_from_right(pot.Q, x)
    ip_r = cumulative_from_right(pot.P, x)
    iq_l = cumulative_from_left(pot.Q, x)
    ip_l = cumulative_from_left(pot.P, x)
    q = pot.Q(x)
    u1 = iq_r / 3.0
    u2 = (q + ip_r) / 3.0 + iq_r ** 2 / 18.0
    v1 = -iq_l / 3.0
    v2 = (q - ip_l) / 3.0 + iq_l ** 2 / 18.0
    return TailExpansion(x, u1, u2, v1, v2)


def transmission_tail_constants(pot: PotentialPair, grid: XGrid | None = None):
    """``(t_l1, t_l2)`` in ``T_l = 1 + t_l1/k + t_l2/k^2 + O(k^-3)`` by quadrature."""
    grid = grid or XGrid()
    te = tail_expansion(pot, grid)
    iq = 3.0 * te.u1[0]
    ip = 3.0 * (te.u2[0] - iq ** 2 / 18.0) - pot.Q(np.array([grid.x_min]))[0]
    return complex(-iq / 3.0), complex(iq ** 2 / 18.0 - ip / 3.0)


def fit_inverse_powers(ks, values, n_terms: int = 3, weights=None):
    """Least squares for ``values - 1 = sum_j c_j / k^j``, j = 1..n_terms.

    ``values`` may carry trailing dimensions (e.g. an x-grid).
    """
    ks = np.asarray(ks, dtype=complex)
    A = np.stack([ks ** (-j) for j in range(1, n_terms + 1)], axis=1)
    rhs = np.asarray(values) - 1.0
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        A = A * w[:, None]
        rhs = rhs * w.reshape((-1,) + (1,) * (rhs.ndim - 1))
    coef, *_ = np.linalg.lstsq(A, rhs.reshape(ks.size, -1), rcond=None)
    return coef.reshape((n_terms,) + np.shape(values)[1:])


def fit_tail_constants(pot: PotentialPair, grid: XGrid | None = None,
                       radii=(10.0, 14.0, 20.0, 28.0, 40.0), n_terms: int = 7):
    """``(t_l1, t_l2)`` fitted from ``T_l`` on a large-|k| sweep in Omega1."""
    grid = grid or XGrid()
    angles = np.array([5 * np.pi / 6, np.pi, 7 * np.pi / 6])
    ks = np.array([r * np.exp(1j * a) for r in radii for a in angles])
    tl = 1.0 / np.array([extract_left(f)[0] for f in solve_basic_many("f", ks, pot, grid,
                                                                       x_eval=np.array([grid.x_min]))])
    coef = fit_inverse_powers(ks, tl, n_terms)
    return complex(coef[0]), complex(coef[1])


# ray sweeps -----------------------------------------------------------------

LEFT_RAYS = (Sector.L1, Sector.L2, Sector.NEG_REAL)
RIGHT_RAYS = (Sector.L3, Sector.L4, Sector.POS_REAL)


@dataclass
class ScatteringDataset:
    """Scattering coefficients sampled along the six rays at common ``s``.

    ``Tl`` is keyed by the Omega1 rays (L1, L2, -R-), ``Tr`` by the Omega3
    rays (L3, L4, R+).  ``L``, ``M``, ``R``, ``N`` live on L1, L2, L3, L4.
    """

    s: np.ndarray
    Tl: dict
    Tr: dict
    L: np.ndarray
    M: np.ndarray
    R: np.ndarray
    N: np.ndarray
    tail: tuple = (0j, 0j)
    bound_states: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        """Size of the secondary reflections, ``max(|M|, |N|)``."""
        return float(max(np.max(np.abs(self.M), initial=0.0), np.max(np.abs(self.N), initial=0.0)))

    def index_of_s(self, s: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.s - s)))
        if abs(self.s[i] - s) > tol * max(1.0, abs(s)):
            raise KeyError(f"no sample at s={s}")
        return i

    def to_json_dict(self) -> dict:
        def enc(v):
            v = np.asarray(v)
            return {"s": self.s.tolist(), "re": v.real.tolist(), "im": v.imag.tolist()}

        coeffs = {f"Tl[{k}]": enc(v) for k, v in self.Tl.items()}
        coeffs.update({f"Tr[{k}]": enc(v) for k, v in self.Tr.items()})
        coeffs.update({"L": enc(self.L), "M": enc(self.M), "R": enc(self.R), "N": enc(self.N)})
        return {
            "coefficients": coeffs,
            "tail_constants": {"t_l1": [self.tail[0].real, self.tail[0].imag],
                               "t_l2": [self.tail[1].real, self.tail[1].imag]},
            "bound_states": [b.to_dict() if hasattr(b, "to_dict") else b for b in self.bound_states],
            "meta": self.meta,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScatteringDataset":
        c = d["coefficients"]

        def dec(name):
            return np.asarray(c[name]["re"]) + 1j * np.asarray(c[name]["im"])

        s = np.asarray(c["L"]["s"], dtype=float)
        Tl = {k[3:-1]: dec(k) for k in c if k.startswith("Tl[")}
        Tr = {k[3:-1]: dec(k) for k in c if k.startswith("Tr[")}
        t = d.get("tail_constants", {})
        tail = tuple(complex(*t.get(n, (0.0, 0.0))) for n in ("t_l1", "t_l2"))
        return cls(s, Tl, Tr, dec("L"), dec("M"), dec("R"), dec("N"), tail,
                   list(d.get("bound_states", [])), dict(d.get("meta", {})))


def sweep_rays(pot: PotentialPair, s, grid: XGrid | None = None, rtol: float = RTOL,
               tail: bool = True) -> ScatteringDataset:
    """Forward-solve ``f`` on the three Omega1 rays and ``g`` on the three Omega3 rays."""
    grid = grid or XGrid()
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("ray parameters must be positive")
    left = np.array([grid.x_min])
    right = np.array([grid.x_max])
    Tl, Tr, coef = {}, {}, {}
    for ray in LEFT_RAYS:
        fs = solve_basic_many("f", geo.ray_points(ray, s), pot, grid, x_eval=left, rtol=rtol)
        c = np.array([extract_left(f) for f in fs])
        Tl[ray.value] = 1.0 / c[:, 0]
        coef[ray] = c
    for ray in RIGHT_RAYS:
        gs = solve_basic_many("g", geo.ray_points(ray, s), pot, grid, x_eval=right, rtol=rtol)
        c = np.array([extract_right(g) for g in gs])
        Tr[ray.value] = 1.0 / c[:, 0]
        coef[ray] = c
    L = coef[Sector.L1][:, 1] / coef[Sector.L1][:, 0]
    M = coef[Sector.L2][:, 2] / coef[Sector.L2][:, 0]
    R = coef[Sector.L3][:, 1] / coef[Sector.L3][:, 0]
    N = coef[Sector.L4][:, 2] / coef[Sector.L4][:, 0]
    tails = transmission_tail_constants(pot, grid) if tail else (0j, 0j)
    meta = {"potential": pot.name, "params": {k: str(v) for k, v in pot.params.items()},
            "x_min": grid.x_min, "x_max": grid.x_max, "n_points": grid.n_points}
    return ScatteringDataset(s, Tl, Tr, L, M, R, N, tails, meta=meta)


def coupling_identity_residual(side: str, data: ScatteringDataset, k: complex, reduced: bool = False) -> float:
    """Residual of the relation linking transmission and reflection on L1 or L3.

    Left (``k = z s`` on L1): ``T_r(z^2 k)^{-1} - T_l(k)^{-1} T_l(zk)^{-1} (1 - L(k) M(zk))``.
    Right (``k = -z s`` on L3): ``T_l(z^2 k)^{-1} - T_r(k)^{-1} T_r(zk)^{-1} (1 - R(k) N(zk))``.
    With ``reduced=True`` the reflection product is dropped.
    """
    s = geo.line_parameter(k)
    if side == "left":
        if s <= 0:
            raise DomainError("left identity needs k on L1")
        i = data.index_of_s(s)
        lm = 0.0 if reduced else data.L[i] * data.M[i]
        return float(abs(1 / data.Tr["R+"][i] - (1 - lm) / (data.Tl["L1"][i] * data.Tl["L2"][i])))
    if side == "right":
        if s >= 0:
            raise DomainError("right identity needs k on L3")
        i = data.index_of_s(-s)
        rn = 0.0 if reduced else data.R[i] * data.N[i]
        return float(abs(1 / data.Tl["-R-"][i] - (1 - rn) / (data.Tr["L3"][i] * data.Tr["L4"][i])))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def remainder_slope(pot: PotentialPair, grid: XGrid | None = None, angle: float = np.pi,
                    radii=(10.0, 14.0, 20.0, 28.0, 40.0)):
    """Log-log slope of ``|e^{-kx} f - 1 - u1/k - u2/k^2|`` against |k| (expected -3).

    Returns ``(slope, remainders)`` with RMS-over-x remainders per radius.
    """
    grid = grid or XGrid()
    te = tail_expansion(pot, grid)
    radii = np.asarray(radii, float)
    ks = radii * np.exp(1j * angle)
    rem = np.array([np.sqrt(np.mean(np.abs(f.r0 - 1.0 - te.u1 / k - te.u2 / k ** 2) ** 2))
                    for f, k in zip(solve_basic_many("f", ks, pot, grid), ks)])
    slope = np.polyfit(np.log(radii), np.log(rem), 1)[0]
    return float(slope), rem


def mn_asymptotic_residual(kind: str, ks, pot: PotentialPair, grid: XGrid | None = None):
    """Mismatch of m (or n) with its x -> -inf and x -> +inf asymptotics at the grid ends.

    At ``x_min`` the reduced profile should be 1; at ``x_max`` it should be
    ``T_r(zk) / T_l(z^2 k)`` for m and ``T_r(z^2 k) / T_l(zk)`` for n, with the
    transmission coefficients taken from independent Jost solves.  Meant for
    interior k, where the o(1) terms are exponentially small at the grid ends.
    """
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    prof = build_mn_many(kind, ks, pot, grid, x_eval=np.array([grid.x_min, grid.x_max]))
    rl, rr = Z2 if kind == "m" else Z, Z if kind == "m" else Z2
    tl_inv = [extract_left(f)[0] for f in solve_basic_many("f", rl * ks, pot, grid,
                                                           x_eval=np.array([grid.x_min]))]
    tr_inv = [extract_right(g)[0] for g in solve_basic_many("g", rr * ks, pot, grid,
                                                            x_eval=np.array([grid.x_max]))]
    left, right = [], []
    for p, k, a, b in zip(prof, ks, tl_inv, tr_inv):
        shift = np.exp((p.exponent - k) * p.x)
        left.append(abs(p.r0[0] * shift[0] - 1.0))
        target = a / b
        right.append(abs(p.r0[-1] * shift[-1] - target) / abs(target))
    return np.array(left), np.array(right)


def wronskian_spread(ks, pot: PotentialPair, grid: XGrid | None = None, interior: float = 0.5):
    """Relative spread over x of ``[f(k); g(qk); n or m]`` for k in Omega1.

    Uses the lower-branch triple ``f(k), g(zk), n(z^2k)`` for arg k >= pi and
    ``f(k), g(z^2k), m(zk)`` above.  The spread is ``max |W - mean| / |mean|``
    over the central ``interior`` fraction of the grid.
    """
    grid = grid or XGrid()
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    n = grid.n_points
    cut = int(round(n * (1.0 - interior) / 2.0))
    xe = grid.x[cut:n - cut]
    out = np.empty(ks.size)
    for i, k in enumerate(ks):
        down = _branch(k) == "down"
        f = solve_basic_many("f", [k], pot, grid, x_eval=xe)[0]
        g = solve_basic_many("g", [(Z if down else Z2) * k], pot, grid, x_eval=xe)[0]
        mn = build_mn_many("n" if down else "m", [(Z2 if down else Z) * k], pot, grid, x_eval=xe)[0]
        w = wronskian3(f, g, mn)
        mean = np.mean(w)
        out[i] = np.max(np.abs(w - mean)) / abs(mean)
    return out
