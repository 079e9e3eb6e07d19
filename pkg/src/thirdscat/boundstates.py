"""Bound-state poles of T_l in Omega1 with dependency and normalization constants."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import geometry as geo
from .direct import DependencyError, solve_basic_many, transmission_from_wronskian
from .geometry import Z, Z2, DomainError, XGrid
from .potentials import PotentialPair

BRANCH_RAYS = (5 * np.pi / 6, np.pi, 7 * np.pi / 6)
LO, HI = 2 * np.pi / 3, 4 * np.pi / 3


class ArgumentPrincipleMismatch(RuntimeError):
    pass


@dataclass
class SearchRegion:
    """Annular sector ``r_min <= |k| <= r_max``, ``theta_min <= arg k <= theta_max``."""

    r_min: float = 0.2
    r_max: float = 5.0
    theta_min: float = LO
    theta_max: float = HI

    def subsectors(self):
        """Split at arg = pi where the Wronskian branch changes."""
        if self.theta_min < np.pi < self.theta_max:
            return [SearchRegion(self.r_min, self.r_max, self.theta_min, np.pi),
                    SearchRegion(self.r_min, self.r_max, np.pi, self.theta_max)]
        return [self]

    def contains(self, k, pad: float = 0.0) -> bool:
        r, a = abs(k), geo.arg(complex(k))
        return (self.r_min - pad <= r <= self.r_max + pad
                and self.theta_min - pad <= a <= self.theta_max + pad)


@dataclass
class Candidate:
    k: complex
    value: complex
    derivative: complex
    iterations: int
    converged: bool
    flags: list = field(default_factory=list)


def _tinv(pot, grid, ks):
    return np.atleast_1d(transmission_from_wronskian(np.asarray(ks, complex), pot, grid))


def cauchy_derivative(pot, grid, k: complex, radius: float | None = None, n: int = 8):
    """``(T_l^{-1}(k), dT_l^{-1}/dk)`` with the derivative from an n-point Cauchy circle.

    The trapezoid rule on the circle is exact up to O((h/R)^n); a fairly
    large radius keeps evaluation noise (divided by h) small.
    """
    k = complex(k)
    a = geo.arg(k)
    room = min(a - LO, HI - a) * abs(k)
    h = min(0.05 * abs(k), 0.5 * room) if radius is None else radius
    if h <= 1e-9 * abs(k):
        raise DomainError(f"k={k} is too close to the edge of Omega1 for a derivative")
    w = np.exp(2j * np.pi * np.arange(n) / n)
    vals = _tinv(pot, grid, np.concatenate([[k], k + h * w]))
    return vals[0], complex(np.mean(vals[1:] / w) / h)


def root_residual(c: Candidate) -> float:
    """``|T_l^{-1}|`` at the root over the local scale ``|k dT_l^{-1}/dk|``."""
    return float(abs(c.value) / max(abs(c.derivative * c.k), 1e-300))


def newton_refine(pot, grid, k0: complex, root_tol: float = 1e-8, max_iter: int = 30,
                  region: SearchRegion | None = None, floor_tol: float = 1e-5) -> Candidate:
    """Newton on ``T_l^{-1}``.

    Stops when the step falls below 1e-10 |k|, or when ``|T_l^{-1}|`` stops
    decreasing (evaluation noise floor); in the latter case the root is
    accepted only if its normalized residual is below ``floor_tol`` and a
    "noise floor" flag is attached.
    """
    k = complex(k0)
    val, der = cauchy_derivative(pot, grid, k)
    best = abs(val)
    for it in range(1, max_iter + 1):
        step = val / der
        # damp steps that would leave Omega1
        for _ in range(20):
            kn = k - step
            if LO + 1e-9 < geo.arg(kn) < HI - 1e-9 and abs(kn) > 1e-6:
                break
            step *= 0.5
        kn_val, kn_der = cauchy_derivative(pot, grid, kn)
        if it > 2 and abs(kn_val) >= 0.5 * best:
            c = Candidate(k, val, der, it, False)
            if root_residual(c) <= root_tol:
                c.converged = True
            elif root_residual(c) <= floor_tol:
                c.converged = True
                c.flags.append(f"noise floor: normalized residual {root_residual(c):.2e}")
            else:
                c.flags.append("newton stalled")
            return c
        k, val, der = kn, kn_val, kn_der
        best = min(best, abs(val))
        if abs(step) < 1e-10 * abs(k):
            c = Candidate(k, val, der, it, True)
            if root_residual(c) > root_tol:
                c.flags.append(f"noise floor: normalized residual {root_residual(c):.2e}")
            return c
        if region is not None and not region.contains(k, pad=0.5):
            break
    return Candidate(k, val, der, it, False, ["newton did not converge"])


def _contour(region: SearchRegion, n_edge: int):
    """Closed counterclockwise boundary of an annular sector."""
    t = np.linspace(0.0, 1.0, n_edge, endpoint=False)
    a0, a1, r0, r1 = region.theta_min, region.theta_max, region.r_min, region.r_max
    return np.concatenate([
        (r0 + (r1 - r0) * t) * np.exp(1j * a0),
        r1 * np.exp(1j * (a0 + (a1 - a0) * t)),
        (r1 + (r0 - r1) * t) * np.exp(1j * a1),
        r0 * np.exp(1j * (a1 + (a0 - a1) * t)),
    ])


def _clip_to_omega1(ks):
    """Nudge points lying exactly on the outer rays onto the closed sector."""
    a = np.angle(ks) % (2 * np.pi)
    a = np.clip(a, LO, HI)
    return np.abs(ks) * np.exp(1j * a)


def argument_principle(pot, grid, region: SearchRegion, n_edge: int = 24, max_refine: int = 8,
                       max_jump: float = 0.5) -> int:
    """Zero count of ``T_l^{-1}`` inside ``region`` from the winding of its phase.

    The boundary is refined until no phase step between neighbours exceeds
    ``max_jump`` radians.
    """
    ks = _clip_to_omega1(_contour(region, n_edge))
    vals = _tinv(pot, grid, ks)
    for _ in range(max_refine):
        ks_c, vals_c = np.append(ks, ks[0]), np.append(vals, vals[0])
        jumps = np.abs(np.angle(vals_c[1:] / vals_c[:-1]))
        bad = np.nonzero(jumps > max_jump)[0]
        if bad.size == 0:
            break
        mids = _clip_to_omega1(0.5 * (ks_c[bad] + ks_c[bad + 1]))
        # keep mid points on the boundary arcs
        mids = np.where(np.isclose(np.abs(ks_c[bad]), np.abs(ks_c[bad + 1])),
                        np.abs(ks_c[bad]) * np.exp(1j * np.angle(mids)), mids)
        new = _tinv(pot, grid, mids)
        ks = np.insert(ks, bad + 1, mids)
        vals = np.insert(vals, bad + 1, new)
    if np.any(vals == 0):
        raise ArgumentPrincipleMismatch("zero of T_l^{-1} on the contour")
    vc = np.append(vals, vals[0])
    winding = np.sum(np.angle(vc[1:] / vc[:-1])) / (2 * np.pi)
    return int(round(winding))


def _scan(pot, grid, region: SearchRegion, n_r: int, n_theta: int):
    r = np.geomspace(region.r_min, region.r_max, n_r)
    pad = 0.02 * (region.theta_max - region.theta_min)
    th = np.linspace(region.theta_min + pad, region.theta_max - pad, n_theta)
    K = r[:, None] * np.exp(1j * th[None, :])
    A = np.abs(_tinv(pot, grid, K.ravel())).reshape(K.shape)
    cands = []
    for i in range(n_r):
        for j in range(n_theta):
            nb = A[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if A[i, j] <= nb.min():
                cands.append(K[i, j])
    return cands


def find_bound_states(pot: PotentialPair, grid: XGrid | None = None, region: SearchRegion | None = None,
                      grid_density: tuple = (10, 8), root_tol: float = 1e-8, simple_tol: float = 1e-6,
                      check_count: bool = True) -> list[Candidate]:
    """Simple zeros of ``T_l^{-1}`` in the search region.

    Local minima of ``|T_l^{-1}|`` on a polar scan seed Newton; the argument
    principle on each subsector boundary must agree with the number found.
    """
    grid = grid or XGrid()
    region = region or SearchRegion()
    if pot.is_free:
        return []
    found: list[Candidate] = []
    for sub in region.subsectors():
        expected = argument_principle(pot, grid, sub) if check_count else None
        if expected == 0:
            continue
        roots = []
        for k0 in _scan(pot, grid, sub, *grid_density):
            c = newton_refine(pot, grid, k0, root_tol, region=sub)
            if not c.converged or not sub.contains(c.k, pad=1e-12):
                continue
            if any(abs(c.k - o.k) < 1e-6 * abs(c.k) for o in roots + found):
                continue
            if abs(c.derivative) < simple_tol:
                c.flags.append("possibly nonsimple")
                continue
            a = geo.arg(c.k)
            if min(abs(a - b) for b in BRANCH_RAYS) * abs(c.k) < 1e-3:
                c.flags.append("near branch ray")
            roots.append(c)
        if expected is not None and len(roots) != expected:
            raise ArgumentPrincipleMismatch(
                f"argument principle counts {expected} zeros in arg [{sub.theta_min:.4f}, {sub.theta_max:.4f}],"
                f" Newton found {len(roots)}")
        found += roots
    return found


# constants at a bound state ---------------------------------------------------


def dependency_branch(k: complex) -> complex:
    """Rotation ``q`` such that ``f(k) = D g(q k)``: z on [7pi/6, 4pi/3), z^2 on (2pi/3, 5pi/6]."""
    a = geo.arg(complex(k))
    if 7 * np.pi / 6 - 1e-12 <= a < HI:
        return Z
    if LO < a <= 5 * np.pi / 6 + 1e-12:
        return Z2
    raise DependencyError(f"arg k = {a:.6f} lies in (5pi/6, 7pi/6); that dependency relation is not implemented")


def _bound_profiles(pot, grid, k):
    rot = dependency_branch(k)
    f = solve_basic_many("f", [k], pot, grid)[0]
    g = solve_basic_many("g", [rot * k], pot, grid)[0]
    return f, g


def _log_abs_and_phase(p):
    """log of psi in a form that does not overflow: (log|r0| + Re(a) x, arg)."""
    return np.log(np.abs(p.r0)) + (p.exponent.real * p.x), np.angle(p.r0) + p.exponent.imag * p.x


def _ratio(f, g):
    lf, pf = _log_abs_and_phase(f)
    lg, pg = _log_abs_and_phase(g)
    return lf, lg, np.exp(lf - lg + 1j * (pf - pg))


def dependency_constant(k: complex, pot: PotentialPair, grid: XGrid | None = None, spread_tol: float = 1e-4,
                        floor: float = 1e-2, middle: float = 0.5):
    """``D = f(k, x) / g(q k, x)`` as a median over the middle of the grid.

    Returns ``(D, spread)``; a spread above ``spread_tol`` means ``k`` is not a
    bound state.
    """
    grid = grid or XGrid()
    k = complex(k)
    f, g = _bound_profiles(pot, grid, k)
    lf, lg, ratio = _ratio(f, g)
    n = grid.n_points
    cut = int(round(n * (1 - middle) / 2))
    mask = np.zeros(n, bool)
    mask[cut:n - cut] = True
    mask &= (lg > lg.max() + np.log(floor)) & (lf > lf.max() + np.log(floor))
    if not mask.any():
        raise DependencyError("no grid points with |f|, |g| above the floor")
    r = ratio[mask]
    D = complex(np.median(r.real) + 1j * np.median(r.imag))
    spread = float(np.max(np.abs(r - D)) / abs(D))
    if spread > spread_tol:
        raise DependencyError(f"f/g spread {spread:.3g} exceeds {spread_tol:g}: k={k} is not a bound state")
    return D, spread


def stitched_profile_log(k: complex, pot: PotentialPair, grid: XGrid | None = None, D: complex | None = None):
    """``log |f(k, x)|`` built from ``f`` right of the peak and ``D g(qk, x)`` left of it.

    Each Jost solution is only trustworthy on the side where it was
    normalized; past the peak, rounding excites the growing modes.
    """
    grid = grid or XGrid()
    k = complex(k)
    if D is None:
        D, _ = dependency_constant(k, pot, grid)
    f, g = _bound_profiles(pot, grid, k)
    lf, _ = _log_abs_and_phase(f)
    lg, _ = _log_abs_and_phase(g)
    lg = lg + np.log(abs(D))
    i = int(np.argmax(lf + lg))
    return np.where(np.arange(lf.size) >= i, lf, lg)


def normalization_constants(k: complex, pot: PotentialPair, grid: XGrid | None = None, D: complex | None = None,
                            end_tol: float = 1e-8):
    """``c_l = ||f(k)||^{-1}``, ``c_r = ||g(qk)||^{-1}`` in L^2 by trapezoid quadrature.

    ``g(qk) = f(k) / D`` at a bound state, so the same stitched profile gives both.
    ``end_tol`` bounds the density ``|f|^2`` at the grid ends relative to its peak.
    """
    grid = grid or XGrid()
    k = complex(k)
    if D is None:
        D, _ = dependency_constant(k, pot, grid)
    la = stitched_profile_log(k, pot, grid, D)
    top = la.max()
    if 2.0 * (max(la[0], la[-1]) - top) > np.log(end_tol):
        raise DomainError("bound-state profile has not decayed at the grid ends; widen the grid")
    c_l = float(np.exp(-top) / np.sqrt(trapezoid(np.exp(2 * (la - top)), grid.x)))
    return c_l, c_l * abs(D)


@dataclass
class BoundStateRecord:
    k_j: complex
    D_j: complex
    c_l: float
    c_r: float
    residue_Tl: complex
    gamma_j: complex
    spread: float = 0.0
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("k_j", "D_j", "residue_Tl", "gamma_j"):
            v = complex(d.pop(name))
            d[name + "_re"], d[name + "_im"] = v.real, v.imag
        # NaN (rejected candidates) is not valid JSON
        return {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundStateRecord":
        def num(v):
            return np.nan if v is None else v
        kw = {name: complex(num(d[name + "_re"]), num(d[name + "_im"]))
              for name in ("k_j", "D_j", "residue_Tl", "gamma_j")}
        return cls(c_l=num(d["c_l"]), c_r=num(d["c_r"]), spread=d.get("spread", 0.0), flags=list(d.get("flags", [])), **kw)


def bound_state_record(cand: Candidate | complex, pot: PotentialPair, grid: XGrid | None = None) -> BoundStateRecord:
    grid = grid or XGrid()
    if not isinstance(cand, Candidate):
        val, der = cauchy_derivative(pot, grid, cand)
        cand = Candidate(complex(cand), val, der, 0, True)
    D, spread = dependency_constant(cand.k, pot, grid)
    c_l, c_r = normalization_constants(cand.k, pot, grid, D)
    res = 1.0 / cand.derivative
    return BoundStateRecord(cand.k, D, c_l, c_r, res, res * D, spread, list(cand.flags))


def bound_state_records(pot: PotentialPair, grid: XGrid | None = None, region: SearchRegion | None = None,
                        **kw) -> list[BoundStateRecord]:
    """Find bound states and compute their constants; unsupported branches keep a flag and no constants."""
    grid = grid or XGrid()
    out = []
    for c in find_bound_states(pot, grid, region, **kw):
        try:
            out.append(bound_state_record(c, pot, grid))
        except DependencyError as exc:
            out.append(BoundStateRecord(c.k, complex("nan"), float("nan"), float("nan"), 1.0 / c.derivative,
                                        complex("nan"), float("nan"), c.flags + [f"rejected: {exc}"]))
    return out
