"""Cube-root-of-unity geometry of the complex spectral plane.

The plane is cut into six open sectors by the rays ``arg k = j*pi/3``.
Arguments are measured on the branch ``(-2pi/3, 4pi/3]`` throughout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

Z = complex(-0.5, math.sqrt(3.0) / 2.0)
Z2 = Z.conjugate()

ANGLE_TOL = 1e-10
_THIRD = math.pi / 3.0


class DomainError(ValueError):
    """Raised when a spectral parameter lies outside the admissible region."""


class Sector(str, enum.Enum):
    OMEGA1_UP = "Omega1up"
    OMEGA1_DOWN = "Omega1down"
    OMEGA2 = "Omega2"
    OMEGA3_DOWN = "Omega3down"
    OMEGA3_UP = "Omega3up"
    OMEGA4 = "Omega4"
    OMEGA1 = "Omega1"
    OMEGA3 = "Omega3"
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"
    NEG_REAL = "-R-"
    POS_REAL = "R+"
    LINE = "L"
    PLUS = "P+"
    MINUS = "P-"
    ORIGIN = "origin"


# Open subsectors, counter-clockwise starting at arg = -2pi/3.
_OPEN = [
    Sector.OMEGA2,       # (-2pi/3, -pi/3)
    Sector.OMEGA3_DOWN,  # (-pi/3, 0)
    Sector.OMEGA3_UP,    # (0, pi/3)
    Sector.OMEGA4,       # (pi/3, 2pi/3)
    Sector.OMEGA1_UP,    # (2pi/3, pi)
    Sector.OMEGA1_DOWN,  # (pi, 4pi/3)
]
# Ray at arg = -2pi/3 + j*pi/3 for j = 0..5.
_RAYS = [Sector.L2, Sector.L3, Sector.POS_REAL, Sector.L4, Sector.L1, Sector.NEG_REAL]

_PARENT = {
    Sector.OMEGA1_UP: Sector.OMEGA1,
    Sector.OMEGA1_DOWN: Sector.OMEGA1,
    Sector.NEG_REAL: Sector.OMEGA1,
    Sector.OMEGA3_UP: Sector.OMEGA3,
    Sector.OMEGA3_DOWN: Sector.OMEGA3,
    Sector.POS_REAL: Sector.OMEGA3,
}


@dataclass(frozen=True)
class SectorLabel:
    tag: Sector
    closed: bool = False

    @property
    def is_ray(self) -> bool:
        return self.tag in _RAYS

    @property
    def parent(self) -> Sector:
        return _PARENT.get(self.tag, self.tag)


def arg(k: complex) -> float:
    """Argument of ``k`` on the branch ``(-2pi/3, 4pi/3]``."""
    a = math.atan2(k.imag, k.real)
    if a <= -2.0 * _THIRD:
        a += 2.0 * math.pi
    return a


def classify_k(k: complex, tol: float = ANGLE_TOL) -> SectorLabel:
    k = complex(k)
    if k == 0:
        return SectorLabel(Sector.ORIGIN, closed=True)
    t = (arg(k) + 2.0 * _THIRD) / _THIRD
    j = round(t)
    if abs(t - j) * _THIRD <= tol:
        return SectorLabel(_RAYS[j % 6], closed=True)
    return SectorLabel(_OPEN[int(math.floor(t)) % 6])


def in_closure(k: complex, sector: Sector, tol: float = ANGLE_TOL) -> bool:
    """Membership of ``k`` in the closure of a sector, ray or half plane."""
    k = complex(k)
    if k == 0:
        return True
    lo, hi = _ANGLES[sector]
    d = (arg(k) - lo) % (2.0 * math.pi)
    return d <= hi - lo + tol or d >= 2.0 * math.pi - tol


_ANGLES = {
    Sector.OMEGA1: (2 * _THIRD, 4 * _THIRD),
    Sector.OMEGA1_UP: (2 * _THIRD, 3 * _THIRD),
    Sector.OMEGA1_DOWN: (3 * _THIRD, 4 * _THIRD),
    Sector.OMEGA2: (-2 * _THIRD, -_THIRD),
    Sector.OMEGA3: (-_THIRD, _THIRD),
    Sector.OMEGA3_DOWN: (-_THIRD, 0.0),
    Sector.OMEGA3_UP: (0.0, _THIRD),
    Sector.OMEGA4: (_THIRD, 2 * _THIRD),
    Sector.L1: (2 * _THIRD, 2 * _THIRD),
    Sector.L2: (-2 * _THIRD, -2 * _THIRD),
    Sector.L3: (-_THIRD, -_THIRD),
    Sector.L4: (_THIRD, _THIRD),
    Sector.NEG_REAL: (math.pi, math.pi),
    Sector.POS_REAL: (0.0, 0.0),
    Sector.PLUS: (2 * _THIRD, 5 * _THIRD),
    Sector.MINUS: (-_THIRD, 2 * _THIRD),
}


def in_plus(k: complex, tol: float = ANGLE_TOL) -> bool:
    """Closed plus half plane (left of the directed line k = z*s)."""
    return in_closure(k, Sector.PLUS, tol)


def in_minus(k: complex, tol: float = ANGLE_TOL) -> bool:
    return in_closure(k, Sector.MINUS, tol)


def rotate(k, power: int = 1):
    """Multiply by ``z**power``; works on scalars and arrays."""
    p = power % 3
    if p == 0:
        return k
    return k * (Z if p == 1 else Z2)


def line_parameter(k: complex, tol: float = 1e-8) -> float:
    """Real ``s`` with ``k = z*s`` for ``k`` on the full line L."""
    k = complex(k)
    s = (k * Z2).real
    if abs(Z * s - k) > tol * max(abs(k), 1.0) or (k == 0):
        raise DomainError(f"{k} is not on the line k = z*s")
    return s


def ray_points(sector: Sector, s) -> np.ndarray:
    """Points ``k = direction * s`` on one of the six rays, ``s >= 0``."""
    direction = {
        Sector.L1: Z,
        Sector.L2: Z2,
        Sector.L3: -Z,
        Sector.L4: -Z2,
        Sector.NEG_REAL: -1.0,
        Sector.POS_REAL: 1.0,
    }[sector]
    return direction * np.asarray(s, dtype=float)


@dataclass(frozen=True)
class XGrid:
    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = 2048

    def __post_init__(self):
        if not (self.x_min < 0 < self.x_max):
            raise ValueError("grid must straddle the origin")
        if self.n_points < 8:
            raise ValueError("grid needs at least 8 points")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def index_of(self, x0: float) -> int:
        return int(np.argmin(np.abs(self.x - x0)))


@dataclass(frozen=True)
class KPath:
    """Samples ``k = direction * s`` along one ray."""

    sector: Sector
    s: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return ray_points(self.sector, self.s)
