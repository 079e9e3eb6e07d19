"""Potential pairs (Q, P) and their adjoints."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

Func = Callable[[np.ndarray], np.ndarray]


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float), dtype=complex)


@dataclass
class PotentialPair:
    """Complex potentials of ``psi''' + Q psi' + P psi = k^3 psi``.

    ``Q``, ``P`` and ``dQ`` must accept float arrays (or scalars) and
    return complex values of the same shape.
    """

    Q: Func
    P: Func
    dQ: Func
    name: str = "custom"
    params: dict = field(default_factory=dict)
    tail_tol: float = 1e-12

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.Q(x), dtype=complex), np.asarray(self.P(x), dtype=complex)

    def adjoint(self) -> "PotentialPair":
        return adjoint_potentials(self)

    def scaled(self, eps: float) -> "PotentialPair":
        Q, P, dQ = self.Q, self.P, self.dQ
        return PotentialPair(
            lambda x: eps * Q(x),
            lambda x: eps * P(x),
            lambda x: eps * dQ(x),
            name=self.name,
            params={**self.params, "scale": eps * self.params.get("scale", 1.0)},
            tail_tol=self.tail_tol,
        )

    def tail_check(self, x_min: float, x_max: float) -> float:
        """Largest of ``|Q|, |P|, |Q'|`` at the two truncation points."""
        ends = np.array([x_min, x_max])
        vals = [np.abs(f(ends)) for f in (self.Q, self.P, self.dQ)]
        return float(np.max(vals))

    @property
    def is_free(self) -> bool:
        return self.name == "free"


def adjoint_potentials(p: PotentialPair) -> PotentialPair:
    """Potentials ``(Q*, Q'* - P*)`` of the adjoint equation."""
    Q, P, dQ = p.Q, p.P, p.dQ
    name = p.name if p.is_free else p.name + "~adjoint"

    def q_bar(x):
        return np.conj(Q(x))

    def p_bar(x):
        return np.conj(dQ(x)) - np.conj(P(x))

    def dq_bar(x):
        return np.conj(dQ(x))

    return PotentialPair(q_bar, p_bar, dq_bar, name=name, params=dict(p.params), tail_tol=p.tail_tol)


# presets -------------------------------------------------------------------


def free() -> PotentialPair:
    return PotentialPair(_zero, _zero, _zero, name="free")


def gaussian(q_amp: complex = 1.0, p_amp: complex = 0.3, width: float = 1.0) -> PotentialPair:
    """``Q = q_amp exp(-(x/w)^2)``, ``P = p_amp exp(-(x/w)^2)``."""
    w2 = width * width

    def g(x):
        return np.exp(-np.asarray(x, dtype=float) ** 2 / w2)

    return PotentialPair(
        lambda x: q_amp * g(x) + 0j,
        lambda x: p_amp * g(x) + 0j,
        lambda x: q_amp * (-2.0 * np.asarray(x, dtype=float) / w2) * g(x) + 0j,
        name="gauss",
        params={"q_amp": q_amp, "p_amp": p_amp, "width": width},
    )


def weak_gaussian(eps: float = 0.05) -> PotentialPair:
    """``Q = eps exp(-x^2)``, ``P = i eps x exp(-x^2)``."""

    def g(x):
        return np.exp(-np.asarray(x, dtype=float) ** 2)

    def dq(x):
        x = np.asarray(x, dtype=float)
        return eps * (-2.0 * x) * g(x) + 0j

    return PotentialPair(
        lambda x: eps * g(x) + 0j,
        lambda x: 1j * eps * np.asarray(x, dtype=float) * g(x),
        dq,
        name="weak-gauss",
        params={"eps": eps},
    )


def paired_gaussian(eps: float = 0.05, width: float = 1.0) -> PotentialPair:
    """``Q = eps exp(-(x/w)^2)`` with ``P = (i z^2 / sqrt 3) Q'``.

    For this pairing the secondary reflections M, N vanish to first order
    in ``eps``, so the pair sits close to the M = N = 0 model.
    """
    zz = complex(-0.5, -np.sqrt(3.0) / 2.0)
    c = 1j * zz / np.sqrt(3.0)
    w2 = width * width

    def q(x):
        return eps * np.exp(-np.asarray(x, dtype=float) ** 2 / w2) + 0j

    def dq(x):
        x = np.asarray(x, dtype=float)
        return (-2.0 * x / w2) * q(x)

    return PotentialPair(q, lambda x: c * dq(x), dq, name="paired-gauss",
                         params={"eps": eps, "width": width})


def super_gaussian(amp: complex = 0.5, p_amp: complex = 0.2, power: int = 4) -> PotentialPair:
    """``exp(-x^power)`` profile; ``power`` must be even."""
    if power % 2:
        raise ValueError("power must be even")

    def g(x):
        return np.exp(-np.asarray(x, dtype=float) ** power)

    def dq(x):
        x = np.asarray(x, dtype=float)
        return amp * (-power * x ** (power - 1)) * g(x) + 0j

    return PotentialPair(
        lambda x: amp * g(x) + 0j,
        lambda x: p_amp * g(x) + 0j,
        dq,
        name="super-gauss",
        params={"amp": amp, "p_amp": p_amp, "power": power},
    )


def phase_gaussian(amp: float = 0.5, p_amp: float = 0.2, wavenumber: float = 1.0) -> PotentialPair:
    """Gaussian envelope times ``exp(i*wavenumber*x)``."""

    def q(x):
        x = np.asarray(x, dtype=float)
        return amp * np.exp(-x * x + 1j * wavenumber * x)

    def dq(x):
        x = np.asarray(x, dtype=float)
        return (-2.0 * x + 1j * wavenumber) * q(x)

    def p(x):
        x = np.asarray(x, dtype=float)
        return p_amp * np.exp(-x * x - 1j * wavenumber * x)

    return PotentialPair(q, p, dq, name="phase-gauss",
                         params={"amp": amp, "p_amp": p_amp, "wavenumber": wavenumber})


PRESETS = {
    "free": free,
    "gauss": gaussian,
    "weak-gauss": weak_gaussian,
    "paired-gauss": paired_gaussian,
    "super-gauss": super_gaussian,
    "phase-gauss": phase_gaussian,
}


def preset(name: str, **params) -> PotentialPair:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown potential preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)


def from_samples(x: np.ndarray, Q: np.ndarray, P: np.ndarray, name: str = "sampled") -> PotentialPair:
    """Cubic-spline potential pair from samples; zero outside the sample range."""
    x = np.asarray(x, dtype=float)
    q_spl = CubicSpline(x, np.asarray(Q, dtype=complex))
    p_spl = CubicSpline(x, np.asarray(P, dtype=complex))
    dq_spl = q_spl.derivative()
    lo, hi = x[0], x[-1]

    def wrap(spl):
        def f(t):
            t = np.asarray(t, dtype=float)
            out = spl(np.clip(t, lo, hi))
            return np.where((t < lo) | (t > hi), 0.0, out)
        return f

    return PotentialPair(wrap(q_spl), wrap(p_spl), wrap(dq_spl), name=name,
                         params={"x_min": float(lo), "x_max": float(hi), "n": int(len(x))})
