"""Integration of the exponentially factored third-order equation.

With ``psi = exp(k x) phi`` the equation becomes

    phi''' + 3k phi'' + 3k^2 phi' + Q (phi' + k phi) + P phi = 0,

whose normalized mode is O(1) while the two companion modes behave like
``exp((z-1) k x)`` and ``exp((z^2-1) k x)``.  Marching from the end where
the solution is normalized keeps those companions non-growing.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.integrate import solve_ivp

from .potentials import PotentialPair

log = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
BATCH = 24


class IntegrationError(RuntimeError):
    pass


def _rhs_factory(pot: PotentialPair, k: np.ndarray):
    n = k.size
    k1, k2 = 3.0 * k, 3.0 * k * k

    def rhs(x, y):
        p0, p1, p2 = y[:n], y[n:2 * n], y[2 * n:]
        q = complex(pot.Q(x))
        p = complex(pot.P(x))
        d3 = -k1 * p2 - k2 * p1 - q * (p1 + k * p0) - p * p0
        return np.concatenate((p1, p2, d3))

    return rhs


def integrate_factored(pot: PotentialPair, k, x_start: float, x_stop: float,
                       x_eval=None, rtol: float = RTOL, atol: float = ATOL):
    """Integrate ``phi`` from ``x_start`` (where phi=1, phi'=phi''=0) to ``x_stop``.

    Returns ``(x, phi, dphi, ddphi)`` with arrays of shape ``(len(k), len(x))``
    ordered by increasing ``x``.  ``x_eval`` defaults to the two end points.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if x_eval is None:
        x_eval = np.array([min(x_start, x_stop), max(x_start, x_stop)])
    x_eval = np.sort(np.asarray(x_eval, dtype=float))
    t_eval = x_eval if x_stop > x_start else x_eval[::-1]

    out = np.empty((3, k.size, x_eval.size), dtype=complex)
    for lo in range(0, k.size, BATCH):
        kb = k[lo:lo + BATCH]
        n = kb.size
        y0 = np.zeros(3 * n, dtype=complex)
        y0[:n] = 1.0
        sol = solve_ivp(_rhs_factory(pot, kb), (x_start, x_stop), y0, method="DOP853",
                        t_eval=t_eval, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"integration failed for k={kb}: {sol.message} (nfev={sol.nfev})")
        y = sol.y if x_stop > x_start else sol.y[:, ::-1]
        out[:, lo:lo + n, :] = y.reshape(3, n, -1)
    return x_eval, out[0], out[1], out[2]
