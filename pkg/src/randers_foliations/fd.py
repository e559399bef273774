"""Central finite-difference probes used as independent oracles.

The closed-form tensors in :mod:`randers_foliations.point` are validated
against these derivative approximations of the squared norm.  Steps are
scaled by alpha(y) so the relative truncation/roundoff balance does not
depend on the magnitude of the base vector.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def hessian(f: Callable[[np.ndarray], float], y: np.ndarray, h: float) -> np.ndarray:
    """Symmetric central-difference Hessian of f at y with step h."""
    y = np.asarray(y, dtype=float)
    d = y.size
    H = np.empty((d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        for j in range(i, d):
            ej = np.zeros(d)
            ej[j] = h
            val = (
                f(y + ei + ej) - f(y + ei - ej) - f(y - ei + ej) + f(y - ei - ej)
            ) / (4.0 * h * h)
            H[i, j] = H[j, i] = val
    return H


def third_derivative(
    f: Callable[[np.ndarray], float],
    y: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    h: float,
) -> float:
    """Mixed third derivative d^3/dr ds dt f(y + r u + s v + t w) at 0."""
    y = np.asarray(y, dtype=float)
    total = 0.0
    for su, cu in ((1, 1.0), (-1, -1.0)):
        for sv, cv in ((1, 1.0), (-1, -1.0)):
            for sw, cw in ((1, 1.0), (-1, -1.0)):
                total += cu * cv * cw * f(y + h * (su * u + sv * v + sw * w))
    return total / (8.0 * h**3)


def directional(f: Callable[[np.ndarray], float], y: np.ndarray, u: np.ndarray, h: float) -> float:
    """Central first derivative of f at y in direction u."""
    y = np.asarray(y, dtype=float)
    return (f(y + h * u) - f(y - h * u)) / (2.0 * h)
