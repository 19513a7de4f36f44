"""Cylindrical Bessel and Hankel functions of integer order.

Thin layer over :mod:`scipy.special` returning the whole order ladder
``n = 0..n_max`` at one argument, with derivatives from the standard
recurrences ``C_n' = C_{n-1} - (n/x) C_n`` (and ``C_0' = -C_1``).
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import BesselOverflowError, DomainError, InvalidArgument

N_MAX_LIMIT = 200


@dataclass(frozen=True)
class CylFunValues:
    """Values of J_n, Y_n and their derivatives for n = 0..n_max at x."""

    x: float
    J: np.ndarray
    Y: np.ndarray
    dJ: np.ndarray
    dY: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.J) - 1

    @property
    def H(self) -> np.ndarray:
        return self.J + 1j * self.Y

    @property
    def dH(self) -> np.ndarray:
        return self.dJ + 1j * self.dY

    def at(self, n: int):
        """Return ``(J, Y, dJ, dY)`` for order ``n`` (negative orders allowed)."""
        m = abs(n)
        sign = -1.0 if (n < 0 and m % 2) else 1.0
        return (sign * self.J[m], sign * self.Y[m], sign * self.dJ[m], sign * self.dY[m])


def _derivatives(c: np.ndarray, x: float) -> np.ndarray:
    n = np.arange(len(c))
    d = np.empty_like(c)
    d[0] = -c[1]
    d[1:] = c[:-1] - n[1:] / x * c[1:]
    return d


def bessel_jy(n_max: int, x: float) -> CylFunValues:
    """Evaluate J_n, Y_n, J_n', Y_n' for ``n = 0..n_max`` at ``x > 0``.

    Raises
    ------
    DomainError
        If ``x <= 0``.
    BesselOverflowError
        If some Y_n is not representable as a finite double.
    """
    if not np.isfinite(x) or x <= 0:
        raise DomainError(f"Bessel argument must be positive, got {x!r}")
    if n_max < 0 or n_max > N_MAX_LIMIT:
        raise InvalidArgument(f"n_max must lie in [0, {N_MAX_LIMIT}], got {n_max}")
    # one extra order so that the derivative recurrence has C_1 at n_max = 0
    n = np.arange(n_max + 2)
    J = special.jv(n, x)
    Y = special.yv(n, x)
    if not np.all(np.isfinite(Y)):
        bad = int(np.argmax(~np.isfinite(Y)))
        raise BesselOverflowError(f"Y_{bad}({x}) overflows double precision")
    dJ = _derivatives(J, x)
    dY = _derivatives(Y, x)
    keep = slice(0, n_max + 1)
    return CylFunValues(float(x), J[keep], Y[keep], dJ[keep], dY[keep])


def hankel_ratio(n_max: int, x: float) -> np.ndarray:
    """``H_n'(x) / H_n(x)`` for ``n = 0..n_max``."""
    v = bessel_jy(n_max, x)
    return v.dH / v.H
