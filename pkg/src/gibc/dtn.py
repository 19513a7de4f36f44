"""Dirichlet-to-Neumann operator on the truncation circle.

The exterior radiating solution with Dirichlet data ``e^{in theta}`` on
``|x| = R`` is ``H_n(kr)/H_n(kR) e^{in theta}``, so the operator is the
Fourier multiplier ``s_n = k H_n'(kR) / H_n(kR)``, truncated at ``|n| <= N``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, InvalidArgument
from .specfun import bessel_jy

DEFAULT_MARGIN = 15


def default_order(k: float, R: float, margin: int = DEFAULT_MARGIN) -> int:
    return int(math.ceil(k * R)) + margin


def dtn_symbol(n: int, k: float, R: float) -> complex:
    if k <= 0 or R <= 0:
        raise InvalidArgument(f"need k > 0 and R > 0, got k={k}, R={R}")
    m = abs(int(n))
    v = bessel_jy(m, k * R)
    return complex(k * v.dH[m] / v.H[m])


@dataclass(frozen=True)
class DtnOperator:
    k: float
    R: float
    order: int
    symbols: np.ndarray  # s_{|n|} for |n| = 0..order

    @classmethod
    def build(cls, k: float, R: float, order: int = None) -> "DtnOperator":
        if k <= 0 or R <= 0:
            raise InvalidArgument(f"need k > 0 and R > 0, got k={k}, R={R}")
        if order is None:
            order = default_order(k, R)
        v = bessel_jy(order, k * R)
        return cls(float(k), float(R), int(order), k * v.dH / v.H)

    def symbol(self, n) -> np.ndarray:
        return self.symbols[np.abs(n)]

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)


def build_dtn_block(op: DtnOperator, angles: np.ndarray, weights: np.ndarray = None) -> np.ndarray:
    """Dense matrix ``M`` with ``v^H M u ~ int_{|x|=R} (S_R u) conj(v) ds``.

    ``M[p, q] = sum_n s_n w_p w_q e^{in(theta_p - theta_q)} / (2 pi R)``. With
    uniform weights ``w = 2 pi R / n`` this is the exact multiplier on
    trigonometric polynomials of degree ``<= order`` sampled at the nodes.

    Raises
    ------
    AliasingError
        If fewer than ``2*order + 1`` nodes are given.
    """
    angles = np.asarray(angles, dtype=float)
    n_nodes = len(angles)
    if n_nodes < 2 * op.order + 1:
        raise AliasingError(f"{n_nodes} circle nodes cannot resolve DtN order {op.order}")
    if weights is None:
        weights = np.full(n_nodes, 2.0 * np.pi * op.R / n_nodes)
    # real form: s_0 + 2 sum_{n>=1} s_n cos(n (theta_p - theta_q))
    diff = angles[:, None] - angles[None, :]
    kernel = np.full(diff.shape, op.symbols[0], dtype=complex)
    for n in range(1, op.order + 1):
        kernel += 2.0 * op.symbols[n] * np.cos(n * diff)
    return kernel * (weights[:, None] * weights[None, :]) / (2.0 * np.pi * op.R)


def apply_dtn(op: DtnOperator, samples: np.ndarray) -> np.ndarray:
    """Apply the truncated multiplier to samples on a uniform circle grid (FFT)."""
    n = len(samples)
    coef = np.fft.fft(samples) / n
    freq = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    mult = np.where(np.abs(freq) <= op.order, op.symbols[np.minimum(np.abs(freq), op.order)], 0.0)
    return np.fft.ifft(coef * mult) * n
