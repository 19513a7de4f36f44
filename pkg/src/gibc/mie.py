"""Separation-of-variables solution for a circular obstacle with constant impedances.

On a circle of radius ``a`` the surface operator acts on ``e^{in theta}`` as
``-n^2/a^2``, so each Fourier mode of the total field satisfies
``u_n'(a) + (lam_eff - mu_eff n^2/a^2) u_n(a) = 0``. Only
:mod:`gibc.specfun` is shared with the finite element path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, DegenerateDenominator
from .specfun import bessel_jy


@dataclass(frozen=True)
class MieSolution:
    """Scattered field ``sum_n c_n H_|n|(kr) e^{in(theta - theta_d)}``.

    ``coefficients[n + n_max]`` holds ``c_n`` for ``n = -n_max..n_max``.
    """

    a: float
    k: float
    lam: complex
    mu: complex
    rescaled: bool
    angle: float
    n_max: int
    coefficients: np.ndarray
    amplitude: complex = 1.0

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def incident_coefficients(self) -> np.ndarray:
        """Jacobi-Anger weights ``i^|n|`` of ``J_|n|(kr) e^{in(theta - theta_d)}``."""
        return self.amplitude * (1j ** np.abs(self.modes))

    def boundary_trace(self, theta: np.ndarray) -> np.ndarray:
        """Total field ``u(a, theta)``."""
        v = bessel_jy(self.n_max, self.k * self.a)
        m = np.abs(self.modes)
        modal = self.amplitude * (1j ** m) * v.J[m] + self.coefficients * v.H[m]
        phase = np.exp(1j * np.outer(np.asarray(theta) - self.angle, self.modes))
        return phase @ modal

    def scattered(self, r: float, theta: np.ndarray) -> np.ndarray:
        v = bessel_jy(self.n_max, self.k * r)
        m = np.abs(self.modes)
        phase = np.exp(1j * np.outer(np.asarray(theta) - self.angle, self.modes))
        return phase @ (self.coefficients * v.H[m])


def default_n_max(k: float, a: float) -> int:
    return int(math.ceil(k * a)) + 20


def mie_solve(a: float, k: float, lam: complex, mu: complex, rescaled: bool = False,
              angle: float = 0.0, n_max: int = None, amplitude: complex = 1.0,
              check: bool = True, c_min: float = 0.0) -> MieSolution:
    """Modal coefficients of the field scattered by the plane wave of direction ``angle``.

    ``check=False`` allows coefficients outside the sign conditions (used for
    the classical sound-hard limit ``lam = mu = 0``).
    """
    if check and (np.imag(lam) < 0 or np.imag(mu) > 0 or np.real(mu) <= c_min):
        raise ConstraintViolation(f"lam={lam}, mu={mu} violate the sign conditions")
    if n_max is None:
        n_max = default_n_max(k, a)
    lam_eff, mu_eff = (k * lam, mu / k) if rescaled else (lam, mu)
    v = bessel_jy(n_max, k * a)
    n = np.arange(-n_max, n_max + 1)
    m = np.abs(n)
    Z = lam_eff - mu_eff * (n * n) / (a * a)
    num = k * v.dJ[m] + Z * v.J[m]
    den = k * v.dH[m] + Z * v.H[m]
    if np.any(np.abs(den) < 1e-14):
        raise DegenerateDenominator("modal denominator vanishes")
    c = -amplitude * (1j ** m) * num / den
    return MieSolution(float(a), float(k), complex(lam), complex(mu), rescaled, float(angle),
                       int(n_max), c, complex(amplitude))


def mie_farfield(sol: MieSolution, theta: np.ndarray) -> np.ndarray:
    """Far-field pattern ``sqrt(2/(pi k)) e^{-i pi/4} sum_n c_n (-i)^|n| e^{in(theta - theta_d)}``."""
    m = np.abs(sol.modes)
    phase = np.exp(1j * np.outer(np.asarray(theta, dtype=float) - sol.angle, sol.modes))
    return np.sqrt(2.0 / (np.pi * sol.k)) * np.exp(-0.25j * np.pi) * (phase @ (sol.coefficients * (-1j) ** m))


def mie_boundary_residual(sol: MieSolution) -> np.ndarray:
    """Per-mode residual of the boundary condition (should vanish)."""
    lam_eff, mu_eff = (sol.k * sol.lam, sol.mu / sol.k) if sol.rescaled else (sol.lam, sol.mu)
    v = bessel_jy(sol.n_max, sol.k * sol.a)
    n = sol.modes
    m = np.abs(n)
    Z = lam_eff - mu_eff * (n * n) / (sol.a ** 2)
    inc = sol.amplitude * (1j ** m)
    total = inc * v.J[m] + sol.coefficients * v.H[m]
    dtotal = sol.k * (inc * v.dJ[m] + sol.coefficients * v.dH[m])
    return dtotal + Z * total
