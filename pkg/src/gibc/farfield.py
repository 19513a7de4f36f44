"""Far-field extraction, measurement apertures, misfits and the adjoint source.

The 2D far-field kernel is ``Phi_inf(y, x) = e^{i pi/4} / sqrt(8 pi k) e^{-ik y.x}``.
A radiating field with circle trace ``sum c_n e^{in theta}`` on ``|x| = R``
has far-field ``sum c_n g_n e^{in theta}`` with
``g_n = sqrt(2/(pi k)) e^{-i pi/4} (-i)^|n| / H_|n|(kR)``.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AliasingError, InvalidArgument, ShapeMismatch
from .specfun import bessel_jy

TWO_PI = 2.0 * np.pi
DEFAULT_PER_APERTURE = 20


def farfield_kernel(k: float, points: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``Phi_inf(y_p, x_q)`` as a ``(len(points), len(theta))`` array."""
    xhat = np.column_stack([np.cos(theta), np.sin(theta)])
    return np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * k) * np.exp(-1j * k * points @ xhat.T)


@dataclass(frozen=True)
class DirectionSet:
    """Measurement directions for each incident wave.

    ``thetas[j]`` and ``weights[j]`` are the observation angles and their
    quadrature weights on the aperture ``S_j`` of incident angle ``incident[j]``.
    """

    incident: np.ndarray
    thetas: np.ndarray
    weights: np.ndarray
    aperture: float

    @property
    def n_waves(self) -> int:
        return len(self.incident)

    @property
    def per_wave(self) -> int:
        return self.thetas.shape[1]

    @property
    def full(self) -> bool:
        return bool(np.isclose(self.aperture, TWO_PI))

    @classmethod
    def apertures(cls, incident: Sequence[float], n_per: int = DEFAULT_PER_APERTURE,
                  width: Optional[float] = None) -> "DirectionSet":
        """Arcs of angular ``width`` (default ``2 pi / N``) centred on each forward direction."""
        incident = np.asarray(incident, dtype=float)
        if width is None:
            width = TWO_PI / len(incident)
        if np.isclose(width, TWO_PI):
            return cls.full_aperture(incident, n_per)
        offsets = np.linspace(-0.5 * width, 0.5 * width, n_per)
        thetas = incident[:, None] + offsets[None, :]
        return cls(incident, thetas, _weights_for(thetas, width), float(width))

    @classmethod
    def full_aperture(cls, incident: Sequence[float], n_dirs: int) -> "DirectionSet":
        """Periodic trapezoid rule on the whole circle for every wave."""
        incident = np.asarray(incident, dtype=float)
        theta = TWO_PI * np.arange(n_dirs) / n_dirs
        thetas = np.tile(theta, (len(incident), 1))
        weights = np.full(thetas.shape, TWO_PI / n_dirs)
        return cls(incident, thetas, weights, TWO_PI)


def uniform_incidence(n: int, span: str = "full") -> np.ndarray:
    """``n`` incident angles spread over the circle or over ``[-pi/2, pi/2]``."""
    if span == "full":
        return TWO_PI * np.arange(n) / n
    if span == "half":
        return np.linspace(-0.5 * np.pi, 0.5 * np.pi, n)
    raise InvalidArgument(f"unknown incidence span {span!r}")


@dataclass(frozen=True)
class FarFieldData:
    dirs: DirectionSet
    values: np.ndarray
    k: float
    provenance: str = "computed"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.dirs.thetas.shape:
            raise ShapeMismatch(f"values {vals.shape} do not match directions {self.dirs.thetas.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("far-field data contains non-finite entries")

    def norms2(self) -> np.ndarray:
        """Squared ``L2(S_j)`` norm for each wave."""
        return np.sum(self.dirs.weights * np.abs(self.values) ** 2, axis=1)

    def with_values(self, values, provenance=None) -> "FarFieldData":
        return FarFieldData(self.dirs, values, self.k, provenance or self.provenance)


def farfield_gains(k: float, R: float, order: int) -> np.ndarray:
    """``g_n`` for ``|n| = 0..order``."""
    v = bessel_jy(order, k * R)
    m = np.arange(order + 1)
    return np.sqrt(2.0 / (np.pi * k)) * np.exp(-0.25j * np.pi) * (-1j) ** m / v.H


def circle_coefficients(trace: np.ndarray, order: int) -> np.ndarray:
    """Fourier coefficients ``c_n, |n| <= order`` of samples on a uniform circle grid."""
    n = len(trace)
    if n < 2 * order + 1:
        raise AliasingError(f"{n} circle nodes cannot resolve order {order}")
    coef = np.fft.fft(trace) / n
    modes = np.arange(-order, order + 1)
    return coef[modes % n]


def farfield_from_circle(trace_s: np.ndarray, k: float, R: float, order: int,
                         theta: np.ndarray) -> np.ndarray:
    """Spectral far-field of a radiating field given its samples on ``|x| = R``."""
    c = circle_coefficients(trace_s, order)
    modes = np.arange(-order, order + 1)
    g = farfield_gains(k, R, order)[np.abs(modes)]
    return np.exp(1j * np.outer(np.asarray(theta, dtype=float), modes)) @ (c * g)


def farfield_pattern(solution, theta: np.ndarray) -> np.ndarray:
    """Far-field of a plane-wave :class:`~gibc.assembly.FieldSolution` at angles ``theta``."""
    disc = solution.disc
    return farfield_from_circle(solution.scattered_circle_trace(), disc.k, disc.mesh.R,
                                disc.dtn.order, theta)


def farfield_by_quadrature(trace_s: np.ndarray, radial_s: np.ndarray, points: np.ndarray,
                           weights: np.ndarray, k: float, theta: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature of the representation formula on the circle.

    ``u_inf(x) = int (u^s dPhi_inf/dr - du^s/dr Phi_inf) ds``.
    """
    phi = farfield_kernel(k, points, theta)
    yhat = points / np.linalg.norm(points, axis=1)[:, None]
    xhat = np.column_stack([np.cos(theta), np.sin(theta)])
    dphi = -1j * k * (yhat @ xhat.T) * phi
    return (weights * trace_s) @ dphi - (weights * radial_s) @ phi


def farfield_from_trace(solutions, dirs: DirectionSet, provenance: str = "computed") -> FarFieldData:
    """Far-field data for solutions aligned with ``dirs.incident``."""
    if len(solutions) != dirs.n_waves:
        raise ShapeMismatch(f"{len(solutions)} solutions for {dirs.n_waves} incident waves")
    values = np.array([farfield_pattern(s, dirs.thetas[j]) for j, s in enumerate(solutions)])
    return FarFieldData(dirs, values, solutions[0].disc.k, provenance)


def herglotz_source(residual: np.ndarray, theta: np.ndarray, weights: np.ndarray, k: float,
                    points: np.ndarray, with_radial: bool = False):
    """``G^i(y) = sum_q w_q Phi_inf(y, x_q) conj(r_q)`` at ``points``.

    With ``with_radial`` also returns the radial derivative at the points.
    """
    phi = farfield_kernel(k, points, theta)
    coef = weights * np.conj(residual)
    g = phi @ coef
    if not with_radial:
        return g
    yhat = points / np.linalg.norm(points, axis=1)[:, None]
    xhat = np.column_stack([np.cos(theta), np.sin(theta)])
    dg = (-1j * k * (yhat @ xhat.T) * phi) @ coef
    return g, dg


@dataclass(frozen=True)
class Misfit:
    residuals: np.ndarray
    cost: float
    error: Optional[float]
    wave_norms2: np.ndarray = field(repr=False)

    @property
    def degenerate(self) -> bool:
        return self.error is None


def misfit(computed: FarFieldData, observed: FarFieldData) -> Misfit:
    """Residuals, ``F = 1/2 sum_j ||T_j - u_j||^2`` and the relative ``Error``.

    ``error`` is ``None`` when the observed data vanish.
    """
    if computed.values.shape != observed.values.shape:
        raise ShapeMismatch(f"{computed.values.shape} vs {observed.values.shape}")
    if not np.allclose(computed.dirs.thetas, observed.dirs.thetas, rtol=0, atol=1e-12):
        raise ShapeMismatch("computed and observed data use different directions")
    w = observed.dirs.weights
    res = computed.values - observed.values
    r2 = np.sum(w * np.abs(res) ** 2, axis=1)
    o2 = observed.norms2()
    denom = o2.sum()
    error = float(np.sqrt(r2.sum() / denom)) if denom > 0 else None
    return Misfit(res, 0.5 * float(r2.sum()), error, r2)


def relative_error(computed: FarFieldData, reference: FarFieldData) -> Optional[float]:
    return misfit(computed, reference).error


def write_farfield(data: FarFieldData, path) -> None:
    """Plain-text far-field file, bit-exact under write/read/write.

    Header ``# k=<k> N=<N> aperture=<width>``, then ``# provenance=...`` and one
    ``# incident j=<j> angle=<a>`` line per wave, then rows ``j theta Re Im``.
    """
    d = data.dirs
    with open(path, "w") as fh:
        fh.write(f"# k={data.k!r} N={d.n_waves} aperture={d.aperture!r}\n")
        fh.write(f"# provenance={data.provenance}\n")
        for j, a in enumerate(d.incident):
            fh.write(f"# incident j={j} angle={float(a)!r}\n")
        for j in range(d.n_waves):
            for th, w, v in zip(d.thetas[j], d.weights[j], data.values[j]):
                fh.write(f"{j} {float(th)!r} {float(v.real)!r} {float(v.imag)!r}\n")


def _parse_header_fields(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        key, _, val = tok.partition("=")
        out[key] = val
    return out


def _weights_for(thetas: np.ndarray, aperture: float) -> np.ndarray:
    """Closed trapezoid weights on an arc, periodic ones on the full circle."""
    n = thetas.shape[1]
    if np.isclose(aperture, TWO_PI):
        return np.full(thetas.shape, TWO_PI / n)
    w = np.full(n, aperture / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return np.tile(w, (thetas.shape[0], 1))


def read_farfield(path) -> FarFieldData:
    """Inverse of :func:`write_farfield`; weights are rebuilt from the aperture."""
    header, incident, rows = {}, {}, []
    provenance = "computed"
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# provenance="):
                provenance = line[len("# provenance="):]
                continue
            if line.startswith("#"):
                f = _parse_header_fields(line)
                if "k" in f:
                    header = f
                elif "angle" in f:
                    incident[int(f["j"])] = float(f["angle"])
                continue
            j, th, re, im = line.split()
            rows.append((int(j), float(th), complex(float(re), float(im))))
    n_waves = int(header["N"])
    aperture = float(header["aperture"])
    per = [[] for _ in range(n_waves)]
    for j, th, v in rows:
        per[j].append((th, v))
    thetas = np.array([[th for th, _ in p] for p in per])
    values = np.array([[v for _, v in p] for p in per])
    inc = np.array([incident[j] for j in range(n_waves)])
    dirs = DirectionSet(inc, thetas, _weights_for(thetas, aperture), aperture)
    return FarFieldData(dirs, values, float(header["k"]), provenance)
