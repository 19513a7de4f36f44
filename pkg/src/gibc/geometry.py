"""Obstacle boundaries, boundary deformations and the annulus mesh.

Curves are closed, star-shaped with respect to the origin and sampled at
uniform parameter values ``t_i = 2*pi*i/n_b``. The computational domain is
the annulus between the curve and the truncation circle ``|x| = R``, meshed
by radial blending of each curve node with the circle point at the same
parameter angle.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DeformationTooLarge, GeometryError, InvalidArgument

MIN_NODES = 16

INTERIOR, OBSTACLE, CIRCLE = 0, 1, 2

# Per-layer thickness ratio of the radial grading, quoted at REFERENCE_LAYERS
# layers. The total outer/inner ratio is held fixed under refinement.
DEFAULT_GRADING = 1.15
REFERENCE_LAYERS = 8


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed parametrized curve sampled at uniform parameter values.

    Attributes
    ----------
    t : ndarray, shape (n_b,)
        Parameter values ``2*pi*i/n_b``.
    nodes : ndarray, shape (n_b, 2)
    derivatives : ndarray, shape (n_b, 2)
        ``d(x, y)/dt`` at the nodes.
    weights : ndarray, shape (n_b,)
        Arclength quadrature weights (trapezoid rule on ``|d(x, y)/dt|``).
    """

    t: np.ndarray
    nodes: np.ndarray
    derivatives: np.ndarray
    weights: np.ndarray
    label: str = "curve"

    @property
    def n_b(self) -> int:
        return len(self.t)

    @property
    def tangents(self) -> np.ndarray:
        speed = np.linalg.norm(self.derivatives, axis=1)
        return self.derivatives / speed[:, None]

    @property
    def normals(self) -> np.ndarray:
        """Unit normals pointing out of the obstacle (into the exterior)."""
        tx, ty = self.tangents.T
        return np.column_stack([ty, -tx])

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    @property
    def polar_angles(self) -> np.ndarray:
        """Polar angle of each node in ``(-pi, pi]``."""
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0])

    @property
    def edge_lengths(self) -> np.ndarray:
        """Lengths of the polygon edges ``(i, i+1)``."""
        return np.linalg.norm(np.roll(self.nodes, -1, axis=0) - self.nodes, axis=1)

    def polygon_area(self) -> float:
        x, y = self.nodes.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _uniform_t(n_b: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_b) / n_b


def _segments_intersect(nodes: np.ndarray) -> bool:
    """True if two non-adjacent polygon edges cross."""
    p = nodes
    q = np.roll(nodes, -1, axis=0)
    n = len(p)
    d = q - p

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    # orientation tests for all pairs (i, j), done row-block by row-block
    for start in range(0, n, 256):
        i = np.arange(start, min(start + 256, n))[:, None]
        j = np.arange(n)[None, :]
        gap = (j - i) % n
        mask = (gap > 1) & (gap < n - 1)
        pi, di = p[i], d[i]
        pj, dj = p[j], d[j]
        o1 = cross(di, pj - pi)
        o2 = cross(di, pj + dj - pi)
        o3 = cross(dj, pi - pj)
        o4 = cross(dj, pi + di - pj)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0) & mask
        if hit.any():
            return True
    return False


def validate_curve(curve: BoundaryCurve) -> None:
    """Check closedness assumptions: simple polygon, star-shaped about 0.

    Raises
    ------
    GeometryError
    """
    if np.any(curve.radii <= 0):
        raise GeometryError(f"{curve.label}: curve passes through the origin")
    p = curve.nodes
    q = np.roll(p, -1, axis=0)
    if np.any(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0] <= 0):
        raise GeometryError(f"{curve.label}: curve is not star-shaped about the origin")
    if _segments_intersect(p):
        raise GeometryError(f"{curve.label}: curve self-intersects")


def _curve_from_samples(t, nodes, derivatives, label) -> BoundaryCurve:
    speed = np.linalg.norm(derivatives, axis=1)
    weights = speed * (2.0 * np.pi / len(t))
    curve = BoundaryCurve(t=t, nodes=nodes, derivatives=derivatives, weights=weights, label=label)
    validate_curve(curve)
    return curve


def make_ellipse(a: float, b: float, n_b: int) -> BoundaryCurve:
    """Ellipse ``(a cos t, b sin t)`` with ``n_b`` nodes."""
    if a <= 0 or b <= 0:
        raise InvalidArgument(f"semi-axes must be positive, got a={a}, b={b}")
    return make_perturbed_ellipse(a, b, 0.0, 1, n_b, label="ellipse")


def make_circle(a: float, n_b: int) -> BoundaryCurve:
    return make_perturbed_ellipse(a, a, 0.0, 1, n_b, label="circle")


def make_perturbed_ellipse(a: float, b: float, gamma: float, m: int, n_b: int,
                           label: str = "perturbed-ellipse") -> BoundaryCurve:
    """Oscillating ellipse ``a(cos t + g cos mt), b(sin t + g sin mt)``.

    Raises
    ------
    InvalidArgument
        On bad sizes or a negative amplitude.
    GeometryError
        If the oscillation is large enough to make the curve self-intersect.
    """
    if n_b < MIN_NODES:
        raise InvalidArgument(f"need at least {MIN_NODES} boundary nodes, got {n_b}")
    if a <= 0 or b <= 0:
        raise InvalidArgument(f"semi-axes must be positive, got a={a}, b={b}")
    if gamma < 0 or m < 1:
        raise InvalidArgument(f"need gamma >= 0 and m >= 1, got gamma={gamma}, m={m}")
    t = _uniform_t(n_b)
    nodes = np.column_stack([a * (np.cos(t) + gamma * np.cos(m * t)),
                             b * (np.sin(t) + gamma * np.sin(m * t))])
    derivatives = np.column_stack([-a * (np.sin(t) + gamma * m * np.sin(m * t)),
                                   b * (np.cos(t) + gamma * m * np.cos(m * t))])
    return _curve_from_samples(t, nodes, derivatives, label)


def spectral_derivative(samples: np.ndarray) -> np.ndarray:
    """d/dt of periodic samples on a uniform grid of ``[0, 2*pi)``, per column."""
    n = samples.shape[0]
    freq = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        freq[n // 2] = 0.0
    coef = np.fft.fft(samples, axis=0)
    return np.real(np.fft.ifft(1j * freq[:, None] * coef, axis=0))


def upsample(samples: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto a grid ``factor`` times finer."""
    n = samples.shape[0]
    coef = np.fft.fft(samples, axis=0)
    m = n * factor
    out = np.zeros((m,) + samples.shape[1:], dtype=complex)
    half = n // 2
    out[:half] = coef[:half]
    out[m - (n - half):] = coef[half:]
    if n % 2 == 0:
        out[half] = 0.5 * coef[half]
        out[m - half] = 0.5 * coef[half]
    return np.real(np.fft.ifft(out, axis=0)) * factor


@dataclass(frozen=True)
class PerturbationField:
    """Vector field ``eps`` defining the deformation ``f = Id + eps``.

    ``value(x)`` maps an ``(n, 2)`` array of points to ``(n, 2)``
    displacements and ``jacobian(x)`` to ``(n, 2, 2)`` matrices.
    ``gamma`` and ``m`` record the amplitude and mode count of oscillation
    fields (zero for other kinds).
    """

    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    gamma: float = 0.0
    m: int = 0
    kind: str = "custom"

    def __neg__(self) -> "PerturbationField":
        return PerturbationField(lambda x: -self.value(x), lambda x: -self.jacobian(x),
                                 self.gamma, self.m, f"-{self.kind}")

    def norm(self, curve: BoundaryCurve, oversample: int = 8) -> float:
        """``sup|eps| + sup|grad eps|`` (spectral norm) sampled densely along ``curve``."""
        pts = upsample(curve.nodes, oversample)
        val = np.linalg.norm(self.value(pts), axis=1).max()
        jac = np.linalg.norm(self.jacobian(pts), ord=2, axis=(1, 2)).max()
        return float(val + jac)

    @classmethod
    def zero(cls) -> "PerturbationField":
        return cls(lambda x: np.zeros_like(x), lambda x: np.zeros((len(x), 2, 2)), kind="zero")

    @classmethod
    def translation(cls, shift) -> "PerturbationField":
        shift = np.asarray(shift, dtype=float)
        return cls(lambda x: np.broadcast_to(shift, x.shape).copy(),
                   lambda x: np.zeros((len(x), 2, 2)), kind="translation")

    @classmethod
    def oscillation(cls, a: float, b: float, gamma: float, m: int) -> "PerturbationField":
        """Field mapping the ellipse ``(a cos t, b sin t)`` to the oscillating ellipse.

        Uses the elliptic angle ``t(x) = atan2(y/b, x/a)``, so on the ellipse
        itself ``eps = gamma (a cos mt, b sin mt)``.
        """

        def value(x):
            t = np.arctan2(x[:, 1] / b, x[:, 0] / a)
            return gamma * np.column_stack([a * np.cos(m * t), b * np.sin(m * t)])

        def jacobian(x):
            u, v = x[:, 0] / a, x[:, 1] / b
            rho2 = u * u + v * v
            t = np.arctan2(v, u)
            dt = np.column_stack([-v / (a * rho2), u / (b * rho2)])
            dval = gamma * m * np.column_stack([-a * np.sin(m * t), b * np.cos(m * t)])
            return dval[:, :, None] * dt[:, None, :]

        return cls(value, jacobian, gamma=gamma, m=m, kind="oscillation")


def apply_deformation(curve: BoundaryCurve, field: PerturbationField) -> BoundaryCurve:
    """Map the curve nodes through ``Id + eps``.

    Derivatives of the mapped curve are obtained by spectral differentiation
    of the mapped node samples.

    Raises
    ------
    DeformationTooLarge
        If ``||eps|| >= 1`` (the map need not be a diffeomorphism).
    """
    size = field.norm(curve)
    if size >= 1.0:
        raise DeformationTooLarge(f"deformation norm {size:.3g} >= 1")
    nodes = curve.nodes + field.value(curve.nodes)
    derivatives = spectral_derivative(nodes)
    return _curve_from_samples(curve.t.copy(), nodes, derivatives, f"{curve.label}+{field.kind}")


@dataclass(frozen=True)
class AnnulusMesh:
    """Structured triangulation of the annulus between a curve and ``|x| = R``.

    Vertex ``(i, j)`` (node ``i``, layer ``j``) has index ``j * n_b + i``;
    layer 0 is the obstacle boundary and layer ``n_r`` the circle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    markers: np.ndarray
    n_b: int
    n_r: int
    R: float
    circle_angles: np.ndarray
    layers: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def obstacle_vertices(self) -> np.ndarray:
        """Vertex indices on the obstacle, ordered like the curve nodes."""
        return np.arange(self.n_b)

    @property
    def circle_vertices(self) -> np.ndarray:
        """Vertex indices on the circle, ordered like ``circle_angles``."""
        return self.n_r * self.n_b + np.arange(self.n_b)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def layer_fractions(n_r: int, grading: float = DEFAULT_GRADING) -> np.ndarray:
    """Blending fractions ``0 = s_0 < ... < s_{n_r} = 1`` clustered near the obstacle.

    ``s(xi) = (q**xi - 1) / (q - 1)`` with ``q = grading**REFERENCE_LAYERS``:
    at ``n_r = REFERENCE_LAYERS`` consecutive layers grow by ``grading``, and
    the outer/inner thickness ratio stays fixed for other ``n_r``.
    """
    xi = np.arange(n_r + 1) / n_r
    q = grading ** REFERENCE_LAYERS
    if abs(q - 1.0) < 1e-14:
        return xi
    s = np.expm1(xi * np.log(q)) / (q - 1.0)
    s[0], s[-1] = 0.0, 1.0
    return s


def build_annulus_mesh(curve: BoundaryCurve, R: float, n_r: int,
                       grading: float = DEFAULT_GRADING) -> AnnulusMesh:
    """Blend each curve node radially to the circle point at its parameter angle.

    Every quad is split along its shorter diagonal; ties (relative length
    difference below 1e-12) use the diagonal through corner ``(i, j)``.

    Raises
    ------
    InvalidArgument
        If ``n_r < 4`` or the curve is not strictly inside the circle.
    GeometryError
        If a triangle has non-positive area.
    """
    if n_r < 4:
        raise InvalidArgument(f"need at least 4 radial layers, got {n_r}")
    if curve.radii.max() >= R:
        raise InvalidArgument(f"curve reaches radius {curve.radii.max():.4g} >= R={R}")
    n_b = curve.n_b
    s = layer_fractions(n_r, grading)
    outer = R * np.column_stack([np.cos(curve.t), np.sin(curve.t)])
    verts = (1.0 - s)[:, None, None] * curve.nodes[None] + s[:, None, None] * outer[None]
    verts[-1] = outer
    verts = verts.reshape(-1, 2)

    i = np.arange(n_b)
    ip = (i + 1) % n_b
    tris = []
    for j in range(n_r):
        a = j * n_b + i
        b = j * n_b + ip
        c = (j + 1) * n_b + ip
        d = (j + 1) * n_b + i
        ac = np.linalg.norm(verts[a] - verts[c], axis=1)
        bd = np.linalg.norm(verts[b] - verts[d], axis=1)
        use_ac = ac <= bd * (1.0 + 1e-12)
        t1 = np.where(use_ac[:, None], np.column_stack([a, d, c]), np.column_stack([a, d, b]))
        t2 = np.where(use_ac[:, None], np.column_stack([a, c, b]), np.column_stack([b, d, c]))
        tris.append(np.stack([t1, t2], axis=1).reshape(-1, 3))
    triangles = np.concatenate(tris)

    markers = np.zeros(len(verts), dtype=int)
    markers[:n_b] = OBSTACLE
    markers[n_r * n_b:] = CIRCLE
    mesh = AnnulusMesh(vertices=verts, triangles=triangles, markers=markers, n_b=n_b, n_r=n_r,
                       R=float(R), circle_angles=curve.t.copy(), layers=s)
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        raise GeometryError(f"{int(np.sum(areas <= 0))} triangles with non-positive area")
    return mesh


def write_mesh(mesh: AnnulusMesh, path) -> None:
    """Plain-text export: ``v x y marker`` lines then ``t i j k`` lines."""
    with open(path, "w") as fh:
        for (x, y), mk in zip(mesh.vertices, mesh.markers):
            fh.write(f"v {float(x)!r} {float(y)!r} {int(mk)}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"t {a} {b} {c}\n")


def read_mesh(path):
    """Return ``(vertices, triangles, markers)`` from a :func:`write_mesh` file."""
    verts, marks, tris = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2])))
                marks.append(int(parts[3]))
            elif parts[0] == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
    return np.array(verts), np.array(tris, dtype=int), np.array(marks, dtype=int)

