"""Finite element discretization of the truncated GIBC scattering problem.

The unknown is the total field ``u`` in P1 on the annulus mesh. The system
matrix discretizes

    a(u, v) = int_{Omega_R} (grad u . grad v - k^2 u v)
            + int_{dD} (mu_eff d_s u d_s v - lam_eff u v) ds
            - <S_R u, v>

(bilinear, no conjugation: the matrix is complex symmetric), where in
rescaled mode ``mu_eff = mu/k`` and ``lam_eff = k lam``.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dtn import DtnOperator, build_dtn_block
from .errors import ConstraintViolation, NumericalError, ShapeMismatch, SingularMatrix
from .geometry import AnnulusMesh, BoundaryCurve

DEFAULT_C_MIN = 0.01
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ImpedanceField:
    """Nodal impedance coefficients on the obstacle boundary.

    ``freeze_re_lambda`` and ``freeze_im_mu`` mark the parts held fixed (at
    their current value) by the inversion.
    """

    lam: np.ndarray
    mu: np.ndarray
    c_min: float = DEFAULT_C_MIN
    freeze_re_lambda: bool = True
    freeze_im_mu: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=complex))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=complex))
        if self.lam.shape != self.mu.shape or self.lam.ndim != 1:
            raise ShapeMismatch(f"lam {self.lam.shape} and mu {self.mu.shape} must be equal 1-D shapes")

    @classmethod
    def constant(cls, n: int, lam: complex, mu: complex, **kw) -> "ImpedanceField":
        return cls(np.full(n, lam, dtype=complex), np.full(n, mu, dtype=complex), **kw)

    @property
    def n(self) -> int:
        return len(self.lam)

    def violations(self) -> list:
        out = []
        if np.any(self.lam.imag < 0):
            out.append("Im(lambda) < 0")
        if np.any(self.mu.imag > 0):
            out.append("Im(mu) > 0")
        if np.any(self.mu.real < self.c_min):
            out.append(f"Re(mu) < c_min={self.c_min}")
        return out

    def satisfies_h(self) -> bool:
        return not self.violations()

    def check(self) -> None:
        bad = self.violations()
        if bad:
            raise ConstraintViolation("impedance violates the sign conditions: " + ", ".join(bad))

    def with_values(self, lam=None, mu=None) -> "ImpedanceField":
        return replace(self, lam=self.lam if lam is None else lam, mu=self.mu if mu is None else mu)


def effective_coefficients(imp: ImpedanceField, k: float, rescaled: bool):
    """``(lam_eff, mu_eff)`` entering the boundary form."""
    if rescaled:
        return k * imp.lam, imp.mu / k
    return imp.lam, imp.mu


def _p1_element_data(vertices: np.ndarray, triangles: np.ndarray):
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    # gradient of barycentric i is the rotated opposite edge / (2 area)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    return area, grads


def p1_stiffness_mass(vertices: np.ndarray, triangles: np.ndarray):
    """Exact P1 stiffness and mass matrices (CSR, real)."""
    area, grads = _p1_element_data(vertices, triangles)
    ke = area[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
    me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    n = len(vertices)
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def assemble_interior(mesh: AnnulusMesh, k: float) -> sp.csr_matrix:
    """``K - k^2 M`` for P1 elements on the annulus."""
    K, M = p1_stiffness_mass(mesh.vertices, mesh.triangles)
    return (K - k * k * M).astype(complex).tocsr()


def boundary_stiffness(curve: BoundaryCurve, edge_coef: np.ndarray = None) -> sp.csr_matrix:
    """Periodic 1-D P1 stiffness on the boundary polygon, edge-weighted."""
    n = curve.n_b
    L = curve.edge_lengths
    c = np.ones(n) if edge_coef is None else np.asarray(edge_coef)
    i = np.arange(n)
    j = (i + 1) % n
    v = c / L
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([v, v, -v, -v])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def boundary_mass(curve: BoundaryCurve) -> sp.csr_matrix:
    """Node-lumped boundary mass (arclength weights on the diagonal)."""
    return sp.diags(curve.weights).tocsr()


def edge_average(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values + np.roll(values, -1))


def assemble_gibc(curve: BoundaryCurve, imp: ImpedanceField, k: float, rescaled: bool = True,
                  check: bool = True) -> sp.csr_matrix:
    """Boundary block ``int mu_eff d_s u d_s v - int lam_eff u v`` on the curve nodes.

    ``mu`` is averaged to edge midpoints, ``lam`` is lumped at the nodes.
    ``check=False`` skips the sign-condition test (unit tests of limits only).
    """
    if imp.n != curve.n_b:
        raise ShapeMismatch(f"impedance has {imp.n} nodes, curve has {curve.n_b}")
    if check:
        imp.check()
    lam_eff, mu_eff = effective_coefficients(imp, k, rescaled)
    S = boundary_stiffness(curve, edge_average(mu_eff))
    return (S - sp.diags(lam_eff * curve.weights)).tocsr()


@dataclass
class Discretization:
    """Mesh-dependent, impedance-independent part of the forward problem."""

    curve: BoundaryCurve
    mesh: AnnulusMesh
    k: float
    dtn: DtnOperator
    rescaled: bool = True
    base: sp.csr_matrix = field(default=None, repr=False)
    dtn_block: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.base is None:
            interior = assemble_interior(self.mesh, self.k)
            self.dtn_block = build_dtn_block(self.dtn, self.mesh.circle_angles, self.circle_weights)
            idx = self.mesh.circle_vertices
            n = self.mesh.n_vertices
            rows = np.repeat(idx, len(idx))
            cols = np.tile(idx, len(idx))
            D = sp.coo_matrix((self.dtn_block.ravel(), (rows, cols)), shape=(n, n))
            self.base = (interior - D).tocsr()

    @classmethod
    def build(cls, curve: BoundaryCurve, mesh: AnnulusMesh, k: float, rescaled: bool = True,
              dtn_order: Optional[int] = None) -> "Discretization":
        return cls(curve, mesh, float(k), DtnOperator.build(k, mesh.R, dtn_order), rescaled)

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_vertices

    @property
    def circle_points(self) -> np.ndarray:
        return self.mesh.vertices[self.mesh.circle_vertices]

    @property
    def circle_weights(self) -> np.ndarray:
        n = self.mesh.n_b
        return np.full(n, 2.0 * np.pi * self.mesh.R / n)

    def embed_boundary(self, block: sp.spmatrix) -> sp.csr_matrix:
        n = self.n_dofs
        block = sp.coo_matrix(block)
        idx = self.mesh.obstacle_vertices
        return sp.coo_matrix((block.data, (idx[block.row], idx[block.col])), shape=(n, n)).tocsr()


@dataclass
class ScatterSystem:
    """Assembled and factorized system for one impedance field."""

    disc: Discretization
    imp: ImpedanceField
    A: sp.csc_matrix = field(repr=False)
    lu: object = field(repr=False)

    @property
    def k(self) -> float:
        return self.disc.k

    @property
    def rescaled(self) -> bool:
        return self.disc.rescaled

    def solve_vector(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        if not np.any(rhs):
            return np.zeros_like(rhs)
        u = self.lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise SingularMatrix("non-finite solution from the sparse factorization")
        res = np.linalg.norm(self.A @ u - rhs)
        if res > RESIDUAL_TOL * np.linalg.norm(rhs):
            raise NumericalError(f"solve residual {res:.3e} exceeds tolerance")
        return u


def assemble_system(disc: Discretization, imp: ImpedanceField, check: bool = True) -> ScatterSystem:
    """Add the boundary block to the cached interior/DtN matrix and factorize."""
    G = assemble_gibc(disc.curve, imp, disc.k, disc.rescaled, check=check)
    A = (disc.base + disc.embed_boundary(G)).tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from exc
    return ScatterSystem(disc, imp, A, lu)


def incident_rhs(disc: Discretization, values: np.ndarray, radial_derivative: np.ndarray) -> np.ndarray:
    """Load vector ``int_{|x|=R} (d_r g - S_R g) v ds`` for an incident field ``g``."""
    F = np.zeros(disc.n_dofs, dtype=complex)
    F[disc.mesh.circle_vertices] = disc.circle_weights * radial_derivative - disc.dtn_block @ values
    return F


def plane_wave(k: float, angle: float, points: np.ndarray):
    """Plane wave ``exp(ik d.x)`` and its radial derivative at ``points``."""
    d = np.array([np.cos(angle), np.sin(angle)])
    u = np.exp(1j * k * points @ d)
    r = np.linalg.norm(points, axis=1)
    du = 1j * k * ((points @ d) / r) * u
    return u, du


def assemble_rhs(system, angle: float) -> np.ndarray:
    """Load vector for the incident plane wave of direction ``(cos a, sin a)``."""
    disc = system.disc if isinstance(system, ScatterSystem) else system
    u, du = plane_wave(disc.k, angle, disc.circle_points)
    return incident_rhs(disc, u, du)


@dataclass(frozen=True)
class FieldSolution:
    """Total field on the mesh for one incident field."""

    u: np.ndarray
    disc: Discretization = field(repr=False)
    angle: Optional[float] = None

    @property
    def boundary_trace(self) -> np.ndarray:
        return self.u[self.disc.mesh.obstacle_vertices]

    @property
    def circle_trace(self) -> np.ndarray:
        return self.u[self.disc.mesh.circle_vertices]

    def scattered_circle_trace(self) -> np.ndarray:
        """``u - u^i`` on the circle (requires a plane-wave solution)."""
        if self.angle is None:
            raise ValueError("scattered trace needs the plane-wave direction")
        ui, _ = plane_wave(self.disc.k, self.angle, self.disc.circle_points)
        return self.circle_trace - ui


def solve_forward(system: ScatterSystem, rhs: np.ndarray, angle: Optional[float] = None) -> FieldSolution:
    return FieldSolution(system.solve_vector(rhs), system.disc, angle)


def solve_plane_waves(system: ScatterSystem, angles: Sequence[float]) -> list:
    """One forward solve per incident direction against the shared factorization."""
    return [solve_forward(system, assemble_rhs(system, a), a) for a in angles]
