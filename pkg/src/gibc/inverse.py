"""Impedance reconstruction by H1-smoothed steepest descent.

The cost is ``F = 1/2 sum_j ||T(lam, mu, d_j) - u_obs(., d_j)||^2_{L2(S_j)}``.
Its derivative is computed with one adjoint solve per incident wave: the
adjoint field ``G_j`` solves the forward problem driven by the Herglotz
wave built from the conjugated residual on ``S_j``, and

    dF.(h, 0) =  Re sum_j int h G_j u_j ds
    dF.(0, l) = -Re sum_j int l d_s G_j d_s u_j ds

discretized with the same boundary quadrature as the system matrix, so the
functionals are the exact derivatives of the discrete cost. The unknowns are
``Im(lam)`` (update ``lam <- lam - i delta``) and ``Re(mu)`` (update
``mu <- mu - delta``), updated alternately.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (DEFAULT_C_MIN, Discretization, ImpedanceField, ScatterSystem,
                       assemble_system, boundary_stiffness, incident_rhs, solve_plane_waves)
from .errors import InvalidArgument
from .farfield import FarFieldData, Misfit, farfield_from_trace, herglotz_source, misfit
from .geometry import BoundaryCurve

log = logging.getLogger(__name__)

LAMBDA, MU = "lambda", "mu"


@dataclass(frozen=True)
class InversionConfig:
    """Descent parameters.

    ``eta`` values are multiplied by ``eta_decay`` every ``eta_every``
    iterations down to ``eta_floor``. After a successful step the
    corresponding ``alpha`` grows by ``alpha_growth``, never beyond its
    initial value; failed trials halve it. A block whose ``alpha`` drops
    below ``alpha_min`` is retired, and the run stops when every unknown
    block is retired or after ``max_iter`` iterations.
    """

    eta1: float = 1.0
    eta2: float = 1.0
    alpha1: float = 20.0
    alpha2: float = 20.0
    eta_decay: float = 0.8
    eta_every: int = 10
    eta_floor: float = 1e-3
    max_iter: int = 100
    alpha_min: float = 1e-6
    alpha_growth: float = 1.2
    backtrack: float = 0.5
    c_min: float = DEFAULT_C_MIN
    unknowns: tuple = (LAMBDA, MU)

    def __post_init__(self):
        if min(self.eta1, self.eta2) <= 0:
            raise InvalidArgument("regularization parameters must be positive")
        if min(self.alpha1, self.alpha2) <= 0:
            raise InvalidArgument("descent coefficients must be positive")
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be at least 1")
        bad = set(self.unknowns) - {LAMBDA, MU}
        if bad or not self.unknowns:
            raise InvalidArgument(f"unknowns must be a non-empty subset of lambda, mu; got {self.unknowns}")


@dataclass
class InverseProblem:
    """Discretization plus observed data (and optionally clean reference data for ``Error``)."""

    disc: Discretization
    data: FarFieldData
    reference: Optional[FarFieldData] = None

    @property
    def curve(self) -> BoundaryCurve:
        return self.disc.curve


@dataclass
class CostEval:
    imp: ImpedanceField
    cost: float
    error: Optional[float]
    system: ScatterSystem = field(repr=False)
    solutions: list = field(repr=False)
    farfield: FarFieldData = field(repr=False)
    fit: Misfit = field(repr=False)


def eval_cost(problem: InverseProblem, imp: ImpedanceField) -> CostEval:
    """One factorization, ``N`` forward solves, far-fields and misfit."""
    system = assemble_system(problem.disc, imp)
    sols = solve_plane_waves(system, problem.data.dirs.incident)
    ff = farfield_from_trace(sols, problem.data.dirs)
    fit = misfit(ff, problem.data)
    error = fit.error if problem.reference is None else misfit(ff, problem.reference).error
    return CostEval(imp, fit.cost, error, system, sols, ff, fit)


def adjoint_fields(problem: InverseProblem, ev: CostEval) -> List[np.ndarray]:
    """Total adjoint fields ``G_j`` on the mesh for every incident wave."""
    disc = problem.disc
    dirs = problem.data.dirs
    pts = disc.circle_points
    out = []
    for j in range(dirs.n_waves):
        g, dg = herglotz_source(ev.fit.residuals[j], dirs.thetas[j], dirs.weights[j], disc.k, pts,
                                with_radial=True)
        out.append(ev.system.solve_vector(incident_rhs(disc, g, dg)))
    return out


def gradient_functionals(problem: InverseProblem, ev: CostEval, adjoints=None):
    """Functionals ``g_lam[i] = dF.(i phi_i, 0)`` and ``g_mu[i] = dF.(0, phi_i)``.

    ``phi_i`` is the boundary hat function of node ``i``.
    """
    disc = problem.disc
    curve = disc.curve
    if adjoints is None:
        adjoints = adjoint_fields(problem, ev)
    obst = disc.mesh.obstacle_vertices
    lam_scale, mu_scale = (disc.k, 1.0 / disc.k) if disc.rescaled else (1.0, 1.0)
    L = curve.edge_lengths
    node_sum = np.zeros(curve.n_b, dtype=complex)
    edge_sum = np.zeros(curve.n_b, dtype=complex)
    for G, sol in zip(adjoints, ev.solutions):
        gb = G[obst]
        ub = sol.u[obst]
        node_sum += gb * ub
        edge_sum += (np.roll(gb, -1) - gb) * (np.roll(ub, -1) - ub) / L
    g_lam = -lam_scale * curve.weights * node_sum.imag
    # each edge functional is shared equally by its two end nodes
    e = -mu_scale * edge_sum.real
    g_mu = 0.5 * (e + np.roll(e, 1))
    return g_lam, g_mu


def smoothing_matrix(curve: BoundaryCurve, eta: float) -> sp.csc_matrix:
    return (eta * boundary_stiffness(curve) + sp.diags(curve.weights)).tocsc()


def h1_smooth(curve: BoundaryCurve, g: np.ndarray, eta: float, alpha: float) -> np.ndarray:
    """Solve ``(eta K + M) delta = alpha g`` on the periodic boundary polygon."""
    if eta <= 0:
        raise InvalidArgument(f"eta must be positive, got {eta}")
    return spla.spsolve(smoothing_matrix(curve, eta), alpha * np.asarray(g, dtype=float))


def project(imp: ImpedanceField, c_min: float) -> ImpedanceField:
    """Clamp onto ``Im(lam) >= 0``, ``Re(mu) >= c_min``."""
    lam = imp.lam.real + 1j * np.maximum(imp.lam.imag, 0.0)
    mu = np.maximum(imp.mu.real, c_min) + 1j * imp.mu.imag
    return imp.with_values(lam=lam, mu=mu)


@dataclass
class InversionState:
    imp: ImpedanceField
    current: CostEval = field(repr=False)
    alpha: dict
    eta: dict
    iteration: int = 0
    history: list = field(default_factory=list)
    retired: set = field(default_factory=set)
    stop_reason: str = ""

    @property
    def cost(self) -> float:
        return self.current.cost

    @property
    def error(self) -> Optional[float]:
        return self.current.error

    def record(self, step: str, accepted: bool) -> None:
        self.history.append({
            "iter": self.iteration,
            "F": self.current.cost,
            "Error": self.current.error,
            "alpha1": self.alpha[LAMBDA],
            "alpha2": self.alpha[MU],
            "eta1": self.eta[LAMBDA],
            "eta2": self.eta[MU],
            "step": step,
            "accepted": accepted,
        })


def initial_state(problem: InverseProblem, config: InversionConfig, imp: ImpedanceField) -> InversionState:
    imp.check()
    ev = eval_cost(problem, imp)
    st = InversionState(imp, ev, {LAMBDA: config.alpha1, MU: config.alpha2},
                        {LAMBDA: config.eta1, MU: config.eta2})
    st.record("init", True)
    return st


def _trial(imp: ImpedanceField, which: str, delta: np.ndarray, c_min: float) -> ImpedanceField:
    if which == LAMBDA:
        new = imp.with_values(lam=imp.lam - 1j * delta)
    else:
        new = imp.with_values(mu=imp.mu - delta)
    return project(new, c_min)


def descent_step(problem: InverseProblem, state: InversionState, config: InversionConfig,
                 which: str) -> bool:
    """One smoothed-gradient step on ``which`` with backtracking; returns acceptance."""
    initial_alpha = config.alpha1 if which == LAMBDA else config.alpha2
    g_lam, g_mu = gradient_functionals(problem, state.current)
    g = g_lam if which == LAMBDA else g_mu
    if not np.any(g):
        state.iteration += 1
        state.record(which, True)
        return True
    base = h1_smooth(problem.curve, g, state.eta[which], 1.0)
    while state.alpha[which] >= config.alpha_min:
        trial = _trial(state.imp, which, state.alpha[which] * base, config.c_min)
        ev = eval_cost(problem, trial)
        if ev.cost < state.current.cost:
            state.imp, state.current = trial, ev
            state.alpha[which] = min(state.alpha[which] * config.alpha_growth, initial_alpha)
            state.iteration += 1
            state.record(which, True)
            return True
        state.alpha[which] *= config.backtrack
    state.retired.add(which)
    state.iteration += 1
    state.record(which, False)
    log.info("step on %s failed at iteration %d", which, state.iteration)
    return False


def _scheduled(config: InversionConfig, state: InversionState) -> Optional[str]:
    active = [u for u in (LAMBDA, MU) if u in config.unknowns and u not in state.retired]
    if not active:
        return None
    if len(active) == 1:
        return active[0]
    return LAMBDA if state.iteration % 2 == 0 else MU


def _update_eta(config: InversionConfig, state: InversionState) -> None:
    if state.iteration > 0 and state.iteration % config.eta_every == 0:
        for key in (LAMBDA, MU):
            state.eta[key] = max(state.eta[key] * config.eta_decay, config.eta_floor)


def reconstruct(problem: InverseProblem, config: InversionConfig,
                initial: ImpedanceField) -> InversionState:
    """Alternating descent from ``initial`` until stop; returns the final state."""
    state = initial_state(problem, config, initial)
    while state.iteration < config.max_iter:
        if state.current.cost == 0.0:
            state.stop_reason = "zero misfit"
            break
        which = _scheduled(config, state)
        if which is None:
            state.stop_reason = "descent coefficients below alpha_min"
            break
        f_before = state.current.cost
        descent_step(problem, state, config, which)
        log.debug("iter %d %s F=%.6e -> %.6e", state.iteration, which, f_before, state.current.cost)
        _update_eta(config, state)
    else:
        state.stop_reason = "maximum iterations"
    return state
