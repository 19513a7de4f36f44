"""Experiment orchestration: synthesis, reconstruction and the stability studies."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..assembly import Discretization, ImpedanceField, assemble_system, solve_plane_waves
from ..dtn import default_order
from ..errors import ConfigError
from ..farfield import FarFieldData, farfield_from_trace, farfield_pattern, read_farfield
from ..geometry import PerturbationField, apply_deformation, make_circle, make_ellipse
from ..inverse import InverseProblem, InversionState, eval_cost, reconstruct
from ..mie import mie_farfield, mie_solve
from .builders import (Resolution, directions, discretize, impedance, initial_on, make_curve,
                       resample_nodal, resolutions, truth_on)
from .config import ExperimentConfig, parse_profile
from .synth import SyntheticData, generate_synthetic

log = logging.getLogger(__name__)


@dataclass
class StageResult:
    """One reconstruction at a fixed wave number."""

    k: float
    problem: InverseProblem = field(repr=False)
    initial: ImpedanceField = field(repr=False)
    truth: ImpedanceField = field(repr=False)
    state: InversionState = field(repr=False)
    synthetic: Optional[SyntheticData] = field(default=None, repr=False)

    @property
    def theta(self) -> np.ndarray:
        return self.problem.curve.polar_angles

    @property
    def final(self) -> ImpedanceField:
        return self.state.imp


@dataclass
class ExperimentResult:
    """Outcome of :func:`run_experiment`.

    ``tables`` maps a file stem to ``(header, rows)`` for kinds without an
    inversion; ``metrics`` holds the scalar summary.
    """

    config: ExperimentConfig
    stages: List[StageResult] = field(default_factory=list)
    metrics: Dict[str, object] = field(default_factory=dict)
    tables: Dict[str, tuple] = field(default_factory=dict)
    farfield: Optional[FarFieldData] = field(default=None, repr=False)

    @property
    def final(self) -> Optional[StageResult]:
        return self.stages[-1] if self.stages else None


def farfield_on(disc: Discretization, imp: ImpedanceField, dirs) -> FarFieldData:
    system = assemble_system(disc, imp)
    return farfield_from_trace(solve_plane_waves(system, dirs.incident), dirs)


def l2_distance(a: FarFieldData, b: FarFieldData) -> float:
    """``(sum_j ||a_j - b_j||^2_{L2(S_j)})^{1/2}``."""
    return float(np.sqrt(np.sum(a.dirs.weights * np.abs(a.values - b.values) ** 2)))


def coefficient_errors(imp: ImpedanceField, truth: ImpedanceField) -> dict:
    return {
        "max_abs_lambda_error": float(np.max(np.abs(imp.lam - truth.lam))),
        "max_abs_mu_error": float(np.max(np.abs(imp.mu - truth.mu))),
        "mean_lambda": complex(np.mean(imp.lam)),
        "mean_mu": complex(np.mean(imp.mu)),
    }


def _stage_data(cfg: ExperimentConfig, k: float, stage: int):
    if cfg.data_file:
        noisy = read_farfield(cfg.data_file)
        clean = read_farfield(cfg.reference_file) if cfg.reference_file else None
        return noisy, clean, None
    syn = generate_synthetic(cfg, k, stream=stage)
    return syn.noisy, syn.clean, syn


def run_stage(cfg: ExperimentConfig, k: float, stage: int = 0,
              initial: Optional[ImpedanceField] = None) -> StageResult:
    """Generate data at ``k`` on the true geometry and reconstruct on the inversion geometry."""
    res, _ = resolutions(cfg, k)
    shape = cfg.inversion_shape or cfg.shape
    curve = make_curve(cfg, shape, res.nb)
    disc = discretize(cfg, curve, res, k)
    data, reference, syn = _stage_data(cfg, k, stage)
    if cfg.same_mesh and syn is not None and shape == cfg.shape:
        # bitwise-identical discretization: reuse it so that F vanishes at the truth
        disc = syn.disc
    problem = InverseProblem(disc, data, reference)
    if initial is None:
        initial = initial_on(cfg, curve)
    truth = truth_on(cfg, curve)
    log.info("stage %d: k=%g nb=%d nr=%d", stage, k, res.nb, res.nr)
    state = reconstruct(problem, cfg.inversion_config(), initial)
    return StageResult(k, problem, initial, truth, state, syn)


def run_inversion(cfg: ExperimentConfig) -> ExperimentResult:
    out = ExperimentResult(cfg)
    first = run_stage(cfg, cfg.k, 0)
    out.stages.append(first)
    if cfg.second_k > 0:
        res2, _ = resolutions(cfg, cfg.second_k)
        start = first.final
        init = start.with_values(lam=resample_nodal(start.lam, res2.nb), mu=resample_nodal(start.mu, res2.nb))
        out.stages.append(run_stage(cfg, cfg.second_k, 1, init))
    last = out.final
    truth_ev = eval_cost(last.problem, last.truth)
    out.metrics.update({
        "final_F": last.state.cost,
        "final_Error": last.state.error,
        "iterations": last.state.iteration,
        "stop_reason": last.state.stop_reason,
        "F_at_truth": truth_ev.cost,
        "Error_at_truth": truth_ev.error,
        "data_norm2": float(last.problem.data.norms2().sum()),
    })
    out.metrics.update(coefficient_errors(last.final, last.truth))
    order = np.argsort(last.theta, kind="stable")
    lam_err = np.abs(last.final.lam - last.truth.lam)
    mu_err = np.abs(last.final.mu - last.truth.mu)
    out.tables["pointwise_error"] = (("theta", "abs_lambda_error", "abs_mu_error"),
                                     [(float(last.theta[i]), float(lam_err[i]), float(mu_err[i])) for i in order])
    return out


def run_forward(cfg: ExperimentConfig) -> ExperimentResult:
    """Far-field of the truth on the inversion resolution of the true geometry."""
    out = ExperimentResult(cfg)
    res, _ = resolutions(cfg, cfg.k)
    curve = make_curve(cfg, cfg.shape, res.nb)
    disc = discretize(cfg, curve, res, cfg.k)
    dirs = directions(cfg)
    ff = farfield_on(disc, truth_on(cfg, curve), dirs)
    rows = [(j, float(th), float(v.real), float(v.imag))
            for j in range(dirs.n_waves) for th, v in zip(dirs.thetas[j], ff.values[j])]
    out.tables["farfield"] = (("wave", "theta", "Re_u_inf", "Im_u_inf"), rows)
    out.metrics["farfield_norm"] = float(np.sqrt(ff.norms2().sum()))
    out.farfield = ff
    return out


def _constant(text: str, key: str) -> complex:
    scale, name = parse_profile(text)
    if name is not None:
        raise ConfigError(f"{key} must be a constant for the circular oracle", key)
    return scale


def mie_comparison(cfg: ExperimentConfig, nb: int, nr: int, n_dirs: int = 128):
    """Relative L2 error of the finite element far-field against the modal series."""
    lam, mu = _constant(cfg.lambda_true, "lambda_true"), _constant(cfg.mu_true, "mu_true")
    curve = make_circle(cfg.a, nb)
    disc = discretize(cfg, curve, Resolution(nb, nr, default_order(cfg.k, cfg.R, cfg.dtn_margin)), cfg.k)
    imp = ImpedanceField.constant(nb, lam, mu, c_min=cfg.c_min)
    theta = 2.0 * np.pi * np.arange(n_dirs) / n_dirs
    sol = solve_plane_waves(assemble_system(disc, imp), [cfg.incident_offset])[0]
    fem = farfield_pattern(sol, theta)
    ref = mie_farfield(mie_solve(cfg.a, cfg.k, lam, mu, cfg.rescaled, cfg.incident_offset), theta)
    err = float(np.linalg.norm(fem - ref) / np.linalg.norm(ref))
    return err, theta, fem, ref


def run_mie(cfg: ExperimentConfig) -> ExperimentResult:
    """Forward check on the circle at ``(nb, nr)`` and one uniform refinement."""
    out = ExperimentResult(cfg)
    nb, nr = (cfg.nb or 256), (cfg.nr or 24)
    err, theta, fem, ref = mie_comparison(cfg, nb, nr)
    err_fine, _, fem_fine, _ = mie_comparison(cfg, 2 * nb, 2 * nr)
    out.metrics.update({"error": err, "error_refined": err_fine, "ratio": err / err_fine,
                        "nb": nb, "nr": nr})
    rows = [(float(t), abs(a), abs(b), abs(c)) for t, a, b, c in zip(theta, ref, fem, fem_fine)]
    out.tables["mie"] = (("theta", "abs_mie", "abs_fem", "abs_fem_refined"), rows)
    return out


def log_log_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_continuity(cfg: ExperimentConfig) -> ExperimentResult:
    """``||T(lam o f^-1, mu o f^-1, dD_eps) - T(lam, mu, dD)||`` for oscillations of amplitude gamma.

    ``f = Id + eps`` maps node ``i`` of the ellipse to node ``i`` of the
    deformed curve, so composing nodal coefficients with ``f^-1`` keeps
    their node values.
    """
    out = ExperimentResult(cfg)
    res, _ = resolutions(cfg, cfg.k)
    base = make_ellipse(cfg.a, cfg.b, res.nb)
    dirs = directions(cfg)
    imp = truth_on(cfg, base)
    T0 = farfield_on(discretize(cfg, base, res, cfg.k), imp, dirs)
    rows, diffs = [], []
    for g in cfg.gamma_values:
        eps = PerturbationField.oscillation(cfg.a, cfg.b, g, cfg.m)
        moved = apply_deformation(base, eps)
        Tg = farfield_on(discretize(cfg, moved, res, cfg.k), imp, dirs)
        d = l2_distance(Tg, T0)
        diffs.append(d)
        rows.append((g, eps.norm(base), d))
    out.tables["continuity"] = (("gamma", "eps_norm", "farfield_difference"), rows)
    out.metrics["slope"] = log_log_slope(cfg.gamma_values, diffs)
    out.metrics["m"] = cfg.m
    return out


def run_lipschitz(cfg: ExperimentConfig) -> ExperimentResult:
    """Ratios ``||mu1 - mu2||_inf / ||T1 - T2||`` for random two-arc piecewise-constant pairs."""
    out = ExperimentResult(cfg)
    res, _ = resolutions(cfg, cfg.k)
    curve = make_curve(cfg, cfg.shape, res.nb)
    disc = discretize(cfg, curve, res, cfg.k)
    dirs = directions(cfg)
    arc = np.abs(curve.polar_angles) <= 0.5 * np.pi
    lam = impedance(cfg, curve.polar_angles, cfg.lambda_true, "1").lam
    rng = np.random.default_rng(cfg.seed)

    def T(vals):
        return farfield_on(disc, ImpedanceField(lam, np.where(arc, vals[0], vals[1]), c_min=cfg.c_min), dirs)

    rows, ratios = [], []
    for p in range(cfg.pairs):
        m1, m2 = rng.uniform(0.5, 1.5, 2), rng.uniform(0.5, 1.5, 2)
        dmu = float(np.max(np.abs(m1 - m2)))
        dT = l2_distance(T(m1), T(m2))
        ratios.append(dmu / dT)
        rows.append((p, m1[0], m1[1], m2[0], m2[1], dmu, dT, dmu / dT))
    out.tables["lipschitz"] = (("pair", "mu1_arc1", "mu1_arc2", "mu2_arc1", "mu2_arc2",
                                "mu_difference", "farfield_difference", "ratio"), rows)
    out.metrics["ratio_spread"] = max(ratios) / min(ratios)
    out.metrics["ratio_max"] = max(ratios)
    out.metrics["ratio_min"] = min(ratios)
    return out


RUNNERS = {
    "inversion": run_inversion,
    "forward": run_forward,
    "mie": run_mie,
    "continuity": run_continuity,
    "lipschitz": run_lipschitz,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Dispatch on ``cfg.kind``."""
    return RUNNERS[cfg.kind](cfg)


def reciprocity_defect(disc: Discretization, imp: ImpedanceField, angles) -> float:
    """``max |u_inf(x; d) - u_inf(-d; -x)| / |u_inf(x; d)|`` over pairs of ``angles``."""
    system = assemble_system(disc, imp)
    angles = np.asarray(angles, dtype=float)
    forward = solve_plane_waves(system, angles)
    backward = solve_plane_waves(system, angles + np.pi)
    worst = 0.0
    for i, d in enumerate(angles):
        a = farfield_pattern(forward[i], angles)
        for j, x in enumerate(angles):
            b = farfield_pattern(backward[j], np.array([d + np.pi]))[0]
            worst = max(worst, abs(a[j] - b) / abs(a[j]))
    return worst
