"""Geometry, mesh, coefficient and direction builders shared by the harness."""

import math
from dataclasses import dataclass

import numpy as np

from ..assembly import Discretization, ImpedanceField
from ..dtn import default_order
from ..errors import ConfigError
from ..farfield import DirectionSet, uniform_incidence
from ..geometry import BoundaryCurve, build_annulus_mesh, make_circle, make_ellipse, make_perturbed_ellipse
from .config import DATA_REFINEMENT, ExperimentConfig, evaluate_profile

# target boundary mesh size in units of the wavelength-free length kR
POINTS_PER_UNIT = 1.0 / 0.15
NB_MIN, NB_MAX, NB_STEP = 128, 512, 32


@dataclass(frozen=True)
class Resolution:
    nb: int
    nr: int
    dtn_order: int


def auto_resolution(k: float, R: float):
    """``(n_b, n_r)`` giving about ``2 pi k R / 0.15`` circle nodes, in multiples of 32."""
    nb = NB_STEP * math.ceil(2.0 * math.pi * k * R * POINTS_PER_UNIT / NB_STEP)
    nb = int(min(max(nb, NB_MIN), NB_MAX))
    return nb, int(round(3 * nb / 32))


def resolutions(cfg: ExperimentConfig, k: float):
    """Inversion and data-generation resolutions for wave number ``k``."""
    nb_auto, nr_auto = auto_resolution(k, cfg.R)
    nb = cfg.nb or nb_auto
    nr = cfg.nr or nr_auto
    order = default_order(k, cfg.R, cfg.dtn_margin)
    inv = Resolution(nb, nr, order)
    if cfg.same_mesh:
        return inv, inv
    data_nb = cfg.data_nb or int(math.ceil(DATA_REFINEMENT * nb))
    data_nr = cfg.data_nr or int(math.ceil(DATA_REFINEMENT * nr))
    if data_nb < DATA_REFINEMENT * nb:
        raise ConfigError(f"data_nb={data_nb} is not {DATA_REFINEMENT}x finer than nb={nb}", "data_nb")
    if data_nr < DATA_REFINEMENT * nr:
        raise ConfigError(f"data_nr={data_nr} is not {DATA_REFINEMENT}x finer than nr={nr}", "data_nr")
    return inv, Resolution(data_nb, data_nr, order + cfg.data_dtn_extra)


def make_curve(cfg: ExperimentConfig, shape: str, n_b: int) -> BoundaryCurve:
    if shape == "circle":
        return make_circle(cfg.a, n_b)
    if shape == "ellipse":
        return make_ellipse(cfg.a, cfg.b, n_b)
    return make_perturbed_ellipse(cfg.a, cfg.b, cfg.gamma, cfg.m, n_b)


def discretize(cfg: ExperimentConfig, curve: BoundaryCurve, res: Resolution, k: float) -> Discretization:
    mesh = build_annulus_mesh(curve, cfg.R, res.nr, cfg.grading)
    return Discretization.build(curve, mesh, k, cfg.rescaled, res.dtn_order)


def impedance(cfg: ExperimentConfig, theta: np.ndarray, lam: str, mu: str) -> ImpedanceField:
    """Nodal coefficients from two profile strings evaluated at polar angles ``theta``."""
    return ImpedanceField(evaluate_profile(lam, theta), evaluate_profile(mu, theta), c_min=cfg.c_min)


def truth_on(cfg: ExperimentConfig, curve: BoundaryCurve) -> ImpedanceField:
    return impedance(cfg, curve.polar_angles, cfg.lambda_true, cfg.mu_true)


def initial_on(cfg: ExperimentConfig, curve: BoundaryCurve) -> ImpedanceField:
    return impedance(cfg, curve.polar_angles, cfg.lambda_init, cfg.mu_init)


def directions(cfg: ExperimentConfig) -> DirectionSet:
    incident = uniform_incidence(cfg.n_waves, cfg.incidence) + cfg.incident_offset
    if cfg.aperture == "full":
        return DirectionSet.full_aperture(incident, cfg.n_per_aperture)
    return DirectionSet.apertures(incident, cfg.n_per_aperture)


def resample_nodal(values: np.ndarray, n_new: int) -> np.ndarray:
    """Periodic linear interpolation of nodal values on a uniform parameter grid."""
    values = np.asarray(values)
    n = len(values)
    if n == n_new:
        return values.copy()
    t_old = 2.0 * np.pi * np.arange(n) / n
    t_new = 2.0 * np.pi * np.arange(n_new) / n_new
    if np.iscomplexobj(values):
        return (np.interp(t_new, t_old, values.real, period=2 * np.pi)
                + 1j * np.interp(t_new, t_old, values.imag, period=2 * np.pi))
    return np.interp(t_new, t_old, values, period=2 * np.pi)
