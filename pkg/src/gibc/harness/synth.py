"""Synthetic far-field data on a refined discretization, with exact-level noise."""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..assembly import Discretization, assemble_system, solve_plane_waves
from ..farfield import FarFieldData, farfield_from_trace, write_farfield
from .builders import directions, discretize, make_curve, resolutions, truth_on
from .config import ExperimentConfig

CLEAN_FILE = "farfield_clean.txt"
NOISY_FILE = "farfield_noisy.txt"


@dataclass(frozen=True)
class NoiseModel:
    """Relative noise ``sigma`` per aperture, realized from ``seed``.

    Each aperture gets a complex standard-normal vector rescaled so that
    ``||u_sigma - u||_{L2(S_j)} = sigma ||u||_{L2(S_j)}`` holds exactly.
    """

    sigma: float
    seed: int = 0

    def apply(self, data: FarFieldData, stream: int = 0) -> FarFieldData:
        if self.sigma == 0:
            return data.with_values(data.values.copy(), "noisy sigma=0")
        rng = np.random.default_rng([self.seed, stream])
        w = data.dirs.weights
        out = data.values.copy()
        for j in range(data.dirs.n_waves):
            z = rng.standard_normal(data.dirs.per_wave) + 1j * rng.standard_normal(data.dirs.per_wave)
            size = np.sqrt(np.sum(w[j] * np.abs(data.values[j]) ** 2))
            zn = np.sqrt(np.sum(w[j] * np.abs(z) ** 2))
            out[j] = data.values[j] + (self.sigma * size / zn) * z
        return data.with_values(out, f"noisy sigma={self.sigma!r} seed={self.seed}")


def relative_deviation(noisy: FarFieldData, clean: FarFieldData) -> np.ndarray:
    """Per-aperture ``||noisy - clean|| / ||clean||``."""
    w = clean.dirs.weights
    num = np.sum(w * np.abs(noisy.values - clean.values) ** 2, axis=1)
    return np.sqrt(num / clean.norms2())


@dataclass
class SyntheticData:
    clean: FarFieldData
    noisy: FarFieldData
    disc: Discretization


def generate_synthetic(cfg: ExperimentConfig, k: Optional[float] = None, stream: int = 0,
                       out_dir: Optional[str] = None) -> SyntheticData:
    """Solve the truth on the data mesh of ``cfg.shape`` and add noise.

    ``stream`` separates the noise of several stages sharing one seed. With
    ``out_dir`` the clean and noisy files are written there.
    """
    k = cfg.k if k is None else k
    _, res = resolutions(cfg, k)
    curve = make_curve(cfg, cfg.shape, res.nb)
    disc = discretize(cfg, curve, res, k)
    system = assemble_system(disc, truth_on(cfg, curve))
    dirs = directions(cfg)
    clean = farfield_from_trace(solve_plane_waves(system, dirs.incident), dirs,
                                provenance=f"clean {cfg.shape} nb={res.nb} nr={res.nr} dtn={res.dtn_order}")
    noisy = NoiseModel(cfg.sigma, cfg.seed).apply(clean, stream)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_farfield(clean, os.path.join(out_dir, CLEAN_FILE))
        write_farfield(noisy, os.path.join(out_dir, NOISY_FILE))
    return SyntheticData(clean, noisy, disc)
