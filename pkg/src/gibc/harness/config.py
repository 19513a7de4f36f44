"""Flat ``key = value`` experiment configuration with strict key checking.

Blank lines and ``#`` comments are ignored. Every key must be one of the
fields of :class:`ExperimentConfig`; unknown keys, duplicates and values
that fail to parse raise :class:`~gibc.errors.ConfigError` naming the key.

Coefficient profiles (``lambda_true``, ``mu_true``, ``lambda_init``,
``mu_init``) are a complex literal (``1``, ``0.5j``, ``0.2+1j``), a profile
name, or ``<complex>*<name>``. Profiles are functions of the polar angle
``theta`` of the boundary node:

========  ==========================================
``cos2``  ``0.5 (1 + cos^2 theta)``
``sin2``  ``0.5 (1 + sin^2 theta)``
``step``  ``0.5 + 0.5 chi(|theta| <= pi/2)``
========  ==========================================
"""

import math
from dataclasses import dataclass, fields, replace
from typing import Dict, Tuple

import numpy as np

from ..errors import ConfigError
from ..inverse import InversionConfig

PROFILES = {
    "cos2": lambda th: 0.5 * (1.0 + np.cos(th) ** 2),
    "sin2": lambda th: 0.5 * (1.0 + np.sin(th) ** 2),
    "step": lambda th: 0.5 + 0.5 * (np.abs(th) <= 0.5 * np.pi),
}
SHAPES = ("ellipse", "circle", "perturbed")
KINDS = ("inversion", "forward", "mie", "continuity", "lipschitz")
DATA_REFINEMENT = 1.5
TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    Resolutions set to ``0`` are chosen from ``k`` (see
    :func:`gibc.harness.experiments.auto_resolution`); data resolutions
    default to ``1.5`` times the inversion ones. ``inversion_shape`` empty
    means the inversion uses the true geometry. ``second_k > 0`` adds a
    second stage at that wave number started from the first result.
    """

    name: str = "custom"
    kind: str = "inversion"
    shape: str = "ellipse"
    inversion_shape: str = ""
    a: float = 0.4
    b: float = 0.3
    gamma: float = 0.0
    m: int = 20
    k: float = 9.0
    second_k: float = 0.0
    n_waves: int = 10
    incidence: str = "full"
    incident_offset: float = 0.0
    aperture: str = "limited"
    n_per_aperture: int = 20
    lambda_true: str = "0"
    mu_true: str = "1"
    lambda_init: str = "0"
    mu_init: str = "0.7"
    unknowns: str = "mu"
    sigma: float = 0.0
    seed: int = 0
    R: float = 0.8
    rescaled: bool = True
    nb: int = 0
    nr: int = 0
    data_nb: int = 0
    data_nr: int = 0
    grading: float = 1.15
    dtn_margin: int = 15
    data_dtn_extra: int = 10
    same_mesh: bool = False
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
    c_min: float = 0.01
    gammas: str = "0.005,0.01,0.02,0.04"
    pairs: int = 10
    data_file: str = ""
    reference_file: str = ""

    def __post_init__(self):
        validate(self)

    @property
    def unknown_blocks(self) -> Tuple[str, ...]:
        return tuple(u.strip() for u in self.unknowns.split(",") if u.strip())

    @property
    def gamma_values(self) -> Tuple[float, ...]:
        return tuple(float(g) for g in self.gammas.split(",") if g.strip())

    def inversion_config(self) -> InversionConfig:
        return InversionConfig(eta1=self.eta1, eta2=self.eta2, alpha1=self.alpha1, alpha2=self.alpha2,
                               eta_decay=self.eta_decay, eta_every=self.eta_every,
                               eta_floor=self.eta_floor, max_iter=self.max_iter,
                               alpha_min=self.alpha_min, alpha_growth=self.alpha_growth,
                               backtrack=self.backtrack, c_min=self.c_min,
                               unknowns=self.unknown_blocks)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        unknown = set(kw) - set(FIELD_TYPES)
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown configuration key {key!r}", key)
        return replace(self, **kw)


FIELD_TYPES: Dict[str, type] = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_profile(text: str):
    """``(scale, name)`` for a profile string; ``name`` is ``None`` for constants."""
    text = text.strip().replace(" ", "")
    scale, _, name = text.rpartition("*")
    if not _:
        if text in PROFILES:
            return 1.0 + 0j, text
        return complex(text), None
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}")
    return complex(scale), name


def evaluate_profile(text: str, theta: np.ndarray) -> np.ndarray:
    scale, name = parse_profile(text)
    if name is None:
        return np.full(len(theta), scale, dtype=complex)
    return scale * PROFILES[name](np.asarray(theta, dtype=float)).astype(complex)


def validate(cfg: ExperimentConfig) -> None:
    def bad(key, why):
        raise ConfigError(f"{key}: {why}", key)

    if cfg.kind not in KINDS:
        bad("kind", f"must be one of {', '.join(KINDS)}")
    if cfg.shape not in SHAPES:
        bad("shape", f"must be one of {', '.join(SHAPES)}")
    if cfg.inversion_shape and cfg.inversion_shape not in SHAPES:
        bad("inversion_shape", f"must be empty or one of {', '.join(SHAPES)}")
    if cfg.incidence not in ("full", "half"):
        bad("incidence", "must be full or half")
    if cfg.aperture not in ("limited", "full"):
        bad("aperture", "must be limited or full")
    for key in ("a", "b", "k", "R"):
        if not getattr(cfg, key) > 0:
            bad(key, "must be positive")
    if cfg.gamma < 0:
        bad("gamma", "must be non-negative")
    if cfg.m < 1:
        bad("m", "must be at least 1")
    if cfg.second_k < 0:
        bad("second_k", "must be non-negative")
    if cfg.n_waves < 1:
        bad("n_waves", "must be at least 1")
    if cfg.n_per_aperture < 2:
        bad("n_per_aperture", "must be at least 2")
    if not 0 <= cfg.sigma < 1:
        bad("sigma", "must lie in [0, 1)")
    for key in ("nb", "nr", "data_nb", "data_nr"):
        if getattr(cfg, key) < 0:
            bad(key, "must be non-negative (0 selects automatically)")
    for key in ("lambda_true", "mu_true", "lambda_init", "mu_init"):
        try:
            parse_profile(getattr(cfg, key))
        except ValueError as exc:
            bad(key, str(exc))
    blocks = cfg.unknown_blocks
    if not blocks or set(blocks) - {"lambda", "mu"}:
        bad("unknowns", "must be a comma-separated subset of lambda, mu")
    try:
        gammas = cfg.gamma_values
    except ValueError as exc:
        bad("gammas", str(exc))
    if cfg.kind == "continuity" and (len(gammas) < 2 or min(gammas) <= 0):
        bad("gammas", "need at least two positive amplitudes")
    if cfg.pairs < 1:
        bad("pairs", "must be at least 1")
    for key in ("eta1", "eta2", "alpha1", "alpha2", "eta_decay", "eta_floor", "alpha_min",
                "alpha_growth", "backtrack"):
        if not getattr(cfg, key) > 0:
            bad(key, "must be positive")
    if not cfg.backtrack < 1:
        bad("backtrack", "must be below 1")
    for key in ("max_iter", "eta_every"):
        if getattr(cfg, key) < 1:
            bad(key, "must be at least 1")
    if not cfg.same_mesh and cfg.nb and cfg.data_nb and cfg.data_nb < DATA_REFINEMENT * cfg.nb:
        bad("data_nb", f"data mesh must be at least {DATA_REFINEMENT}x finer than the inversion "
                       "mesh unless same_mesh is set")
    if not cfg.same_mesh and cfg.nr and cfg.data_nr and cfg.data_nr < DATA_REFINEMENT * cfg.nr:
        bad("data_nr", f"data mesh must be at least {DATA_REFINEMENT}x finer than the inversion "
                       "mesh unless same_mesh is set")


def convert_value(key: str, raw: str):
    """Parse the text ``raw`` as the type of field ``key``."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}", key)
    typ = FIELD_TYPES[key]
    try:
        if typ is bool:
            low = raw.lower()
            if low in TRUE_WORDS:
                return True
            if low in FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is int:
            return int(raw)
        if typ is float:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError("must be finite")
            return val
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})", key) from exc


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from ``key = value`` lines."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value", key.split()[0] if key else None)
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown configuration key {key!r} (line {lineno})", key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (line {lineno})", key)
        values[key] = convert_value(key, raw.strip())
    values.update(overrides)
    unknown = set(values) - set(FIELD_TYPES)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown configuration key {key!r}", key)
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(format_config(c)) == c``."""
    lines = []
    for f in fields(ExperimentConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
