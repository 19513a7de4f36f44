"""Named experiment presets.

Each preset is a set of overrides of the :class:`ExperimentConfig`
defaults (ellipse 0.4 x 0.3, k = 9, ten incident waves with apertures of
width pi/5, rescaled boundary condition).
"""

from .config import ExperimentConfig, parse_config

_SMOOTH_MU = dict(lambda_true="0", lambda_init="0", mu_true="cos2", mu_init="0.7", unknowns="mu")
_NO_SMOOTHING = dict(eta1=1e-3, eta2=1e-3, eta_decay=1.0)

PRESETS = {
    "mie-selftest": dict(kind="mie", shape="circle", a=0.35, b=0.35, lambda_true="0.5j", mu_true="1",
                         rescaled=False, nb=256, nr=24),
    "single-wave-0": dict(_SMOOTH_MU, n_waves=1, aperture="full", n_per_aperture=64),
    "single-wave-90": dict(_SMOOTH_MU, n_waves=1, aperture="full", n_per_aperture=64,
                           incident_offset=1.5707963267948966),
    "wavelength-k2": dict(_SMOOTH_MU, **_NO_SMOOTHING, k=2.0, sigma=0.01),
    "wavelength-k24": dict(_SMOOTH_MU, **_NO_SMOOTHING, k=24.0, sigma=0.01),
    "wavelength-k24-reg": dict(_SMOOTH_MU, k=24.0, sigma=0.01),
    "piecewise-two-step": dict(_SMOOTH_MU, mu_true="step", k=9.0, second_k=24.0, sigma=0.01),
    "table1-row1": dict(lambda_true="1j", mu_true="1", lambda_init="0.5j", mu_init="0.5",
                        unknowns="lambda,mu", sigma=0.01),
    "table1-row2": dict(lambda_true="1j", mu_true="0.2", lambda_init="0.5j", mu_init="0.1",
                        unknowns="lambda,mu", sigma=0.01),
    "table1-row3": dict(lambda_true="1j", mu_true="5", lambda_init="0.5j", mu_init="2.5",
                        unknowns="lambda,mu", sigma=0.01),
    "functional-mu-k9": dict(_SMOOTH_MU, sigma=0.01),
    "functional-lambda-mu": dict(lambda_true="1j*sin2", lambda_init="0.7j", mu_true="cos2",
                                 mu_init="0.7", unknowns="lambda,mu", sigma=0.01),
    "perturbed-gamma1": dict(_SMOOTH_MU, mu_true="step", shape="perturbed", gamma=0.01,
                             inversion_shape="ellipse", incidence="half", sigma=0.01),
    "perturbed-gamma3": dict(_SMOOTH_MU, mu_true="step", shape="perturbed", gamma=0.03,
                             inversion_shape="ellipse", incidence="half", sigma=0.01),
    # a low mode count keeps the first-order far-field response visible (see the README)
    "continuity-slope": dict(kind="continuity", lambda_true="1j", mu_true="1", m=3, nb=320, nr=30),
    "lipschitz-mu": dict(kind="lipschitz", lambda_true="1j", nb=256, nr=24, pairs=10),
    "fixed-point": dict(lambda_true="1j", mu_true="1", lambda_init="1j", mu_init="1",
                        unknowns="lambda,mu", same_mesh=True, nb=128, nr=12),
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Configuration of preset ``name`` with optional key overrides."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    values = dict(PRESETS[name], name=name)
    values.update(overrides)
    return parse_config("", **values)
