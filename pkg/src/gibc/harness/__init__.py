"""Experiment harness: configuration, synthetic data, presets, reports and the CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .experiments import ExperimentResult, run_experiment
from .presets import PRESETS, preset_config
from .report import emit_report
from .synth import NoiseModel, generate_synthetic

__all__ = ["ExperimentConfig", "ExperimentResult", "NoiseModel", "PRESETS", "emit_report",
           "generate_synthetic", "load_config", "parse_config", "preset_config", "run_experiment"]
