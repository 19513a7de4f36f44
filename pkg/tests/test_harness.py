import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gibc.errors import ConfigError
from gibc.farfield import read_farfield
from gibc.harness import (PRESETS, ExperimentConfig, NoiseModel, emit_report, generate_synthetic,
                          load_config, parse_config, preset_config, run_experiment)
from gibc.harness.builders import auto_resolution, resample_nodal, resolutions
from gibc.harness.cli import main
from gibc.harness.config import evaluate_profile, format_config, parse_profile
from gibc.harness.report import COEFFICIENT_HEADER, HISTORY_HEADER, read_csv, write_csv
from gibc.harness.synth import relative_deviation

SMALL = dict(nb=64, nr=6, data_nb=96, data_nr=9, n_waves=3, n_per_aperture=8, max_iter=4)
SVG = "{http://www.w3.org/2000/svg}"


def small(**kw):
    return parse_config("", **dict(SMALL, **kw))


@pytest.fixture(scope="module")
def small_run():
    cfg = small(name="small", lambda_true="1j", mu_true="cos2", unknowns="lambda,mu", sigma=0.02, seed=7)
    return run_experiment(cfg)


def test_config_defaults_and_parsing(tmp_path):
    text = "# comment\nk = 12.5\nunknowns = lambda, mu  # both\nrescaled = no\nmu_true = 0.3*step\n"
    cfg = parse_config(text)
    assert cfg.k == 12.5 and cfg.unknown_blocks == ("lambda", "mu") and cfg.rescaled is False
    assert parse_profile(cfg.mu_true) == (0.3, "step")
    path = tmp_path / "c.txt"
    path.write_text(text)
    assert load_config(path, seed=3) == cfg.with_overrides(seed=3)
    assert ExperimentConfig().k == 9.0


@pytest.mark.parametrize("text, key", [
    ("kk = 1", "kk"),
    ("k = 1\nk = 2", "k"),
    ("k 9", "k"),
    ("k = fast", "k"),
    ("shape = square", "shape"),
    ("unknowns = kappa", "unknowns"),
    ("sigma = 1.5", "sigma"),
    ("mu_true = 2*bump", "mu_true"),
    ("nb = 128\ndata_nb = 150", "data_nb"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_same_mesh_lifts_refinement_rule():
    cfg = parse_config("nb = 128\ndata_nb = 128\nsame_mesh = true")
    inv, data = resolutions(cfg, cfg.k)
    assert inv == data
    inv, data = resolutions(parse_config("nb = 128\nnr = 12"), 9.0)
    assert data.nb >= 1.5 * inv.nb and data.nr >= 1.5 * inv.nr and data.dtn_order > inv.dtn_order


def test_format_round_trip():
    for name in PRESETS:
        cfg = preset_config(name)
        assert parse_config(format_config(cfg)) == cfg


def test_profiles():
    th = np.linspace(-np.pi, np.pi, 9)
    assert np.allclose(evaluate_profile("1j*sin2", th), 0.5j * (1 + np.sin(th) ** 2))
    assert np.allclose(evaluate_profile("cos2", th), 0.5 * (1 + np.cos(th) ** 2))
    step = evaluate_profile("step", th).real
    assert set(step) == {0.5, 1.0} and step[4] == 1.0 and step[0] == 0.5
    assert np.allclose(evaluate_profile("0.5", th), 0.5)
    assert np.allclose(evaluate_profile("2*cos2", th), 2 * evaluate_profile("cos2", th))


def test_auto_resolution():
    assert auto_resolution(9.0, 0.8) == (320, 30)
    assert auto_resolution(1.0, 0.8)[0] == 128
    assert auto_resolution(100.0, 0.8)[0] == 512


def test_resample_nodal_preserves_constants_and_linear_interpolates():
    v = np.full(8, 2.0 + 1j)
    assert np.allclose(resample_nodal(v, 24), 2.0 + 1j)
    th = 2 * np.pi * np.arange(8) / 8
    fine = resample_nodal(np.cos(th), 16)
    assert np.allclose(fine[::2], np.cos(th))


@given(sigma=st.floats(1e-4, 0.5), seed=st.integers(0, 2**32 - 1), stream=st.integers(0, 3))
def test_noise_level_is_exact(sigma, seed, stream, tmp_path_factory):
    clean = _clean_data()
    noisy = NoiseModel(sigma, seed).apply(clean, stream)
    assert np.max(np.abs(relative_deviation(noisy, clean) - sigma)) <= 1e-12
    again = NoiseModel(sigma, seed).apply(clean, stream)
    assert np.array_equal(noisy.values, again.values)


_CLEAN = []


def _clean_data():
    if not _CLEAN:
        _CLEAN.append(generate_synthetic(small()).clean)
    return _CLEAN[0]


def test_zero_noise_is_identical():
    clean = _clean_data()
    assert np.array_equal(NoiseModel(0.0, 5).apply(clean).values, clean.values)


def test_noise_streams_differ():
    clean = _clean_data()
    a = NoiseModel(0.01, 5).apply(clean, 0).values
    b = NoiseModel(0.01, 5).apply(clean, 1).values
    assert not np.array_equal(a, b)


def test_anti_inverse_crime(small_run):
    # data from a finer mesh: the truth does not fit them exactly
    assert small_run.metrics["F_at_truth"] > 0
    assert small_run.metrics["final_F"] <= small_run.stages[0].state.history[0]["F"]


def bundle(directory):
    return {name: open(os.path.join(directory, name), "rb").read() for name in sorted(os.listdir(directory))}


def test_report_bundle_is_deterministic(small_run, tmp_path):
    emit_report(small_run, tmp_path / "a")
    again = run_experiment(small_run.config)
    emit_report(again, tmp_path / "b")
    a, b = bundle(tmp_path / "a"), bundle(tmp_path / "b")
    assert a.keys() == b.keys()
    assert {"config.txt", "summary.txt", "history.csv", "coefficients.csv", "coefficients.svg",
            "history.svg", "farfield_clean.txt", "farfield_noisy.txt"} <= set(a)
    for name in a:
        assert a[name] == b[name], name


def test_report_contents(small_run, tmp_path):
    emit_report(small_run, tmp_path)
    header, rows = read_csv(tmp_path / "history.csv")
    assert tuple(header) == HISTORY_HEADER
    assert len(rows) == len(small_run.stages[0].state.history)
    header, rows = read_csv(tmp_path / "coefficients.csv")
    assert tuple(header) == COEFFICIENT_HEADER and len(rows) == 64
    theta = [r[0] for r in rows]
    assert theta == sorted(theta)
    assert parse_config((tmp_path / "config.txt").read_text()) == small_run.config
    noisy = read_farfield(tmp_path / "farfield_noisy.txt")
    assert np.array_equal(noisy.values, small_run.stages[0].problem.data.values)


def test_svg_has_one_group_per_curve(small_run, tmp_path):
    emit_report(small_run, tmp_path)
    root = ET.parse(tmp_path / "coefficients.svg").getroot()
    ids = [g.get("id") for g in root.iter(SVG + "g") if (g.get("id") or "").startswith("curve-")]
    expected = {f"curve-{panel}-{label}" for panel in ("Im_lambda", "Re_mu")
                for label in ("truth", "initial", "reconstruction")}
    assert set(ids) == expected and len(ids) == len(expected)
    # the constant truth of Im(lambda) is drawn as a horizontal line
    g = next(g for g in root.iter(SVG + "g") if g.get("id") == "curve-Im_lambda-truth")
    path = next(g.iter(SVG + "path")).get("d").split()
    ys = {float(tok) for i, tok in enumerate(path) if tok not in ("M", "L", "z") and i % 3 == 2}
    assert len(ys) == 1


def test_csv_round_trip_exact(tmp_path):
    vals = [[0.1, 1 / 3, -2.5e-300], [np.pi, np.float64(7.0), 0.0]]
    write_csv(tmp_path / "t.csv", ("a", "b", "c"), vals)
    header, rows = read_csv(tmp_path / "t.csv")
    assert header == ["a", "b", "c"] and rows == [[float(v) for v in r] for r in vals]


def test_all_presets_parse():
    for name in PRESETS:
        cfg = preset_config(name)
        assert cfg.name == name
    with pytest.raises(KeyError):
        preset_config("no-such-preset")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("kk = 1\n")
    assert main(["invert", str(bad)]) == 2
    assert "kk" in capsys.readouterr().err
    assert main(["preset", "no-such-preset"]) == 2
    assert main(["invert", str(tmp_path / "missing.txt")]) == 2
    assert main(["preset", "fixed-point", "--set", "max_iter"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["preset", "fixed-point", "--out-dir", str(blocker / "sub")]) == 2


def test_cli_runs_a_small_config(tmp_path, capsys):
    cfg = tmp_path / "run.txt"
    cfg.write_text(format_config(small(name="cli", sigma=0.01)))
    out = tmp_path / "out"
    assert main(["invert", str(cfg), "--seed", "3", "--out-dir", str(out)]) == 0
    assert "final_Error" in capsys.readouterr().out
    assert "seed = 3" in (out / "config.txt").read_text()
    assert main(["synth", str(cfg), "--out-dir", str(tmp_path / "syn")]) == 0
    assert (tmp_path / "syn" / "farfield_noisy.txt").exists()
    assert main(["forward", str(cfg), "--out-dir", str(tmp_path / "fwd")]) == 0
    assert (tmp_path / "fwd" / "farfield.txt").exists()


def test_selftest_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gibc.harness.cli", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 3
