"""CSV tables and SVG line plots for experiment results.

Floats are written with ``repr`` so that CSV files read back bit-exactly.
Figures are rendered with matplotlib's SVG backend with a fixed hash salt
and no date stamp, so identical results give byte-identical files. Each
plotted curve is wrapped in an SVG group whose id starts with ``curve-``.
"""

import csv
import math
import os
from typing import Dict, List, Sequence, Tuple

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure

from ..farfield import write_farfield
from ..inverse import LAMBDA, MU, InversionState
from .config import format_config
from .synth import CLEAN_FILE, NOISY_FILE

HISTORY_HEADER = ("iter", "F", "Error", "alpha1", "alpha2", "eta1", "eta2")
COEFFICIENT_HEADER = ("theta", "Re_lambda", "Im_lambda", "Re_mu", "Im_mu")
SVG_SALT = "gibc-report"

Series = Dict[str, Tuple[np.ndarray, np.ndarray]]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_csv(path) -> Tuple[List[str], List[List[float]]]:
    """Header and float rows (empty cells become ``nan``)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(c) if c != "" else math.nan for c in row] for row in r]
    return header, rows


def history_rows(state: InversionState):
    return [tuple(h[key] for key in HISTORY_HEADER) for h in state.history]


def coefficient_rows(theta: np.ndarray, imp) -> list:
    """Rows sorted by polar angle."""
    order = np.argsort(theta, kind="stable")
    return [(theta[i], imp.lam[i].real, imp.lam[i].imag, imp.mu[i].real, imp.mu[i].imag) for i in order]


def coefficient_series(stage, unknowns: Sequence[str]) -> Dict[str, Series]:
    """Plotted data per unknown: ``Im lambda`` and/or ``Re mu`` against theta."""
    theta = stage.theta
    order = np.argsort(theta, kind="stable")
    th = theta[order]
    out = {}
    for key in unknowns:
        pick = (lambda imp: imp.lam.imag) if key == LAMBDA else (lambda imp: imp.mu.real)
        out[key] = {
            "truth": (th, pick(stage.truth)[order]),
            "initial": (th, pick(stage.initial)[order]),
            "reconstruction": (th, pick(stage.final)[order]),
        }
    return out


def _save(fig: Figure, path) -> None:
    with rc_context({"svg.hashsalt": SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def plot_series(path, panels: Dict[str, Series], xlabel: str, loglog: bool = False,
                logy: bool = False) -> None:
    """One axes per panel, one line per series; line groups get id ``curve-<panel>-<label>``."""
    fig = Figure(figsize=(6.0, 3.2 * len(panels)))
    styles = {"truth": "-", "initial": ":", "reconstruction": "--"}
    for idx, (title, series) in enumerate(panels.items(), 1):
        ax = fig.add_subplot(len(panels), 1, idx)
        for label, (x, y) in series.items():
            line, = ax.plot(x, y, styles.get(label, "-"), label=label)
            line.set_gid(f"curve-{title}-{label}".replace(" ", "_"))
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        elif logy:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, path)


TITLES = {LAMBDA: "Im lambda", MU: "Re mu"}


def _stage_files(out_dir, prefix, stage, unknowns) -> List[str]:
    paths = []

    def p(name):
        full = os.path.join(out_dir, prefix + name)
        paths.append(full)
        return full

    write_csv(p("history.csv"), HISTORY_HEADER, history_rows(stage.state))
    write_csv(p("coefficients.csv"), COEFFICIENT_HEADER, coefficient_rows(stage.theta, stage.final))
    write_csv(p("truth.csv"), COEFFICIENT_HEADER, coefficient_rows(stage.theta, stage.truth))
    series = coefficient_series(stage, unknowns)
    plot_series(p("coefficients.svg"), {TITLES[k]: v for k, v in series.items()}, "theta")
    hist = stage.state.history
    it = np.array([h["iter"] for h in hist], dtype=float)
    panels = {"cost F": {"F": (it, np.array([h["F"] for h in hist]))}}
    if all(h["Error"] is not None for h in hist):
        panels["relative Error"] = {"Error": (it, np.array([h["Error"] for h in hist]))}
    if np.all(panels["cost F"]["F"][1] > 0):
        plot_series(p("history.svg"), panels, "iteration", logy=True)
    else:
        plot_series(p("history.svg"), panels, "iteration")
    if stage.synthetic is not None:
        write_farfield(stage.synthetic.clean, p(CLEAN_FILE))
        write_farfield(stage.synthetic.noisy, p(NOISY_FILE))
    return paths


def emit_report(result, out_dir) -> List[str]:
    """Write the result bundle into ``out_dir``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    paths = [os.path.join(out_dir, "config.txt"), os.path.join(out_dir, "summary.txt")]
    with open(paths[0], "w") as fh:
        fh.write(format_config(cfg))
    with open(paths[1], "w") as fh:
        for key in sorted(result.metrics):
            fh.write(f"{key}={_cell(result.metrics[key])}\n")
    multi = len(result.stages) > 1
    for i, stage in enumerate(result.stages):
        prefix = f"stage{i + 1}_" if multi else ""
        paths += _stage_files(out_dir, prefix, stage, cfg.unknown_blocks)
    for stem, (header, rows) in result.tables.items():
        path = os.path.join(out_dir, stem + ".csv")
        write_csv(path, header, rows)
        paths.append(path)
        fig_path = os.path.join(out_dir, stem + ".svg")
        cols = list(zip(*rows)) if rows else []
        if stem == "continuity":
            plot_series(fig_path, {"far-field difference": {"difference": (np.array(cols[0]), np.array(cols[2]))}},
                        "gamma", loglog=True)
        elif stem == "lipschitz":
            plot_series(fig_path, {"stability ratio": {"ratio": (np.array(cols[0]), np.array(cols[7]))}},
                        "pair")
        elif stem == "pointwise_error":
            plot_series(fig_path, {"pointwise error": {"lambda": (np.array(cols[0]), np.array(cols[1])),
                                                       "mu": (np.array(cols[0]), np.array(cols[2]))}},
                        "theta")
        elif stem == "mie":
            plot_series(fig_path, {"|u_inf|": {"mie": (np.array(cols[0]), np.array(cols[1])),
                                               "fem": (np.array(cols[0]), np.array(cols[2])),
                                               "fem_refined": (np.array(cols[0]), np.array(cols[3]))}},
                        "theta")
        else:
            continue
        paths.append(fig_path)
    if result.farfield is not None:
        path = os.path.join(out_dir, "farfield.txt")
        write_farfield(result.farfield, path)
        paths.append(path)
    return paths
