"""Readers for the harness output directory.

Everything here is strictly downstream of the documented file schema:
manifest.json / metrics.json plus snapshot CSVs with columns
(site_index[, site_index_y], x[, y], density, chemo). No simulation code is
imported, and nothing under the experiment directory is ever written.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Snapshot1D:
    x: np.ndarray
    density: np.ndarray
    chemo: np.ndarray


@dataclass
class Snapshot2D:
    x: np.ndarray          # axis coordinates (shared by both axes)
    density: np.ndarray    # (N, N)
    chemo: np.ndarray


def require(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return path


def load_json(path: Path) -> dict:
    return json.loads(require(path).read_text())


def load_snapshot(path: Path):
    """Read one snapshot CSV; returns Snapshot1D or Snapshot2D by its header."""
    with open(require(path), newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    if "site_index_y" in fields:
        ii = np.array([int(r["site_index"]) for r in rows])
        jj = np.array([int(r["site_index_y"]) for r in rows])
        n = ii.max()
        density = np.zeros((n, n))
        chemo = np.zeros((n, n))
        density[ii - 1, jj - 1] = [float(r["density"]) for r in rows]
        chemo[ii - 1, jj - 1] = [float(r["chemo"]) for r in rows]
        x = np.zeros(n)
        x[ii - 1] = [float(r["x"]) for r in rows]
        return Snapshot2D(x=x, density=density, chemo=chemo)
    x = np.array([float(r["x"]) for r in rows])
    density = np.array([float(r["density"]) for r in rows])
    chemo = np.array([float(r["chemo"]) for r in rows])
    return Snapshot1D(x=x, density=density, chemo=chemo)


def load_curve(path: Path, x_col: str, y_cols):
    """Generic two-or-more column CSV reader (gamma.csv, dispersion.csv)."""
    with open(require(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r[x_col]) for r in rows])
    ys = {col: np.array([float(r[col]) for r in rows]) for col in y_cols}
    return x, ys


@dataclass
class CaseFiles:
    """Locations of one case's artifacts inside an experiment directory."""

    label: str
    directory: Path
    prefixes: tuple = ("",)    # ("", "classical_") when the twin exists

    def snapshot_path(self, prefix: str, kind: str, t_label: str) -> Path:
        return self.directory / f"{prefix}{kind}_t{t_label}.csv"

    def realization_paths(self, prefix: str, t_label: str):
        pattern = f"{prefix}discrete_r*_t{t_label}.csv"
        return sorted(self.directory.glob(pattern),
                      key=lambda p: int(p.name.split("_r")[1].split("_")[0]))


def experiment_layout(results_dir: Path, experiment_id: str):
    """Manifest + metrics + per-case file locations for one experiment."""
    exp_dir = Path(results_dir) / experiment_id
    manifest = load_json(exp_dir / "manifest.json")
    metrics = load_json(exp_dir / "metrics.json")
    cases = []
    multi = len(manifest["cases"]) > 1
    for case in manifest["cases"]:
        label = case["label"]
        directory = exp_dir / label if multi else exp_dir
        prefixes = ("", "classical_") if case.get("include_classical") else ("",)
        cases.append(CaseFiles(label=label, directory=directory, prefixes=prefixes))
    return manifest, metrics, cases
