"""Paper-style panel rendering from harness CSV/JSON output.

One timeseries figure per 1D case (density row over chemo row, one column per
snapshot; lattice ensemble solid, PDE dotted, per-realization traces pale),
heatmap+side-view figures per 2D case and snapshot, and a Gamma / dispersion
curve figure per case. Rendering never recomputes simulation data and never
writes inside the experiment directory; outputs are deterministic for fixed
inputs (fixed style seed, no timestamps in metadata).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import (Snapshot2D, experiment_layout, load_curve, load_snapshot,
                 require)

STYLE = {
    "density": "tab:blue",
    "density_pale": "#9ecbff",
    "chemo": "tab:red",
    "chemo_pale": "orchid",
    "classical_density": "tab:green",
    "classical_chemo": "gold",
}
DPI = 110

matplotlib.rcParams["svg.hashsalt"] = "chemotax-figures"


@dataclass
class FigureSpec:
    """What to render for one experiment."""

    experiment_id: str
    results_dir: Path
    out_dir: Path
    fmt: str = "png"
    snapshots: list | None = None      # t labels; None = all in metrics.json
    overlay_pde: bool = True
    overlay_realizations: bool = True

    def __post_init__(self):
        if self.fmt not in ("png", "svg"):
            raise ValueError(f"format must be png or svg, got {self.fmt!r}")


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Software": "chemotax-figures"} if path.suffix == ".png" else \
        {"Date": None, "Creator": "chemotax-figures"}
    fig.savefig(path, dpi=DPI, metadata=metadata)
    plt.close(fig)
    return path


def _padded_limits(arrays, pad=0.05):
    lo = min(float(np.min(a)) for a in arrays)
    hi = max(float(np.max(a)) for a in arrays)
    span = hi - lo or max(abs(hi), 1.0)
    return lo - pad * span, hi + pad * span


def _case_snapshot_labels(metrics: dict, label: str, wanted) -> list:
    available = list(metrics["cases"][label]["snapshots"].keys())
    if wanted is None:
        return sorted(available, key=float)
    chosen = []
    for t in wanted:
        t_label = t if isinstance(t, str) else f"{t:g}"
        if t_label not in available:
            raise FileNotFoundError(
                f"snapshot t={t_label} of case {label!r} not in metrics.json")
        chosen.append(t_label)
    return chosen


def _render_case_1d(case, labels, spec: FigureSpec) -> Path:
    ncols = len(labels)
    fig, axes = plt.subplots(2, ncols, figsize=(3.1 * ncols, 5.4),
                             squeeze=False, sharex=True)
    has_classical = "classical_" in case.prefixes
    for col, t_label in enumerate(labels):
        series = {}
        for prefix in case.prefixes:
            series[prefix + "d"] = load_snapshot(
                case.snapshot_path(prefix, "discrete", t_label))
            if spec.overlay_pde:
                series[prefix + "p"] = load_snapshot(
                    case.snapshot_path(prefix, "pde", t_label))
        reals = case.realization_paths("", t_label) if spec.overlay_realizations else []
        real_snaps = [load_snapshot(p) for p in reals]

        ax_u, ax_c = axes[0][col], axes[1][col]
        for snap in real_snaps:
            ax_u.plot(snap.x, snap.density, color=STYLE["density_pale"],
                      lw=0.8, zorder=1)
            ax_c.plot(snap.x, snap.chemo, color=STYLE["chemo_pale"],
                      lw=0.8, zorder=1)
        for prefix in case.prefixes:
            cd = STYLE["classical_density"] if prefix else STYLE["density"]
            cc = STYLE["classical_chemo"] if prefix else STYLE["chemo"]
            d = series[prefix + "d"]
            ax_u.plot(d.x, d.density, color=cd, lw=1.6, zorder=3)
            ax_c.plot(d.x, d.chemo, color=cc, lw=1.6, zorder=3)
            if spec.overlay_pde:
                p = series[prefix + "p"]
                ax_u.plot(p.x, p.density, color=cd, lw=1.6, ls=":", zorder=4)
                ax_c.plot(p.x, p.chemo, color=cc, lw=1.6, ls=":", zorder=4)

        # identical limits across the discrete/PDE overlay, padded 5%
        u_all = [s.density for s in real_snaps] + \
                [series[k].density for k in series]
        c_all = [s.chemo for s in real_snaps] + [series[k].chemo for k in series]
        ax_u.set_ylim(*_padded_limits(u_all))
        ax_c.set_ylim(*_padded_limits(c_all))
        ax_u.set_title(f"t = {t_label}")
        ax_c.set_xlabel("x")
        if col == 0:
            ax_u.set_ylabel("cell density")
            ax_c.set_ylabel("chemoattractant")
    suffix = " (solid lattice / dotted PDE"
    suffix += ", classical in green-gold)" if has_classical else ")"
    fig.suptitle(f"{spec.experiment_id}: {case.label}{suffix}", fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    return _save(fig, Path(spec.out_dir) / spec.experiment_id /
                 f"{case.label}_timeseries.{spec.fmt}")


def _render_case_2d(case, labels, spec: FigureSpec) -> list:
    out = []
    for t_label in labels:
        panels = [("lattice", load_snapshot(case.snapshot_path("", "discrete", t_label)))]
        if spec.overlay_pde:
            panels.append(("PDE", load_snapshot(case.snapshot_path("", "pde", t_label))))
        for prefix in case.prefixes[1:]:
            panels.append(("classical lattice",
                           load_snapshot(case.snapshot_path(prefix, "discrete", t_label))))
            if spec.overlay_pde:
                panels.append(("classical PDE",
                               load_snapshot(case.snapshot_path(prefix, "pde", t_label))))
        vmax = max(float(s.density.max()) for _name, s in panels)
        ncols = len(panels)
        fig, axes = plt.subplots(2, ncols, figsize=(3.4 * ncols, 6.2), squeeze=False)
        for col, (name, snap) in enumerate(panels):
            assert isinstance(snap, Snapshot2D)
            ax = axes[0][col]
            im = ax.imshow(snap.density.T, origin="lower", vmin=0.0, vmax=vmax,
                           extent=(snap.x[0], snap.x[-1], snap.x[0], snap.x[-1]),
                           cmap="viridis")
            ax.set_title(f"{name}, t = {t_label}", fontsize=9)
            fig.colorbar(im, ax=ax, shrink=0.8)
            # side-on view: density against x for every y-slice
            side = axes[1][col]
            side.plot(snap.x, snap.density, color=STYLE["density"],
                      alpha=0.25, lw=0.7)
            side.set_ylim(0.0, 1.05 * vmax)
            side.set_xlabel("x")
            if col == 0:
                side.set_ylabel("cell density (all y slices)")
        fig.suptitle(f"{spec.experiment_id}: {case.label}", fontsize=10)
        fig.tight_layout(rect=(0, 0, 1, 0.95))
        out.append(_save(fig, Path(spec.out_dir) / spec.experiment_id /
                         f"{case.label}_fields_t{t_label}.{spec.fmt}"))
    return out


def _render_case_reports(case, spec: FigureSpec) -> list:
    out = []
    c, ys = load_curve(case.directory / "gamma.csv", "c", ["gamma"])
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(c, ys["gamma"], color="tab:purple")
    ax.axhline(0.0, color="0.4", lw=0.8)
    ax.set_xlabel("c")
    ax.set_ylabel("Gamma(c)")
    ax.set_title(f"{case.label}: steady-state root function", fontsize=9)
    fig.tight_layout()
    out.append(_save(fig, Path(spec.out_dir) / spec.experiment_id /
                     f"{case.label}_gamma.{spec.fmt}"))

    k2, ys = load_curve(case.directory / "dispersion.csv", "k2",
                        ["re_sigma1", "re_sigma2"])
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(k2, ys["re_sigma1"], color="tab:blue", label="Re sigma_1")
    ax.plot(k2, ys["re_sigma2"], color="tab:orange", label="Re sigma_2")
    ax.axhline(0.0, color="0.4", lw=0.8)
    ax.set_xlabel("k^2")
    ax.set_ylabel("growth rate")
    ax.legend(fontsize=8)
    ax.set_title(f"{case.label}: dispersion relation", fontsize=9)
    fig.tight_layout()
    out.append(_save(fig, Path(spec.out_dir) / spec.experiment_id /
                     f"{case.label}_dispersion.{spec.fmt}"))
    return out


def render(spec: FigureSpec) -> list:
    """Render every panel set of one experiment; returns the written paths.

    Raises FileNotFoundError naming the first missing input. An empty
    snapshot selection renders nothing and returns an empty list.
    """
    if spec.snapshots is not None and len(spec.snapshots) == 0:
        return []
    manifest, metrics, cases = experiment_layout(Path(spec.results_dir),
                                                 spec.experiment_id)
    written = []
    for case in cases:
        labels = _case_snapshot_labels(metrics, case.label, spec.snapshots)
        dim = next(c for c in manifest["cases"] if c["label"] == case.label)[
            "params"]["dim"]
        if dim == 1:
            written.append(_render_case_1d(case, labels, spec))
        else:
            written.extend(_render_case_2d(case, labels, spec))
        written.extend(_render_case_reports(case, spec))
    return written
