"""Experiment runner: builds initial conditions, runs the lattice ensemble
and the matching PDE on the identical grid, computes discrepancy metrics and
persists every artifact as flat files.

Output layout under ``<out>/<experiment_id>/``::

    manifest.json             resolved manifest (overrides applied)
    metrics.json              all ComparisonMetrics; bit-identical across reruns
    pde_run.json              solver statistics incl. wall time (not byte-stable)
    dispersion.csv, gamma.csv stability / steady-state reports per case
    discrete_t<t>.csv         ensemble-mean lattice fields at snapshot t
    discrete_r<k>_t<t>.csv    per-realization fields (when retained)
    pde_t<t>.csv              PDE fields at snapshot t
    classical_*.csv           the psi==1 twin, for cases that request it

Multi-case experiments nest the CSV files in one subdirectory per case
label. CSV floats carry 17 significant digits. The PDE always consumes
``derive_coefficients`` of the very ParamSet that drove the lattice run, so
the two models share chi and beta_u bitwise.
"""

from __future__ import annotations

import csv
import json
import time as _time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from . import stability as _stability
from . import steady as _steady
from .errors import ValidationError
from .lattice import run_ensemble
from .manifest import ExperimentManifest, builtin_manifest, load_manifest
from .params import ParamSet, c_bar_from_initial, derive_coefficients
from .pde import FieldPair, RunStats, SolverOptions, run_pde

DOMAIN_LENGTH = 1.0  # all built-in experiments live on the unit interval/square


def lattice_size(h: float) -> int:
    n = round(DOMAIN_LENGTH / h)
    if abs(n * h - DOMAIN_LENGTH) > 1e-9 * DOMAIN_LENGTH:
        raise ValidationError(f"h={h!r} does not tile the unit domain")
    return n


def grid_coordinates(h: float, dim: int):
    """Site coordinates x_i = i*h, i = 1..N (per axis)."""
    n = lattice_size(h)
    x = h * np.arange(1, n + 1)
    if dim == 1:
        return x
    return x, x


def build_initial_condition(init: dict, params: dict):
    """Initial density, chemo field and integer counts for one case.

    Kinds: ``uniform_1d(a, b)`` and ``small_numbers(a0)`` use the oscillating
    1D chemo perturbation c0 = u0 (1 + 0.1 cos(10x) sin(10x));
    ``uniform_2d(a, b)`` uses the four-Gaussian chemo field. Counts are
    round(u0 * h^dim); the rounding mass report is returned, not raised.
    """
    kind = init.get("kind")
    h, dim = params["h"], params["dim"]
    if kind in ("uniform_1d", "small_numbers"):
        if dim != 1:
            raise ValidationError(f"init {kind!r} needs dim=1")
        x = grid_coordinates(h, 1)
        if kind == "uniform_1d":
            level = 0.5 * init["a"] * init["b"]
        else:
            level = float(init["a0"])
        if level <= 0:
            raise ValidationError("empty population: initial density is zero")
        u0 = np.full(x.shape, level)
        c0 = u0 * (1.0 + 0.1 * np.cos(10.0 * x) * np.sin(10.0 * x))
    elif kind == "uniform_2d":
        if dim != 2:
            raise ValidationError("init 'uniform_2d' needs dim=2")
        x1, x2 = grid_coordinates(h, 2)
        level = 0.5 * init["a"] * init["b"]
        if level <= 0:
            raise ValidationError("empty population: initial density is zero")
        u0 = np.full((x1.size, x2.size), level)
        xx1, xx2 = np.meshgrid(x1, x2, indexing="ij")
        centers = ((0.26, 0.74), (0.26, 0.26), (0.74, 0.74), (0.74, 0.26))
        c0 = np.zeros_like(u0)
        for p1, p2 in centers:
            c0 += np.exp(-200.0 * (xx1 - p1) ** 2 - 200.0 * (xx2 - p2) ** 2)
        c0 *= 200.0
    else:
        raise ValidationError(f"unknown init kind {kind!r}")

    exact = u0 * h ** dim
    counts = np.rint(exact).astype(np.int64)
    err = np.abs(counts - exact)
    net = float(counts.sum() - exact.sum())
    rounding = {
        "max_per_site": float(err.max()),
        "net_mass_change": net,
        "total_agents": int(counts.sum()),
        "flagged": bool(abs(net) > 0.5 * err.size),  # > 0.5 agents per site
    }
    return u0, c0, counts, rounding


def resolve_params(raw: dict, c0: np.ndarray) -> ParamSet:
    """Finalise a ParamSet, deriving c_bar from the initial chemo if unset."""
    raw = dict(raw)
    c_bar = raw.pop("c_bar", None)
    if c_bar is None:
        c_bar = c_bar_from_initial(float(c0.max()), raw["zeta"], raw["u_max"])
    try:
        return ParamSet(c_bar=c_bar, **raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad parameters: {exc}") from exc


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_snapshot_csv(path: Path, h: float, density: np.ndarray, chemo: np.ndarray):
    """Snapshot export; columns per the documented schema, 1-based site indices."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if density.ndim == 1:
            writer.writerow(["site_index", "x", "density", "chemo"])
            for i in range(density.shape[0]):
                writer.writerow([i + 1, _fmt((i + 1) * h),
                                 _fmt(density[i]), _fmt(chemo[i])])
        else:
            writer.writerow(["site_index", "site_index_y", "x", "y", "density", "chemo"])
            for i in range(density.shape[0]):
                for j in range(density.shape[1]):
                    writer.writerow([i + 1, j + 1, _fmt((i + 1) * h), _fmt((j + 1) * h),
                                     _fmt(density[i, j]), _fmt(chemo[i, j])])


def write_dispersion_csv(path: Path, p: ParamSet, coef, u_star: float, n_points: int = 256):
    """Dispersion curve (k^2, Re/Im of both roots) up to 1.2x the unstable window."""
    k2m = _stability.k2_max(u_star, p, coef)
    k2_hi = 1.2 * k2m if k2m > 0 else 4.0 * (np.pi / DOMAIN_LENGTH) ** 2
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k2", "re_sigma1", "im_sigma1", "re_sigma2", "im_sigma2"])
        for k2 in np.linspace(0.0, k2_hi, n_points):
            r = _stability.dispersion(float(k2), u_star, p, coef)
            s1, s2 = r.sigma
            writer.writerow([_fmt(k2), _fmt(s1.real), _fmt(s1.imag),
                             _fmt(s2.real), _fmt(s2.imag)])
    return k2m


def write_gamma_csv(path: Path, ctx: _steady.SteadyStateContext, c_max: float,
                    n_points: int = 512):
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0.0, c_max, n_points)
    vals = _steady.gamma(grid, ctx)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["c", "gamma"])
        for c, g in zip(grid, vals):
            writer.writerow([_fmt(c), _fmt(g)])


def _snapshot_steps(times, tau: float, n_steps: int):
    return sorted(set(min(int(np.floor(t / tau + 1e-9)), n_steps) for t in times))


def _stability_context(p: ParamSet, coef, u0: np.ndarray):
    """Homogeneous state and mass of one case (unit domain)."""
    dim = p.dim
    volume = DOMAIN_LENGTH ** dim
    mass = float(u0.mean()) * volume
    u_star, c_star = _steady.homogeneous_steady_state(p.alpha, p.kappa, mass, volume)
    return mass, u_star, c_star


class _CaseRunner:
    """Runs one manifest case (and its optional classical twin)."""

    def __init__(self, manifest: ExperimentManifest, case, case_index: int,
                 out_dir: Path, threads: int):
        self.manifest = manifest
        self.case = case
        self.case_index = case_index
        self.out = out_dir
        self.threads = threads
        self.t_end = case.t_end if case.t_end is not None else manifest.t_end
        times = case.snapshot_times if case.snapshot_times is not None else manifest.snapshot_times
        self.snapshot_times = list(times)
        self.n_real = case.n_realizations or manifest.n_realizations

    def _run_variant(self, p: ParamSet, u0, c0, counts0, n_real: int,
                     stream_base: int, prefix: str):
        coef = derive_coefficients(p)
        n_steps = int(np.floor(self.t_end / p.tau + 1e-9))
        steps = _snapshot_steps(self.snapshot_times, p.tau, n_steps)

        ens = run_ensemble(p, counts0, c0, n_steps, steps, n_real,
                           base_seed=self.manifest.base_seed,
                           stream_offset=stream_base,
                           retain=self.manifest.retain_realizations,
                           error_policy="record", threads=self.threads)

        init_fp = FieldPair(u0.copy(), c0.copy(), 0.0, dx=p.h, dt=p.tau)
        pde_snaps, pde_stats = run_pde(p, coef, init_fp, self.t_end, self.snapshot_times)

        per_snapshot = {}
        for i, step in enumerate(steps):
            t_label = f"{step * p.tau:g}"
            entry = {}
            if step in ens.mean_density:
                write_snapshot_csv(self.out / f"{prefix}discrete_t{t_label}.csv",
                                   p.h, ens.mean_density[step], ens.mean_chemo[step])
                if ens.per_realization is not None:
                    for r, traj in zip(ens.completed, ens.per_realization):
                        write_snapshot_csv(
                            self.out / f"{prefix}discrete_r{r}_t{t_label}.csv",
                            p.h, traj[i].density, traj[i].chemo)
                pde_u, pde_c = pde_snaps[i].u, pde_snaps[i].c
                entry.update({
                    "rel_linf_u": _metrics.rel_linf(ens.mean_density[step], pde_u),
                    "rel_l2_u": _metrics.rel_l2(ens.mean_density[step], pde_u),
                    "rel_linf_c": _metrics.rel_linf(ens.mean_chemo[step], pde_c),
                    "rel_l2_c": _metrics.rel_l2(ens.mean_chemo[step], pde_c),
                    "rel_l2_fieldnorm_u": _metrics.rel_l2_fieldnorm(
                        ens.mean_density[step], pde_u),
                })
                if ens.per_realization is not None and len(ens.completed) > 1:
                    entry["spread_rel_l2_u"] = _metrics.ensemble_spread(
                        [traj[i].density for traj in ens.per_realization])
            write_snapshot_csv(self.out / f"{prefix}pde_t{t_label}.csv",
                               p.h, pde_snaps[i].u, pde_snaps[i].c)
            per_snapshot[t_label] = entry

        mass0 = pde_stats.mass_initial
        result = {
            "snapshots": per_snapshot,
            "overflow_incidents": ens.incidents,
            "n_realizations": n_real,
            "n_realizations_completed": len(ens.completed),
            "discrete_total_agents": int(np.sum(counts0)),
            "pde_mass_rel_drift": abs(pde_stats.mass_final - mass0) / abs(mass0),
        }
        stats_out = {
            "scheme": "implicit_1d" if p.dim == 1 else "explicit_2d",
            "steps": pde_stats.steps,
            "newton_iterations": pde_stats.newton_iterations,
            "newton_max_residual": pde_stats.newton_max_residual,
            "mass_initial": pde_stats.mass_initial,
            "mass_final": pde_stats.mass_final,
            "wall_time_s": pde_stats.wall_time_s,
        }
        return result, stats_out, (pde_snaps, ens, coef)

    def run(self):
        u0, c0, counts0, rounding = build_initial_condition(self.case.init, self.case.params)
        p = resolve_params(self.case.params, c0)
        coef = derive_coefficients(p)
        mass, u_star, c_star = _stability_context(p, coef, u0)

        stream_base = 10_000 * self.case_index
        case_metrics, pde_json, _ = self._run_variant(
            p, u0, c0, counts0, self.n_real, stream_base, prefix="")
        case_metrics["rounding"] = rounding
        case_metrics["params"] = {"chi": coef.chi, "beta_u": coef.beta_u,
                                  "nu": coef.nu, "c_bar": p.c_bar}
        pde_runs = {"generalised": pde_json}

        if self.case.include_classical:
            p_cls = replace(p, variant="classical")
            n_cls = self.case.classical_realizations or self.n_real
            cls_metrics, cls_json, _ = self._run_variant(
                p_cls, u0, c0, counts0, n_cls, stream_base + 5_000,
                prefix="classical_")
            case_metrics["classical"] = cls_metrics
            pde_runs["classical"] = cls_json

        # stability and steady-state reports for this case
        k2m = write_dispersion_csv(self.out / "dispersion.csv", p, coef, u_star)
        lam = _steady.homogeneous_lambda(u_star, c_star, p.u_max, coef.nu)
        ctx = _steady.SteadyStateContext(
            nu=coef.nu, lam=lam, u_max=p.u_max, alpha=p.alpha, kappa=p.kappa,
            beta_c=p.beta_c, length=DOMAIN_LENGTH ** p.dim, mass=mass)
        write_gamma_csv(self.out / "gamma.csv", ctx, 10.0 * c_star)
        case_metrics["stability"] = {
            "u_star": u_star,
            "c_star": c_star,
            "chi": coef.chi,
            "chi_threshold": _stability.chi_threshold(u_star, p, coef),
            "k2_max": k2m,
            "unstable_modes": _stability.unstable_mode_count(DOMAIN_LENGTH, k2m),
        }
        return case_metrics, pde_runs


def run_experiment(manifest: ExperimentManifest, out_root, threads: int = 1) -> dict:
    """Run every case of a manifest; returns the metrics dict after persisting.

    Deterministic in the manifest (including base_seed) regardless of the
    thread count; metrics.json and the CSVs are byte-identical across reruns.
    """
    t0 = _time.perf_counter()
    out_dir = Path(out_root) / manifest.experiment_id
    out_dir.mkdir(parents=True, exist_ok=True)

    metrics = {
        "schema_version": manifest.schema_version,
        "experiment_id": manifest.experiment_id,
        "base_seed": manifest.base_seed,
        "cases": {},
    }
    pde_runs = {}
    for idx, case in enumerate(manifest.cases):
        case_out = out_dir if len(manifest.cases) == 1 else out_dir / case.label
        runner = _CaseRunner(manifest, case, idx, case_out, threads)
        case_metrics, case_pde = runner.run()
        metrics["cases"][case.label] = case_metrics
        pde_runs[case.label] = case_pde

    (out_dir / "manifest.json").write_text(manifest.to_json())
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    pde_runs["total_wall_time_s"] = _time.perf_counter() - t0
    (out_dir / "pde_run.json").write_text(json.dumps(pde_runs, indent=2) + "\n")
    return metrics


def umax_convergence_study(manifest: ExperimentManifest, out_root=None) -> dict:
    """PDE-only ladder study: L2 distance generalised vs classical per u_max.

    Requires the manifest cases to list ascending u_max with eta/u_max
    constant (so chi is shared); the classical twin is run once. Returns the
    distance table and whether it is non-increasing down the ladder.
    """
    u_maxes = [c.params["u_max"] for c in manifest.cases]
    if sorted(u_maxes) != u_maxes:
        raise ValidationError("umax study expects ascending u_max cases")
    ratios = [c.params["eta"] / c.params["u_max"] for c in manifest.cases]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValidationError("umax study expects eta/u_max constant across cases")

    rows = []
    classical = None
    for case in manifest.cases:
        u0, c0, _counts, _r = build_initial_condition(case.init, case.params)
        p = resolve_params(case.params, c0)
        coef = derive_coefficients(p)
        t_end = case.t_end if case.t_end is not None else manifest.t_end
        if classical is None:
            p_cls = replace(p, variant="classical")
            init = FieldPair(u0.copy(), c0.copy(), 0.0, dx=p.h, dt=p.tau)
            cls_snaps, _ = run_pde(p_cls, coef, init, t_end, [t_end])
            classical = cls_snaps[-1]
        init = FieldPair(u0.copy(), c0.copy(), 0.0, dx=p.h, dt=p.tau)
        gen_snaps, _ = run_pde(p, coef, init, t_end, [t_end])
        gen = gen_snaps[-1]
        dist = _metrics.l2_distance(gen.u, classical.u, p.h, p.dim)
        rows.append({
            "u_max": p.u_max,
            "l2_distance": dist,
            "classical_linf": float(np.abs(classical.u).max()),
            "distance_over_classical_linf": dist / float(np.abs(classical.u).max()),
        })
    non_increasing = all(rows[i]["l2_distance"] >= rows[i + 1]["l2_distance"] - 1e-12
                         for i in range(len(rows) - 1))
    table = {"experiment_id": manifest.experiment_id,
             "rows": rows, "non_increasing": non_increasing}
    if out_root is not None:
        out_dir = Path(out_root) / manifest.experiment_id
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "umax_study.json").write_text(json.dumps(table, indent=2) + "\n")
    return table


def stability_report(manifest: ExperimentManifest, out_root) -> dict:
    """Dispersion curve + threshold summary for every case of a manifest."""
    out_dir = Path(out_root) / manifest.experiment_id
    report = {}
    for case in manifest.cases:
        u0, c0, _counts, _r = build_initial_condition(case.init, case.params)
        p = resolve_params(case.params, c0)
        coef = derive_coefficients(p)
        _mass, u_star, _c_star = _stability_context(p, coef, u0)
        case_out = out_dir if len(manifest.cases) == 1 else out_dir / case.label
        k2m = write_dispersion_csv(case_out / "dispersion.csv", p, coef, u_star)
        report[case.label] = {
            "u_star": u_star,
            "chi": coef.chi,
            "chi_threshold": _stability.chi_threshold(u_star, p, coef),
            "k2_max": k2m,
            "unstable_modes": _stability.unstable_mode_count(DOMAIN_LENGTH, k2m),
        }
    (out_dir / "stability_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def gamma_report(manifest: ExperimentManifest, out_root) -> dict:
    """Gamma profile CSV + root census JSON for every case of a manifest."""
    out_dir = Path(out_root) / manifest.experiment_id
    report = {}
    for case in manifest.cases:
        u0, c0, _counts, _r = build_initial_condition(case.init, case.params)
        p = resolve_params(case.params, c0)
        coef = derive_coefficients(p)
        mass, u_star, c_star = _stability_context(p, coef, u0)
        lam = _steady.homogeneous_lambda(u_star, c_star, p.u_max, coef.nu)
        ctx = _steady.SteadyStateContext(
            nu=coef.nu, lam=lam, u_max=p.u_max, alpha=p.alpha, kappa=p.kappa,
            beta_c=p.beta_c, length=DOMAIN_LENGTH ** p.dim, mass=mass)
        case_out = out_dir if len(manifest.cases) == 1 else out_dir / case.label
        write_gamma_csv(case_out / "gamma.csv", ctx, 10.0 * c_star)
        roots = _steady.gamma_roots(ctx, 10.0 * c_star)
        report[case.label] = {"lambda": lam, **roots.to_dict()}
    (out_dir / "gamma_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def resolve_run_target(target: str, paper_scale: bool = False) -> ExperimentManifest:
    """A run target is a built-in experiment id or a manifest file path."""
    from .manifest import BUILTIN_IDS
    if target in BUILTIN_IDS:
        return builtin_manifest(target, paper_scale=paper_scale)
    return load_manifest(target)
