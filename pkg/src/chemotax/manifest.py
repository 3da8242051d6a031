"""Declarative experiment manifests and the built-in experiment catalogue.

A manifest is a JSON document (schema_version 1) describing one experiment:
model parameters, initial-condition spec, snapshot times, realization count
and base seed. All built-in experiments live on the unit interval/square with
N = round(1/h) lattice sites per dimension.

Manifest layout::

    {
      "schema_version": 1,
      "experiment_id": "fig2_base_1d",
      "base_seed": 1225,
      "n_realizations": 5,
      "t_end": 500.0,
      "snapshot_times": [1, 25, 50, 300, 500],
      "retain_realizations": true,
      "cases": [
        {
          "label": "base",
          "include_classical": false,
          "init": {"kind": "uniform_1d", "a": 2e6, "b": 1.0},
          "params": {"eta": 2.4502, "theta": 0.1225, "u_max": 2e6,
                     "zeta": 1.0, "c_bar": null, "beta_c": 2.5e-3,
                     "alpha": 1.0, "kappa": 1.0, "h": 0.01, "tau": 0.01,
                     "dim": 1, "variant": "generalised"}
        }
      ]
    }

``c_bar: null`` means "derive from the initial condition" via
max(max c0, zeta*u_max). Per-case overrides: n_realizations,
classical_realizations, t_end, snapshot_times.

Desk-scale defaults shrink only realization counts and (for 2D) t_end; grid
resolution and 1D final times match the source setup. ``paper_scale=True``
restores the published realization counts and 2D final times.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ValidationError

SCHEMA_VERSION = 1
DEFAULT_SEED = 1225

INIT_KINDS = ("uniform_1d", "uniform_2d", "small_numbers")

BUILTIN_IDS = (
    "fig2_base_1d",
    "fig3_chi_sweep",
    "fig4_mass_sweep_1d",
    "fig5_mass_sweep_2d",
    "fig6_umax_sweep_1d",
    "fig7_umax_sweep_2d",
    "fig8_small_numbers",
)


@dataclass
class ExperimentCase:
    label: str
    params: dict
    init: dict
    include_classical: bool = False
    n_realizations: int | None = None
    classical_realizations: int | None = None
    t_end: float | None = None
    snapshot_times: list | None = None


@dataclass
class ExperimentManifest:
    experiment_id: str
    cases: list
    base_seed: int = DEFAULT_SEED
    n_realizations: int = 1
    t_end: float = 1.0
    snapshot_times: list = field(default_factory=list)
    retain_realizations: bool = True
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        # stable field order for byte-identical serialization
        return {k: d[k] for k in (
            "schema_version", "experiment_id", "base_seed", "n_realizations",
            "t_end", "snapshot_times", "retain_realizations", "cases")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _case_from_dict(d: dict, idx: int) -> ExperimentCase:
    if not isinstance(d, dict):
        raise ValidationError(f"case #{idx} must be an object")
    unknown = set(d) - {"label", "params", "init", "include_classical",
                        "n_realizations", "classical_realizations",
                        "t_end", "snapshot_times"}
    if unknown:
        raise ValidationError(f"case #{idx}: unknown keys {sorted(unknown)}")
    for key in ("label", "params", "init"):
        if key not in d:
            raise ValidationError(f"case #{idx}: missing key {key!r}")
    return ExperimentCase(**d)


def manifest_from_dict(d: dict) -> ExperimentManifest:
    if not isinstance(d, dict):
        raise ValidationError("manifest must be a JSON object")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {version!r}")
    try:
        cases = [_case_from_dict(c, i) for i, c in enumerate(d.get("cases", []))]
        m = ExperimentManifest(
            experiment_id=d["experiment_id"],
            cases=cases,
            base_seed=int(d.get("base_seed", DEFAULT_SEED)),
            n_realizations=int(d.get("n_realizations", 1)),
            t_end=float(d.get("t_end", 1.0)),
            snapshot_times=list(d.get("snapshot_times", [])),
            retain_realizations=bool(d.get("retain_realizations", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed manifest: {exc}") from exc
    validate_manifest(m)
    return m


def load_manifest(path) -> ExperimentManifest:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"manifest file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data)


def validate_manifest(m: ExperimentManifest):
    if not m.experiment_id:
        raise ValidationError("experiment_id must be non-empty")
    if m.n_realizations < 1:
        raise ValidationError("n_realizations must be >= 1")
    if m.t_end <= 0:
        raise ValidationError("t_end must be positive")
    if not m.cases:
        raise ValidationError("manifest needs at least one case")
    labels = [c.label for c in m.cases]
    if len(set(labels)) != len(labels):
        raise ValidationError("case labels must be unique")
    for case in m.cases:
        kind = case.init.get("kind")
        if kind not in INIT_KINDS:
            raise ValidationError(f"case {case.label!r}: unknown init kind {kind!r}")
        t_end = case.t_end if case.t_end is not None else m.t_end
        for t in case.snapshot_times if case.snapshot_times is not None else m.snapshot_times:
            if t > t_end + 1e-12:
                raise ValidationError(
                    f"case {case.label!r}: snapshot time {t} beyond t_end {t_end}")
        p = case.params
        for key in ("eta", "theta", "u_max", "zeta", "beta_c", "alpha",
                    "kappa", "h", "tau", "dim", "variant"):
            if key not in p:
                raise ValidationError(f"case {case.label!r}: params missing {key!r}")
        dim = p["dim"]
        if kind == "uniform_2d" and dim != 2 or kind != "uniform_2d" and dim == 2:
            raise ValidationError(
                f"case {case.label!r}: init kind {kind!r} does not match dim {dim}")


def _params_1d(eta, u_max, theta=0.1225):
    return {"eta": eta, "theta": theta, "u_max": u_max, "zeta": 1.0,
            "c_bar": None, "beta_c": 2.5e-3, "alpha": 1.0, "kappa": 1.0,
            "h": 0.01, "tau": 0.01, "dim": 1, "variant": "generalised"}


def _params_2d(eta, u_max, theta):
    return {"eta": eta, "theta": theta, "u_max": u_max, "zeta": 1.0,
            "c_bar": None, "beta_c": 2.5e-3, "alpha": 1.0, "kappa": 1.0,
            "h": 1.0 / 51.0, "tau": 1e-4, "dim": 2, "variant": "generalised"}


def builtin_manifest(experiment_id: str, paper_scale: bool = False) -> ExperimentManifest:
    """Materialise one of the seven built-in experiments."""
    if experiment_id == "fig2_base_1d":
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=5,
            t_end=500.0,
            snapshot_times=[1.0, 25.0, 50.0, 300.0, 500.0],
            cases=[ExperimentCase(
                label="base",
                params=_params_1d(eta=2.4502, u_max=2e6),
                init={"kind": "uniform_1d", "a": 2e6, "b": 1.0})],
        )
    if experiment_id == "fig3_chi_sweep":
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=5 if paper_scale else 2,
            t_end=500.0,
            snapshot_times=[500.0],
            cases=[ExperimentCase(
                label=f"eta_{eta:g}",
                params=_params_1d(eta=eta, u_max=2e6),
                init={"kind": "uniform_1d", "a": 2e6, "b": 1.0})
                for eta in (0.9801, 4.9005, 294.03)],
        )
    if experiment_id == "fig4_mass_sweep_1d":
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=5 if paper_scale else 2,
            t_end=500.0,
            snapshot_times=[500.0],
            cases=[ExperimentCase(
                label=f"b_{b:g}",
                params=_params_1d(eta=2.4502, u_max=4e5),
                init={"kind": "uniform_1d", "a": 4e5, "b": b})
                for b in (0.25, 1.0, 5.0)],
        )
    if experiment_id == "fig5_mass_sweep_2d":
        t_end = 15.0 if paper_scale else 1.0
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=2 if paper_scale else 1,
            t_end=t_end,
            snapshot_times=[t_end],
            cases=[ExperimentCase(
                label=f"b_{b:g}",
                params=_params_2d(eta=2.4502, u_max=1e7, theta=2.5e-2),
                init={"kind": "uniform_2d", "a": 1e7, "b": b},
                n_realizations=(1 if b == 2.0 else None) if paper_scale else None)
                for b in (0.1, 1.0, 2.0)],
        )
    if experiment_id == "fig6_umax_sweep_1d":
        ratio = 1.225e-6  # eta/u_max held constant across the ladder
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=30 if paper_scale else 2,
            t_end=500.0,
            snapshot_times=[500.0],
            cases=[ExperimentCase(
                label=f"umax_{u_max:g}",
                params=_params_1d(eta=ratio * u_max, u_max=u_max),
                init={"kind": "uniform_1d", "a": 2e6, "b": 1.0},
                include_classical=True,
                classical_realizations=10 if paper_scale else 2)
                for u_max in (2e6, 2e7, 2e9)],
        )
    if experiment_id == "fig7_umax_sweep_2d":
        ratio = 2.4502e-7
        t_end = 5.0 if paper_scale else 0.5
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=1,
            t_end=t_end,
            snapshot_times=[t_end],
            cases=[ExperimentCase(
                label=f"umax_{u_max:g}",
                params=_params_2d(eta=ratio * u_max, u_max=u_max, theta=0.125),
                init={"kind": "uniform_2d", "a": 1e7, "b": 1.0},
                include_classical=True,
                n_realizations=2 if (paper_scale and u_max == 1e8) else None,
                classical_realizations=1)
                for u_max in (1e8, 1e10, 1e11)],
        )
    if experiment_id == "fig8_small_numbers":
        return ExperimentManifest(
            experiment_id=experiment_id,
            n_realizations=5,
            t_end=500.0,
            snapshot_times=[500.0],
            cases=[ExperimentCase(
                label=f"a0_{a0:g}",
                params=_params_1d(eta=2.4502, u_max=2.0 * a0),
                init={"kind": "small_numbers", "a0": a0})
                for a0 in (1e5, 1e4, 1e3, 1e2)],
        )
    raise ValidationError(
        f"unknown experiment id {experiment_id!r}; known: {', '.join(BUILTIN_IDS)}")
