"""Agent-based biased random walk with volume filling on a regular lattice,
coupled to an explicit chemoattractant balance. 1D and 2D, zero-flux borders.

Update rule for one time step (synchronous, order-independent):

1. Every agent draws a chemotaxis move and an undirected move as two
   independent categorical draws. Both use probabilities of the agent's
   origin site evaluated on the frozen step-k density and chemo fields
   (this is what makes the two draws independent); the probability of any
   off-lattice direction is 0.
2. The two displacements are applied sequentially, chemotaxis first, each
   hop aborted if it would leave the domain.
3. All positions updated, the new density enters the chemo balance
   c <- c + tau (beta_c Lap c + alpha u - kappa c) with mirrored ghosts.

Because the draw probabilities depend only on the origin site, the agents at
one site are exchangeable and their moves are sampled exactly as nested
binomial splits of the site count; trajectories are reproducible bit-for-bit
from (seed, stream_id).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ProbabilityOverflowError
from .params import DerivedCoefficients, ParamSet, psi

_DIRS = {1: ((-1,), (1,)), 2: ((-1, 0), (1, 0), (0, -1), (0, 1))}


class ExplicitDiffusionWarning(RuntimeWarning):
    """tau beta_c / h^2 beyond the explicit-diffusion stability bound."""


@dataclass(frozen=True)
class RngStream:
    """Reproducible, splittable randomness: one stream per realization."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)


@dataclass
class LatticeState:
    """Per-site agent counts and chemoattractant concentrations."""

    counts: np.ndarray     # int64, shape (N,) or (N, N)
    chemo: np.ndarray      # float64, same shape
    h: float
    step_index: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.chemo = np.asarray(self.chemo, dtype=float)
        if self.counts.shape != self.chemo.shape:
            raise ValueError("counts and chemo must share a shape")
        if self.counts.ndim not in (1, 2):
            raise ValueError("state must be 1D or 2D")
        if (self.counts < 0).any():
            raise ValueError("negative agent count")
        if (self.chemo < 0).any():
            raise ValueError("negative chemo concentration")

    @property
    def dim(self) -> int:
        return self.counts.ndim

    def density(self) -> np.ndarray:
        return density_of(self.counts, self.h, self.dim)

    def total_agents(self) -> int:
        return int(self.counts.sum())


def density_of(counts, h: float, dim: int) -> np.ndarray:
    """Cell density from counts: counts/h in 1D, counts/h^2 in 2D."""
    return np.asarray(counts, dtype=float) / h ** dim


def _shift(a: np.ndarray, d: tuple, fill: float = 0.0) -> np.ndarray:
    """Array whose entry at site s is a[s + d], fill where s + d is off-lattice."""
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    for axis, step in enumerate(d):
        if step == 1:
            src[axis], dst[axis] = slice(1, None), slice(None, -1)
        elif step == -1:
            src[axis], dst[axis] = slice(None, -1), slice(1, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _in_bounds_mask(shape, d) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    for axis, step in enumerate(d):
        idx = [slice(None)] * len(shape)
        if step == 1:
            idx[axis] = -1
        elif step == -1:
            idx[axis] = 0
        else:
            continue
        mask[tuple(idx)] = False
    return mask


def _check_overflow(dir_probs, process: str, step: int):
    total = np.zeros_like(dir_probs[0])
    for p_d in dir_probs:
        total = total + p_d
    if (total > 1.0).any():
        site_flat = int(np.argmax(total))
        site = np.unravel_index(site_flat, total.shape)
        site = int(site[0]) if len(site) == 1 else tuple(int(s) for s in site)
        raise ProbabilityOverflowError(process, site, step, float(total.max()))
    return total


def chemo_move_probs(state: LatticeState, p: ParamSet):
    """Chemotactic step probabilities for every site.

    Returns (dir_probs, stay): dir_probs is a list over directions
    (1D: left, right; 2D: -x, +x, -y, +y) of per-site probabilities
    eta * psi(u_dest) * (c_dest - c_here)_+ / (2 dim c_bar); off-lattice
    directions get 0. Raises ProbabilityOverflowError when the directional
    probabilities sum above 1 anywhere, which flags parameter sets violating
    the eta*psi <= 1 feasibility assumption in effect.
    """
    u = state.density()
    psi_u = np.asarray(psi(u, p))
    c = state.chemo
    divisor = 2.0 * state.dim * p.c_bar
    dir_probs = []
    for d in _DIRS[state.dim]:
        psi_dest = _shift(psi_u, d)
        dc = _shift(c, d) - c
        prob = p.eta * psi_dest * np.maximum(dc, 0.0) / divisor
        prob *= _in_bounds_mask(c.shape, d)
        dir_probs.append(prob)
    stay = 1.0 - _check_overflow(dir_probs, "chemotaxis", state.step_index)
    return dir_probs, stay


def diffusion_move_probs(state: LatticeState, p: ParamSet):
    """Undirected step probabilities: (theta / 2 dim) * psi(u_dest) per
    direction, 0 off-lattice. Cannot overflow for theta <= 1 and psi <= 1;
    checked anyway."""
    u = state.density()
    psi_u = np.asarray(psi(u, p))
    base = p.theta / (2.0 * state.dim)
    dir_probs = []
    for d in _DIRS[state.dim]:
        prob = base * _shift(psi_u, d)
        prob *= _in_bounds_mask(psi_u.shape, d)
        dir_probs.append(prob)
    stay = 1.0 - _check_overflow(dir_probs, "diffusion", state.step_index)
    return dir_probs, stay


def _split_counts(n: np.ndarray, dir_probs, rng: np.random.Generator):
    """Split site counts into per-direction groups plus the stay remainder.

    Nested conditional binomials, equivalent to one multinomial draw per
    site. The draw order over directions is fixed, so trajectories are
    deterministic in (seed, stream_id).
    """
    rem = n
    consumed = np.zeros_like(dir_probs[0])
    groups = []
    for p_d in dir_probs:
        denom = 1.0 - consumed
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.where(denom > 0.0, p_d / denom, 0.0)
        cond = np.clip(cond, 0.0, 1.0)
        g = rng.binomial(rem, cond)
        groups.append(g)
        rem = rem - g
        consumed = consumed + p_d
    return groups, rem


def _destination_indices(shape, dirs):
    """Flat destination index per site for every (chemo, diffusion) move pair.

    The first hop never leaves the domain (off-lattice probabilities are 0),
    so the sequential abort rule reduces to clipping site + dc + dd per axis.
    """
    dim = len(shape)
    coords = np.indices(shape)
    moves = list(dirs) + [(0,) * dim]
    table = {}
    for ic, dc in enumerate(moves):
        for id_, dd in enumerate(moves):
            dest = [np.clip(coords[a] + dc[a] + dd[a], 0, shape[a] - 1) for a in range(dim)]
            table[(ic, id_)] = np.ravel_multi_index(dest, shape).ravel()
    return table


_DEST_CACHE: dict = {}


def step_cells(state: LatticeState, p: ParamSet, rng: np.random.Generator,
               mirror: bool = False) -> np.ndarray:
    """One synchronous movement step; returns the updated counts.

    ``mirror=True`` reflects the lattice along the x axis before sampling and
    reflects back afterwards, i.e. it mirrors the RNG directional mapping:
    with matched seeds, a mirrored initial state run with mirror=True yields
    exactly the mirror image of the plain run.
    """
    counts, chemo = state.counts, state.chemo
    if mirror:
        counts, chemo = counts[::-1].copy(), chemo[::-1].copy()
        state = LatticeState(counts, chemo, state.h, state.step_index)

    j_probs, _ = chemo_move_probs(state, p)
    t_probs, _ = diffusion_move_probs(state, p)

    chemo_groups, chemo_stay = _split_counts(counts, j_probs, rng)
    chemo_groups.append(chemo_stay)

    key = (counts.shape, state.dim)
    if key not in _DEST_CACHE:
        _DEST_CACHE[key] = _destination_indices(counts.shape, _DIRS[state.dim])
    dest = _DEST_CACHE[key]

    new_counts = np.zeros_like(counts)
    flat = new_counts.ravel()
    for ic, group in enumerate(chemo_groups):
        diff_groups, diff_stay = _split_counts(group, t_probs, rng)
        diff_groups.append(diff_stay)
        for id_, g in enumerate(diff_groups):
            np.add.at(flat, dest[(ic, id_)], g.ravel())

    if mirror:
        new_counts = new_counts[::-1].copy()
        total_before = int(state.counts.sum())
    else:
        total_before = state.total_agents()
    assert int(new_counts.sum()) == total_before, "agent count not conserved"
    assert (new_counts >= 0).all()
    return new_counts


def laplacian(a: np.ndarray, h: float) -> np.ndarray:
    """Finite-difference Laplacian with mirrored (zero-flux) ghost values.

    Neighbour sums are grouped as (left+right) before subtracting the centre,
    which makes the evaluation exactly mirror-symmetric in floating point.
    """
    padded = np.pad(a, 1, mode="edge")
    if a.ndim == 1:
        lap = (padded[2:] + padded[:-2]) - 2.0 * a
    else:
        lap = ((padded[2:, 1:-1] + padded[:-2, 1:-1])
               + (padded[1:-1, 2:] + padded[1:-1, :-2]) - 4.0 * a)
    return lap / h ** 2


def step_chemo(state: LatticeState, p: ParamSet) -> np.ndarray:
    """Explicit chemo balance on the state's current density; returns new chemo.

    c^{k+1} = c^k + tau (beta_c Lap c^k + alpha u^k - kappa c^k). Warns when
    tau beta_c / h^2 exceeds the explicit-diffusion stability bound 1/(2 dim).
    """
    if p.tau * p.beta_c / p.h ** 2 > 1.0 / (2.0 * state.dim):
        warnings.warn(
            "explicit chemo update outside its stability bound "
            f"(tau*beta_c/h^2 = {p.tau * p.beta_c / p.h ** 2:.3g})",
            ExplicitDiffusionWarning,
            stacklevel=2,
        )
    u = state.density()
    c = state.chemo
    c_new = c + p.tau * (p.beta_c * laplacian(c, p.h) + p.alpha * u - p.kappa * c)
    assert (c_new >= 0.0).all(), "chemo went negative"
    return c_new


@dataclass
class LatticeSnapshot:
    step: int
    time: float
    counts: np.ndarray
    chemo: np.ndarray
    density: np.ndarray


def run_realization(p: ParamSet, init_counts, init_chemo, n_steps: int,
                    rng_stream: RngStream, snapshot_steps,
                    mirror: bool = False) -> list:
    """Advance one realization, returning snapshots at the requested steps."""
    state = LatticeState(np.array(init_counts, dtype=np.int64),
                         np.array(init_chemo, dtype=float), p.h)
    rng = rng_stream.generator()
    wanted = sorted(set(int(s) for s in snapshot_steps))
    out = []

    def record(k):
        out.append(LatticeSnapshot(step=k, time=k * p.tau,
                                   counts=state.counts.copy(),
                                   chemo=state.chemo.copy(),
                                   density=state.density()))

    if wanted and wanted[0] == 0:
        record(0)
    for k in range(1, n_steps + 1):
        state.counts = step_cells(state, p, rng, mirror=mirror)
        state.chemo = step_chemo(state, p)
        state.step_index = k
        if k in wanted:
            record(k)
    return out


@dataclass
class EnsembleResult:
    """Ensemble means over realizations at shared snapshot steps."""

    snapshot_steps: list
    times: list
    mean_density: dict            # step -> array
    mean_chemo: dict              # step -> array
    n_realizations: int
    completed: list               # stream ids that finished
    incidents: list = field(default_factory=list)   # overflow records
    per_realization: list | None = None             # list of snapshot lists


def run_ensemble(p: ParamSet, init_counts, init_chemo, n_steps: int,
                 snapshot_steps, n_realizations: int, base_seed: int,
                 stream_offset: int = 0, retain: bool = True,
                 error_policy: str = "raise", threads: int = 1) -> EnsembleResult:
    """Independent realizations on distinct RNG streams, averaged per snapshot.

    Deterministic given base_seed regardless of ``threads``. With
    ``error_policy="record"`` a realization aborted by a probability overflow
    is excluded from the means and logged in ``incidents`` instead of raising.
    """
    wanted = sorted(set(int(s) for s in snapshot_steps))
    results: list = [None] * n_realizations
    incidents = []

    def one(r):
        stream = RngStream(seed=base_seed, stream_id=stream_offset + r)
        return run_realization(p, init_counts, init_chemo, n_steps, stream, wanted)

    def guarded(r):
        try:
            results[r] = one(r)
        except ProbabilityOverflowError as exc:
            if error_policy != "record":
                raise
            incidents.append({"realization": r, "process": exc.process,
                              "site": exc.site, "step": exc.step,
                              "total": exc.total})

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(guarded, range(n_realizations)))
    else:
        for r in range(n_realizations):
            guarded(r)

    completed = [r for r in range(n_realizations) if results[r] is not None]
    mean_density, mean_chemo = {}, {}
    for i, step in enumerate(wanted):
        if completed:
            mean_density[step] = np.mean([results[r][i].density for r in completed], axis=0)
            mean_chemo[step] = np.mean([results[r][i].chemo for r in completed], axis=0)
    return EnsembleResult(
        snapshot_steps=wanted,
        times=[s * p.tau for s in wanted],
        mean_density=mean_density,
        mean_chemo=mean_chemo,
        n_realizations=n_realizations,
        completed=completed,
        incidents=sorted(incidents, key=lambda d: d["realization"]),
        per_realization=[results[r] for r in completed] if retain else None,
    )
