"""Model parameters, volume-filling closure functions and the
discrete-to-continuum coefficient mapping.

Every other module consumes this one. A ``ParamSet`` collects the physical
and numerical constants of one model configuration; ``derive_coefficients``
turns it into the continuum pair (chi, beta_u) so the lattice model and the
PDE solver provably share identical coefficients.

Two model variants are supported:

* ``"generalised"`` -- volume filling, psi(u) = exp(-u/u_max) and
  D(u) = psi(u) - u psi'(u) = exp(-u/u_max)(1 + u/u_max);
* ``"classical"``   -- psi == 1 and D == 1 (no crowding effects).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANTS = ("generalised", "classical")


@dataclass(frozen=True)
class ParamSet:
    """Physical and numerical constants of one model configuration.

    Densities are cells/length^dim, concentrations share the units of c_bar.
    eta may exceed 1 (the Appendix-B sweeps go up to 294.03); feasibility of
    the resulting movement probabilities is enforced at runtime by the
    lattice stepper, not here.
    """

    eta: float            # chemotactic step weight
    theta: float          # probability of an undirected movement attempt, in (0, 1]
    u_max: float          # critical cell density
    zeta: float           # unit-consistency scaling factor in the c_bar definition
    c_bar: float          # chemo normalisation concentration
    beta_c: float         # chemoattractant diffusivity
    alpha: float          # chemo production rate per unit density
    kappa: float          # chemo decay rate
    h: float              # lattice step
    tau: float            # time step
    dim: int = 1          # spatial dimension, 1 or 2
    variant: str = "generalised"

    def __post_init__(self):
        for name in ("h", "tau", "u_max", "c_bar", "zeta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        # zero rates are permitted for degenerate configurations (pure decay,
        # pure diffusion); every built-in experiment uses positive values
        for name in ("eta", "beta_c", "alpha", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta!r}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True)
class DerivedCoefficients:
    """Continuum coefficients obtained from a ParamSet.

    nu = chi/beta_u is the ratio that controls the steady-state relation
    u exp(u/u_max) = lambda exp(nu c).
    """

    chi: float
    beta_u: float
    nu: float


def psi(u, p: ParamSet):
    """Volume-filling weight psi(u).

    exp(-u/u_max) for the generalised variant, identically 1 for the
    classical one. Accepts scalars or arrays; u must be non-negative.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("psi: negative density")
    if p.variant == "classical":
        out = np.ones_like(u)
    else:
        out = np.exp(-u / p.u_max)
    return out if out.ndim else float(out)


def big_d(u, p: ParamSet):
    """Diffusivity factor D(u) = psi(u) - u psi'(u).

    Closed form exp(-u/u_max)(1 + u/u_max) for the generalised variant,
    identically 1 for the classical one.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("big_d: negative density")
    if p.variant == "classical":
        out = np.ones_like(u)
    else:
        r = u / p.u_max
        out = np.exp(-r) * (1.0 + r)
    return out if out.ndim else float(out)


def psi_prime(u, p: ParamSet):
    """Derivative psi'(u); needed by the implicit-scheme Jacobian."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("psi_prime: negative density")
    if p.variant == "classical":
        out = np.zeros_like(u)
    else:
        out = -np.exp(-u / p.u_max) / p.u_max
    return out if out.ndim else float(out)


def derive_coefficients(p: ParamSet) -> DerivedCoefficients:
    """Map lattice parameters to the continuum pair (chi, beta_u).

    1D: chi = eta h^2 / (2 tau c_bar),  beta_u = theta h^2 / (2 tau).
    2D: the divisor becomes 4 tau (consistent with the four-direction walk).
    """
    denom = 2.0 * p.dim * p.tau
    chi = p.eta * p.h ** 2 / (denom * p.c_bar)
    beta_u = p.theta * p.h ** 2 / denom
    return DerivedCoefficients(chi=chi, beta_u=beta_u, nu=chi / beta_u)


def c_bar_from_initial(c0_max: float, zeta: float, u_max: float) -> float:
    """Chemo normalisation: max of the initial peak concentration and zeta*u_max."""
    if c0_max < 0:
        raise ValueError("c0_max must be non-negative")
    return max(c0_max, zeta * u_max)
