"""Steady-state machinery: Lambert W, the density-concentration inversion,
the scalar function Gamma organising the phase plane, and its root census.

Stationary profiles of the generalised model satisfy
``u exp(u/u_max) = lambda exp(nu c)`` with nu = chi/beta_u and lambda > 0
fixed by mass conservation. Inverting gives
``u = u_max * W0((lambda/u_max) exp(nu c))`` on the principal branch, and the
concentration profile solves ``beta_c c'' = Gamma(c)`` with
``Gamma(c) = kappa c - alpha u_max W0((lambda/u_max) exp(nu c))``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


def lambert_w0_exp(y):
    """Principal-branch W(e^y) for real y, overflow-safe.

    Solves w + ln w = y by safeguarded Newton from the asymptotic guess
    w0 = y - ln y (w0 = e^y when y <= 1, where that guess collapses).
    Works for arbitrarily large y, where e^y itself would overflow; this is
    the documented large-argument evaluation route for every function below.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    w = np.where(y > 1.0, y - np.log(np.maximum(y, 1.0 + 1e-300)), np.exp(np.minimum(y, 1.0)))
    # exp(y) underflows for y <~ -745: W is e^y to machine precision there.
    tiny = w == 0.0
    w = np.where(tiny, 1.0, w)
    for _ in range(100):
        g = w + np.log(w) - y
        step = g * w / (w + 1.0)
        w_new = w - step
        # keep the iterate positive; g is monotone so halving always recovers
        w_new = np.where(w_new <= 0.0, 0.5 * w, w_new)
        done = np.abs(w_new - w) <= 2e-16 * (1.0 + np.abs(w_new))
        w = w_new
        if done.all():
            break
    w = np.where(tiny, 0.0, w)
    return float(w[0]) if scalar else w


def lambert_w0(z):
    """Principal-branch Lambert W on z >= 0: w >= 0 with w e^w = z.

    Only the non-negative real axis is needed by the model (branch -1 is out
    of scope); negative arguments raise. Small arguments use the Taylor
    series about 0 (down to w = z - z^2 below 2e-7, where higher terms are
    sub-ulp); everything else goes through ``lambert_w0_exp(log z)`` with a
    final direct Halley polish. Relative accuracy ~1e-15.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(z < 0):
        raise ValueError("lambert_w0: argument must be non-negative")
    w = np.zeros_like(z)

    tiny = z <= 2e-7
    zt = z[tiny]
    w[tiny] = zt - zt * zt

    small = (z > 2e-7) & (z <= 1e-4)
    zs = z[small]
    w[small] = zs - zs * zs + 1.5 * zs ** 3 - (8.0 / 3.0) * zs ** 4 + (125.0 / 24.0) * zs ** 5

    rest = z > 1e-4
    if rest.any():
        w[rest] = lambert_w0_exp(np.log(z[rest]))
        # Halley steps in the direct form w e^w - z sharpen the last ulp
        wp, zp = w[rest], z[rest]
        safe = wp < 700.0
        for _ in range(2):
            ew = np.exp(np.where(safe, wp, 0.0))
            f = np.where(safe, wp * ew - zp, 0.0)
            w1 = wp + 1.0
            denom = ew * w1 - (wp + 2.0) * f / (2.0 * w1)
            wp = np.where(safe, wp - f / denom, wp)
        w[rest] = wp
    return float(w[0]) if scalar else w


@dataclass(frozen=True)
class SteadyStateContext:
    """Constants entering the stationary relations for one configuration."""

    nu: float          # chi / beta_u
    lam: float         # mass-fixing constant lambda
    u_max: float
    alpha: float
    kappa: float
    beta_c: float
    length: float      # domain measure |Omega|
    mass: float        # conserved total cell mass M

    def __post_init__(self):
        for name in ("lam", "u_max", "kappa", "beta_c", "length", "mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.alpha < 0:  # alpha = 0 degenerates Gamma to kappa*c, still valid
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")


def homogeneous_steady_state(alpha: float, kappa: float, mass: float, volume: float):
    """The unique positive homogeneous equilibrium (u*, c*) = (M/|O|, (a/k) M/|O|)."""
    if mass <= 0 or volume <= 0:
        raise ValueError("mass and volume must be positive")
    u_star = mass / volume
    return u_star, (alpha / kappa) * u_star


def homogeneous_lambda(u_star: float, c_star: float, u_max: float, nu: float) -> float:
    """lambda making the stationary relation hold exactly at (u*, c*)."""
    return u_star * np.exp(u_star / u_max - nu * c_star)


def u_infinity_of_c(c, ctx: SteadyStateContext):
    """Stationary density u_inf(c) = u_max W0((lambda/u_max) exp(nu c)).

    Strictly increasing in c. Evaluated in log form, so nu*c far beyond 700
    (where exp overflows) is handled through the asymptotic-seeded Newton in
    ``lambert_w0_exp``.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("u_infinity_of_c: negative concentration")
    y = np.log(ctx.lam / ctx.u_max) + ctx.nu * c
    return ctx.u_max * lambert_w0_exp(y)


def lambda_from_mass(profile_c, dx: float, mass: float, nu: float, u_max: float) -> float:
    """Fit lambda > 0 so the stationary density integrates to ``mass``.

    The trapezoid-rule integral of u_max W0((lambda/u_max) exp(nu c)) over the
    grid is strictly increasing in lambda (0 at lambda=0, unbounded), so a
    bracketed bisection always converges; the returned lambda reproduces the
    mass to better than 1e-10 relative.
    """
    if mass <= 0:
        raise ValueError("mass must be positive")
    c = np.asarray(profile_c, dtype=float)
    weights = np.full(c.shape, dx)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    nu_c = nu * c  # exponent part independent of lambda

    def integral(lam):
        y = np.log(lam / u_max) + nu_c
        return float(np.sum(weights * u_max * lambert_w0_exp(y)))

    # initial guess from the homogeneous closed form, then geometric bracketing
    u_mean = mass / float(np.sum(weights))
    lam = homogeneous_lambda(u_mean, float(np.mean(c)), u_max, nu)
    lo, hi = lam, lam
    while integral(lo) > mass:
        lo *= 0.5
        if lo < 1e-290:
            break
    while integral(hi) < mass:
        hi *= 2.0
        if hi > 1e290:
            raise ValueError("lambda_from_mass: bracketing failed")
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if integral(mid) < mass:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return float(np.sqrt(lo * hi))


def gamma(c, ctx: SteadyStateContext):
    """Gamma(c) = kappa c - alpha u_max W0((lambda/u_max) exp(nu c)).

    Gamma(0) < 0 for every lambda > 0; roots of Gamma are the equilibria of
    the phase-plane system for the stationary concentration profile.
    """
    c = np.asarray(c, dtype=float)
    y = np.log(ctx.lam / ctx.u_max) + ctx.nu * c
    out = ctx.kappa * c - ctx.alpha * ctx.u_max * lambert_w0_exp(y)
    return out if out.ndim else float(out)


@dataclass
class GammaRootReport:
    """Non-negative roots of Gamma with saddle/centre classification.

    A root with Gamma' > 0 is a saddle of the phase-plane system, one with
    Gamma' < 0 a centre. Zero, one or two roots are the regimes observed.
    """

    roots: list = field(default_factory=list)
    classifications: list = field(default_factory=list)
    scan_max: float = 0.0
    n_scan: int = 0
    unresolved_tail: bool = False   # Gamma still negative at the scan end

    def to_dict(self) -> dict:
        return {
            "roots": list(map(float, self.roots)),
            "classifications": list(self.classifications),
            "scan_max": float(self.scan_max),
            "n_scan": int(self.n_scan),
            "unresolved_tail": bool(self.unresolved_tail),
        }


def gamma_roots(ctx: SteadyStateContext, c_max_scan: float, n_scan: int = 10_000) -> GammaRootReport:
    """Sign-change scan of Gamma on [0, c_max_scan] with bisection refinement.

    Each reported root r satisfies |Gamma(r)| < 1e-10 * scale, where scale is
    the largest |Gamma| seen on the scan grid. Warns when Gamma is still
    negative at c_max_scan, since roots beyond the scan cannot be excluded.
    """
    if c_max_scan <= 0 or n_scan < 2:
        raise ValueError("need c_max_scan > 0 and n_scan >= 2")
    grid = np.linspace(0.0, c_max_scan, n_scan)
    vals = gamma(grid, ctx)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        scale = 1.0
    tol = 1e-10 * scale

    roots = []
    exact = np.flatnonzero(np.abs(vals) <= tol)
    for idx in exact:
        roots.append(float(grid[idx]))
    sign_change = np.flatnonzero((vals[:-1] * vals[1:]) < 0)
    for idx in sign_change:
        a, b = grid[idx], grid[idx + 1]
        fa = float(vals[idx])
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = float(gamma(m, ctx))
            if abs(fm) < tol:
                a = b = m
                break
            if fa * fm < 0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))

    roots = sorted(set(roots))
    # merge near-duplicates from an exact grid hit adjoining a sign change
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > c_max_scan / (10 * n_scan):
            merged.append(r)
    delta = c_max_scan / (10.0 * n_scan)
    classifications = []
    for r in merged:
        slope = (gamma(r + delta, ctx) - gamma(max(r - delta, 0.0), ctx))
        classifications.append("saddle" if slope > 0 else "centre")

    unresolved = bool(vals[-1] < -tol)
    if unresolved:
        warnings.warn(
            "gamma_roots: Gamma(c_max_scan) < 0; roots beyond the scan range "
            "cannot be excluded",
            RuntimeWarning,
            stacklevel=2,
        )
    return GammaRootReport(
        roots=merged,
        classifications=classifications,
        scan_max=c_max_scan,
        n_scan=n_scan,
        unresolved_tail=unresolved,
    )


def phase_plane_rhs(cw, ctx: SteadyStateContext):
    """Right-hand side of c' = w, w' = Gamma(c)/beta_c."""
    c, w = cw
    return w, float(gamma(c, ctx)) / ctx.beta_c
