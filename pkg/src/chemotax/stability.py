"""Linear stability of the homogeneous steady state.

Perturbing (u*, c*) with a Laplace eigenmode of squared wavenumber k^2 and
growth rate sigma leads to the characteristic quadratic

    sigma^2 + [k^2 (beta_u D* + beta_c) + kappa] sigma
            + k^4 beta_u beta_c D* + k^2 (kappa beta_u D* - alpha chi u* psi*) = 0

with D* = D(u*), psi* = psi(u*). Patterns grow when some root has positive
real part, which happens for an interval 0 < k^2 < k2_max once chi exceeds
the threshold kappa beta_u D* / (alpha u* psi*).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import DerivedCoefficients, ParamSet, big_d, psi


@dataclass(frozen=True)
class DispersionResult:
    k2: float
    sigma: tuple          # the two (possibly complex) roots of the quadratic
    unstable: bool        # max Re sigma > 0


def _quadratic_roots(b: float, c: float):
    """Roots of x^2 + b x + c with the sign-aware formula (monic quadratic)."""
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        if b >= 0.0:
            q = -0.5 * (b + sq)
        else:
            q = -0.5 * (b - sq)
        if q != 0.0:
            return complex(q), complex(c / q)
        return complex(0.0), complex(-b)
    sq = math.sqrt(-disc)
    return complex(-0.5 * b, 0.5 * sq), complex(-0.5 * b, -0.5 * sq)


def dispersion(k2: float, u_star: float, p: ParamSet, coef: DerivedCoefficients) -> DispersionResult:
    """Both growth-rate roots sigma(k^2) and the instability flag."""
    if k2 < 0:
        raise ValueError("k2 must be non-negative")
    if u_star <= 0:
        raise ValueError("u_star must be positive")
    d_star = big_d(u_star, p)
    psi_star = psi(u_star, p)
    b = k2 * (coef.beta_u * d_star + p.beta_c) + p.kappa
    c = (k2 * k2 * coef.beta_u * p.beta_c * d_star
         + k2 * (p.kappa * coef.beta_u * d_star - p.alpha * coef.chi * u_star * psi_star))
    r1, r2 = _quadratic_roots(b, c)
    return DispersionResult(k2=k2, sigma=(r1, r2), unstable=max(r1.real, r2.real) > 0.0)


def chi_threshold(u_star: float, p: ParamSet, coef: DerivedCoefficients) -> float:
    """Critical chemotactic sensitivity above which patterns can grow.

    kappa beta_u D(u*) / (alpha u* psi(u*)); for the generalised closure this
    equals kappa beta_u (1 + u*/u_max) / (alpha u*), and for the classical
    variant it reduces to kappa beta_u / (alpha u*). coef.chi is not used.
    """
    if u_star <= 0:
        raise ValueError("u_star must be positive")
    d_star = big_d(u_star, p)
    psi_star = psi(u_star, p)
    return p.kappa * coef.beta_u * d_star / (p.alpha * u_star * psi_star)


def k2_max(u_star: float, p: ParamSet, coef: DerivedCoefficients) -> float:
    """Upper end of the unstable squared-wavenumber window; 0 when stable."""
    if u_star <= 0:
        raise ValueError("u_star must be positive")
    d_star = big_d(u_star, p)
    psi_star = psi(u_star, p)
    num = p.alpha * coef.chi * u_star * psi_star - p.kappa * coef.beta_u * d_star
    if num <= 0.0:
        return 0.0
    return num / (coef.beta_u * p.beta_c * d_star)


def unstable_mode_count(length: float, k2max: float) -> int:
    """Number of Neumann modes m >= 1 on (0, L) with (m pi / L)^2 < k2max."""
    if length <= 0:
        raise ValueError("length must be positive")
    if k2max <= 0:
        return 0
    m = int(math.floor(math.sqrt(k2max) * length / math.pi))
    while m >= 1 and (m * math.pi / length) ** 2 >= k2max:
        m -= 1
    return m
