import numpy as np
import pytest

from chemotax import (DerivedCoefficients, ParamSet, big_d, chi_threshold,
                      derive_coefficients, dispersion, k2_max, psi,
                      unstable_mode_count)


def base_params(**overrides):
    kw = dict(eta=2.4502, theta=0.1225, u_max=2e6, zeta=1.0, c_bar=2e6,
              beta_c=2.5e-3, alpha=1.0, kappa=1.0, h=1e-2, tau=1e-2)
    kw.update(overrides)
    return ParamSet(**kw)


U_STAR = 1e6


def quadratic_residual(result, u_star, p, coef):
    """Substitute each root back into the characteristic quadratic."""
    d_star = big_d(u_star, p)
    psi_star = psi(u_star, p)
    k2 = result.k2
    b = k2 * (coef.beta_u * d_star + p.beta_c) + p.kappa
    c = (k2 ** 2 * coef.beta_u * p.beta_c * d_star
         + k2 * (p.kappa * coef.beta_u * d_star - p.alpha * coef.chi * u_star * psi_star))
    scale = max(abs(b), abs(c), 1.0)
    return max(abs(s * s + b * s + c) for s in result.sigma) / scale


class TestDispersion:
    def test_k2_zero_roots(self):
        p = base_params()
        r = dispersion(0.0, U_STAR, p, derive_coefficients(p))
        roots = sorted(s.real for s in r.sigma)
        assert roots == pytest.approx([-p.kappa, 0.0], abs=1e-14)
        assert not r.unstable

    def test_chi_zero_is_stable(self):
        p = base_params(eta=0.0)
        coef = derive_coefficients(p)
        for k2 in (1.0, 50.0, 1e3, 1e5):
            r = dispersion(k2, U_STAR, p, coef)
            assert max(s.real for s in r.sigma) < 0.0

    def test_base_window(self):
        p = base_params()
        coef = derive_coefficients(p)
        k2m = k2_max(U_STAR, p, coef)
        assert dispersion(0.5 * k2m, U_STAR, p, coef).unstable
        assert not dispersion(1.5 * k2m, U_STAR, p, coef).unstable

    def test_root_residuals(self):
        p = base_params()
        coef = derive_coefficients(p)
        for k2 in (0.0, 1.0, 88.8, 500.0, 2266.0, 5000.0):
            r = dispersion(k2, U_STAR, p, coef)
            assert quadratic_residual(r, U_STAR, p, coef) < 1e-10

    def test_complex_roots_are_conjugate(self):
        # the discriminant is (k^2(beta_u D - beta_c) - kappa)^2 + 4 k^2 a chi u psi,
        # nonnegative for every attractive chi; drive the repulsive branch
        # (chi < 0) with a synthetic coefficient set to cover complex roots
        p = base_params()
        coef = DerivedCoefficients(chi=-1e-6, beta_u=5.0, nu=-2e-7)
        d_star = big_d(U_STAR, p)
        k2 = p.kappa / (coef.beta_u * d_star - p.beta_c)
        r = dispersion(k2, U_STAR, p, coef)
        assert r.sigma[0].imag != 0.0
        assert r.sigma[0] == r.sigma[1].conjugate()
        assert quadratic_residual(r, U_STAR, p, coef) < 1e-10
        assert not r.unstable


class TestChiThreshold:
    def test_appendix_base_value(self):
        p = base_params()
        coef = derive_coefficients(p)
        thr = chi_threshold(U_STAR, p, coef)
        assert thr == pytest.approx(9.1875e-10, rel=1e-12)
        assert coef.chi > thr  # the base case is pattern-forming

    def test_matches_volume_filling_closed_form(self):
        p = base_params()
        coef = derive_coefficients(p)
        expected = p.kappa * coef.beta_u * (1 + U_STAR / p.u_max) / (p.alpha * U_STAR)
        assert chi_threshold(U_STAR, p, coef) == pytest.approx(expected, rel=1e-14)

    def test_classical_limit(self):
        p = base_params(variant="classical")
        coef = derive_coefficients(p)
        expected = p.kappa * coef.beta_u / (p.alpha * U_STAR)
        assert chi_threshold(U_STAR, p, coef) == pytest.approx(expected, rel=1e-14)
        # u_max -> infinity approaches the classical value from above
        p_inf = base_params(u_max=1e18)
        assert chi_threshold(U_STAR, p_inf, derive_coefficients(p_inf)) == (
            pytest.approx(expected, rel=1e-10))

    def test_linear_in_kappa(self):
        p1, p2 = base_params(), base_params(kappa=2.0)
        c1, c2 = derive_coefficients(p1), derive_coefficients(p2)
        assert chi_threshold(U_STAR, p2, c2) == pytest.approx(
            2 * chi_threshold(U_STAR, p1, c1), rel=1e-14)


class TestK2Max:
    def test_zero_at_threshold(self):
        p = base_params()
        coef = derive_coefficients(p)
        thr = chi_threshold(U_STAR, p, coef)
        at_thr = DerivedCoefficients(chi=thr, beta_u=coef.beta_u, nu=thr / coef.beta_u)
        assert abs(k2_max(U_STAR, p, at_thr)) < 1e-6

    def test_appendix_base_regression(self):
        # frozen after first computation from the Appendix-B parameters
        p = base_params()
        coef = derive_coefficients(p)
        assert k2_max(U_STAR, p, coef) == pytest.approx(2266.884353741497, rel=1e-12)

    def test_monotone_in_chi(self):
        p = base_params()
        coef = derive_coefficients(p)
        vals = []
        for s in (1.0, 1.5, 2.0, 4.0, 8.0):
            scaled = DerivedCoefficients(chi=s * coef.chi, beta_u=coef.beta_u,
                                         nu=s * coef.nu)
            vals.append(k2_max(U_STAR, p, scaled))
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_matches_paper_form(self):
        p = base_params()
        coef = derive_coefficients(p)
        r = U_STAR / p.u_max
        expected = ((p.alpha * coef.chi * U_STAR - p.kappa * coef.beta_u * (1 + r))
                    / (coef.beta_u * p.beta_c * (1 + r)))
        assert k2_max(U_STAR, p, coef) == pytest.approx(expected, rel=1e-12)


class TestModeCount:
    def test_zero_window(self):
        assert unstable_mode_count(1.0, 0.0) == 0

    def test_single_mode(self):
        assert unstable_mode_count(1.0, 1.5 * np.pi ** 2) == 1

    def test_three_modes(self):
        assert unstable_mode_count(1.0, 9.5 * np.pi ** 2) == 3

    def test_strict_inequality_at_boundary(self):
        assert unstable_mode_count(1.0, (2 * np.pi) ** 2) == 1  # m=2 excluded


class TestWindowConsistency:
    def test_threshold_iff_instability(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            p = base_params(eta=float(rng.uniform(0.01, 40.0)),
                            theta=float(rng.uniform(0.02, 1.0)),
                            kappa=float(rng.uniform(0.2, 5.0)),
                            alpha=float(rng.uniform(0.2, 5.0)),
                            u_max=float(rng.uniform(5e5, 5e7)))
            coef = derive_coefficients(p)
            u_star = float(rng.uniform(1e5, 5e6))
            above = coef.chi > chi_threshold(u_star, p, coef)
            k2m = k2_max(u_star, p, coef)
            some_unstable = False
            if k2m > 0:
                ks = np.linspace(1e-3 * k2m, 0.999 * k2m, 9)
            else:
                ks = np.linspace(1.0, 1e4, 9)
            for k2 in ks:
                if dispersion(float(k2), u_star, p, coef).unstable:
                    some_unstable = True
            assert some_unstable == above

    def test_window_interior_exactly_unstable(self):
        p = base_params()
        coef = derive_coefficients(p)
        k2m = k2_max(U_STAR, p, coef)
        tol = 1e-8 * k2m
        for frac in (0.01, 0.2, 0.5, 0.8, 0.99):
            assert dispersion(frac * k2m, U_STAR, p, coef).unstable
        for k2 in (k2m + tol, 1.2 * k2m, 10 * k2m):
            assert not dispersion(k2, U_STAR, p, coef).unstable
