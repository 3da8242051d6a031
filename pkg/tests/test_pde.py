import numpy as np
import pytest

from chemotax import (CFLViolationError, DerivedCoefficients, FieldPair, ParamSet,
                      SolverOptions, derive_coefficients, flux_1d, run_pde,
                      run_to_equilibrium, step_2d_explicit, step_c_implicit,
                      step_u_implicit_1d)
from chemotax.pde import _flux_jacobian_1d, advance, RunStats


def base_params(**overrides):
    kw = dict(eta=2.4502, theta=0.1225, u_max=2e6, zeta=1.0, c_bar=2e6,
              beta_c=2.5e-3, alpha=1.0, kappa=1.0, h=1e-2, tau=1e-2)
    kw.update(overrides)
    return ParamSet(**kw)


def base_fields(n=100, level=1e6, h=1e-2, dt=1e-2):
    x = h * np.arange(1, n + 1)
    u = np.full(n, level)
    c = u * (1.0 + 0.1 * np.cos(10 * x) * np.sin(10 * x))
    return FieldPair(u, c, 0.0, dx=h, dt=dt)


class TestChemoImplicit:
    def test_scalar_implicit_decay(self):
        p = base_params()
        fp = FieldPair(np.zeros(50), np.full(50, 2e6), 0.0, dx=p.h, dt=p.tau)
        c1 = step_c_implicit(fp, p, derive_coefficients(p))
        assert c1 == pytest.approx(2e6 / (1 + p.tau * p.kappa), rel=1e-13)

    def test_conservative_diffusion(self):
        p = base_params(alpha=0.0, kappa=0.0)
        rng = np.random.default_rng(3)
        fp = FieldPair(np.zeros(80), 1e5 * (1 + rng.random(80)), 0.0, dx=p.h, dt=p.tau)
        coef = derive_coefficients(p)
        total0 = fp.c.sum() * fp.dx
        for _ in range(100):
            fp.c = step_c_implicit(fp, p, coef)
        assert fp.c.sum() * fp.dx == pytest.approx(total0, rel=1e-12)

    def test_heat_decay_convergence_order(self):
        # Richardson oracle: one implicit step on cos(pi x) decays the mode by
        # 1/(1+beta_c pi^2 dt) vs exact exp(-beta_c pi^2 dt); halving (dx, dt)
        # shrinks the defect by at least ~2x (it is O(dt^2) + O(dt dx^2))
        p = base_params(alpha=0.0, kappa=0.0, beta_c=0.1)
        errs = []
        for n, dt in ((50, 4e-2), (100, 2e-2), (200, 1e-2)):
            dx = 1.0 / n
            xc = dx * (np.arange(1, n + 1) - 0.5)  # eigen-compatible sampling
            c0 = np.cos(np.pi * xc)
            fp = FieldPair(np.zeros(n), c0 + 2.0, 0.0, dx=dx, dt=dt)
            c1 = step_c_implicit(fp, p, derive_coefficients(p))
            amp = (c1 - 2.0 / (1 + 0.0)) @ c0 / (c0 @ c0)
            exact = np.exp(-p.beta_c * np.pi ** 2 * dt)
            errs.append(abs(amp - exact))
        assert errs[1] < errs[0] / 1.9
        assert errs[2] < errs[1] / 1.9


class TestFlux1D:
    def test_zero_without_gradients(self):
        p = base_params()
        coef = derive_coefficients(p)
        fp = FieldPair(np.full(30, 5e5), np.full(30, 1e6), 0.0, dx=p.h, dt=p.tau)
        f = flux_1d(fp, fp.u, p, coef)
        assert (f == 0.0).all()
        assert f.shape == (31,)

    def test_upgradient_advection_sign(self):
        # c increasing to the right, u uniform: pure advective flux, negative
        # in the scheme's sign convention at every interior interface
        p = base_params()
        coef = derive_coefficients(p)
        n = 30
        c = np.linspace(0.0, 2e6, n)
        u = np.full(n, 5e5)
        fp = FieldPair(u, c, 0.0, dx=p.h, dt=p.tau)
        f = flux_1d(fp, u, p, coef)
        assert (f[1:-1] < 0.0).all()
        b = coef.chi * (c[1] - c[0]) / p.h
        from chemotax import psi
        assert f[1] == pytest.approx(-b * 5e5 * psi(5e5, p), rel=1e-13)

    def test_boundary_fluxes_zero(self):
        p = base_params()
        coef = derive_coefficients(p)
        fp = base_fields(40)
        f = flux_1d(fp, fp.u * (1 + 1e-3), p, coef)
        assert f[0] == 0.0 and f[-1] == 0.0

    def test_chi_zero_matches_fine_grid_nonlinear_heat_oracle(self):
        # independent oracle: explicit FTCS solver for u_t = (beta_u D(u) u_x)_x
        # on a 4x finer grid, Gaussian bump initial data, compared at t = 0.1
        p = base_params(eta=0.0)
        beta_u = 1e-3
        coef = DerivedCoefficients(chi=0.0, beta_u=beta_u, nu=0.0)
        n = 100
        x = p.h * np.arange(1, n + 1)
        u0 = p.u_max * np.exp(-100.0 * (x - 0.5) ** 2)

        fp = FieldPair(u0.copy(), np.zeros(n), 0.0, dx=p.h, dt=1e-3)
        opts = SolverOptions()
        stats = RunStats()
        for _ in range(100):
            fp = advance(fp, p, coef, opts, stats)

        nf = 400
        dxf = 1.0 / nf
        xf = dxf * np.arange(1, nf + 1)
        uf = p.u_max * np.exp(-100.0 * (xf - 0.5) ** 2)
        dtf = 0.2 * dxf ** 2 / beta_u
        steps = int(round(0.1 / dtf))
        dtf = 0.1 / steps
        for _ in range(steps):
            r = uf / p.u_max
            d = np.exp(-r) * (1 + r)
            d_int = 0.5 * (d[:-1] + d[1:])
            flux = np.zeros(nf + 1)
            flux[1:-1] = beta_u * d_int * (uf[1:] - uf[:-1]) / dxf
            uf = uf + dtf * (flux[1:] - flux[:-1]) / dxf
        coarse_from_fine = uf[3::4]
        assert coarse_from_fine.shape == fp.u.shape
        err = np.abs(fp.u - coarse_from_fine).max() / coarse_from_fine.max()
        assert err < 0.01


class TestImplicitUStep:
    def test_zero_coefficients_freeze_state(self):
        p = base_params()
        coef = DerivedCoefficients(chi=0.0, beta_u=0.0, nu=0.0)
        fp = base_fields(50)
        u1, iters, _res = step_u_implicit_1d(fp, p, coef, SolverOptions())
        assert (u1 == fp.u).all()
        assert iters == 0

    def test_mass_telescopes_exactly(self):
        p = base_params()
        coef = derive_coefficients(p)
        fp = base_fields(100)
        opts = SolverOptions()
        mass0 = fp.mass()
        stats = RunStats()
        for _ in range(500):
            fp = advance(fp, p, coef, opts, stats)
            assert abs(fp.mass() - mass0) <= 1e-12 * mass0

    def test_jacobian_matches_finite_differences(self):
        # oracle: columns of the residual Jacobian by central differences of
        # the public flux function, against the analytic tridiagonal entries
        p = base_params()
        coef = derive_coefficients(p)
        rng = np.random.default_rng(17)
        n = 24
        u_old = 1e6 * (0.5 + rng.random(n))
        c_old = 1e6 * (0.5 + rng.random(n))
        fp = FieldPair(u_old, c_old, 0.0, dx=p.h, dt=p.tau)
        v = 1e6 * (0.5 + rng.random(n))

        def residual(w):
            f = flux_1d(fp, w, p, coef)
            return (w - u_old) / fp.dt - (f[1:] - f[:-1]) / fp.dx

        d_left, d_right = _flux_jacobian_1d(fp, v, p, coef)
        jac = np.zeros((n, n))
        for j in range(n):
            jac[j, j] = 1.0 / fp.dt - (d_left[j + 1] - d_right[j]) / fp.dx
            if j > 0:
                jac[j, j - 1] = d_left[j] / fp.dx
            if j < n - 1:
                jac[j, j + 1] = -d_right[j + 1] / fp.dx

        scale = np.abs(jac).max()
        for j in range(n):
            dv = 1e-6 * max(abs(v[j]), 1.0)
            vp, vm = v.copy(), v.copy()
            vp[j] += dv
            vm[j] -= dv
            col = (residual(vp) - residual(vm)) / (2 * dv)
            assert np.abs(col - jac[:, j]).max() <= 1e-5 * scale

    def test_positivity_assertion(self):
        p = base_params()
        coef = derive_coefficients(p)
        fp = base_fields(60)
        u1, _, _ = step_u_implicit_1d(fp, p, coef, SolverOptions())
        assert (u1 >= 0).all()


class TestExplicit2D:
    def _params(self, **kw):
        return base_params(dim=2, h=1.0 / 51.0, tau=1e-4, theta=2.5e-2,
                           u_max=1e7, c_bar=1e7, eta=2.4502, **kw)

    def test_homogeneous_fixed_point_exact(self):
        # alpha u = kappa c with alpha = kappa = 1 and c = u: bitwise fixed point
        p = self._params()
        coef = derive_coefficients(p)
        u = np.full((51, 51), 5e6)
        fp = FieldPair(u.copy(), u.copy(), 0.0, dx=p.h, dt=p.tau)
        u1, c1 = step_2d_explicit(fp, p, coef)
        assert (u1 == u).all()
        assert (c1 == u).all()

    def test_mass_conservation(self):
        p = self._params()
        coef = derive_coefficients(p)
        n = 51
        x = p.h * np.arange(1, n + 1)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        u = np.full((n, n), 5e6)
        c = 200.0 * np.exp(-200.0 * ((xx - 0.5) ** 2 + (yy - 0.5) ** 2))
        fp = FieldPair(u, c, 0.0, dx=p.h, dt=p.tau)
        mass0 = fp.mass()
        stats = RunStats()
        for _ in range(200):
            fp = advance(fp, p, coef, SolverOptions(), stats)
        assert abs(fp.mass() - mass0) <= 1e-12 * mass0

    def test_dihedral_symmetry(self):
        # radially symmetric chemo on the square: the state stays invariant
        # under the full 8-element dihedral group to 1e-12
        p = self._params()
        coef = derive_coefficients(p)
        n = 51
        x = p.h * np.arange(1, n + 1)
        mid = 0.5 * (x[0] + x[-1])
        xx, yy = np.meshgrid(x, x, indexing="ij")
        u = np.full((n, n), 5e6)
        c = 200.0 * np.exp(-200.0 * ((xx - mid) ** 2 + (yy - mid) ** 2))
        fp = FieldPair(u, c, 0.0, dx=p.h, dt=p.tau)
        stats = RunStats()
        for _ in range(200):
            fp = advance(fp, p, coef, SolverOptions(), stats)
        for transform in (lambda a: a[::-1, :], lambda a: a[:, ::-1],
                          lambda a: a.T, lambda a: a[::-1, ::-1].T):
            for field in (fp.u, fp.c):
                scale = np.abs(field).max()
                assert np.abs(transform(field) - field).max() <= 1e-12 * scale

    def test_cfl_violation_raises(self):
        p = self._params()
        coef = derive_coefficients(p)
        u = np.full((51, 51), 5e6)
        fp = FieldPair(u.copy(), u.copy(), 0.0, dx=p.h, dt=10.0)
        with pytest.raises(CFLViolationError):
            step_2d_explicit(fp, p, coef)


class TestRunPde:
    def test_t_end_zero_returns_initial(self):
        p = base_params()
        fp = base_fields()
        snaps, stats = run_pde(p, derive_coefficients(p), fp, 0.0, [0.0])
        assert (snaps[0].u == fp.u).all()
        assert stats.steps == 0

    def test_deterministic(self):
        p = base_params()
        coef = derive_coefficients(p)
        a, _ = run_pde(p, coef, base_fields(), 2.0, [2.0])
        b, _ = run_pde(p, coef, base_fields(), 2.0, [2.0])
        assert (a[0].u == b[0].u).all()
        assert (a[0].c == b[0].c).all()

    def test_snapshot_floor_rounding(self):
        p = base_params()
        snaps, _ = run_pde(p, derive_coefficients(p), base_fields(), 1.0,
                           [0.0, 0.555, 1.0])
        times = [s.time for s in snaps]
        assert times == pytest.approx([0.0, 0.55, 1.0], abs=1e-12)

    def test_self_convergence_first_order(self):
        # (dx, dt) -> (dx/2, dt/4): solution differences at t=1 shrink with
        # order >= 1. Initial data is sampled at cell centres (j-1/2)dx so the
        # effective zero-flux domain is identical across resolutions;
        # comparison by averaging fine cell pairs onto the coarse cells.
        p = base_params()
        sols = {}
        for lvl, (n, dt) in enumerate(((100, 1e-2), (200, 2.5e-3), (400, 6.25e-4))):
            dx = 1.0 / n
            x = dx * (np.arange(n) + 0.5)
            u = np.full(n, 1e6)
            c = u * (1.0 + 0.1 * np.cos(10 * x) * np.sin(10 * x))
            fp = FieldPair(u, c, 0.0, dx=dx, dt=dt)
            snaps, _ = run_pde(p, derive_coefficients(p), fp, 1.0, [1.0])
            sols[lvl] = snaps[0].u

        def restrict(fine):
            return 0.5 * (fine[0::2] + fine[1::2])

        d01 = np.abs(sols[0] - restrict(sols[1])).max()
        d12 = np.abs(sols[1] - restrict(sols[2])).max()
        order = np.log2(d01 / d12)
        assert order >= 1.0

    def test_run_to_equilibrium_detects_exact_equilibrium(self):
        p = base_params()
        coef = derive_coefficients(p)
        u = np.full(100, 1e6)
        fp = FieldPair(u.copy(), u.copy(), 0.0, dx=p.h, dt=p.tau)  # (u*, c*)
        out, reached = run_to_equilibrium(p, coef, fp, rel_tol=1e-8,
                                          t_max=50.0, check_interval=5.0)
        assert reached
        assert out.time <= 5.0 + 1e-9

    def test_run_to_equilibrium_subthreshold_relaxation(self):
        # below the pattern threshold the state relaxes toward homogeneity;
        # the slowest (m=1) mode decays diffusively, so use a loose detector
        p = base_params(eta=0.18)
        coef = derive_coefficients(p)
        fp, reached = run_to_equilibrium(p, coef, base_fields(), rel_tol=1e-4,
                                         t_max=200.0, check_interval=5.0)
        assert reached
        assert np.abs(fp.u - 1e6).max() <= 0.02 * 1e6
