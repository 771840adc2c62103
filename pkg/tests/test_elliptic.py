import numpy as np
import pytest

from lsinv.elliptic import (SolverConfig, adjoint_residual, apply_helmholtz_neumann,
                            forward, solve_dirichlet, solve_neumann_helmholtz)
from lsinv.errors import SolverError
from lsinv.grid import GridSpec, ScalarField, inner_product, norm_l2

CFG = SolverConfig()


def fourier_poisson_center_value(terms: int = 2000) -> float:
    """Independent oracle: series solution of -lap(u) = 1 on the unit square
    with zero boundary values, evaluated at the center."""
    m = np.arange(1, 2 * terms, 2, dtype=float)
    coef = 16.0 / (np.pi ** 4 * m[:, None] * m[None, :] * (m[:, None] ** 2 + m[None, :] ** 2))
    signs = np.sin(m * np.pi / 2.0)
    return float((coef * signs[:, None] * signs[None, :]).sum())


class TestDirichlet:
    def test_zero_source(self, spec65):
        v = solve_dirichlet(ScalarField.constant(spec65, 0.0), CFG)
        assert np.all(v.values == 0.0)

    def test_manufactured_solution_orders(self):
        errs = []
        for n in (33, 65, 129):
            spec = GridSpec(n, n)
            xx, yy = spec.meshgrid()
            exact = np.sin(np.pi * xx) * np.sin(np.pi * yy)
            f = ScalarField(spec, -2 * np.pi ** 2 * exact)
            errs.append(np.abs(solve_dirichlet(f, CFG).values - exact).max())
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all(np.abs(orders - 2.0) <= 0.3)

    def test_constant_source_center_value(self):
        # Fourier-series oracle for the unit-square Poisson problem
        spec = GridSpec(257, 257)
        v = solve_dirichlet(ScalarField.constant(spec, 1.0), CFG)
        series = -fourier_poisson_center_value()
        assert series == pytest.approx(-0.0736713, abs=1e-6)
        assert v.values[128, 128] == pytest.approx(series, abs=2e-4)

    def test_boundary_is_zero(self, spec65, rng):
        v = solve_dirichlet(ScalarField(spec65, rng.standard_normal(spec65.shape)), CFG)
        for edge in (v.values[0, :], v.values[-1, :], v.values[:, 0], v.values[:, -1]):
            assert np.all(edge == 0.0)

    def test_inhomogeneous_boundary_linear_exact(self, spec65):
        xx, yy = spec65.meshgrid()
        g = 1.0 + 2.0 * xx - 3.0 * yy
        v = solve_dirichlet(ScalarField.constant(spec65, 0.0), CFG, boundary_values=g)
        np.testing.assert_allclose(v.values, g, atol=1e-10)

    def test_dense_oracle(self, rng):
        # independent dense construction of the interior operator
        spec = GridSpec(33, 33)
        n = spec.nx - 2
        h2 = spec.h ** 2
        a = np.zeros((n * n, n * n))
        for i in range(n):
            for j in range(n):
                k = i * n + j
                a[k, k] = 4.0 / h2
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < n and 0 <= jj < n:
                        a[k, ii * n + jj] = -1.0 / h2
        f = rng.standard_normal(spec.shape)
        dense = np.linalg.solve(a, -f[1:-1, 1:-1].ravel()).reshape(n, n)
        v = solve_dirichlet(ScalarField(spec, f), CFG)
        np.testing.assert_allclose(v.values[1:-1, 1:-1], dense, atol=1e-10)


class TestForwardAdjoint:
    def test_forward_aliases_dirichlet(self, spec65, rng):
        u = ScalarField(spec65, rng.standard_normal(spec65.shape))
        np.testing.assert_array_equal(forward(u, CFG).values,
                                      solve_dirichlet(u, CFG).values)

    def test_zero_data_zero_residual(self, spec65):
        assert np.all(forward(ScalarField.constant(spec65, 0.0), CFG).values == 0.0)

    def test_adjoint_residual_vanishes_at_fit(self, spec65, rng):
        u = ScalarField(spec65, rng.standard_normal(spec65.shape))
        y = forward(u, CFG)
        r = adjoint_residual(u, y, CFG)
        assert norm_l2(r) <= 2 * CFG.tol * max(norm_l2(y), 1.0)

    def test_adjoint_residual_of_zero_guess(self, spec65, rng):
        y = ScalarField(spec65, rng.standard_normal(spec65.shape))
        r = adjoint_residual(ScalarField.constant(spec65, 0.0), y, CFG)
        np.testing.assert_allclose(r.values, -forward(y, CFG).values, atol=1e-13)

    def test_dense_composition_oracle(self, rng):
        spec = GridSpec(33, 33)
        u = ScalarField(spec, rng.standard_normal(spec.shape))
        y = ScalarField(spec, rng.standard_normal(spec.shape))
        fu = forward(u, CFG)
        expected = forward(fu.with_values(fu.values - y.values), CFG)
        got = adjoint_residual(u, y, CFG)
        np.testing.assert_allclose(got.values, expected.values, atol=1e-12)

    def test_self_adjointness(self, spec65, rng):
        worst = 0.0
        for _ in range(20):
            a = ScalarField(spec65, rng.standard_normal(spec65.shape))
            b = ScalarField(spec65, rng.standard_normal(spec65.shape))
            gap = abs(inner_product(forward(a, CFG), b) - inner_product(a, forward(b, CFG)))
            worst = max(worst, gap / (norm_l2(a) * norm_l2(b)))
        assert worst <= 1e-9

    def test_sign_principle(self, spec65, rng):
        f = ScalarField(spec65, np.abs(rng.standard_normal(spec65.shape)))
        assert solve_dirichlet(f, CFG).values.max() <= 1e-12

    def test_linearity(self, spec65, rng):
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        g = ScalarField(spec65, rng.standard_normal(spec65.shape))
        combo = ScalarField(spec65, 1.5 * f.values - 2.5 * g.values)
        expected = 1.5 * forward(f, CFG).values - 2.5 * forward(g, CFG).values
        np.testing.assert_allclose(forward(combo, CFG).values, expected, atol=1e-12)


class TestNeumannHelmholtz:
    def test_constant_is_fixed_point(self, spec65):
        v = solve_neumann_helmholtz(ScalarField.constant(spec65, 2.5), CFG)
        np.testing.assert_allclose(v.values, 2.5, rtol=1e-10)

    def test_manufactured_solution_orders(self):
        errs = []
        for n in (33, 65, 129):
            spec = GridSpec(n, n)
            xx, _ = spec.meshgrid()
            exact = np.cos(np.pi * xx)
            g = ScalarField(spec, (1 + np.pi ** 2) * exact)
            errs.append(np.abs(solve_neumann_helmholtz(g, CFG).values - exact).max())
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all(np.abs(orders - 2.0) <= 0.3)

    def test_mean_zero_preserved(self, spec65):
        # integrating (I - lap) v = g with no-flux walls gives mean(v) = mean(g)
        xx, _ = spec65.meshgrid()
        g = ScalarField(spec65, xx - 0.5)
        one = ScalarField.constant(spec65, 1.0)
        assert inner_product(g, one) == pytest.approx(0.0, abs=1e-14)
        v = solve_neumann_helmholtz(g, CFG)
        assert inner_product(v, one) == pytest.approx(0.0, abs=1e-10)

    def test_positivity_and_mean_contraction(self, spec65, rng):
        g = ScalarField(spec65, np.abs(rng.standard_normal(spec65.shape)))
        v = solve_neumann_helmholtz(g, CFG)
        assert v.values.min() >= -1e-12
        assert v.values.max() <= g.values.max() + 1e-12

    def test_operator_roundtrip(self, spec65, rng):
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        v = solve_neumann_helmholtz(apply_helmholtz_neumann(f), CFG)
        np.testing.assert_allclose(v.values, f.values, atol=1e-9)

    def test_linearity(self, spec65, rng):
        g1 = ScalarField(spec65, rng.standard_normal(spec65.shape))
        g2 = ScalarField(spec65, rng.standard_normal(spec65.shape))
        combo = ScalarField(spec65, 0.5 * g1.values + 3.0 * g2.values)
        expected = (0.5 * solve_neumann_helmholtz(g1, CFG).values
                    + 3.0 * solve_neumann_helmholtz(g2, CFG).values)
        np.testing.assert_allclose(solve_neumann_helmholtz(combo, CFG).values,
                                   expected, atol=1e-11)


class TestSolverConfig:
    def test_cg_matches_direct(self, spec65, rng):
        cg = SolverConfig(method="conjugate-gradient", tol=1e-12)
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        np.testing.assert_allclose(solve_dirichlet(f, cg).values,
                                   solve_dirichlet(f, CFG).values, atol=1e-9)

    def test_cg_nonconvergence_raises(self, spec65, rng):
        cg = SolverConfig(method="conjugate-gradient", tol=1e-14, max_iter=2)
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        with pytest.raises(SolverError) as err:
            solve_dirichlet(f, cg)
        assert err.value.achieved_residual is not None
        assert err.value.achieved_residual > 1e-14

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            SolverConfig(method="gauss-seidel")

    def test_determinism(self, spec65, rng):
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        a = solve_dirichlet(f, CFG).values
        b = solve_dirichlet(f, CFG).values
        np.testing.assert_array_equal(a, b)
