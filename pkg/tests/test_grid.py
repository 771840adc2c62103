import numpy as np
import pytest

from lsinv.grid import (GridSpec, ScalarField, bilinear_sample, gradient,
                        grad_norm, inner_product, norm_l2)

from conftest import circle_field


class TestGridSpec:
    def test_spacing(self):
        spec = GridSpec(129, 129)
        assert spec.h == pytest.approx(1.0 / 128)
        assert spec.xs()[0] == 0.0 and spec.xs()[-1] == 1.0

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            GridSpec(2, 5)

    def test_anisotropic_rejected(self):
        with pytest.raises(ValueError, match="anisotropic"):
            GridSpec(65, 129)

    def test_weights_sum_to_area(self):
        assert GridSpec(33, 33).trapezoid_weights().sum() == pytest.approx(1.0)


class TestScalarField:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            ScalarField(GridSpec(5, 5), np.zeros((5, 6)))

    def test_nonfinite_rejected(self):
        vals = np.zeros((5, 5))
        vals[2, 2] = np.nan
        with pytest.raises(ValueError, match="finite"):
            ScalarField(GridSpec(5, 5), vals)

    def test_immutable(self):
        f = ScalarField.constant(GridSpec(5, 5), 1.0)
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0
        with pytest.raises(AttributeError):
            f.values = np.zeros((5, 5))


class TestGradient:
    def test_constant_field(self, spec65):
        fx, fy = gradient(ScalarField.constant(spec65, 3.7))
        assert np.all(fx.values == 0.0)
        assert np.all(fy.values == 0.0)

    def test_linear_field_exact(self, spec65):
        xx, _ = spec65.meshgrid()
        fx, fy = gradient(ScalarField(spec65, xx))
        np.testing.assert_allclose(fx.values, 1.0, rtol=0, atol=1e-13)
        np.testing.assert_allclose(fy.values, 0.0, rtol=0, atol=1e-13)

    def test_manufactured_refinement(self):
        # d/dx sin(pi x) = pi cos(pi x); halving h must cut the max error ~4x.
        errs = {}
        for n in (65, 129):
            spec = GridSpec(n, n)
            xx, _ = spec.meshgrid()
            fx, _ = gradient(ScalarField(spec, np.sin(np.pi * xx)))
            errs[n] = np.abs(fx.values - np.pi * np.cos(np.pi * xx)).max()
        ratio = errs[65] / errs[129]
        assert 3.5 <= ratio <= 4.5
        # second-order constant measured from the coarse grid bounds the fine one
        c = errs[65] / GridSpec(65, 65).h ** 2
        assert errs[129] <= 1.25 * c * GridSpec(129, 129).h ** 2

    def test_linearity(self, spec65, rng):
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        g = ScalarField(spec65, rng.standard_normal(spec65.shape))
        a, b = 2.25, -0.75
        comb = ScalarField(spec65, a * f.values + b * g.values)
        cx, _ = gradient(comb)
        fx, _ = gradient(f)
        gx, _ = gradient(g)
        np.testing.assert_allclose(cx.values, a * fx.values + b * gx.values,
                                   rtol=0, atol=1e-12)


class TestGradNorm:
    def test_signed_distance_slope_one(self):
        phi = circle_field(129)
        gn = grad_norm(phi).values
        xx, yy = phi.spec.meshgrid()
        away = np.hypot(xx - 0.503, yy - 0.497) > 0.1
        h = phi.spec.h
        assert np.abs(gn[away] - 1.0).max() <= 2 * h

    def test_floor_engages_on_constant(self, spec65):
        gn = grad_norm(ScalarField.constant(spec65, 5.0), floor=1e-6)
        assert np.all(gn.values == 1e-6)

    def test_plane_exact(self, spec65):
        xx, yy = spec65.meshgrid()
        gn = grad_norm(ScalarField(spec65, 3 * xx + 4 * yy))
        np.testing.assert_allclose(gn.values, 5.0, rtol=0, atol=1e-12)

    def test_floor_must_be_positive(self, spec65):
        with pytest.raises(ValueError):
            grad_norm(ScalarField.constant(spec65, 0.0), floor=0.0)


class TestInnerProduct:
    def test_unit_area(self, spec65):
        one = ScalarField.constant(spec65, 1.0)
        assert inner_product(one, one) == pytest.approx(1.0, abs=1e-14)

    def test_sin_squared(self, spec129):
        # integral of sin^2(pi x) sin^2(pi y) over the unit square is 1/4
        xx, yy = spec129.meshgrid()
        f = ScalarField(spec129, np.sin(np.pi * xx) * np.sin(np.pi * yy))
        assert inner_product(f, f) == pytest.approx(0.25, abs=spec129.h ** 2)

    def test_zero_factor(self, spec65):
        one = ScalarField.constant(spec65, 1.0)
        zero = ScalarField.constant(spec65, 0.0)
        assert inner_product(one, zero) == 0.0

    def test_symmetry_and_positivity(self, spec65, rng):
        f = ScalarField(spec65, rng.standard_normal(spec65.shape))
        g = ScalarField(spec65, rng.standard_normal(spec65.shape))
        assert inner_product(f, g) == pytest.approx(inner_product(g, f), rel=1e-14)
        assert inner_product(f, f) > 0.0

    def test_spec_mismatch(self, spec65, spec129):
        with pytest.raises(ValueError, match="grid mismatch"):
            inner_product(ScalarField.constant(spec65, 1.0),
                          ScalarField.constant(spec129, 1.0))


class TestBilinearSample:
    def test_exact_on_bilinear_function(self, spec65):
        xx, yy = spec65.meshgrid()
        f = ScalarField(spec65, 2.0 + 3.0 * xx - 1.5 * yy + 0.5 * xx * yy)
        pts = np.array([[0.123, 0.456], [0.9, 0.05], [0.0, 1.0]])
        expected = 2.0 + 3.0 * pts[:, 0] - 1.5 * pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1]
        np.testing.assert_allclose(bilinear_sample(f, pts), expected, rtol=1e-13)

    def test_norm_of_zero(self, spec65):
        assert norm_l2(ScalarField.constant(spec65, 0.0)) == 0.0
