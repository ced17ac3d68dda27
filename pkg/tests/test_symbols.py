"""Tests for the symbol calculus."""

import math
import unittest

import numpy as np

from bergman_lab.core import SemiclassParams
from bergman_lab.errors import ConfigError, GridError
from bergman_lab.modelkernel import model_kernel
from bergman_lab.quadrature import lebesgue_real_grid
from bergman_lab.symbols import (
    BorelSchedule,
    SamplePairs,
    adjoint,
    borel_sum,
    compose,
    derivative_family,
    estimate_membership,
    kernel_symbol,
    pointwise_product,
    quantize,
    scaled_gaussian_symbol,
    subtract,
)

WIDTHS = (1.0, 1.5)


def composition_closed_form(x, y, k, w1, w2):
    return math.sqrt(math.pi / (k * (1.0 / w1 ** 2 + 1.0 / w2 ** 2))) * np.exp(
        -k * np.sum((x - y) ** 2, axis=-1) / (w1 ** 2 + w2 ** 2))


class TestCompose(unittest.TestCase):
    """Test cases for compose."""

    def setUp(self):
        """Set up test case."""
        self.a = scaled_gaussian_symbol(1, 0.0, 1.0, WIDTHS[0])
        self.b = scaled_gaussian_symbol(1, 0.0, 1.0, WIDTHS[1])

    def test_gaussian_closed_form(self):
        """Test the composition of two Gaussians against the exact integral."""
        composed = compose(self.a, self.b, lambda k: lebesgue_real_grid(1, 16.0 / math.sqrt(k), 96))
        for k in (25, 100):
            x = np.linspace(-1.0, 1.0, 7)[:, None] / math.sqrt(k)
            y = x[::-1]
            numeric = composed(x, y, k)
            exact = composition_closed_form(x, y, k, *WIDTHS)
            self.assertLess(float(np.max(np.abs(numeric - exact)) / np.max(np.abs(exact))), 1e-8)

    def test_composed_order(self):
        """Test order(a # b) = m + m' - d/2."""
        c = scaled_gaussian_symbol(1, -1.0)
        composed = compose(self.a, c, lebesgue_real_grid(1, 1.0, 8))
        self.assertEqual(composed.order, -1.5)

    def test_grid_too_small(self):
        """Test that a box cutting the integrand raises GridError."""
        composed = compose(self.a, self.b, lambda k: lebesgue_real_grid(1, 0.5 / math.sqrt(k), 32))
        with self.assertRaises(GridError):
            composed(np.zeros((1, 1)), np.zeros((1, 1)), 25)

    def test_dimension_mismatch(self):
        """Test that symbols of different dimension do not compose."""
        with self.assertRaises(ConfigError):
            compose(self.a, scaled_gaussian_symbol(2), lebesgue_real_grid(1, 1.0, 8))


class TestSymbolOperations(unittest.TestCase):
    """Test cases for adjoint, quantize and derivatives."""

    def test_adjoint_involution_is_exact(self):
        """Test (a*)* = a bit for bit on the model kernel."""
        model = kernel_symbol(lambda z, y, k: model_kernel((0.5,), k, z, y), 1, 1, "P0")
        x, y = SamplePairs.default(2, count=3).at(25)
        np.testing.assert_array_equal(adjoint(adjoint(model))(x, y, 25), model(x, y, 25))

    def test_adjoint_swaps_arguments(self):
        """Test a*(x, y) = conj(a(y, x))."""
        model = kernel_symbol(lambda z, y, k: model_kernel((0.5,), k, z, y), 1, 1)
        x = np.array([[0.1, 0.2]])
        y = np.array([[-0.3, 0.05]])
        np.testing.assert_array_equal(adjoint(model)(x, y, 4), np.conj(model(y, x, 4)))

    def test_quantize_constant(self):
        """Test Op_k(gauss) 1 (0) = sqrt(pi / k)."""
        k = 16
        a = scaled_gaussian_symbol(1)
        grid = lebesgue_real_grid(1, 10.0 / math.sqrt(k), 64)
        value = quantize(a, lambda t: np.ones(t.shape[0]), grid, k, points=np.zeros((1, 1)))
        self.assertAlmostEqual(complex(value[0]).real, math.sqrt(math.pi / k), places=12)

    def test_derivative_consistency(self):
        """Test analytic derivatives against finite differences."""
        a = scaled_gaussian_symbol(1, 0.0, 1.0, 1.5)
        x, y = np.array([[0.3]]), np.array([[-0.1]])
        self.assertLess(a.derivative_consistency((1,), (0,), x, y, 1), 1e-8)
        self.assertLess(a.derivative_consistency((0,), (2,), x, y, 1), 1e-6)


class TestMembership(unittest.TestCase):
    """Test cases for estimate_membership."""

    def setUp(self):
        """Set up test case."""
        self.params = SemiclassParams((25, 50, 100))
        self.pairs = SamplePairs(SamplePairs.default(1, radius=1.0).rescaled)

    def test_true_order_passes(self):
        """Test that a Gaussian of order 0 is accepted at order 0."""
        a = scaled_gaussian_symbol(1)
        report = estimate_membership(a, 0.0, [((0,), (0,)), ((1,), (0,))], (2, 4), self.params, self.pairs)
        self.assertTrue(report.passed)
        self.assertTrue(all(entry.l == 0 for entry in report.entries))

    def test_composition_at_composed_order(self):
        """Test membership of a # b at order -d/2."""
        a = scaled_gaussian_symbol(1, 0.0, 1.0, WIDTHS[0])
        b = scaled_gaussian_symbol(1, 0.0, 1.0, WIDTHS[1])
        composed = compose(a, b, lambda k: lebesgue_real_grid(1, 16.0 / math.sqrt(k), 96))
        report = estimate_membership(composed, composed.order, [((0,), (0,))], (2,), self.params, self.pairs)
        self.assertTrue(report.passed)

    def test_wrong_order_fails(self):
        """Test that order -1 is rejected for an order-0 symbol."""
        report = estimate_membership(scaled_gaussian_symbol(1), -1.0, [((0,), (0,))], (2,), self.params, self.pairs)
        self.assertFalse(report.passed)

    def test_to_frame_columns(self):
        """Test the report table layout."""
        report = estimate_membership(scaled_gaussian_symbol(1), 0.0, [((0,), (0,))], (2,), self.params, self.pairs)
        frame = report.to_frame()
        self.assertEqual(list(frame.columns),
                         ["alpha", "beta", "N", "l", "sup_ratio_k25", "sup_ratio_k50", "sup_ratio_k100", "verdict"])
        self.assertEqual(frame["verdict"].tolist(), ["pass"])


class TestBorelSum(unittest.TestCase):
    """Test cases for borel_sum."""

    def setUp(self):
        """Set up test case."""
        self.terms = [scaled_gaussian_symbol(1, 0.0), scaled_gaussian_symbol(1, -1.0)]
        self.schedule = BorelSchedule.default((0.0, -1.0), (1.0, 100.0))
        self.origin = np.zeros((1, 1))

    def test_indicators_follow_k(self):
        """Test that later terms switch on once k passes their threshold."""
        total = borel_sum(self.terms, self.schedule)
        self.assertAlmostEqual(complex(total(self.origin, self.origin, 50)[0]).real, 1.0)
        self.assertAlmostEqual(complex(total(self.origin, self.origin, 200)[0]).real, 1.005)
        self.assertEqual(total.order, 0.0)

    def test_fixed_indicator_k(self):
        """Test fixing the indicators at one k."""
        total = borel_sum(self.terms, self.schedule, k=50)
        self.assertAlmostEqual(complex(total(self.origin, self.origin, 200)[0]).real, 1.0)

    def test_schedule_validation(self):
        """Test ordering and sign checks of the schedule."""
        with self.assertRaises(ConfigError):
            BorelSchedule.default((0.0, 0.0), (1.0, 2.0))
        with self.assertRaises(ConfigError):
            BorelSchedule.default((0.0, -1.0), (2.0, 1.0))
        with self.assertRaises(ConfigError):
            BorelSchedule((0.0,), (1.0,), (0.0,))

    def test_schedule_shorter_than_terms(self):
        """Test that every term needs a schedule entry."""
        with self.assertRaises(ConfigError):
            borel_sum(self.terms, BorelSchedule.default((0.0,), (1.0,)))


class TestSymbolAlgebra(unittest.TestCase):
    """Test cases for sums, products and derivatives of symbols."""

    def setUp(self):
        """Set up test case."""
        self.k = 10
        self.x = np.array([[0.1], [0.3], [-0.2]])
        self.y = np.zeros((3, 1))
        self.s = (self.x - self.y)[:, 0]

    def test_subtract_self_is_zero(self):
        """Test a - a = 0 exactly."""
        a = scaled_gaussian_symbol(1, 0.5)
        difference = subtract(a, a)
        self.assertFalse(np.any(difference(self.x, self.y, self.k)))
        self.assertEqual(difference.order, 0.5)

    def test_pointwise_product(self):
        """Test values and the order m + m' of a product."""
        a = scaled_gaussian_symbol(1, 0.0, 1.0, 1.0)
        b = scaled_gaussian_symbol(1, 0.5, 2.0, 1.5)
        product = pointwise_product(a, b)
        np.testing.assert_allclose(product(self.x, self.y, self.k),
                                   a(self.x, self.y, self.k) * b(self.x, self.y, self.k), rtol=1e-15)
        self.assertEqual(product.order, 0.5)
        with self.assertRaises(ConfigError):
            pointwise_product(a, scaled_gaussian_symbol(2))

    def test_derivative_family(self):
        """Test d/dx and d/dy of exp(-k |x - y|^2)."""
        a = scaled_gaussian_symbol(1, 0.0, 1.0, 1.0)
        gaussian = np.exp(-self.k * self.s ** 2)
        dx = derivative_family(a, 0, "x")
        dy = derivative_family(a, 0, "y")
        np.testing.assert_allclose(dx(self.x, self.y, self.k), -2.0 * self.k * self.s * gaussian, rtol=1e-12)
        np.testing.assert_allclose(dy(self.x, self.y, self.k), 2.0 * self.k * self.s * gaussian, rtol=1e-12)
        self.assertEqual(dx.order, 0.5)

    def test_derivative_family_arguments(self):
        """Test the side and coordinate checks."""
        a = scaled_gaussian_symbol(1)
        with self.assertRaises(ConfigError):
            derivative_family(a, 0, "z")
        with self.assertRaises(ConfigError):
            derivative_family(a, 1)


if __name__ == '__main__':
    unittest.main()
