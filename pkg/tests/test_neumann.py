"""Tests for the hat kernel, remainder and Neumann partial sums."""

import math
import unittest

import numpy as np

from bergman_lab.core import Polynomial, WeightSpec, to_complex
from bergman_lab.errors import ConfigError, ExpansionFitError
from bergman_lab.modelkernel import model_kernel
from bergman_lab.neumann import (
    decay_slope,
    fit_expansion,
    hat_adjoint_kernel,
    hat_kernel,
    leading_coefficient,
    neumann_partial_sum,
    neumann_terms,
    remainder_kernel,
    remainder_power,
)
from bergman_lab.quadrature import lebesgue_grid, lebesgue_real_grid


def cubic_weight():
    return WeightSpec((0.5,), Polynomial(1, {((2,), (1,)): 0.1}), 0.1)


class TestKernels(unittest.TestCase):
    """Test cases for hat and remainder kernels."""

    def setUp(self):
        """Set up test case."""
        self.k = 25
        self.z = np.array([[0.0], [0.05 + 0.02j], [-0.1j], [0.2]])

    def test_unperturbed_hat_is_model(self):
        """Test P-hat = P_0 when phi_1 = 0."""
        w = WeightSpec((0.5,))
        np.testing.assert_allclose(
            hat_kernel(w, self.k, self.z[:, None, :], self.z[None, :, :]),
            model_kernel((0.5,), self.k, self.z[:, None, :], self.z[None, :, :]),
            rtol=1e-14,
        )

    def test_hat_diagonal_is_model_diagonal(self):
        """Test that the phi_1 factors cancel on the diagonal."""
        w = cubic_weight()
        np.testing.assert_allclose(hat_kernel(w, self.k, self.z, self.z),
                                   model_kernel((0.5,), self.k, self.z, self.z), rtol=1e-12)

    def test_remainder_vanishes_on_diagonal(self):
        """Test R(z, z) = 0."""
        values = remainder_kernel(cubic_weight(), None, self.k, self.z, self.z)
        np.testing.assert_array_equal(values, np.zeros(len(self.z)))

    def test_remainder_is_zero_without_perturbation(self):
        """Test R = 0 for the unperturbed flat case."""
        values = remainder_kernel(WeightSpec((0.5,)), None, self.k, self.z[:, None, :], self.z[None, :, :])
        np.testing.assert_array_equal(values, np.zeros((4, 4)))

    def test_adjoint_of_hat_kernel(self):
        """Test P-hat*(z, y) = conj(P-hat(y, z)) for flat density."""
        w = cubic_weight()
        z, y = self.z[:, None, :], self.z[None, :, :]
        np.testing.assert_allclose(hat_adjoint_kernel(w, None, self.k, z, y),
                                   np.conj(hat_kernel(w, self.k, y, z)), rtol=1e-12)

    def test_remainder_is_adjoint_minus_hat(self):
        """Test R = P-hat* - P-hat."""
        w = cubic_weight()
        z, y = self.z[:, None, :], self.z[None, :, :]
        expected = hat_adjoint_kernel(w, None, self.k, z, y) - hat_kernel(w, self.k, z, y)
        np.testing.assert_allclose(remainder_kernel(w, None, self.k, z, y), expected, rtol=1e-10, atol=1e-14)

    def test_remainder_closed_form(self):
        """Test R(z, y) = P_0(z, y) (exp(g) - exp(-g)) with g = k (phi_1(z) - phi_1(y))."""
        w = WeightSpec((0.5,), Polynomial(1, {((3,), (0,)): 0.1}), 0.1)
        k = 100
        z, y = np.array([0.05]), np.array([0.02])
        g = k * (w.phi1(z, k) - w.phi1(y, k))
        expected = model_kernel((0.5,), k, z, y) * (np.exp(g) - np.exp(-g))
        self.assertNotEqual(float(np.abs(expected)), 0.0)
        np.testing.assert_allclose(remainder_kernel(w, None, k, z, y), expected, rtol=1e-12)


class TestNeumannTerms(unittest.TestCase):
    """Test cases for neumann_terms and neumann_partial_sum."""

    def test_unperturbed_terms_vanish(self):
        """Test that only the hat term survives without a perturbation."""
        w = WeightSpec((0.5,))
        z = np.array([[0.0], [0.1]])
        terms = neumann_terms(w, None, 25, 3, z, z)
        self.assertEqual(len(terms), 3)
        self.assertFalse(np.any(terms[1].values))
        self.assertFalse(np.any(terms[2].values))
        partial = neumann_partial_sum(w, None, 25, 3, z, z)
        np.testing.assert_allclose(partial.values, model_kernel((0.5,), 25, z[:, None, :], z[None, :, :]))

    def test_perturbed_terms_shape(self):
        """Test the term grid shapes with an explicit quadrature box."""
        z = np.array([[0.0], [0.05]])
        terms = neumann_terms(cubic_weight(), None, 25, 2, z, z, grid=lebesgue_grid(1, 1.5, 24))
        self.assertEqual([term.values.shape for term in terms], [(2, 2), (2, 2)])
        self.assertTrue(np.all(np.isfinite(terms[1].values)))

    def test_invalid_length(self):
        """Test that M < 1 is rejected."""
        with self.assertRaises(ConfigError):
            neumann_terms(WeightSpec((0.5,)), None, 25, 0, np.zeros((1, 1)), np.zeros((1, 1)))


class TestRemainderPower(unittest.TestCase):
    """Test cases for the iterated remainder R # ... # R."""

    def setUp(self):
        """Set up test case."""
        self.k = 25
        self.grid = lebesgue_real_grid(2, 2.0, 48)
        self.x = np.array([[0.0, 0.0], [0.05, 0.02], [-0.1, 0.03]])
        self.y = np.array([[0.02, -0.01], [0.0, 0.0], [0.04, 0.05]])

    def test_single_factor_is_remainder(self):
        """Test R_1 = R."""
        w = cubic_weight()
        power = remainder_power(w, None, self.k, 1, self.grid)
        expected = remainder_kernel(w, None, self.k, to_complex(self.x), to_complex(self.y))
        np.testing.assert_allclose(power(self.x, self.y, self.k), expected, rtol=1e-14)

    def test_declared_orders(self):
        """Test the declared order n - j/2."""
        for j in (1, 2, 3):
            self.assertEqual(remainder_power(cubic_weight(), None, self.k, j, self.grid).order, 1 - j / 2)
        with self.assertRaises(ConfigError):
            remainder_power(cubic_weight(), None, self.k, 0, self.grid)

    def test_two_factors_match_nested_quadrature(self):
        """Test R_2 against a direct sum of R(x, t) R(t, y) over the grid."""
        w = cubic_weight()
        power = remainder_power(w, None, self.k, 2, self.grid)
        t = to_complex(self.grid.as_real())
        left = remainder_kernel(w, None, self.k, to_complex(self.x)[:, None, :], t[None, :, :])
        right = remainder_kernel(w, None, self.k, t[:, None, :], to_complex(self.y)[None, :, :])
        expected = (left * right.T) @ self.grid.weights
        np.testing.assert_allclose(power(self.x, self.y, self.k), expected, rtol=1e-10, atol=1e-14)

    def test_zero_remainder_powers(self):
        """Test R_j = 0 without a perturbation."""
        power = remainder_power(WeightSpec((0.5,)), None, self.k, 2, self.grid)
        self.assertFalse(np.any(power(self.x, self.y, self.k)))


class TestExpansionFit(unittest.TestCase):
    """Test cases for coefficient fitting and decay slopes."""

    def test_leading_coefficient(self):
        """Test a_0(0, 0) = 2^n prod lambda / pi^n."""
        self.assertAlmostEqual(leading_coefficient(0.5).at_origin, 1 / math.pi)
        self.assertAlmostEqual(leading_coefficient((1.0, 0.5)).at_origin, 2 / math.pi ** 2)
        with self.assertRaises(ConfigError):
            leading_coefficient((0.5, 0.0))

    def test_recovers_synthetic_coefficients(self):
        """Test that exact expansion data is fitted back."""
        a = np.array([[1.0 + 0.5j, 2.0], [0.3, -0.2j], [0.05, 0.1]])
        samples = {k: k * (a[0] + a[1] / math.sqrt(k) + a[2] / k) for k in (25, 50, 100, 200, 400)}
        fit = fit_expansion(samples, 1, 2)
        np.testing.assert_allclose(fit.coefficients, a, atol=1e-8)
        self.assertLess(fit.max_residual, 1e-10)

    def test_too_few_k_values(self):
        """Test that the fit needs J + 2 values of k."""
        with self.assertRaises(ExpansionFitError):
            fit_expansion({25: np.ones(2), 50: np.ones(2)}, 1, 1)

    def test_decay_slope(self):
        """Test zero errors, two-point ratios and log-log fits."""
        self.assertEqual(decay_slope((25, 50, 100), [0.0, 0.0, 0.0]), 0.0)
        self.assertAlmostEqual(decay_slope((25, 100), [1e-2, 2.5e-3]), -1.0)
        ks = np.array([25.0, 50.0, 100.0, 200.0])
        self.assertAlmostEqual(decay_slope(ks, ks ** -1.5), -1.5)


if __name__ == '__main__':
    unittest.main()
