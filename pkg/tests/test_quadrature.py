"""Tests for quadrature grids."""

import math
import unittest

import numpy as np

from bergman_lab.errors import ConfigError, NonFiniteError
from bergman_lab.quadrature import (
    gaussian_grid,
    gaussian_moment,
    integrate,
    lebesgue_grid,
    lebesgue_real_grid,
    tail_fraction,
)


class TestGaussianGrid(unittest.TestCase):
    """Test cases for Gauss-Hermite grids."""

    def setUp(self):
        """Set up test case."""
        self.lam = (0.5, 2.3)
        self.k = 4
        self.grid = gaussian_grid(2, self.k, self.lam, 8)

    def test_total_weight(self):
        """Test that the weights sum to the Gaussian mass."""
        self.assertAlmostEqual(self.grid.total_weight / self.grid.expected_total_weight(), 1.0, places=12)
        self.assertEqual(self.grid.size, 8 ** 4)
        self.assertEqual(self.grid.exactness_degree, 15)

    def test_moments(self):
        """Test integrals of z^alpha zbar^beta against the closed form."""
        z = self.grid.nodes
        for alpha, beta in [((1, 0), (1, 0)), ((2, 1), (2, 1)), ((1, 0), (0, 1)), ((2, 0), (0, 0))]:
            values = np.prod(z ** np.array(alpha), axis=-1) * np.prod(np.conj(z) ** np.array(beta), axis=-1)
            numeric = integrate(values, self.grid)
            expected = gaussian_moment(alpha, beta, self.lam, self.k)
            scale = gaussian_moment(alpha, alpha, self.lam, self.k)
            self.assertLess(abs(numeric - expected), 1e-12 * scale)

    def test_no_edge_nodes(self):
        """Test that Gaussian grids have no boundary shell."""
        self.assertFalse(self.grid.edge_mask().any())

    def test_invalid_eigenvalues(self):
        """Test that eigenvalues must match the dimension and be positive."""
        with self.assertRaises(ConfigError):
            gaussian_grid(2, 1, (0.5,), 4)
        with self.assertRaises(ConfigError):
            gaussian_grid(1, 1, (-0.5,), 4)


class TestLebesgueGrid(unittest.TestCase):
    """Test cases for Gauss-Legendre grids."""

    def test_box_volume(self):
        """Test that the weights sum to the box volume."""
        grid = lebesgue_grid(1, 1.5, 16)
        self.assertAlmostEqual(grid.total_weight, 9.0, places=12)
        self.assertAlmostEqual(grid.expected_total_weight(), 9.0)

    def test_real_grid_odd_dimension(self):
        """Test a real grid on R^3."""
        grid = lebesgue_real_grid(3, 1.0, 6, center=[0.5, 0.0, 0.0])
        self.assertEqual(grid.as_real().shape, (216, 3))
        self.assertAlmostEqual(grid.total_weight, 8.0, places=12)
        self.assertAlmostEqual(float(np.sum(grid.weights * grid.as_real()[:, 0])), 4.0, places=12)

    def test_gaussian_integral(self):
        """Test the Lebesgue integral of exp(-|z|^2) over a large box."""
        grid = lebesgue_grid(1, 8.0, 64)
        value = integrate(lambda z: np.exp(-np.abs(z[:, 0]) ** 2), grid)
        self.assertAlmostEqual(value.real, math.pi, places=10)

    def test_tail_fraction(self):
        """Test the boundary-shell mass share."""
        grid = lebesgue_grid(1, 8.0, 32)
        contained = np.exp(-np.abs(grid.nodes[:, 0]) ** 2)
        self.assertLess(tail_fraction(contained, grid), 1e-12)
        self.assertGreater(tail_fraction(np.ones(grid.size), grid), 0.1)

    def test_non_finite_samples(self):
        """Test that NaN samples are rejected."""
        grid = lebesgue_grid(1, 1.0, 4)
        samples = np.ones(grid.size)
        samples[3] = np.nan
        with self.assertRaises(NonFiniteError):
            integrate(samples, grid)

    def test_sample_shape_mismatch(self):
        """Test that samples must match the node count."""
        grid = lebesgue_grid(1, 1.0, 4)
        with self.assertRaises(ConfigError):
            integrate(np.ones(3), grid)


if __name__ == '__main__':
    unittest.main()
