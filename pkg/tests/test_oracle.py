"""Tests for the orthonormalized-monomial oracle kernel."""

import math
import unittest

import numpy as np

from bergman_lab.core import KernelGrid, PartitionSpec, Polynomial, WeightSpec, radial_region
from bergman_lab.errors import ConfigError, GridError, KernelGridMismatchError
from bergman_lab.modelkernel import model_diagonal, model_kernel
from bergman_lab.neumann import hat_kernel
from bergman_lab.oracle import (
    build_basis,
    build_oracle,
    compare,
    default_degree,
    localization_defect,
    offdiag_basis,
    offdiag_decay,
    offdiag_degree,
    offdiag_points,
    offdiag_scale,
    oracle_grid,
    oracle_kernel,
    pivoted_cholesky,
    project,
)
from bergman_lab.quadrature import gaussian_grid, lebesgue_grid


class TestOracleBasis(unittest.TestCase):
    """Test cases for build_basis and build_oracle."""

    def setUp(self):
        """Set up test case."""
        self.k = 25
        self.w = WeightSpec((0.5,))
        self.basis = build_oracle(self.w, None, self.k, A=24)

    def test_default_degree(self):
        """Test A = max(12, ceil(6 k^epsilon))."""
        self.assertEqual(default_degree(100, 0.1), 12)
        self.assertEqual(default_degree(1000, 0.15), 17)

    def test_unperturbed_diagonal(self):
        """Test K(0, 0) against the closed-form model value."""
        value = oracle_kernel(self.basis, np.zeros(1), np.zeros(1)).real
        self.assertAlmostEqual(float(value) / model_diagonal(0.5, self.k), 1.0, places=10)

    def test_unperturbed_matches_model(self):
        """Test the oracle against the model kernel near the origin."""
        region = radial_region(1, 0.5 / math.sqrt(self.k), 5)
        oracle = oracle_grid(self.basis, region, region)
        model = KernelGrid.from_kernel(lambda z, w: model_kernel((0.5,), self.k, z, w), region, region, self.k)
        report = compare(oracle, model, basis=self.basis)
        self.assertLess(report.relative_error, 1e-10)
        self.assertEqual(report.A_used, 24)

    def test_orthonormality(self):
        """Test T G T* = I."""
        self.assertLess(self.basis.orthonormality_defect(), 1e-10)
        self.assertEqual(self.basis.size, 25)

    def test_pivoted_factorization(self):
        """Test that the transform is triangular in the pivot order."""
        self.assertEqual(sorted(self.basis.pivots.tolist()), list(range(self.basis.size)))
        ordered = self.basis.transform[:, self.basis.pivots]
        self.assertEqual(np.max(np.abs(np.triu(ordered, 1))), 0.0)

    def test_pivoted_cholesky(self):
        """Test the pivot order and the rank-deficient case."""
        lower, pivots = pivoted_cholesky(np.diag([1.0, 4.0, 2.0]))
        self.assertEqual(pivots.tolist(), [1, 2, 0])
        np.testing.assert_allclose(np.diag(lower), [2.0, math.sqrt(2.0), 1.0])
        matrix = np.array([[2.0, 1.0 + 1.0j], [1.0 - 1.0j, 3.0]])
        lower, pivots = pivoted_cholesky(matrix)
        permuted = matrix[np.ix_(pivots, pivots)]
        np.testing.assert_allclose(lower @ lower.conj().T, permuted, atol=1e-14)
        lower, rank = pivoted_cholesky(np.ones((3, 3)))
        self.assertIsNone(lower)
        self.assertEqual(rank, 1)

    def test_degree_beyond_exactness(self):
        """Test that 2A above the grid exactness raises GridError."""
        grid = gaussian_grid(1, self.k, (0.5,), 8)
        with self.assertRaises(GridError):
            build_basis(self.w, None, self.k, 12, grid)

    def test_grid_for_other_k(self):
        """Test that the Gram grid must match k and the eigenvalues."""
        with self.assertRaises(ConfigError):
            build_basis(self.w, None, self.k, 4, gaussian_grid(1, 2 * self.k, (0.5,), 16))

    def test_perturbed_adaptive_degree(self):
        """Test a cubic perturbation with the adaptive degree."""
        w = WeightSpec((0.5,), Polynomial(1, {((2,), (1,)): 0.1}), 0.1)
        basis = build_oracle(w, None, 100)
        self.assertGreaterEqual(basis.max_degree, 12)
        self.assertLess(basis.orthonormality_defect(), 1e-8)
        value = float(oracle_kernel(basis, np.zeros(1), np.zeros(1)).real)
        self.assertGreater(value, 0.0)


class TestProjectAndCompare(unittest.TestCase):
    """Test cases for project, compare and offdiag_decay."""

    def test_project_reproduces_holomorphic_section(self):
        """Test P (z exp(-k phi_0)) = z exp(-k phi_0) on a Lebesgue grid."""
        k = 4
        basis = build_oracle(WeightSpec((0.5,)), None, k, A=12)
        grid = lebesgue_grid(1, 3.0, 48)
        z = grid.nodes[:, 0]
        u = z * np.exp(-k * 0.5 * np.abs(z) ** 2)
        projected = project(basis, u, grid)
        np.testing.assert_allclose(projected, u, atol=1e-8)

    def test_project_is_idempotent(self):
        """Test that projecting twice equals projecting once."""
        basis = build_oracle(WeightSpec((0.5,)), None, 4, A=12)
        grid = lebesgue_grid(1, 4.5, 96)
        rng = np.random.default_rng(7)
        u = rng.standard_normal(grid.nodes.shape[0]) + 1j * rng.standard_normal(grid.nodes.shape[0])
        once = project(basis, u, grid)
        twice = project(basis, once, grid)
        self.assertLess(np.max(np.abs(twice - once)), 1e-8 * np.max(np.abs(once)))

    def test_project_reproduces_hat_kernel(self):
        """Test oracle # hat = hat: P-hat(., w) lies in the range of the true projection."""
        k = 100
        w = WeightSpec((0.5,), Polynomial(1, {((2,), (1,)): 0.1}), 0.1)
        basis = build_oracle(w, None, k, A=16, grid=gaussian_grid(1, k, (0.5,), 256))
        grid = lebesgue_grid(1, 0.8, 256)
        anchor = np.array([0.075 + 0.0j])
        targets = radial_region(1, 0.1, 5)
        hat = hat_kernel(w, k, targets, anchor)
        projected = project(basis, hat_kernel(w, k, grid.nodes, anchor), grid, points=targets)
        model = model_kernel((0.5,), k, targets, anchor)
        scale = np.max(np.abs(hat))
        gauge_effect = np.max(np.abs(hat - model)) / scale
        self.assertGreater(gauge_effect, 1e-3)
        self.assertLess(np.max(np.abs(projected - hat)) / scale, 0.1 * gauge_effect)

    def test_mismatched_nodes(self):
        """Test that grids on different nodes cannot be compared."""
        a = KernelGrid(np.zeros((2, 1)), np.zeros((2, 1)), np.ones((2, 2)), 1)
        b = KernelGrid(np.ones((2, 1)), np.zeros((2, 1)), np.ones((2, 2)), 1)
        with self.assertRaises(KernelGridMismatchError):
            compare(a, b)

    def test_norms_and_row(self):
        """Test the sup and L2 errors and the report row."""
        z = np.array([[0.0], [1.0]])
        a = KernelGrid(z, z, np.zeros((2, 2)), 10)
        b = KernelGrid(z, z, np.array([[3.0, 0.0], [0.0, 4.0]]), 10)
        self.assertEqual(compare(a, b, norm="sup").error, 4.0)
        self.assertAlmostEqual(compare(a, b, norm="L2").error, math.sqrt(25.0 / 4.0))
        self.assertEqual(compare(a, b, region=0.5).error, 3.0)
        row = compare(a, b).to_row()
        self.assertEqual(list(row), ["k", "region", "norm", "error", "A_used", "gram_condition"])
        self.assertEqual(row["region"], "all")
        with self.assertRaises(ConfigError):
            compare(a, b, norm="max")

    def test_localization_defect(self):
        """Test sup |(1 - eta) K| with eta = 1 near the diagonal and 0 beyond twice the radius."""
        partition = PartitionSpec(0.5)
        z = np.array([[0.0], [0.3], [1.5]])
        w = np.zeros((1, 1))
        kernel = KernelGrid(z, w, np.array([[2.0], [3.0], [0.25]]), 100)
        self.assertEqual(localization_defect(kernel, partition), 0.25)
        near = KernelGrid(z[:2], w, np.array([[2.0], [3.0]]), 100)
        self.assertEqual(localization_defect(near, partition), 0.0)

    def test_offdiag_decay(self):
        """Test the k^N scaling and the empty-region guard."""
        z = np.array([[1.0], [0.0]])
        w = np.zeros((1, 1))
        kernel = KernelGrid(z, w, np.ones((2, 1)), 100)
        self.assertAlmostEqual(offdiag_decay(kernel, 2, 100, 0.1), 1e4)
        with self.assertRaises(GridError):
            offdiag_decay(KernelGrid(w, w, np.ones((1, 1)), 100), 2, 100, 0.1)


class TestOffdiagWindow(unittest.TestCase):
    """Test cases for the off-diagonal statistic on real kernels."""

    def setUp(self):
        """Set up test case."""
        self.lam = (0.5,)
        self.scale = offdiag_scale(self.lam)

    def statistic(self, kernel_for, k):
        z_points, w_points = offdiag_points(1, k, scale_factor=self.scale)
        return offdiag_decay(kernel_for(k, z_points, w_points), 2, k, scale_factor=self.scale)

    def test_closest_pair_separation(self):
        """Test sqrt(k lambda) |z - w| = 1.75 k^0.16 at the closest sampled pair."""
        for k in (100, 400):
            z_points, w_points = offdiag_points(1, k, scale_factor=self.scale)
            distance = np.min(np.abs(z_points[:, None, 0] - w_points[None, :, 0]))
            self.assertAlmostEqual(math.sqrt(0.5 * k) * distance / k ** 0.16, 1.75, places=6)

    def test_model_kernel_decays(self):
        """Test a tenfold drop of the N = 2 statistic from k = 100 to k = 400 on the model kernel."""
        def model(k, z_points, w_points):
            return KernelGrid.from_kernel(lambda z, y: model_kernel(self.lam, k, z, y), z_points, w_points, k)

        before, after = self.statistic(model, 100), self.statistic(model, 400)
        self.assertGreater(after, 0.0)
        self.assertGreaterEqual(before / after, 10.0)

    def test_oracle_kernel_decays(self):
        """Test the same drop on the cubic-perturbation oracle with the resolving degree."""
        w = WeightSpec(self.lam, Polynomial(1, {((2,), (1,)): 0.1}), 0.1)
        degrees = []

        def oracle(k, z_points, w_points):
            basis = offdiag_basis(build_oracle(w, None, k), self.scale)
            degrees.append(basis.max_degree)
            return oracle_grid(basis, z_points, w_points)

        before, after = self.statistic(oracle, 100), self.statistic(oracle, 400)
        self.assertEqual(degrees, [offdiag_degree(self.lam, 100, scale_factor=self.scale),
                                   offdiag_degree(self.lam, 400, scale_factor=self.scale)])
        self.assertGreater(after, 0.0)
        self.assertGreaterEqual(before / after, 10.0)

    def test_resolving_degree(self):
        """Test the degree covering the closest pair and its caps."""
        self.assertEqual(offdiag_degree(self.lam, 100, scale_factor=self.scale), 33)
        self.assertEqual(offdiag_degree(self.lam, 400, scale_factor=self.scale), 45)
        grid = gaussian_grid(2, 25, (0.5, 0.5), 10)
        basis = build_oracle(WeightSpec((0.5, 0.5)), None, 25, A=4, grid=grid)
        self.assertEqual(offdiag_basis(basis, 0.1, grid).max_degree, 9)
        with self.assertRaises(ConfigError):
            offdiag_scale(self.lam, separation=0.0)


if __name__ == '__main__':
    unittest.main()
