"""Discretized deformed Cauchy-Riemann complex on C (n = 1).

A u = du/dzbar + k (d phi-hat/dzbar) u is discretized by conforming
biquadratic elements on a Dirichlet box [-L, L]^2. Functions and
(0,1)-forms share the element space; A u and A* v are sampled exactly at
the Gauss points of each element, and the Laplacians are the stiffness
matrices of |A u|^2 and |A* v|^2 against the element mass matrix. Every
discrete eigenvalue is a Rayleigh quotient of the continuum operator, so
the measured gap never falls below the true one.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.sparse.linalg import ArpackNoConvergence
from scipy.special import roots_legendre

from bergman_lab.core import fit_loglog, validate_k
from bergman_lab.errors import ConditioningError, ConfigError, ConvergenceError, GridError
from bergman_lab.quadrature import LEBESGUE, QuadratureGrid

logger = logging.getLogger(__name__)

MIN_POINTS_PER_SIDE = 16
DEFAULT_HALF_WIDTH_SIGMAS = 8.0
DEFAULT_RESOLUTION = 0.1
MAX_RESOLUTION = 0.2
GAUSS_POINTS = 4
DENSE_LIMIT = 400


def _reference_element():
    """Gauss rule on [0, 1] with the quadratic Lagrange basis on nodes 0, 1/2, 1 and its derivative."""
    t, weights = roots_legendre(GAUSS_POINTS)
    s = 0.5 * (t + 1.0)
    values = np.stack([2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5)], axis=1)
    slopes = np.stack([4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0], axis=1)
    return s, 0.5 * weights, values, slopes


def _odd_points(count):
    m = max(MIN_POINTS_PER_SIDE, int(math.ceil(count)))
    return m if m % 2 else m + 1


@dataclass(frozen=True)
class Grid2D:
    """Interior nodes of a Dirichlet box [-L, L]^2 with m points per side.

    Nodes are x_i = -L + (i + 1) h with h = 2L / (m + 1), indexed iy * m + ix.
    Consecutive node triples (boundary included) form the (m + 1) / 2
    biquadratic elements per side, so m is odd. Sampled functions live on
    the element Gauss points, indexed the same way.
    """

    half_width: float
    points_per_side: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ConfigError(f"half_width must be positive, got {self.half_width}")
        if self.points_per_side < MIN_POINTS_PER_SIDE:
            raise ConfigError(f"points_per_side must be >= {MIN_POINTS_PER_SIDE}, got {self.points_per_side}")
        if self.points_per_side % 2 == 0:
            raise ConfigError(f"points_per_side must be odd, got {self.points_per_side}")

    @property
    def spacing(self):
        return 2.0 * self.half_width / (self.points_per_side + 1)

    @property
    def size(self):
        return self.points_per_side ** 2

    @property
    def elements_per_side(self):
        return (self.points_per_side + 1) // 2

    @property
    def axis(self):
        m = self.points_per_side
        return -self.half_width + self.spacing * np.arange(1, m + 1)

    def coordinates(self):
        """Complex node coordinates, shape (m^2,)."""
        x = self.axis
        xx, yy = np.meshgrid(x, x, indexing="xy")
        return (xx + 1j * yy).ravel()

    def points(self):
        return self.coordinates()[:, None]

    def gauss_axis(self):
        """Gauss points and weights along one side, element by element."""
        s, weights, _, _ = _reference_element()
        width = 2.0 * self.spacing
        left = -self.half_width + width * np.arange(self.elements_per_side)
        return (left[:, None] + width * s[None, :]).ravel(), np.tile(width * weights, self.elements_per_side)

    def quadrature_coordinates(self):
        """Complex Gauss-point coordinates, indexed iy * P + ix over the P points per side."""
        x, _ = self.gauss_axis()
        xx, yy = np.meshgrid(x, x, indexing="xy")
        return (xx + 1j * yy).ravel()

    def quadrature_points(self):
        return self.quadrature_coordinates()[:, None]

    def quadrature_weights(self):
        _, weights = self.gauss_axis()
        return np.outer(weights, weights).ravel()

    def sample(self, f):
        """Gauss-point samples of a callable on complex coordinates, or validated samples."""
        if callable(f):
            return np.asarray(f(self.quadrature_coordinates()), dtype=complex)
        samples = np.asarray(f, dtype=complex)
        expected = self.quadrature_weights().shape[0]
        if samples.shape != (expected,):
            raise ConfigError(f"expected {expected} Gauss-point samples, got shape {samples.shape}")
        return samples

    def norm(self, u):
        return float(math.sqrt(np.sum(self.quadrature_weights() * np.abs(u) ** 2)))

    def inner(self, u, v):
        return complex(np.sum(self.quadrature_weights() * u * np.conj(v)))

    def as_quadrature(self):
        """Composite Gauss-Legendre quadrature of the box on the sampling points."""
        return QuadratureGrid(
            nodes=self.quadrature_points(),
            weights=self.quadrature_weights(),
            measure=LEBESGUE,
            exactness_degree=2 * GAUSS_POINTS - 1,
            half_width=self.half_width,
        )

    def axis_basis(self):
        """Values and x-derivatives of the 1D nodal basis at the Gauss points, both (points, m)."""
        _, _, values, slopes = _reference_element()
        m, E = self.points_per_side, self.elements_per_side
        shape = (E, GAUSS_POINTS, 3)
        rows = np.broadcast_to(np.arange(E * GAUSS_POINTS).reshape(E, GAUSS_POINTS, 1), shape)
        cols = np.broadcast_to(2 * np.arange(E)[:, None, None] + np.arange(3)[None, None, :] - 1, shape)
        keep = (cols >= 0) & (cols < m)
        index = (rows[keep], cols[keep])
        size = (E * GAUSS_POINTS, m)
        value_matrix = scipy.sparse.coo_matrix((np.broadcast_to(values, shape)[keep], index), shape=size)
        slope_matrix = scipy.sparse.coo_matrix(
            (np.broadcast_to(slopes / (2.0 * self.spacing), shape)[keep], index), shape=size)
        return value_matrix.tocsr(), slope_matrix.tocsr()

    def refined(self, factor=1.5):
        return Grid2D(self.half_width, _odd_points((self.points_per_side + 1) * factor - 1))

    @classmethod
    def for_weight(cls, w, k, half_width_sigmas=DEFAULT_HALF_WIDTH_SIGMAS, resolution=DEFAULT_RESOLUTION,
                   points_per_side=None):
        """Box L = half_width_sigmas / sqrt(k min lambda) with the fewest nodes meeting the resolution bound."""
        k = validate_k(k)
        half_width = half_width_sigmas / math.sqrt(k * min(w.eigenvalues))
        if points_per_side is None:
            h_max = resolution / math.sqrt(k * max(w.eigenvalues))
            points_per_side = _odd_points(2.0 * half_width / h_max - 1)
        return cls(half_width, points_per_side)


@dataclass
class SparseOperator:
    """Hermitian stiffness matrix on element coefficients, with the mass matrix of its inner product."""

    matrix: scipy.sparse.csr_matrix
    grid: Grid2D
    label: str = ""
    mass: scipy.sparse.csr_matrix = None

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def adjoint(self):
        return SparseOperator(self.matrix.conj().T.tocsr(), self.grid, f"{self.label}*", self.mass)

    def __call__(self, u):
        return self.matrix @ np.asarray(u, dtype=complex)

    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


@dataclass
class DeformedDbar:
    """A and A* between element coefficients and Gauss-point samples.

    Attributes:
        values: Interpolation, coefficients -> samples
        forward: Coefficients of u -> samples of A u
        backward: Coefficients of v -> samples of A* v = -dv/dz + k (d phi-hat/dz) v
        weights: Gauss weights of the box
    """

    grid: Grid2D
    k: int
    values: scipy.sparse.csr_matrix
    forward: scipy.sparse.csr_matrix
    backward: scipy.sparse.csr_matrix
    weights: np.ndarray
    label: str = ""

    @property
    def dimension(self):
        return self.values.shape[1]

    def __call__(self, coefficients):
        return self.forward @ np.asarray(coefficients, dtype=complex)

    def apply_adjoint(self, coefficients):
        return self.backward @ np.asarray(coefficients, dtype=complex)

    def interpolate(self, coefficients):
        return self.values @ np.asarray(coefficients, dtype=complex)

    def nodal(self, f):
        """Coefficients of the interpolant of a callable (zero on the boundary)."""
        return np.asarray(f(self.grid.coordinates()), dtype=complex)

    def adjoint(self):
        return replace(self, forward=self.backward, backward=self.forward, label=f"{self.label}*")

    def tested(self, samples, matrix=None):
        """Inner products (f, column_i) of Gauss-point samples against the columns of ``matrix``."""
        matrix = self.values if matrix is None else matrix
        return matrix.conj().T @ (self.weights * np.asarray(samples, dtype=complex))


def build_deformed_dbar(grid, w, k):
    """A = (d/dx + i d/dy) / 2 + k d phi-hat/dzbar on the biquadratic elements of ``grid``.

    Raises:
        GridError: Spacing above 0.2 / sqrt(k max lambda); the message carries a suggested grid
    """
    k = validate_k(k)
    if w.n != 1:
        raise ConfigError("the discretized complex supports n = 1 only")
    h_max = MAX_RESOLUTION / math.sqrt(k * max(w.eigenvalues))
    if grid.spacing > h_max:
        suggested = _odd_points(2.0 * grid.half_width / h_max - 1)
        raise GridError(
            "grid does not resolve the Gaussian scale",
            {"spacing": grid.spacing, "max_spacing": h_max, "suggested_points_per_side": suggested},
        )
    values_1d, slopes_1d = grid.axis_basis()
    values = scipy.sparse.kron(values_1d, values_1d, format="csr")
    dx = scipy.sparse.kron(values_1d, slopes_1d, format="csr")
    dy = scipy.sparse.kron(slopes_1d, values_1d, format="csr")
    potential = k * w.d_zbar(grid.quadrature_points(), k)[:, 0]
    forward = 0.5 * (dx + 1j * dy) + scipy.sparse.diags(potential) @ values
    backward = -0.5 * (dx - 1j * dy) + scipy.sparse.diags(np.conj(potential)) @ values
    logger.debug(f"Deformed dbar k={k}: {grid.size} unknowns, {values.shape[0]} Gauss points, "
                 f"h={grid.spacing:.4g}")
    return DeformedDbar(grid, k, values, forward.tocsr(), backward.tocsr(), grid.quadrature_weights(),
                        f"dbar_k{k}")


def _hermitian(matrix):
    return ((matrix + matrix.conj().T) * 0.5).tocsr()


def laplacian(A, q):
    """q = 0: A*A on functions; q = 1: AA* on (0,1)-forms. Exactly Hermitian.

    Both come as the stiffness matrix of |A u|^2 (|A* v|^2) with the element
    mass matrix attached.
    """
    if q not in (0, 1):
        raise ConfigError(f"q must be 0 or 1, got {q}")
    sampled = A.forward if q == 0 else A.backward
    weights = scipy.sparse.diags(A.weights)
    stiffness = _hermitian(sampled.conj().T @ (weights @ sampled))
    mass = _hermitian(A.values.T @ (weights @ A.values))
    return SparseOperator(stiffness, A.grid, f"laplacian{q}", mass)


def min_eigenvalue(op, tol=1e-10, maxiter=None, dense_limit=DENSE_LIMIT):
    """Smallest eigenvalue of a Hermitian positive semidefinite operator.

    A SparseOperator with a mass matrix is solved as the pencil (matrix, mass).
    Small operators are solved densely; larger ones by ARPACK shift-invert
    around a small negative shift from the normalized all-ones start vector.

    Raises:
        ConvergenceError: ARPACK did not converge
    """
    if isinstance(op, SparseOperator):
        matrix, mass = op.matrix, op.mass
    else:
        matrix, mass = op, None
    dimension = matrix.shape[0]
    if dimension <= dense_limit:
        dense = matrix.toarray() if scipy.sparse.issparse(matrix) else np.asarray(matrix)
        dense_mass = mass.toarray() if scipy.sparse.issparse(mass) else mass
        return float(scipy.linalg.eigvalsh(dense, dense_mass)[0])
    start = np.ones(dimension, dtype=complex) / math.sqrt(dimension)
    diagonal = np.abs(matrix.diagonal())
    if mass is not None:
        diagonal = diagonal / np.abs(mass.diagonal())
    shift = -1e-3 * max(float(np.mean(diagonal)), 1.0)
    try:
        values = scipy.sparse.linalg.eigsh(
            matrix.tocsc(), k=1, M=None if mass is None else mass.tocsc(), sigma=shift, which="LM", v0=start,
            tol=tol, maxiter=maxiter, return_eigenvectors=False,
        )
    except ArpackNoConvergence as e:
        raise ConvergenceError(
            "shift-invert iteration did not converge",
            {"dimension": dimension, "converged": len(e.eigenvalues)},
        ) from e
    value = float(np.real(values[0]))
    logger.debug(f"Min eigenvalue {value:.10g} (dimension {dimension})")
    return value


def _factorize(op):
    try:
        return scipy.sparse.linalg.splu(op.matrix.tocsc())
    except RuntimeError as e:
        raise ConditioningError("Laplacian is singular on the truncated grid") from e


@dataclass
class DbarSolution:
    """Minimal solution of A u = alpha with its L^2 certificate."""

    u: np.ndarray
    residual: float
    gap: float
    norm_bound: float
    bound_ratio: float


def solve_dbar(alpha, w, k, grid, gap=None):
    """u = A* (AA*)^(-1) alpha, the solution of A u = alpha orthogonal to ker A.

    AA* v = alpha is solved in weak form on the element space and u = A* v
    is sampled at the Gauss points. Since ||u||^2 = (alpha, v) and
    ||A* v||^2 >= gap ||v||^2, ||u|| <= ||alpha|| / sqrt(gap) holds on the grid.

    Args:
        alpha: (0,1)-form coefficient, a callable on complex coordinates or Gauss-point samples
        w (WeightSpec): Weight (n = 1)
        k (int): Semiclassical parameter
        grid (Grid2D): Discretization
        gap (float, optional): Known spectral gap (the lowest eigenvalue of AA* by default)

    Returns:
        DbarSolution: u, relative residual of the weak equation, gap, bound ||alpha|| / sqrt(gap)
        and ||u|| / bound
    """
    alpha = grid.sample(alpha)
    A = build_deformed_dbar(grid, w, k)
    box = laplacian(A, 1)
    if gap is None:
        gap = min_eigenvalue(box)
    if not gap > 0:
        raise ConditioningError("Laplacian on (0,1)-forms has no positive gap", {"gap": gap})
    alpha_norm = grid.norm(alpha)
    if alpha_norm == 0:
        return DbarSolution(np.zeros_like(alpha), 0.0, gap, 0.0, 0.0)
    load = A.tested(alpha)
    v = _factorize(box).solve(load)
    u = A.apply_adjoint(v)
    load_norm = np.linalg.norm(load)
    residual = float(np.linalg.norm(box(v) - load) / load_norm) if load_norm > 0 else 0.0
    norm_bound = alpha_norm / math.sqrt(gap)
    return DbarSolution(u, residual, gap, norm_bound, grid.norm(u) / norm_bound)


def hodge_project(u, w, k, grid):
    """P u = u - A* (AA*)^(-1) A u, the projection onto ker A.

    ``u`` is a callable or Gauss-point samples; A u enters only through
    (u, A* v), so rough samples are admissible.
    """
    u = grid.sample(u)
    A = build_deformed_dbar(grid, w, k)
    box = laplacian(A, 1)
    load = A.tested(u, A.backward)
    return u - A.apply_adjoint(_factorize(box).solve(load))


@dataclass
class GapReport:
    k: int
    half_width: float
    points_per_side: int
    min_eig: float
    refinement_delta: float = 0.0

    @property
    def ratio(self):
        return self.min_eig / self.k

    def to_row(self):
        return {
            "k": self.k,
            "L": self.half_width,
            "points_per_side": self.points_per_side,
            "min_eig": self.min_eig,
            "ratio_min_eig_over_k": self.ratio,
        }


@dataclass
class GapSweep:
    """Gap reports across k with the fitted law min_eig ~ C k^d."""

    reports: list = field(default_factory=list)
    order: float = float("nan")
    constant: float = float("nan")
    r_squared: float = float("nan")

    def fit(self):
        if len(self.reports) >= 3:
            slope, intercept, r_squared = fit_loglog([r.k for r in self.reports], [r.min_eig for r in self.reports])
            self.order, self.constant, self.r_squared = slope, math.exp(intercept), r_squared
        return self


def measure_gap(w, k, grid=None, refine=False, half_width_sigmas=DEFAULT_HALF_WIDTH_SIGMAS,
                resolution=DEFAULT_RESOLUTION):
    """Lowest eigenvalue of AA* on (0,1)-forms at one k, optionally with a one-step refinement delta."""
    grid = grid or Grid2D.for_weight(w, k, half_width_sigmas, resolution)
    value = min_eigenvalue(laplacian(build_deformed_dbar(grid, w, k), 1))
    delta = 0.0
    if refine:
        finer = grid.refined()
        refined_value = min_eigenvalue(laplacian(build_deformed_dbar(finer, w, k), 1))
        delta = abs(refined_value - value) / abs(refined_value)
    return GapReport(k, grid.half_width, grid.points_per_side, value, delta)


def gap_sweep(w, k_values, refine=False, half_width_sigmas=DEFAULT_HALF_WIDTH_SIGMAS, resolution=DEFAULT_RESOLUTION):
    """Gap reports over a k list, fitted with a log-log line when at least three k are given."""
    sweep = GapSweep()
    for k in k_values:
        logger.info(f"Spectral gap: k={k}")
        sweep.reports.append(measure_gap(w, k, refine=refine, half_width_sigmas=half_width_sigmas,
                                         resolution=resolution))
    return sweep.fit()
