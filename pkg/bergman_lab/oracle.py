"""Brute-force weighted Bergman projection kernel.

Holomorphic monomials z^alpha, |alpha| <= A, normalized by their model
norms, are orthonormalized in L^2(exp(-2k phi-hat) rho dm) through a
pivoted Cholesky factorization of their Gram matrix. The kernel is then the
finite ONB sum, stored in the localized gauge.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
from scipy.special import comb

from bergman_lab.core import (
    KernelGrid,
    MetricSpec,
    as_points,
    make_cutoff,
    multi_indices,
    nesting_cutoff,
    radial_region,
    standard_cutoff,
    validate_k,
)
from bergman_lab.errors import ConditioningError, ConfigError, GridError, KernelGridMismatchError
from bergman_lab.modelkernel import monomial_norm
from bergman_lab.quadrature import GAUSSIAN, gaussian_grid

logger = logging.getLogger(__name__)

DEFAULT_ORDERS = {1: 96, 2: 24, 3: 10}
DEGREE_STEP = 4
DEGREE_CAP = 48
STABILITY_TOL = 1e-6
CONDITION_LIMIT = 1e14

# Off-diagonal window: cutoff exponent, closest-pair separation sqrt(k min lambda) |z - w| / k^epsilon,
# and the largest basis rebuilt to resolve the pair.
OFFDIAG_EPSILON = 0.16
OFFDIAG_SEPARATION = 1.75
OFFDIAG_SIGMAS = 6.0
OFFDIAG_MAX_SIZE = 64


def default_degree(k, epsilon):
    """A = max(12, ceil(6 k^epsilon))."""
    return max(12, math.ceil(6.0 * k ** epsilon))


def default_quadrature_order(n):
    return DEFAULT_ORDERS.get(n, 8)


@dataclass
class OracleBasis:
    """Orthonormalized monomial basis for one (weight, metric, k).

    Attributes:
        weight: WeightSpec
        metric: MetricSpec
        k: Semiclassical parameter
        max_degree: A
        indices: Multi-indices of the monomials, graded
        norms: Model squared norms of the monomials
        gram: Hermitian Gram matrix G_ab of the normalized monomials
        transform: T with T G T* = I, lower-triangular in the pivot order
        pivots: Monomial positions in the order the factorization chose them
        condition: 2-norm condition number of the Gram matrix
    """

    weight: object
    metric: MetricSpec
    k: int
    max_degree: int
    indices: list
    norms: np.ndarray
    gram: np.ndarray
    transform: np.ndarray
    condition: float
    pivots: np.ndarray = None

    @property
    def size(self):
        return len(self.indices)

    def normalized_monomials(self, z):
        """e_alpha(z) = z^alpha / ||z^alpha||, shape (..., D)."""
        z = as_points(z, self.weight.n)
        exponents = np.array([alpha.entries for alpha in self.indices])
        powers = np.prod(z[..., None, :] ** exponents, axis=-1)
        return powers / np.sqrt(self.norms)

    def orthonormal(self, z):
        """Psi_j(z) = sum_i T_ji e_i(z), shape (..., D)."""
        return self.normalized_monomials(z) @ self.transform.T

    def gauge(self, z):
        return np.exp(-self.basis_k_weight(z))

    def basis_k_weight(self, z):
        return self.k * self.weight.evaluate(z, self.k)

    def orthonormality_defect(self):
        """max |T G T* - I|."""
        product = self.transform @ self.gram @ self.transform.conj().T
        return float(np.max(np.abs(product - np.eye(self.size))))


def build_basis(w, met, k, A, grid=None):
    """Assemble the Gram matrix by quadrature and factor it.

    Args:
        w (WeightSpec): Weight in normal form
        met (MetricSpec): Volume density
        k (int): Semiclassical parameter
        A (int): Maximal monomial degree
        grid (QuadratureGrid): Gaussian grid for exp(-2k phi_0) (default order per dimension)

    Returns:
        OracleBasis: Factored basis

    Raises:
        ConditioningError: Gram matrix numerically not positive definite or too ill-conditioned
    """
    k = validate_k(k)
    if A < 0:
        raise ConfigError(f"max degree A must be nonnegative, got {A}")
    met = met or MetricSpec.flat(w.n)
    if grid is None:
        grid = gaussian_grid(w.n, k, w.eigenvalues, default_quadrature_order(w.n))
    if grid.measure != GAUSSIAN or grid.k != k or tuple(grid.eigenvalues) != tuple(w.eigenvalues):
        raise ConfigError("oracle Gram quadrature needs the Gaussian grid of the same k and eigenvalues")
    if 2 * A > grid.exactness_degree:
        raise GridError(
            "quadrature not exact for the Gram matrix",
            {"A": A, "exactness_degree": grid.exactness_degree},
        )

    indices = multi_indices(w.n, A)
    norms = np.array([monomial_norm(alpha, w.eigenvalues, k) for alpha in indices])
    basis = OracleBasis(w, met, k, A, indices, norms, None, None, float("nan"))

    nodes = grid.nodes
    factor = np.exp(-2.0 * k * w.phi1(nodes, k)) * met.checked_density(nodes)
    values = basis.normalized_monomials(nodes)
    weighted = values * (grid.weights * factor)[:, None]
    # G_ab = integral of e_a conj(e_b)
    gram = weighted.T @ np.conj(values)
    gram = 0.5 * (gram + gram.conj().T)

    eigenvalues = np.linalg.eigvalsh(gram)
    condition = float(eigenvalues[-1] / eigenvalues[0]) if eigenvalues[0] > 0 else float("inf")
    logger.debug(f"Gram k={k} A={A} size={len(indices)} condition={condition:.3e}")
    if not condition < CONDITION_LIMIT:
        raise ConditioningError(
            "Gram matrix too ill-conditioned",
            {"k": k, "A": A, "condition": condition, "min_eigenvalue": float(eigenvalues[0])},
        )

    scale = 1.0 / np.sqrt(np.real(np.diag(gram)))
    equilibrated = gram * scale[:, None] * scale[None, :]
    lower, pivots = pivoted_cholesky(equilibrated)
    if lower is None:
        raise ConditioningError(
            "Gram matrix not numerically positive definite",
            {"k": k, "A": A, "rank": int(pivots), "size": len(indices), "min_eigenvalue": float(eigenvalues[0])},
        )
    inverse = scipy.linalg.solve_triangular(lower, np.eye(len(indices)), lower=True)
    # T[:, p_m] = L^-1[:, m], so T G T* = L^-1 P^T G P L^-*
    transform = np.zeros_like(inverse)
    transform[:, pivots] = inverse
    basis.gram = gram
    basis.transform = transform * scale[None, :]
    basis.condition = condition
    basis.pivots = pivots
    return basis


def pivoted_cholesky(matrix):
    """Rank-revealing Cholesky P^T A P = L L* through LAPACK ?pstrf.

    Returns:
        tuple: (L, pivots) with zero-based pivots, or (None, rank) when the
        matrix is numerically rank deficient
    """
    pstrf, = scipy.linalg.lapack.get_lapack_funcs(("pstrf",), (matrix,))
    factor, pivots, rank, info = pstrf(matrix, lower=1)
    if info != 0 or rank < matrix.shape[0]:
        return None, rank
    return np.tril(factor), pivots - 1


def oracle_kernel(basis, z, y, with_density=False):
    """K(z, y) = sum_j Psi_j(z) conj(Psi_j(y)) exp(-k phi-hat(z) - k phi-hat(y)).

    Args:
        basis (OracleBasis): Factored basis
        z, y: Points (..., n), broadcast against each other
        with_density (bool): Multiply by rho(y) to get the kernel relative to dm

    Returns:
        numpy.ndarray: Complex kernel values
    """
    z = as_points(z, basis.weight.n)
    y = as_points(y, basis.weight.n)
    psi_z = basis.orthonormal(z) * basis.gauge(z)[..., None]
    psi_y = np.conj(basis.orthonormal(y)) * basis.gauge(y)[..., None]
    values = np.matmul(psi_z[..., None, :], psi_y[..., :, None])[..., 0, 0]
    if with_density:
        values = values * basis.metric.density(y)
    return values


def oracle_grid(basis, z_points, w_points, with_density=True, label="oracle"):
    """Sample the oracle kernel on a product grid by one matrix product."""
    z_points = as_points(z_points, basis.weight.n)
    w_points = as_points(w_points, basis.weight.n)
    psi_z = basis.orthonormal(z_points) * basis.gauge(z_points)[:, None]
    psi_w = basis.orthonormal(w_points) * basis.gauge(w_points)[:, None]
    values = psi_z @ psi_w.conj().T
    if with_density:
        values = values * basis.metric.density(w_points)[None, :]
    return KernelGrid(z_points, w_points, values, basis.k, label)


def build_oracle(w, met, k, A=None, grid=None, tol=STABILITY_TOL, cap=DEGREE_CAP):
    """Oracle basis with adaptive degree.

    An explicit ``A`` is used as is. Otherwise the degree starts at
    max(12, ceil(6 k^epsilon)) and grows in steps of 4 until K(0, 0)
    changes by less than ``tol`` relative, or the cap (bounded by the grid's
    exactness) is reached.
    """
    k = validate_k(k)
    met = met or MetricSpec.flat(w.n)
    w.check_plurisubharmonic(k)
    if grid is None:
        grid = gaussian_grid(w.n, k, w.eigenvalues, default_quadrature_order(w.n))
    if A is not None:
        return build_basis(w, met, k, A, grid)

    cap = min(cap, grid.exactness_degree // 2)
    degree = min(default_degree(k, w.epsilon), cap)
    origin = np.zeros(w.n)
    basis = build_basis(w, met, k, degree, grid)
    previous = oracle_kernel(basis, origin, origin).real
    while degree + DEGREE_STEP <= cap:
        candidate = build_basis(w, met, k, degree + DEGREE_STEP, grid)
        current = oracle_kernel(candidate, origin, origin).real
        change = abs(current - previous) / abs(current)
        logger.debug(f"Oracle k={k}: A {degree} -> {degree + DEGREE_STEP}, relative change {change:.3e}")
        basis, degree, previous = candidate, degree + DEGREE_STEP, current
        if change < tol:
            break
    else:
        if degree + DEGREE_STEP > cap and cap > default_degree(k, w.epsilon):
            logger.warning(f"Oracle degree reached cap {cap} at k={k}")
    return basis


def project(basis, samples, grid, points=None):
    """Oracle projection of sampled functions in the localized gauge.

    (P u)(z) = integral of K(z, t) u(t) rho(t) dm(t) over a Lebesgue grid.

    Args:
        basis (OracleBasis): Factored basis
        samples: u on the grid nodes, shape (N,) or (N, m)
        grid (QuadratureGrid): Lebesgue grid
        points: Target points (default: the grid nodes)
    """
    nodes = grid.nodes
    samples = np.asarray(samples, dtype=complex)
    psi = basis.orthonormal(nodes) * basis.gauge(nodes)[:, None]
    weights = grid.weights * basis.metric.density(nodes)
    reshaped = samples.reshape(samples.shape[0], -1)
    coefficients = psi.conj().T @ (weights[:, None] * reshaped)
    targets = nodes if points is None else as_points(points, basis.weight.n)
    psi_targets = basis.orthonormal(targets) * basis.gauge(targets)[:, None]
    result = psi_targets @ coefficients
    return result.reshape((targets.shape[0],) + samples.shape[1:])


@dataclass
class ErrorReport:
    k: int
    region: str
    norm: str
    error: float
    A_used: int = 0
    gram_condition: float = 1.0
    relative_error: float = 0.0

    def to_row(self):
        return {
            "k": self.k,
            "region": self.region,
            "norm": self.norm,
            "error": self.error,
            "A_used": self.A_used,
            "gram_condition": self.gram_condition,
        }


def compare(oracle, approx, region=None, norm="sup", basis=None):
    """Distance between two kernel grids on shared nodes.

    Args:
        oracle (KernelGrid): Reference kernel
        approx (KernelGrid): Approximation on the same nodes
        region (float, optional): Restrict to |z|, |w| <= region
        norm (str): ``"sup"`` or ``"L2"`` (root mean square over node pairs)
        basis (OracleBasis, optional): Source of A_used and the Gram condition

    Returns:
        ErrorReport: Error value and provenance
    """
    if not oracle.same_nodes(approx):
        raise KernelGridMismatchError("kernel grids do not share nodes",
                                      {"oracle": oracle.values.shape, "approx": approx.values.shape})
    if norm not in ("sup", "L2"):
        raise ConfigError(f"norm must be 'sup' or 'L2', got {norm!r}")
    mask = oracle.region_mask(region)
    if not mask.any():
        raise GridError("comparison region contains no node pairs", {"region": region})
    diff = np.abs(oracle.values - approx.values)[mask]
    error = float(np.max(diff)) if norm == "sup" else float(np.sqrt(np.mean(diff ** 2)))
    reference = float(np.max(np.abs(oracle.values[mask])))
    return ErrorReport(
        k=oracle.k,
        region="all" if region is None else f"r<={region:.6g}",
        norm=norm,
        error=error,
        A_used=basis.max_degree if basis is not None else 0,
        gram_condition=basis.condition if basis is not None else 1.0,
        relative_error=error / reference if reference > 0 else 0.0,
    )


def offdiag_scale(eigenvalues, separation=OFFDIAG_SEPARATION):
    """Cutoff dilation placing the closest region pair at sqrt(k min lambda) |z - w| = separation k^epsilon.

    chi_k = 1 inside 1/2 s^-1 k^(-1/2+eps) and chi-tilde_k vanishes beyond
    2 s^-1 k^(-1/2+eps), so the two regions are 3/2 s^-1 k^(-1/2+eps) apart.
    """
    if separation <= 0:
        raise ConfigError(f"off-diagonal separation must be positive, got {separation}")
    return 1.5 * math.sqrt(min(eigenvalues)) / separation


def offdiag_degree(eigenvalues, k, epsilon=OFFDIAG_EPSILON, scale_factor=1.0, sigmas=OFFDIAG_SIGMAS):
    """Monomial degree that resolves the kernel at the closest off-diagonal pair.

    For |z| = 2r and |w| = r/2 with r = s^-1 k^(-1/2+eps), the model kernel
    is a Poisson-weighted series in (z wbar)^j with mean x = 2 k max(lambda) |z| |w|;
    the degree covers x + sigmas sqrt(x).
    """
    k = validate_k(k)
    r = 1.0 / (scale_factor * k ** (0.5 - epsilon))
    x = 2.0 * k * max(eigenvalues) * r * r
    return math.ceil(x + sigmas * math.sqrt(x))


def offdiag_basis(basis, scale_factor, grid=None, max_size=OFFDIAG_MAX_SIZE):
    """The basis itself, or a rebuild at the degree offdiag_degree asks for.

    The rebuilt degree stays within DEGREE_CAP, the grid's exactness and
    ``max_size`` monomials.
    """
    w = basis.weight
    if grid is None:
        grid = gaussian_grid(w.n, basis.k, w.eigenvalues, default_quadrature_order(w.n))
    degree = min(offdiag_degree(w.eigenvalues, basis.k, scale_factor=scale_factor), DEGREE_CAP,
                 grid.exactness_degree // 2)
    while degree > basis.max_degree and comb(degree + w.n, w.n, exact=True) > max_size:
        degree -= 1
    if degree <= basis.max_degree:
        return basis
    logger.debug(f"Off-diagonal basis k={basis.k}: A {basis.max_degree} -> {degree}")
    return build_basis(w, basis.metric, basis.k, degree, grid)


def offdiag_points(n, k, epsilon=OFFDIAG_EPSILON, scale_factor=1.0, points=9):
    """Point sets for the off-diagonal statistic.

    Both sets include the axis points on their boundary spheres, so the
    closest pair of the two regions is always sampled.

    Returns:
        tuple: (z_points on the ring where the nesting cutoff vanishes,
        w_points in the ball where the standard cutoff equals 1)
    """
    chi = make_cutoff(standard_cutoff(), k, epsilon, scale_factor)
    chi_tilde = make_cutoff(nesting_cutoff(), k, epsilon, scale_factor)
    w_points = radial_region(n, chi.inner_radius * (1.0 - 1e-9), points)
    outer = chi_tilde.support_radius * (1.0 + 1e-9)
    ring = radial_region(n, 1.5 * outer, 2 * points + 1)
    ring = ring[np.linalg.norm(ring, axis=-1) >= outer]
    axes = np.concatenate([np.eye(n), 1j * np.eye(n)])
    boundary = outer * np.concatenate([axes, -axes])
    return np.concatenate([boundary, ring]), w_points


def offdiag_decay(kernel, N, k, epsilon=OFFDIAG_EPSILON, scale_factor=1.0):
    """sup of |K(z, w)| k^N over pairs with chi_k(w) = 1 and chi-tilde_k(z) = 0.

    Raises:
        GridError: No sampled pair lies in that region
    """
    k = validate_k(k)
    chi = make_cutoff(standard_cutoff(), k, epsilon, scale_factor)
    chi_tilde = make_cutoff(nesting_cutoff(), k, epsilon, scale_factor)
    z_ok = chi_tilde(kernel.z_points) == 0.0
    w_ok = chi(kernel.w_points) == 1.0
    mask = z_ok[:, None] & w_ok[None, :]
    if not mask.any():
        raise GridError("off-diagonal region pair is empty", {"k": k, "epsilon": epsilon})
    return float(np.max(np.abs(kernel.values[mask])) * float(k) ** N)


def localization_defect(kernel, partition):
    """sup |(1 - eta(z, w)) K(z, w)| over the sampled pairs."""
    eta = partition.eta(kernel.z_points[:, None, :], kernel.w_points[None, :, :])
    return float(np.max(np.abs((1.0 - eta) * kernel.values)))
