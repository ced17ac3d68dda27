"""Quadrature grids for integrals over C^n.

Two kinds of measure are supported: the Gaussian-weighted measure
exp(-2k phi_0) dm, integrated with tensorized Gauss-Hermite nodes, and
plain Lebesgue measure on a truncated box, integrated with tensorized
Gauss-Legendre nodes. Nodes are complex points of shape (N, n).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite, roots_legendre

from bergman_lab.core import as_points, to_complex, to_real, validate_k
from bergman_lab.errors import ConfigError, NonFiniteError

logger = logging.getLogger(__name__)

LEBESGUE = "lebesgue"
GAUSSIAN = "gaussian"

# Fraction of the half-width beyond which a Lebesgue node counts as boundary.
EDGE_FRACTION = 0.9


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights for one measure on C^n.

    Attributes:
        nodes: Complex array (N, n)
        weights: Real array (N,)
        measure: ``"lebesgue"`` or ``"gaussian"``
        exactness_degree: Per-axis polynomial degree integrated exactly
        k: Semiclassical parameter of the Gaussian measure (None for Lebesgue)
        eigenvalues: lambda of the Gaussian measure (None for Lebesgue)
        half_width: Box half-width of a Lebesgue grid (None for Gaussian)
        center: Box center of a Lebesgue grid
        real_points: Real nodes (N, d) of a grid on R^d
    """

    nodes: np.ndarray
    weights: np.ndarray
    measure: str
    exactness_degree: int
    k: int = None
    eigenvalues: tuple = None
    half_width: float = None
    center: np.ndarray = None
    real_points: np.ndarray = None

    @property
    def n(self):
        return self.nodes.shape[-1]

    def as_real(self):
        """Nodes as real points: the stored real grid, or (Re z, Im z) of the complex nodes."""
        if self.real_points is not None:
            return self.real_points
        return to_real(self.nodes)

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def total_weight(self):
        return float(np.sum(self.weights))

    def expected_total_weight(self):
        """Measure of the covered region: (2L)^(2n) or prod pi/(2k lambda)."""
        if self.measure == LEBESGUE:
            return (2.0 * self.half_width) ** self.as_real().shape[-1]
        return math.prod(math.pi / (2.0 * self.k * lam) for lam in self.eigenvalues)

    def edge_mask(self):
        """Nodes in the outer shell of a Lebesgue box."""
        if self.measure != LEBESGUE:
            return np.zeros(self.size, dtype=bool)
        if self.real_points is not None:
            real = np.abs(self.real_points - (0 if self.center is None else self.center))
        else:
            offset = self.nodes - (0 if self.center is None else self.center)
            real = np.abs(to_real(offset))
        return np.max(real, axis=-1) > EDGE_FRACTION * self.half_width


def _tensor_grid(axis_nodes, axis_weights, dims):
    """Tensor product over ``dims`` real axes in C-order (deterministic)."""
    mesh = np.meshgrid(*([axis_nodes] * dims), indexing="ij")
    wmesh = np.meshgrid(*([axis_weights] * dims), indexing="ij")
    real = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    return real, weights


def gaussian_grid(n, k, eigenvalues, order):
    """Gauss-Hermite grid for the measure exp(-2k sum lambda_i |z^i|^2) dm.

    Each real axis x of z^i uses x = t / sqrt(2 k lambda_i) with weight
    w / sqrt(2 k lambda_i), where (t, w) are the Hermite roots for exp(-t^2).

    Args:
        n (int): Complex dimension
        k (int): Semiclassical parameter
        eigenvalues: lambda_1..lambda_n
        order (int): Hermite points per real axis

    Returns:
        QuadratureGrid: Gaussian-weighted grid of order^(2n) nodes
    """
    k = validate_k(k)
    eigenvalues = tuple(float(v) for v in np.atleast_1d(eigenvalues))
    if len(eigenvalues) != n or any(not v > 0 for v in eigenvalues):
        raise ConfigError(f"need {n} positive eigenvalues, got {eigenvalues}")
    if order < 1:
        raise ConfigError(f"quadrature order must be positive, got {order}")
    t, w = roots_hermite(order)
    real, weights = _tensor_grid(t, w, 2 * n)
    scale = np.array([1.0 / math.sqrt(2.0 * k * lam) for lam in eigenvalues] * 2)
    real = real * scale
    weights = weights * np.prod(scale)
    logger.debug(f"Gaussian grid n={n} k={k} order={order}: {weights.size} nodes")
    return QuadratureGrid(
        nodes=to_complex(real),
        weights=weights,
        measure=GAUSSIAN,
        exactness_degree=2 * order - 1,
        k=k,
        eigenvalues=eigenvalues,
    )


def lebesgue_grid(n, half_width, order, center=None):
    """Gauss-Legendre grid on the box prod [c - L, c + L]^2 for Lebesgue dm."""
    if not half_width > 0:
        raise ConfigError(f"half_width must be positive, got {half_width}")
    if order < 1:
        raise ConfigError(f"quadrature order must be positive, got {order}")
    t, w = roots_legendre(order)
    real, weights = _tensor_grid(t * half_width, w * half_width, 2 * n)
    nodes = to_complex(real)
    if center is not None:
        center = as_points(center, n)
        nodes = nodes + center
    logger.debug(f"Lebesgue grid n={n} L={half_width:.4g} order={order}: {weights.size} nodes")
    return QuadratureGrid(
        nodes=nodes,
        weights=weights,
        measure=LEBESGUE,
        exactness_degree=2 * order - 1,
        half_width=float(half_width),
        center=center,
    )


def lebesgue_real_grid(d, half_width, order, center=None):
    """Gauss-Legendre grid on [c - L, c + L]^d in R^d (d may be odd)."""
    if not half_width > 0:
        raise ConfigError(f"half_width must be positive, got {half_width}")
    if d < 1 or order < 1:
        raise ConfigError(f"need d >= 1 and order >= 1, got d={d}, order={order}")
    t, w = roots_legendre(order)
    real, weights = _tensor_grid(t * half_width, w * half_width, d)
    if center is not None:
        center = np.asarray(center, dtype=float).reshape(d)
        real = real + center
    return QuadratureGrid(
        nodes=real.astype(complex),
        weights=weights,
        measure=LEBESGUE,
        exactness_degree=2 * order - 1,
        half_width=float(half_width),
        center=center,
        real_points=real,
    )


def gaussian_sigma(k, eigenvalues):
    """Widest standard deviation of exp(-2k lambda |x|^2) over the eigenvalues."""
    return 1.0 / math.sqrt(4.0 * k * min(eigenvalues))


def sample(f, grid):
    """Evaluate ``f`` on the nodes, or pass through an already sampled array."""
    samples = f(grid.nodes) if callable(f) else np.asarray(f)
    if samples.shape[:1] != (grid.size,):
        raise ConfigError(f"samples have leading shape {samples.shape[:1]}, grid has {grid.size} nodes")
    if not np.all(np.isfinite(samples)):
        raise NonFiniteError("integrand is not finite on every node", {"nodes": grid.size})
    return samples


def integrate(f, grid):
    """Sum of weight_i * f(node_i) in node order.

    Args:
        f: Callable on (N, n) points or samples with leading axis N
        grid (QuadratureGrid): Nodes and weights

    Returns:
        complex or numpy.ndarray: The quadrature value (array for vector-valued samples)
    """
    samples = sample(f, grid)
    value = np.tensordot(grid.weights, samples, axes=(0, 0))
    if np.ndim(value) == 0:
        return complex(value)
    return value


def tail_fraction(samples, grid):
    """Share of the absolute integrand mass carried by boundary nodes of a Lebesgue box."""
    samples = np.asarray(samples)
    mass = np.abs(grid.weights.reshape((-1,) + (1,) * (samples.ndim - 1)) * samples)
    total = np.sum(mass, axis=0)
    edge = np.sum(mass[grid.edge_mask()], axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(total > 0, edge / np.where(total > 0, total, 1.0), 0.0)
    return float(np.max(ratio)) if np.ndim(ratio) else float(ratio)


def gaussian_moment(alpha, beta, eigenvalues, k):
    """Closed form of the integral of z^alpha zbar^beta exp(-2k phi_0) dm.

    Zero unless alpha == beta; otherwise prod pi alpha_j! / (2 k lambda_j)^(alpha_j + 1).
    """
    alpha, beta = tuple(alpha), tuple(beta)
    if alpha != beta:
        return 0.0
    return math.prod(
        math.pi * math.factorial(a) / (2.0 * k * lam) ** (a + 1)
        for a, lam in zip(alpha, eigenvalues)
    )
