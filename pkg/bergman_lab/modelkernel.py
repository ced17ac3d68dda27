"""Closed-form Bargmann-Fock kernels, monomial norms and semiclassical scaling.

Kernels are stored in the localized gauge, i.e. relative to Lebesgue
measure with the factors exp(-k phi_0(z)) and exp(-k phi_0(w)) absorbed:

    P_k(z, w) = k^n (2^n prod lambda / pi^n) exp(k sum lambda_j (2 z_j conj(w_j) - |z_j|^2 - |w_j|^2))

All exponents are combined in log-space before exponentiation.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from bergman_lab.core import MultiIndex, Polynomial, as_points, validate_k
from bergman_lab.errors import ConfigError
from bergman_lab.quadrature import GAUSSIAN, sample

logger = logging.getLogger(__name__)


def _eigenvalues(lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.size == 0 or np.any(lam <= 0):
        raise ConfigError(f"eigenvalues must be positive, got {lam}")
    return lam


def model_diagonal(lam, k=1):
    """Diagonal value k^n 2^n prod(lambda) / pi^n of the model kernel."""
    lam = _eigenvalues(lam)
    n = lam.size
    return float(k ** n * 2 ** n * np.prod(lam) / math.pi ** n)


def model_log_kernel(lam, k, z, w):
    """Complex logarithm of :func:`model_kernel`, broadcasting over leading axes."""
    lam = _eigenvalues(lam)
    k = validate_k(k)
    z = as_points(z, lam.size)
    w = as_points(w, lam.size)
    exponent = k * np.sum(lam * (2.0 * z * np.conj(w) - np.abs(z) ** 2 - np.abs(w) ** 2), axis=-1)
    return math.log(model_diagonal(lam, k)) + exponent


def model_kernel(lam, k, z, w):
    """Model projection kernel P_{k phi_0}(z, w) relative to Lebesgue measure.

    Args:
        lam: Eigenvalues lambda_1..lambda_n
        k (int): Semiclassical parameter
        z: Points of shape (..., n)
        w: Points of shape (..., n), broadcast against ``z``

    Returns:
        numpy.ndarray: Complex kernel values
    """
    return np.exp(model_log_kernel(lam, k, z, w))


def bf_kernel(lam, z, w):
    """Bargmann-Fock reproducing kernel K_BF(z, w) = (2^n prod lambda / pi^n) exp(2 sum lambda (z conj(w) - |w|^2))."""
    lam = _eigenvalues(lam)
    z = as_points(z, lam.size)
    w = as_points(w, lam.size)
    exponent = 2.0 * np.sum(lam * (z * np.conj(w) - np.abs(w) ** 2), axis=-1)
    return model_diagonal(lam, 1) * np.exp(exponent)


def monomial_norm(alpha, lam, k=1):
    """Squared norm of z^alpha in L^2(exp(-2k phi_0) dm).

    pi^n alpha! / (2^(|alpha| + n) prod (k lambda_i)^(alpha_i + 1))
    """
    lam = _eigenvalues(lam)
    k = validate_k(k)
    if not isinstance(alpha, MultiIndex):
        alpha = MultiIndex(tuple(alpha))
    if alpha.n != lam.size:
        raise ConfigError(f"multi-index {alpha.entries} does not match dimension {lam.size}")
    n = lam.size
    denominator = 2.0 ** (alpha.order + n) * np.prod((k * lam) ** (np.array(alpha.entries) + 1))
    return float(math.pi ** n * alpha.factorial / denominator)


@dataclass(frozen=True)
class ModelKernel:
    """Model kernel with fixed eigenvalues and semiclassical parameter."""

    eigenvalues: tuple
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(_eigenvalues(self.eigenvalues)))
        object.__setattr__(self, "k", validate_k(self.k))

    @property
    def n(self):
        return len(self.eigenvalues)

    def __call__(self, z, w):
        return model_kernel(self.eigenvalues, self.k, z, w)

    def log(self, z, w):
        return model_log_kernel(self.eigenvalues, self.k, z, w)

    @property
    def diagonal(self):
        return model_diagonal(self.eigenvalues, self.k)

    def phi0(self, z):
        z = as_points(z, self.n)
        return np.sum(np.array(self.eigenvalues) * np.abs(z) ** 2, axis=-1)


def log_measure_density(grid, z=None):
    """Log of the grid's measure density relative to dm at ``z`` (nodes by default)."""
    z = grid.nodes if z is None else z
    if grid.measure != GAUSSIAN:
        return np.zeros(np.shape(z)[:-1])
    lam = np.array(grid.eigenvalues)
    return -2.0 * grid.k * np.sum(lam * np.abs(z) ** 2, axis=-1)


@dataclass
class ReproductionResult:
    """Outcome of applying the model projection to f exp(-k phi_0)."""

    value: np.ndarray
    expected: np.ndarray = None
    exactness_ok: bool = True

    @property
    def max_relative_error(self):
        if self.expected is None:
            return None
        scale = np.maximum(np.abs(self.expected), np.finfo(float).tiny)
        return float(np.max(np.abs(self.value - self.expected) / scale))


def reproduce_check(lam, k, f, z, grid):
    """Integrate P_k(z, w) f(w) exp(-k phi_0(w)) dm(w) on a quadrature grid.

    Args:
        lam: Eigenvalues
        k (int): Semiclassical parameter
        f (Polynomial): Polynomial in (w, conj w)
        z: Evaluation points (..., n)
        grid (QuadratureGrid): Lebesgue or Gaussian-weighted grid

    Returns:
        ReproductionResult: value per point, f(z) exp(-k phi_0(z)) as the
        expected value when f is holomorphic, and an exactness flag
    """
    lam = _eigenvalues(lam)
    k = validate_k(k)
    z = as_points(z, lam.size)
    flat = z.reshape(-1, lam.size)
    nodes = grid.nodes
    f_values = sample(f, grid) if callable(f) else np.asarray(f)

    exactness_ok = True
    if isinstance(f, Polynomial) and f.degree > grid.exactness_degree // 2:
        exactness_ok = False
        logger.warning(
            f"Polynomial degree {f.degree} exceeds half the grid exactness degree {grid.exactness_degree}"
        )

    phi0_nodes = np.sum(lam * np.abs(nodes) ** 2, axis=-1)
    log_kernel = model_log_kernel(lam, k, flat[:, None, :], nodes[None, :, :])
    log_integrand = log_kernel - k * phi0_nodes[None, :] - log_measure_density(grid)[None, :]
    values = np.exp(log_integrand) @ (grid.weights * f_values)
    values = values.reshape(z.shape[:-1])

    expected = None
    if isinstance(f, Polynomial) and f.is_holomorphic:
        expected = f.evaluate(z) * np.exp(-k * np.sum(lam * np.abs(z) ** 2, axis=-1))
    return ReproductionResult(value=values, expected=expected, exactness_ok=exactness_ok)
