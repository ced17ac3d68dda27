"""Shared numeric substrate for the Bergman kernel laboratory.

Points, multi-indices, polynomials in (z, z-bar), smooth cutoffs, weights,
metrics, partitions of unity, kernel grids and a log-log fitter. Everything
here is immutable after construction and evaluates pointwise over numpy
arrays whose last axis is the complex dimension n.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from bergman_lab.errors import (
    ConfigError,
    DensityError,
    NonFiniteError,
    NotPlurisubharmonicError,
)

logger = logging.getLogger(__name__)

EPSILON_MAX = 1.0 / 6.0


def validate_k(k):
    """Check the semiclassical parameter and return it as an int."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ConfigError(f"semiclassical parameter k must be a positive integer, got {k!r}")
    return int(k)


def validate_epsilon(epsilon):
    """Check that epsilon lies in the open interval (0, 1/6)."""
    if not 0.0 < float(epsilon) < EPSILON_MAX:
        raise ConfigError(f"epsilon must lie in (0, 1/6), got {epsilon!r}")
    return float(epsilon)


def as_points(z, n=None):
    """Coerce coordinates to a complex array whose last axis is the dimension.

    Args:
        z: Scalar, sequence or array of complex coordinates
        n (int, optional): Expected complex dimension

    Returns:
        numpy.ndarray: Complex array of shape (..., n)
    """
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n is not None and arr.shape[-1] != n:
        raise ConfigError(f"expected points of dimension {n}, got trailing axis {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("point coordinates must be finite")
    return arr


def point(*coords):
    """Build a single point z = (z^1, ..., z^n)."""
    return as_points(np.array(coords, dtype=complex))


def to_real(z):
    """Identify C^n with R^2n as (Re z^1..Re z^n, Im z^1..Im z^n)."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(x):
    """Inverse of :func:`to_real`."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


@dataclass(frozen=True)
class MultiIndex:
    """Multi-index alpha = (alpha_1, ..., alpha_n) of nonnegative integers."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(int(a) for a in self.entries)
        if not entries:
            raise ConfigError("multi-index must have at least one entry")
        if any(a < 0 for a in entries):
            raise ConfigError(f"multi-index entries must be nonnegative, got {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self):
        return len(self.entries)

    @property
    def order(self):
        """|alpha| = sum of the entries."""
        return sum(self.entries)

    @property
    def factorial(self):
        """alpha! = product of entry factorials."""
        return math.prod(math.factorial(a) for a in self.entries)

    def power(self, z):
        """Evaluate z^alpha over the last axis of ``z``."""
        z = np.asarray(z, dtype=complex)
        return np.prod(z ** np.array(self.entries), axis=-1)


def multi_indices(n, max_degree):
    """All multi-indices with |alpha| <= max_degree, graded, deterministic order."""
    result = []
    for degree in range(max_degree + 1):
        level = [a for a in itertools.product(range(degree + 1), repeat=n) if sum(a) == degree]
        result.extend(MultiIndex(a) for a in sorted(level, reverse=True))
    return result


def unit_index(n, j):
    return tuple(1 if i == j else 0 for i in range(n))


def _add_index(a, b):
    return tuple(x + y for x, y in zip(a, b))


class Polynomial:
    """Complex polynomial sum of c * z^alpha * conj(z)^beta on C^n.

    Real-valued quantities (weights, densities) are represented as the real
    part of a Polynomial; :meth:`canonical_real` gives the unique
    conjugate-symmetric coefficient map of that real part.
    """

    def __init__(self, n, terms=None):
        """Initialize the polynomial.

        Args:
            n (int): Complex dimension
            terms (dict, optional): Map (alpha, beta) -> complex coefficient
        """
        if n < 1:
            raise ConfigError("polynomial dimension must be at least 1")
        self.n = int(n)
        self.terms = {}
        for (alpha, beta), coeff in (terms or {}).items():
            alpha, beta = tuple(int(a) for a in alpha), tuple(int(b) for b in beta)
            if len(alpha) != self.n or len(beta) != self.n:
                raise ConfigError(f"monomial {alpha},{beta} does not match dimension {self.n}")
            if min(alpha + beta) < 0:
                raise ConfigError(f"negative exponent in monomial {alpha},{beta}")
            coeff = complex(coeff)
            if not np.isfinite(coeff):
                raise NonFiniteError(f"non-finite coefficient for monomial {alpha},{beta}")
            if coeff != 0:
                self.terms[(alpha, beta)] = self.terms.get((alpha, beta), 0j) + coeff

    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def from_config(cls, n, blocks, min_degree=0):
        """Build a polynomial from the JSON term-block format.

        Each block is ``{"degree": d, "coeffs": [{"alpha": [...], "beta": [...],
        "value": re | [re, im]}]}``.
        """
        terms = {}
        for block in blocks or []:
            degree = block.get("degree")
            for entry in block.get("coeffs", []):
                alpha = tuple(entry.get("alpha", [0] * n))
                beta = tuple(entry.get("beta", [0] * n))
                value = entry.get("value", 0.0)
                if isinstance(value, (list, tuple)):
                    value = complex(value[0], value[1] if len(value) > 1 else 0.0)
                total = sum(alpha) + sum(beta)
                if degree is not None and total != degree:
                    raise ConfigError(f"monomial {alpha},{beta} has degree {total}, block declares {degree}")
                if total < min_degree:
                    raise ConfigError(f"monomial {alpha},{beta} has degree {total} < {min_degree}")
                key = (alpha, beta)
                terms[key] = terms.get(key, 0j) + complex(value)
        return cls(n, terms)

    def to_config(self):
        """Serialize to the JSON term-block format, grouped by degree."""
        blocks = {}
        for (alpha, beta), coeff in sorted(self.terms.items()):
            degree = sum(alpha) + sum(beta)
            blocks.setdefault(degree, []).append({
                "alpha": list(alpha),
                "beta": list(beta),
                "value": [coeff.real, coeff.imag],
            })
        return [{"degree": d, "coeffs": blocks[d]} for d in sorted(blocks)]

    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    @property
    def min_degree(self):
        """Lowest total degree present; ``math.inf`` for the zero polynomial."""
        return min((sum(a) + sum(b) for a, b in self.terms), default=math.inf)

    @property
    def is_holomorphic(self):
        return all(sum(beta) == 0 for _, beta in self.terms)

    def _monomials(self, z):
        z = np.asarray(z, dtype=complex)
        zbar = np.conj(z)
        return z, zbar

    def evaluate(self, z):
        """Complex value of the polynomial at points ``z`` of shape (..., n)."""
        z, zbar = self._monomials(z)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for (alpha, beta), coeff in self.terms.items():
            out = out + coeff * np.prod(z ** np.array(alpha), axis=-1) * np.prod(zbar ** np.array(beta), axis=-1)
        return out

    __call__ = evaluate

    def real_value(self, z):
        """Re of the polynomial, the convention for real weights."""
        return self.evaluate(z).real

    def d_z(self, z):
        """Holomorphic partials d/dz^j, shape (..., n)."""
        z, zbar = self._monomials(z)
        out = np.zeros(z.shape, dtype=complex)
        for (alpha, beta), coeff in self.terms.items():
            anti = np.prod(zbar ** np.array(beta), axis=-1)
            for j in range(self.n):
                if alpha[j] == 0:
                    continue
                lowered = np.array(alpha) - np.array(unit_index(self.n, j))
                out[..., j] += coeff * alpha[j] * np.prod(z ** lowered, axis=-1) * anti
        return out

    def d_zbar(self, z):
        """Antiholomorphic partials d/dzbar^j, shape (..., n)."""
        z, zbar = self._monomials(z)
        out = np.zeros(z.shape, dtype=complex)
        for (alpha, beta), coeff in self.terms.items():
            holo = np.prod(z ** np.array(alpha), axis=-1)
            for j in range(self.n):
                if beta[j] == 0:
                    continue
                lowered = np.array(beta) - np.array(unit_index(self.n, j))
                out[..., j] += coeff * beta[j] * holo * np.prod(zbar ** lowered, axis=-1)
        return out

    def real_d_zbar(self, z):
        """d/dzbar^j of Re p, i.e. (d_zbar p + conj(d_z p)) / 2."""
        return 0.5 * (self.d_zbar(z) + np.conj(self.d_z(z)))

    def canonical_real(self, tol=0.0):
        """Conjugate-symmetric coefficients c'(a,b) = (c(a,b) + conj(c(b,a))) / 2 of Re p."""
        keys = set(self.terms) | {(beta, alpha) for alpha, beta in self.terms}
        out = {}
        for alpha, beta in keys:
            value = 0.5 * (self.terms.get((alpha, beta), 0j) + np.conj(self.terms.get((beta, alpha), 0j)))
            if abs(value) > tol:
                out[(alpha, beta)] = complex(value)
        return out

    def substitute(self, matrix):
        """Polynomial q with q(z') = p(B z') for the linear change z = B z'."""
        matrix = np.asarray(matrix, dtype=complex)
        n_new = matrix.shape[1]
        zero = (tuple([0] * n_new), tuple([0] * n_new))
        holo_factors = [
            {(unit_index(n_new, j), zero[1]): matrix[i, j] for j in range(n_new) if matrix[i, j] != 0}
            for i in range(self.n)
        ]
        anti_factors = [
            {(zero[0], unit_index(n_new, j)): np.conj(matrix[i, j]) for j in range(n_new) if matrix[i, j] != 0}
            for i in range(self.n)
        ]
        result = {}
        for (alpha, beta), coeff in self.terms.items():
            product = {zero: coeff}
            for i in range(self.n):
                for _ in range(alpha[i]):
                    product = _multiply_terms(product, holo_factors[i])
                for _ in range(beta[i]):
                    product = _multiply_terms(product, anti_factors[i])
            for key, value in product.items():
                result[key] = result.get(key, 0j) + value
        return Polynomial(n_new, result)

    def __add__(self, other):
        if self.n != other.n:
            raise ConfigError("cannot add polynomials of different dimension")
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0j) + coeff
        return Polynomial(self.n, terms)

    def scaled(self, factor):
        return Polynomial(self.n, {key: factor * c for key, c in self.terms.items()})

    def __repr__(self):
        return f"Polynomial(n={self.n}, terms={len(self.terms)}, degree={self.degree})"


def _multiply_terms(p, q):
    out = {}
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            key = (_add_index(a1, a2), _add_index(b1, b2))
            out[key] = out.get(key, 0j) + c1 * c2
    return out


def _transition(t):
    """exp(-1/t) for t > 0 and 0 otherwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    positive = t > 0
    out[positive] = np.exp(-1.0 / t[positive])
    return out


def _transition_derivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    positive = t > 0
    tp = t[positive]
    out[positive] = np.exp(-1.0 / tp) / tp ** 2
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Radial C-infinity bump: 1 on [0, inner], 0 on [outer, inf)."""

    inner_radius: float = 0.5
    outer_radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ConfigError(
                f"cutoff radii must satisfy 0 < inner < outer, got {self.inner_radius}, {self.outer_radius}"
            )

    def __call__(self, r):
        s = (self.outer_radius - np.asarray(r, dtype=float)) / (self.outer_radius - self.inner_radius)
        a, b = _transition(s), _transition(1.0 - s)
        return a / (a + b)

    def derivative(self, r):
        """d/dr of the profile."""
        width = self.outer_radius - self.inner_radius
        s = (self.outer_radius - np.asarray(r, dtype=float)) / width
        a, b = _transition(s), _transition(1.0 - s)
        da, db = _transition_derivative(s), _transition_derivative(1.0 - s)
        ds = (da * b + a * db) / (a + b) ** 2
        return -ds / width


def standard_cutoff():
    """chi: 1 on B_{1/2}, supported in B_1."""
    return CutoffProfile(0.5, 1.0)


def nesting_cutoff():
    """chi-tilde: 1 on B_1 (so on supp chi), supported in B_2."""
    return CutoffProfile(1.0, 2.0)


@dataclass(frozen=True)
class ScaledCutoff:
    """z -> profile(scale * |z|)."""

    profile: CutoffProfile
    scale: float

    def __call__(self, z):
        r = np.linalg.norm(np.asarray(z, dtype=complex), axis=-1)
        return self.profile(self.scale * r)

    @property
    def inner_radius(self):
        return self.profile.inner_radius / self.scale

    @property
    def support_radius(self):
        return self.profile.outer_radius / self.scale

    def d_zbar(self, z):
        """d/dzbar^j of the radial cutoff: g'(r) z^j / (2r), zero at the origin."""
        z = np.asarray(z, dtype=complex)
        r = np.linalg.norm(z, axis=-1)
        radial = self.scale * self.profile.derivative(self.scale * r)
        safe_r = np.where(r > 0, r, 1.0)
        factor = np.where(r > 0, radial / (2.0 * safe_r), 0.0)
        return factor[..., None] * z


def make_cutoff(profile, k, epsilon, scale_factor=1.0):
    """Semiclassical cutoff z -> chi(scale_factor * k^(1/2 - epsilon) * z).

    Args:
        profile (CutoffProfile): Radial profile chi
        k (int): Semiclassical parameter
        epsilon (float): Exponent in (0, 1/6)
        scale_factor (float): Extra dilation (8 for chi_k)

    Returns:
        ScaledCutoff: Callable on points of shape (..., n)
    """
    k = validate_k(k)
    epsilon = validate_epsilon(epsilon)
    if not scale_factor > 0:
        raise ConfigError(f"scale_factor must be positive, got {scale_factor}")
    return ScaledCutoff(profile, scale_factor * k ** (0.5 - epsilon))


@dataclass(frozen=True)
class WeightSpec:
    """Normal-form weight phi_0 = sum lambda_i |z^i|^2 plus a cut-off perturbation.

    phi-hat = phi_0 + theta_k * Re p with every monomial of p of degree >= 3.
    """

    eigenvalues: tuple
    perturbation: Polynomial = None
    epsilon: float = 0.1
    cutoff: CutoffProfile = field(default_factory=standard_cutoff)

    def __post_init__(self):
        eigenvalues = tuple(float(v) for v in np.atleast_1d(self.eigenvalues))
        if not eigenvalues or any(not v > 0 for v in eigenvalues):
            raise ConfigError(f"eigenvalues must be positive, got {eigenvalues}")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        perturbation = self.perturbation or Polynomial.zero(len(eigenvalues))
        if perturbation.n != len(eigenvalues):
            raise ConfigError("perturbation dimension does not match the eigenvalues")
        if perturbation.min_degree < 3:
            raise ConfigError(f"perturbation has terms of degree {perturbation.min_degree} <= 2")
        object.__setattr__(self, "perturbation", perturbation)
        validate_epsilon(self.epsilon)

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def lam(self):
        return np.array(self.eigenvalues)

    @property
    def is_unperturbed(self):
        return self.perturbation.is_zero

    def theta(self, k):
        """theta_k(z) = theta(k^(1/2 - epsilon) z)."""
        return make_cutoff(self.cutoff, k, self.epsilon, 1.0)

    def phi0(self, z):
        z = as_points(z, self.n)
        return np.sum(self.lam * np.abs(z) ** 2, axis=-1)

    def phi1(self, z, k):
        """phi_1 = theta_k * Re p, compactly supported in |z| < k^(epsilon - 1/2)."""
        z = as_points(z, self.n)
        if self.is_unperturbed:
            return np.zeros(z.shape[:-1])
        return self.theta(k)(z) * self.perturbation.real_value(z)

    def evaluate(self, z, k):
        return self.phi0(z) + self.phi1(z, k)

    def d_zbar(self, z, k):
        """Gradient d(phi-hat)/dzbar^j, shape (..., n)."""
        z = as_points(z, self.n)
        grad = self.lam * z
        if self.is_unperturbed:
            return grad
        theta = self.theta(k)
        p = self.perturbation.real_value(z)
        return grad + theta(z)[..., None] * self.perturbation.real_d_zbar(z) + p[..., None] * theta.d_zbar(z)

    def complex_hessian(self, z, k, step=None):
        """Mixed Hessian d^2 phi-hat / dz^i dzbar^j by central differences of the gradient."""
        z = as_points(z, self.n)
        if step is None:
            step = 1e-5 * self.theta(k).support_radius
        hessian = np.zeros(z.shape[:-1] + (self.n, self.n), dtype=complex)
        for i in range(self.n):
            e = np.zeros(self.n, dtype=complex)
            e[i] = step
            dx = (self.d_zbar(z + e, k) - self.d_zbar(z - e, k)) / (2 * step)
            dy = (self.d_zbar(z + 1j * e, k) - self.d_zbar(z - 1j * e, k)) / (2 * step)
            hessian[..., i, :] = 0.5 * (dx - 1j * dy)
        return 0.5 * (hessian + np.conj(np.swapaxes(hessian, -1, -2)))

    def check_plurisubharmonic(self, k, points_per_axis=None):
        """Raise NotPlurisubharmonicError unless phi-hat is strictly psh on the cutoff ball.

        Returns:
            float: Smallest Hessian eigenvalue found on the sampled disc
        """
        if self.is_unperturbed:
            return float(min(self.eigenvalues))
        radius = self.theta(k).support_radius
        count = points_per_axis or (13 if self.n == 1 else 5)
        axis = np.linspace(-radius, radius, count)
        real = np.array(list(itertools.product(axis, repeat=2 * self.n)))
        samples = to_complex(real)
        samples = samples[np.linalg.norm(samples, axis=-1) <= radius]
        smallest = float(np.min(np.linalg.eigvalsh(self.complex_hessian(samples, k))))
        logger.debug(f"Plurisubharmonicity check at k={k}: min Hessian eigenvalue {smallest:.6g}")
        if not smallest > 0:
            raise NotPlurisubharmonicError(
                "weight is not strictly plurisubharmonic: point not in X(0)",
                {"k": k, "min_hessian_eigenvalue": smallest},
            )
        return smallest

    def to_config(self):
        return {
            "n": self.n,
            "lambda": list(self.eigenvalues),
            "perturbation": self.perturbation.to_config(),
            "epsilon": self.epsilon,
        }


def eval_weight(w, k, z):
    """phi-hat(z) = phi_0(z) + theta_k(z) * p(z, zbar)."""
    return w.evaluate(z, validate_k(k))


@dataclass(frozen=True)
class MetricSpec:
    """Volume density rho(z) = 1 + profile(|z| / R) * Re q(z), identically 1 for |z| >= R."""

    n: int
    perturbation: Polynomial = None
    support_radius: float = 1.0
    rho_min: float = 0.1
    profile: CutoffProfile = field(default_factory=standard_cutoff)

    def __post_init__(self):
        if self.perturbation is None:
            object.__setattr__(self, "perturbation", Polynomial.zero(self.n))
        if self.perturbation.n != self.n:
            raise ConfigError("density perturbation dimension mismatch")
        if not self.support_radius > 0:
            raise ConfigError("support_radius must be positive")
        if not self.rho_min > 0:
            raise ConfigError("rho_min must be positive")

    @classmethod
    def flat(cls, n):
        return cls(n)

    @property
    def is_flat(self):
        return self.perturbation.is_zero

    def density(self, z):
        z = as_points(z, self.n)
        if self.is_flat:
            return np.ones(z.shape[:-1])
        r = np.linalg.norm(z, axis=-1)
        return 1.0 + self.profile(r / self.support_radius) * self.perturbation.real_value(z)

    def checked_density(self, z):
        """Density values, raising DensityError if any drops below rho_min."""
        rho = self.density(z)
        lowest = float(np.min(rho)) if rho.size else 1.0
        if lowest < self.rho_min:
            raise DensityError("density below rho_min", {"min_density": lowest, "rho_min": self.rho_min})
        return rho


@dataclass(frozen=True)
class PartitionSpec:
    """Radial near-diagonal partition eta(z, w) = zeta(|z - w|)."""

    near_diagonal_radius: float

    def __post_init__(self):
        if not self.near_diagonal_radius > 0:
            raise ConfigError("near_diagonal_radius must be positive")

    @property
    def profile(self):
        return CutoffProfile(self.near_diagonal_radius, 2.0 * self.near_diagonal_radius)

    def eta(self, z, w):
        diff = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
        return self.profile(np.linalg.norm(diff, axis=-1))

    def support_radius_bound(self, radius):
        """Both support projections of eta restricted to B_radius lie in B_(radius + 2 r0)."""
        return radius + 2.0 * self.near_diagonal_radius


@dataclass(frozen=True)
class SemiclassParams:
    k_values: tuple
    epsilon: float = 0.1

    def __post_init__(self):
        ks = tuple(validate_k(k) for k in self.k_values)
        if not ks:
            raise ConfigError("k_values must be nonempty")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError(f"k_values must be strictly increasing, got {ks}")
        object.__setattr__(self, "k_values", ks)
        validate_epsilon(self.epsilon)


@dataclass
class KernelGrid:
    """Two-point kernel sampled on z_points x w_points at semiclassical parameter k."""

    z_points: np.ndarray
    w_points: np.ndarray
    values: np.ndarray
    k: int
    label: str = ""

    def __post_init__(self):
        self.z_points = np.asarray(self.z_points, dtype=complex)
        self.w_points = np.asarray(self.w_points, dtype=complex)
        self.values = np.asarray(self.values, dtype=complex)
        expected = (self.z_points.shape[0], self.w_points.shape[0])
        if self.values.shape != expected:
            raise ConfigError(f"kernel values have shape {self.values.shape}, expected {expected}")

    @classmethod
    def from_kernel(cls, kernel, z_points, w_points, k, label=""):
        """Sample ``kernel(z, w)`` (broadcasting) on the product grid."""
        z_points = np.asarray(z_points, dtype=complex)
        w_points = np.asarray(w_points, dtype=complex)
        values = kernel(z_points[:, None, :], w_points[None, :, :])
        return cls(z_points, w_points, values, k, label)

    def same_nodes(self, other):
        return (
            self.z_points.shape == other.z_points.shape
            and self.w_points.shape == other.w_points.shape
            and np.array_equal(self.z_points, other.z_points)
            and np.array_equal(self.w_points, other.w_points)
        )

    def region_mask(self, radius=None):
        """(P, Q) mask of pairs with |z|, |w| <= radius (all pairs when radius is None)."""
        shape = self.values.shape
        if radius is None:
            return np.ones(shape, dtype=bool)
        zin = np.linalg.norm(self.z_points, axis=-1) <= radius
        win = np.linalg.norm(self.w_points, axis=-1) <= radius
        return zin[:, None] & win[None, :]


def radial_region(n, radius, points):
    """Deterministic points filling the ball of the given radius in C^n."""
    axis = np.linspace(-radius, radius, points)
    real = np.array(list(itertools.product(axis, repeat=2 * n)))
    z = to_complex(real)
    return z[np.linalg.norm(z, axis=-1) <= radius * (1 + 1e-12)]


def fit_loglog(xs, ys):
    """Least-squares line through (log x, log y).

    Returns:
        tuple: (slope, intercept, r_squared)
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise ConfigError("fit_loglog needs at least 3 paired points")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ConfigError("fit_loglog needs positive finite inputs")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    predicted = slope * lx + intercept
    ss_res = float(np.sum((ly - predicted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r_squared
