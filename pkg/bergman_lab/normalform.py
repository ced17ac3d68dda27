"""Reduction of a weight germ to normal form.

A germ phi(z) = c + 2 Re(lin . z) + Re(z^T Qh z) + z^T Q conj(z) + Re higher(z)
together with a Hermitian metric H at the origin is brought, by a linear
change of coordinates and subtraction of Re G for a holomorphic quadratic G,
to sum lambda_i |z^i|^2 + residual with residual of order >= 3 and H = I.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from bergman_lab.core import Polynomial, unit_index
from bergman_lab.errors import ConditioningError, ConfigError, NotPlurisubharmonicError

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 6
METRIC_CONDITION_LIMIT = 1e12
HERMITIAN_TOL = 1e-12


def parse_complex_array(data, shape):
    """Parse JSON numbers or [re, im] pairs into a complex array."""
    if data is None:
        return np.zeros(shape, dtype=complex)
    raw = np.array(data, dtype=float)
    if raw.shape == shape:
        return raw.astype(complex)
    if raw.shape == shape + (2,):
        return raw[..., 0] + 1j * raw[..., 1]
    raise ConfigError(f"expected shape {shape} (or {shape + (2,)} as [re, im] pairs), got {raw.shape}")


def encode_complex(arr):
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [encode_complex(v) for v in arr]


@dataclass
class TaylorWeight:
    """Taylor data of a real weight germ at the origin.

    The represented function is
    constant + 2 Re sum lin_i z^i + Re sum quad_hol_ij z^i z^j + sum quad_mixed_ij z^i zbar^j + Re higher.
    """

    constant: float
    lin: np.ndarray
    quad_hol: np.ndarray
    quad_mixed: np.ndarray
    higher: Polynomial = None
    max_degree: int = DEFAULT_MAX_DEGREE

    def __post_init__(self):
        self.lin = np.asarray(self.lin, dtype=complex).reshape(-1)
        n = self.lin.size
        self.quad_hol = np.asarray(self.quad_hol, dtype=complex).reshape(n, n)
        self.quad_mixed = np.asarray(self.quad_mixed, dtype=complex).reshape(n, n)
        self.constant = float(np.real(self.constant))
        if self.higher is None:
            self.higher = Polynomial.zero(n)
        if self.higher.n != n:
            raise ConfigError("higher-order terms do not match the dimension")
        if np.max(np.abs(self.quad_mixed - self.quad_mixed.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ConfigError("quad_mixed must be Hermitian")
        if np.max(np.abs(self.quad_hol - self.quad_hol.T), initial=0.0) > HERMITIAN_TOL:
            raise ConfigError("quad_hol must be symmetric")
        if self.higher.min_degree < 3:
            raise ConfigError(f"higher-order terms start at degree {self.higher.min_degree}, expected >= 3")
        if self.higher.degree > self.max_degree:
            raise ConfigError(f"germ degree {self.higher.degree} exceeds max_degree {self.max_degree}")

    @property
    def n(self):
        return self.lin.size

    def as_polynomial(self):
        """Polynomial whose real part is the represented weight."""
        n = self.n
        zero = tuple([0] * n)
        terms = {(zero, zero): self.constant}
        for i in range(n):
            terms[(unit_index(n, i), zero)] = 2.0 * self.lin[i]
            for j in range(n):
                hol = tuple(a + b for a, b in zip(unit_index(n, i), unit_index(n, j)))
                terms[(hol, zero)] = terms.get((hol, zero), 0j) + self.quad_hol[i, j]
                terms[(unit_index(n, i), unit_index(n, j))] = self.quad_mixed[i, j]
        return Polynomial(n, terms) + self.higher

    def evaluate(self, z):
        return self.as_polynomial().real_value(z)

    def canonical_coefficients(self, tol=0.0):
        return self.as_polynomial().canonical_real(tol)

    @classmethod
    def from_polynomial(cls, poly, max_degree=DEFAULT_MAX_DEGREE):
        """Split Re(poly) into Taylor blocks using its conjugate-symmetric coefficients."""
        n = poly.n
        zero = tuple([0] * n)
        canonical = poly.canonical_real()
        lin = np.zeros(n, dtype=complex)
        quad_hol = np.zeros((n, n), dtype=complex)
        quad_mixed = np.zeros((n, n), dtype=complex)
        higher = {}
        for (alpha, beta), c in canonical.items():
            degree = sum(alpha) + sum(beta)
            if degree >= 3:
                higher[(alpha, beta)] = c
            elif degree == 1 and sum(alpha) == 1:
                lin[alpha.index(1)] = c
            elif degree == 2 and sum(alpha) == 2:
                idx = [i for i, a in enumerate(alpha) for _ in range(a)]
                i, j = idx
                if i == j:
                    quad_hol[i, i] = 2.0 * c
                else:
                    quad_hol[i, j] = quad_hol[j, i] = c
            elif degree == 2 and sum(alpha) == 1 and sum(beta) == 1:
                quad_mixed[alpha.index(1), beta.index(1)] = c
        constant = canonical.get((zero, zero), 0.0).real
        return cls(constant, lin, quad_hol, quad_mixed, Polynomial(n, higher), max_degree)

    @classmethod
    def from_config(cls, germ, n):
        """Build from the ``germ`` block of an experiment config."""
        return cls(
            constant=germ.get("constant", 0.0),
            lin=parse_complex_array(germ.get("lin"), (n,)),
            quad_hol=parse_complex_array(germ.get("quad_hol"), (n, n)),
            quad_mixed=parse_complex_array(germ.get("quad_mixed"), (n, n)),
            higher=Polynomial.from_config(n, germ.get("higher"), min_degree=3),
            max_degree=germ.get("max_degree", DEFAULT_MAX_DEGREE),
        )


@dataclass
class NormalForm:
    """Normal-form data of a weight germ.

    Attributes:
        unitary: U diagonalizing the metric-normalized mixed Hessian
        coordinate_matrix: B with old coordinates z = B z'
        gauge: Holomorphic G of degree <= 2 in the new frame
        eigenvalues: lambda_1 >= ... >= lambda_n > 0
        residual: Terms of degree >= 3 in the new frame
    """

    unitary: np.ndarray
    coordinate_matrix: np.ndarray
    gauge: Polynomial
    eigenvalues: np.ndarray
    residual: Polynomial

    @property
    def n(self):
        return self.eigenvalues.size

    @property
    def curvature_eigenvalues(self):
        return 4.0 * self.eigenvalues

    def normal_weight(self):
        """The weight sum lambda |z|^2 + residual as Taylor data in the new frame."""
        n = self.n
        return TaylorWeight(
            constant=0.0,
            lin=np.zeros(n),
            quad_hol=np.zeros((n, n)),
            quad_mixed=np.diag(self.eigenvalues).astype(complex),
            higher=Polynomial(n, self.residual.canonical_real()),
            max_degree=max(DEFAULT_MAX_DEGREE, self.residual.degree),
        )

    def reconstruct(self):
        """Undo the gauge subtraction and the coordinate change."""
        n = self.n
        B_inv = np.linalg.inv(self.coordinate_matrix)
        full = self.normal_weight().as_polynomial() + self.gauge
        original = full.substitute(B_inv)
        weight = TaylorWeight.from_polynomial(original, max_degree=max(DEFAULT_MAX_DEGREE, original.degree))
        weight.quad_mixed = 0.5 * (weight.quad_mixed + weight.quad_mixed.conj().T)
        logger.debug(f"Reconstructed germ of dimension {n}")
        return weight

    def to_config(self, epsilon=0.1):
        """Config fragment loadable as a weight, plus the transformation data."""
        return {
            "n": self.n,
            "lambda": [float(v) for v in self.eigenvalues],
            "epsilon": epsilon,
            "perturbation": Polynomial(self.n, self.residual.canonical_real()).to_config(),
            "normal_form": {
                "unitary": encode_complex(self.unitary),
                "coordinate_matrix": encode_complex(self.coordinate_matrix),
                "gauge": self.gauge.to_config(),
                "curvature_eigenvalues": [float(v) for v in self.curvature_eigenvalues],
            },
        }


def _fix_phases(vectors):
    """Make the first nonzero entry of each column real positive."""
    vectors = vectors.copy()
    for col in range(vectors.shape[1]):
        column = vectors[:, col]
        threshold = 1e-12 * np.max(np.abs(column))
        lead = column[np.argmax(np.abs(column) > threshold)]
        vectors[:, col] = column * (np.conj(lead) / abs(lead))
    return vectors


def normalize_weight(tw, metric_at_origin=None):
    """Bring a weight germ to normal form.

    Args:
        tw (TaylorWeight): Germ at the origin
        metric_at_origin: Hermitian positive definite matrix H (identity by default)

    Returns:
        NormalForm: Coordinates, gauge, eigenvalues and residual

    Raises:
        ConditioningError: The metric is singular or too ill-conditioned
        NotPlurisubharmonicError: The mixed Hessian is not positive definite
    """
    n = tw.n
    H = np.eye(n, dtype=complex) if metric_at_origin is None else np.asarray(metric_at_origin, dtype=complex)
    if H.shape != (n, n):
        raise ConfigError(f"metric must be {n}x{n}, got {H.shape}")
    if np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(H))):
        raise ConfigError("metric at the origin must be Hermitian")
    H = 0.5 * (H + H.conj().T)
    condition = np.linalg.cond(H)
    if not np.isfinite(condition) or condition > METRIC_CONDITION_LIMIT:
        raise ConditioningError("metric at the origin is ill-conditioned", {"condition": condition})
    try:
        L = scipy.linalg.cholesky(H, lower=True)
    except np.linalg.LinAlgError as e:
        raise ConditioningError("metric at the origin is not positive definite") from e

    L_inv = scipy.linalg.solve_triangular(L, np.eye(n), lower=True)
    Q = L_inv @ tw.quad_mixed @ L_inv.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    values, vectors = scipy.linalg.eigh(Q)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], _fix_phases(vectors[:, order])
    if not values[-1] > HERMITIAN_TOL * max(1.0, abs(values[0])):
        raise NotPlurisubharmonicError(
            "mixed Hessian is not positive definite: point not in X(0)",
            {"eigenvalues": values.tolist()},
        )

    C = L_inv.conj().T @ vectors
    B = np.conj(C)
    lin = B.T @ tw.lin
    quad_hol = B.T @ tw.quad_hol @ B
    quad_hol = 0.5 * (quad_hol + quad_hol.T)

    zero = tuple([0] * n)
    gauge_terms = {(zero, zero): tw.constant}
    for i in range(n):
        gauge_terms[(unit_index(n, i), zero)] = 2.0 * lin[i]
        for j in range(n):
            hol = tuple(a + b for a, b in zip(unit_index(n, i), unit_index(n, j)))
            gauge_terms[(hol, zero)] = gauge_terms.get((hol, zero), 0j) + quad_hol[i, j]
    gauge = Polynomial(n, gauge_terms)
    residual = tw.higher.substitute(B)

    logger.debug(f"Normal form: eigenvalues {values}, metric condition {condition:.3g}")
    return NormalForm(
        unitary=vectors,
        coordinate_matrix=B,
        gauge=gauge,
        eigenvalues=values,
        residual=residual,
    )


def coefficient_distance(a, b):
    """Max difference between the canonical coefficients of two germs."""
    ca, cb = a.canonical_coefficients(), b.canonical_coefficients()
    keys = set(ca) | set(cb)
    return max((abs(ca.get(key, 0j) - cb.get(key, 0j)) for key in keys), default=0.0)


def random_taylor_weight(n, rng, max_degree=4, scale=0.5):
    """Random admissible germ with positive definite mixed Hessian."""
    def cplx(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    X = cplx(n, n)
    quad_mixed = X @ X.conj().T / n + 0.5 * np.eye(n)
    quad_hol = scale * cplx(n, n)
    quad_hol = 0.5 * (quad_hol + quad_hol.T)
    higher = {}
    for degree in range(3, max_degree + 1):
        for _ in range(2):
            split = rng.integers(0, degree + 1)
            alpha = tuple(rng.multinomial(split, [1.0 / n] * n))
            beta = tuple(rng.multinomial(degree - split, [1.0 / n] * n))
            higher[(alpha, beta)] = higher.get((alpha, beta), 0j) + scale * complex(*rng.standard_normal(2))
    return TaylorWeight(
        constant=float(rng.standard_normal()),
        lin=scale * cplx(n),
        quad_hol=quad_hol,
        quad_mixed=quad_mixed,
        higher=Polynomial(n, higher),
        max_degree=max(DEFAULT_MAX_DEGREE, max_degree),
    )


def random_metric(n, rng):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return X @ X.conj().T / n + np.eye(n)
