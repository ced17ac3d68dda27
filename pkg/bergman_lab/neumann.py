"""Perturbed-projection expansion: hat kernel, remainder, Neumann partial sums.

With phi-hat = phi_0 + phi_1 and density rho, the true projection P satisfies

    P = P-hat + P-hat#R + ... + P-hat#R^(M-1) + P#R^M,   R = P-hat* - P-hat,

where P-hat = exp(-k phi_1(z)) P_0 exp(k phi_1(w)) and # integrates in t
against Lebesgue measure. All kernels here are relative to dm.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from bergman_lab.core import KernelGrid, MetricSpec, as_points, fit_loglog, radial_region, validate_k
from bergman_lab.errors import ConfigError, ExpansionFitError
from bergman_lab.modelkernel import model_diagonal, model_kernel, model_log_kernel
from bergman_lab.oracle import build_oracle, compare, default_quadrature_order, oracle_grid, oracle_kernel
from bergman_lab.quadrature import gaussian_grid, gaussian_sigma, lebesgue_grid
from bergman_lab.symbols import compose, kernel_symbol

logger = logging.getLogger(__name__)

DEFAULT_LEBESGUE_ORDER = 64
DEFAULT_RADIUS_SIGMAS = 8.0
ROW_BLOCK = 512
VANDERMONDE_CONDITION_LIMIT = 1e12


def hat_kernel(w, k, z, y):
    """P-hat(z, y) = exp(-k phi_1(z)) P_0(z, y) exp(k phi_1(y)), combined in log-space."""
    k = validate_k(k)
    z = as_points(z, w.n)
    y = as_points(y, w.n)
    log_value = model_log_kernel(w.eigenvalues, k, z, y) - k * w.phi1(z, k) + k * w.phi1(y, k)
    return np.exp(log_value)


def hat_adjoint_kernel(w, met, k, z, y):
    """Adjoint of P-hat in L^2(rho dm), as a kernel relative to dm.

    P-hat*(z, y) = P_0(z, y) rho(y) / rho(z) exp(k phi_1(z) - k phi_1(y))
    """
    k = validate_k(k)
    met = met or MetricSpec.flat(w.n)
    z = as_points(z, w.n)
    y = as_points(y, w.n)
    ratio = met.checked_density(y) / met.checked_density(z)
    log_value = model_log_kernel(w.eigenvalues, k, z, y) + k * w.phi1(z, k) - k * w.phi1(y, k)
    return np.exp(log_value) * ratio


def remainder_kernel(w, met, k, z, y):
    """R(z, y) = P_0(z, y) (rho(y)/rho(z) e^{k(phi_1(z) - phi_1(y))} - e^{k(phi_1(y) - phi_1(z))}).

    Vanishes on the diagonal and identically when phi_1 = 0 and rho = 1.

    Raises:
        DensityError: rho drops below rho_min at a sampled point
    """
    k = validate_k(k)
    met = met or MetricSpec.flat(w.n)
    z = as_points(z, w.n)
    y = as_points(y, w.n)
    ratio = met.checked_density(y) / met.checked_density(z)
    gap = k * (w.phi1(z, k) - w.phi1(y, k))
    log_model = model_log_kernel(w.eigenvalues, k, z, y)
    return np.exp(log_model + gap) * ratio - np.exp(log_model - gap)


def remainder_power(w, met, k, j, grid):
    """R_j = R # ... # R (j factors) as a symbol on R^2n of declared order n - j/2.

    Args:
        w (WeightSpec): Weight
        met (MetricSpec): Density
        k (int): Parameter the remainder is built at (the symbol's own k argument is ignored)
        j (int): Number of factors, j >= 1
        grid: Lebesgue QuadratureGrid on C^n (or callable k -> grid) for the compositions
    """
    if j < 1:
        raise ConfigError(f"remainder power needs j >= 1, got {j}")
    k = validate_k(k)
    n = w.n

    def kernel(z, y, _k):
        return remainder_kernel(w, met, k, z, y)

    base = kernel_symbol(kernel, n, n - 0.5, label="R")
    power = base
    for _ in range(j - 1):
        power = compose(power, base, grid)
    power.label = f"R^{j}"
    return power


def neumann_grid(w, k, z_points, w_points, lebesgue_order=DEFAULT_LEBESGUE_ORDER,
                 radius_sigmas=DEFAULT_RADIUS_SIGMAS):
    """Lebesgue box covering the perturbation support, the sampled points and the kernel spread."""
    k = validate_k(k)
    extent = max(
        w.theta(k).support_radius,
        float(np.max(np.abs(np.concatenate([_abs_coordinates(z_points), _abs_coordinates(w_points)])))),
    )
    half_width = extent + radius_sigmas * math.sqrt(2.0) * gaussian_sigma(k, w.eigenvalues)
    return lebesgue_grid(w.n, half_width, lebesgue_order)


def _abs_coordinates(points):
    points = np.asarray(points, dtype=complex)
    return np.concatenate([np.abs(points.real).ravel(), np.abs(points.imag).ravel()])


def neumann_terms(w, met, k, M, z_points, w_points, grid=None):
    """The kernels P-hat # R^j for j = 0..M-1 on z_points x w_points.

    Row vectors V_j(t) = (P-hat # R^j)(z, t) are propagated through
    V_j = (V_{j-1} * weights) @ R(t, t), with R assembled in row blocks.

    Returns:
        list: KernelGrid per j
    """
    k = validate_k(k)
    if M < 1:
        raise ConfigError(f"Neumann partial sums need M >= 1, got {M}")
    met = met or MetricSpec.flat(w.n)
    z_points = as_points(z_points, w.n)
    w_points = as_points(w_points, w.n)
    terms = [KernelGrid(z_points, w_points, hat_kernel(w, k, z_points[:, None, :], w_points[None, :, :]), k,
                        "hat")]
    if M == 1:
        return terms
    if w.is_unperturbed and met.is_flat:
        zero = np.zeros_like(terms[0].values)
        return terms + [KernelGrid(z_points, w_points, zero, k, f"hat#R^{j}") for j in range(1, M)]

    grid = grid or neumann_grid(w, k, z_points, w_points)
    t = grid.nodes
    logger.debug(f"Neumann k={k} M={M}: {t.shape[0]} quadrature nodes")
    weighted = hat_kernel(w, k, z_points[:, None, :], t[None, :, :]) * grid.weights[None, :]
    to_targets = remainder_kernel(w, met, k, t[:, None, :], w_points[None, :, :])
    for j in range(1, M):
        terms.append(KernelGrid(z_points, w_points, weighted @ to_targets, k, f"hat#R^{j}"))
        if j == M - 1:
            break
        propagated = np.zeros((z_points.shape[0], t.shape[0]), dtype=complex)
        for start in range(0, t.shape[0], ROW_BLOCK):
            rows = t[start:start + ROW_BLOCK]
            block = remainder_kernel(w, met, k, rows[:, None, :], t[None, :, :])
            propagated += weighted[:, start:start + ROW_BLOCK] @ block
        weighted = propagated * grid.weights[None, :]
    return terms


def neumann_partial_sum(w, met, k, M, z_points, w_points, grid=None):
    """P-hat + P-hat#R + ... + P-hat#R^(M-1) on z_points x w_points."""
    terms = neumann_terms(w, met, k, M, z_points, w_points, grid)
    values = sum(term.values for term in terms)
    return KernelGrid(terms[0].z_points, terms[0].w_points, values, k, f"neumann_{M}")


@dataclass(frozen=True)
class LeadingCoefficient:
    """a_0(z, w) = (2^n prod lambda / pi^n) exp(sum lambda (2 z conj(w) - |z|^2 - |w|^2))."""

    eigenvalues: tuple

    def __call__(self, z, w):
        return model_kernel(self.eigenvalues, 1, z, w)

    @property
    def at_origin(self):
        return model_diagonal(self.eigenvalues, 1)


def leading_coefficient(lam):
    lam = tuple(float(v) for v in np.atleast_1d(lam))
    if any(not v > 0 for v in lam):
        raise ConfigError(f"eigenvalues must be positive, got {lam}")
    return LeadingCoefficient(lam)


@dataclass
class ExpansionFit:
    """Fitted coefficients a-hat_j(u, v), j = 0..J, with residual diagnostics."""

    k_values: tuple
    coefficients: np.ndarray
    residuals: np.ndarray
    condition: float

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residuals)))


def sample_rescaled(kernel, k_values, u, v):
    """K_k(u / sqrt(k), v / sqrt(k)) for each k, as a dict k -> values."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return {k: np.asarray(kernel(k, u / math.sqrt(k), v / math.sqrt(k))) for k in k_values}


def fit_expansion(samples, n, J):
    """Least-squares fit K_k / k^n = sum_{j<=J} k^(-j/2) a-hat_j.

    Args:
        samples (dict): k -> kernel values at fixed rescaled points
        n (int): Complex dimension
        J (int): Highest coefficient index

    Raises:
        ExpansionFitError: Fewer than J + 2 k values or an ill-conditioned Vandermonde system
    """
    k_values = tuple(sorted(samples))
    if len(k_values) < J + 2:
        raise ExpansionFitError("need at least J + 2 distinct k values", {"J": J, "k_count": len(k_values)})
    h = np.array([k ** -0.5 for k in k_values])
    vandermonde = h[:, None] ** np.arange(J + 1)[None, :]
    condition = float(np.linalg.cond(vandermonde))
    if not condition < VANDERMONDE_CONDITION_LIMIT:
        raise ExpansionFitError("k list too short or clustered for the fit", {"condition": condition})
    data = np.array([np.asarray(samples[k], dtype=complex).ravel() / k ** n for k in k_values])
    coefficients, _, _, _ = np.linalg.lstsq(vandermonde, data, rcond=None)
    residuals = vandermonde @ coefficients - data
    shape = np.asarray(samples[k_values[0]]).shape
    return ExpansionFit(k_values, coefficients.reshape((J + 1,) + shape), residuals, condition)


def decay_slope(k_values, errors):
    """Log-log slope of errors against k; 0 when the errors vanish identically."""
    errors = np.asarray(errors, dtype=float)
    if np.all(errors == 0):
        return 0.0
    if np.any(errors <= 0) or len(k_values) < 2:
        return 0.0
    if len(k_values) == 2:
        return float(math.log(errors[1] / errors[0]) / math.log(k_values[1] / k_values[0]))
    slope, _, _ = fit_loglog(k_values, errors)
    return slope


@dataclass
class ExpansionResult:
    """Partial sums per (k, M), error rows against the oracle and fitted coefficients."""

    partial_sums: dict = field(default_factory=dict)
    error_rows: list = field(default_factory=list)
    coefficient_rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    diagonal_ratios: dict = field(default_factory=dict)

    def errors_frame(self):
        return pd.DataFrame(self.error_rows, columns=["k", "M", "sup_error", "fitted_slope"])

    def coefficients_frame(self):
        return pd.DataFrame(self.coefficient_rows, columns=["u", "v", "j", "re", "im"])


def expansion_sweep(w, met, k_values, M_list, region_scale=0.5, points=5, A=None, fit_points=(0.0, 0.5),
                    order=None, lebesgue_order=DEFAULT_LEBESGUE_ORDER, radius_sigmas=DEFAULT_RADIUS_SIGMAS):
    """Compare Neumann partial sums against the oracle across k.

    Args:
        w (WeightSpec): Weight
        met (MetricSpec): Density
        k_values: Ascending k list
        M_list: Partial-sum lengths
        region_scale (float): Region |z|, |w| <= region_scale / sqrt(k)
        points (int): Sample points per real axis of the region
        A (int, optional): Oracle degree override
        fit_points: Real rescaled coordinates u, v (along the first axis) for coefficient fits
        order (int, optional): Gauss-Hermite order of the oracle Gram grid (per-dimension default when None)
        lebesgue_order (int): Per-axis order of the remainder quadrature
        radius_sigmas (float): Remainder box margin in Gaussian widths

    Returns:
        ExpansionResult: Partial sums, sup errors with fitted slopes, coefficient rows
    """
    met = met or MetricSpec.flat(w.n)
    result = ExpansionResult()
    errors = {M: [] for M in M_list}
    oracles = {}
    for k in k_values:
        logger.info(f"Expansion sweep: k={k}")
        radius = region_scale / math.sqrt(k)
        region = radial_region(w.n, radius, points)
        gram_grid = gaussian_grid(w.n, k, w.eigenvalues, order or default_quadrature_order(w.n))
        basis = build_oracle(w, met, k, A, grid=gram_grid)
        oracles[k] = basis
        reference = oracle_grid(basis, region, region, with_density=True)
        remainder = neumann_grid(w, k, region, region, lebesgue_order, radius_sigmas)
        terms = neumann_terms(w, met, k, max(M_list), region, region, remainder)
        result.diagonal_ratios[k] = float(oracle_kernel(basis, np.zeros(w.n), np.zeros(w.n)).real) / model_diagonal(
            w.eigenvalues, k)
        for M in M_list:
            partial = KernelGrid(region, region, sum(term.values for term in terms[:M]), k, f"neumann_{M}")
            result.partial_sums[(k, M)] = partial
            report = compare(reference, partial, norm="sup", basis=basis)
            errors[M].append(report.error)
            logger.debug(f"k={k} M={M}: sup error {report.error:.3e}")

    for M in M_list:
        slope = decay_slope(k_values, errors[M])
        result.slopes[M] = slope
        for k, error in zip(k_values, errors[M]):
            result.error_rows.append({"k": k, "M": M, "sup_error": error, "fitted_slope": slope})

    J = min(2, len(k_values) - 2)
    if J >= 0:
        e1 = np.zeros(w.n)
        e1[0] = 1.0
        pairs = [(u, v) for u in fit_points for v in fit_points]
        u = np.array([pu * e1 for pu, _ in pairs])
        v = np.array([pv * e1 for _, pv in pairs])
        samples = sample_rescaled(lambda k, z, y: oracle_kernel(oracles[k], z, y, with_density=True), k_values, u, v)
        fit = fit_expansion(samples, w.n, J)
        for j in range(J + 1):
            for (pu, pv), value in zip(pairs, fit.coefficients[j]):
                result.coefficient_rows.append({"u": pu, "v": pv, "j": j, "re": value.real, "im": value.imag})
    return result
