"""Semiclassical symbol calculus on R^d x R^d.

A symbol is a family a(x, y, k) of two-point functions with a declared
order m: roughly |d_x^alpha d_y^beta a| <= k^(m + (|alpha| + |beta|)/2)
with rapid decay in sqrt(k)|x - y|. Points are real arrays of shape (..., d);
complex kernels on C^n are wrapped with d = 2n via (Re z, Im z).
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import eval_hermite

from bergman_lab.core import CutoffProfile, SemiclassParams, standard_cutoff, to_complex, validate_k
from bergman_lab.errors import ConfigError, GridError
from bergman_lab.quadrature import sample, tail_fraction

logger = logging.getLogger(__name__)

FD_STEP = 1e-3
STENCIL_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
STENCIL_COEFFS = (1.0, -8.0, 8.0, -1.0)
DEFAULT_TAIL_TOLERANCE = 1e-8
GROWTH_TOLERANCE = 1.1
L_MAX = 12
DEFAULT_N_LIST = (2, 4, 8)
CHUNK = 256


def _real_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ConfigError(f"expected real points of dimension {d}, got {x.shape[-1]}")
    return x


def finite_difference(evaluator, alpha, beta, x, y, k):
    """Iterated 4th-order central differences with step 1e-3 (1 + |x|) / sqrt(k).

    Args:
        evaluator: Callable (x, y, k) -> values
        alpha: Derivative orders in x, one per real coordinate
        beta: Derivative orders in y
        x, y: Real points (..., d)
        k (int): Semiclassical parameter
    """
    directions = [(0, i) for i, a in enumerate(alpha) for _ in range(a)]
    directions += [(1, i) for i, b in enumerate(beta) for _ in range(b)]
    return _difference(evaluator, directions, np.asarray(x, float), np.asarray(y, float), k)


def _difference(evaluator, directions, x, y, k):
    if not directions:
        return np.asarray(evaluator(x, y, k), dtype=complex)
    (side, coord), rest = directions[0], directions[1:]
    base = x if side == 0 else y
    h = FD_STEP * (1.0 + np.linalg.norm(base, axis=-1, keepdims=True)) / math.sqrt(k)
    unit = np.zeros(base.shape[-1])
    unit[coord] = 1.0
    total = 0.0
    for offset, coeff in zip(STENCIL_OFFSETS, STENCIL_COEFFS):
        shifted = base + offset * h * unit
        if side == 0:
            total = total + coeff * _difference(evaluator, rest, shifted, y, k)
        else:
            total = total + coeff * _difference(evaluator, rest, x, shifted, k)
    return total / (12.0 * h[..., 0])


@dataclass
class SymbolFamily:
    """A symbol a(x, y, k) with declared order and optional analytic derivatives.

    Attributes:
        evaluator: Callable (x, y, k) -> complex values, broadcasting over leading axes
        order: Declared order m
        dimension: Real dimension d
        derivative_evaluator: Callable (alpha, beta, x, y, k) -> values, or None
        max_derivative_order: Highest |alpha| + |beta| served analytically (None: unlimited)
        label: Name used in logs and reports
    """

    evaluator: object
    order: float
    dimension: int
    derivative_evaluator: object = None
    max_derivative_order: int = None
    label: str = ""

    def __call__(self, x, y, k):
        return np.asarray(self.evaluator(x, y, k), dtype=complex)

    def has_analytic(self, total):
        if self.derivative_evaluator is None:
            return False
        return self.max_derivative_order is None or total <= self.max_derivative_order

    def derivative(self, alpha, beta, x, y, k):
        """d_x^alpha d_y^beta a at (x, y, k), analytic when available."""
        alpha = tuple(alpha) if alpha else (0,) * self.dimension
        beta = tuple(beta) if beta else (0,) * self.dimension
        total = sum(alpha) + sum(beta)
        if total == 0:
            return self(x, y, k)
        if self.has_analytic(total):
            return np.asarray(self.derivative_evaluator(alpha, beta, x, y, k), dtype=complex)
        return finite_difference(self, alpha, beta, x, y, k)

    def derivative_consistency(self, alpha, beta, x, y, k):
        """Max relative gap between analytic and finite-difference derivatives."""
        analytic = self.derivative(alpha, beta, x, y, k)
        numeric = finite_difference(self, alpha, beta, x, y, k)
        scale = max(float(np.max(np.abs(analytic))), np.finfo(float).tiny)
        return float(np.max(np.abs(analytic - numeric))) / scale


def _zero_order(d):
    return (0,) * d


def adjoint(a):
    """Formal adjoint a*(x, y, k) = conj(a(y, x, k)), same order."""

    def evaluator(x, y, k):
        return np.conj(a(y, x, k))

    derivative_evaluator = None
    if a.derivative_evaluator is not None:
        def derivative_evaluator(alpha, beta, x, y, k):
            return np.conj(a.derivative_evaluator(beta, alpha, y, x, k))

    return SymbolFamily(
        evaluator, a.order, a.dimension, derivative_evaluator, a.max_derivative_order, f"adjoint({a.label})"
    )


def _grid_for(grid, k):
    return grid(k) if callable(grid) else grid


def _pairwise_integral(left, right, x, y, k, grid, tail_tolerance, label):
    """Integral of left(x, t, k) right(t, y, k) dm(t) for every broadcast pair (x, y)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    d = x.shape[-1]
    shape = x.shape[:-1]
    xf, yf = x.reshape(-1, d), y.reshape(-1, d)
    t = grid.as_real()
    if t.shape[-1] != d:
        raise ConfigError(f"quadrature grid dimension {t.shape[-1]} does not match symbol dimension {d}")
    out = np.empty(xf.shape[0], dtype=complex)
    worst = 0.0
    for start in range(0, xf.shape[0], CHUNK):
        xs, ys = xf[start:start + CHUNK], yf[start:start + CHUNK]
        integrand = left(xs[:, None, :], t[None, :, :], k) * right(t[None, :, :], ys[:, None, :], k)
        worst = max(worst, tail_fraction(integrand.T, grid))
        out[start:start + CHUNK] = integrand @ grid.weights
    if worst > tail_tolerance:
        raise GridError("grid too small", {"symbol": label, "tail_fraction": worst, "tolerance": tail_tolerance})
    return out.reshape(shape)


def compose(a, b, grid, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
    """Composition (a # b)(x, y, k) = integral of a(x, t, k) b(t, y, k) dm(t).

    Args:
        a (SymbolFamily): Left symbol
        b (SymbolFamily): Right symbol
        grid: Lebesgue QuadratureGrid on R^d, or a callable k -> grid
        tail_tolerance (float): Largest admissible share of integrand mass on the box boundary

    Returns:
        SymbolFamily: Order m + m' - d/2; evaluation raises GridError("grid too small")
        when the integrand is not contained in the box
    """
    if a.dimension != b.dimension:
        raise ConfigError("cannot compose symbols of different dimension")
    d = a.dimension
    label = f"({a.label}#{b.label})"

    def evaluator(x, y, k):
        return _pairwise_integral(a, b, x, y, k, _grid_for(grid, k), tail_tolerance, label)

    def derivative_evaluator(alpha, beta, x, y, k):
        zero = _zero_order(d)

        def left(x_, t_, k_):
            return a.derivative(alpha, zero, x_, t_, k_)

        def right(t_, y_, k_):
            return b.derivative(zero, beta, t_, y_, k_)

        return _pairwise_integral(left, right, x, y, k, _grid_for(grid, k), tail_tolerance, label)

    return SymbolFamily(evaluator, a.order + b.order - d / 2.0, d, derivative_evaluator, None, label)


def quantize(a, u, grid, k, points=None, tail_tolerance=DEFAULT_TAIL_TOLERANCE):
    """Op_k(a)u(x) = integral of a(x, y, k) u(y) dm(y) by quadrature.

    Args:
        a (SymbolFamily): Symbol
        u: Samples on the grid nodes, or a callable on real points (N, d)
        grid (QuadratureGrid): Lebesgue grid on R^d
        k (int): Semiclassical parameter
        points: Real target points (P, d); the grid nodes by default

    Returns:
        numpy.ndarray: Values at the target points
    """
    k = validate_k(k)
    t = grid.as_real()
    if callable(u):
        u_values = sample(lambda _: u(t), grid)
    else:
        u_values = sample(u, grid)
    guard_mask = None
    if points is None:
        points = t
        guard_mask = ~grid.edge_mask()
    points = _real_points(points, a.dimension)
    values = np.empty(points.shape[0], dtype=complex)
    worst = 0.0
    for start in range(0, points.shape[0], CHUNK):
        block = points[start:start + CHUNK]
        integrand = a(block[:, None, :], t[None, :, :], k) * u_values[None, :]
        if guard_mask is not None:
            integrand_checked = integrand[guard_mask[start:start + CHUNK]]
        else:
            integrand_checked = integrand
        if integrand_checked.size:
            worst = max(worst, tail_fraction(integrand_checked.T, grid))
        values[start:start + CHUNK] = integrand @ grid.weights
    if worst > tail_tolerance:
        raise GridError("grid too small", {"symbol": a.label, "tail_fraction": worst, "tolerance": tail_tolerance})
    return values


def add(a, b):
    """a + b, of order max(m, m')."""
    if a.dimension != b.dimension:
        raise ConfigError("cannot add symbols of different dimension")

    def evaluator(x, y, k):
        return a(x, y, k) + b(x, y, k)

    def derivative_evaluator(alpha, beta, x, y, k):
        return a.derivative(alpha, beta, x, y, k) + b.derivative(alpha, beta, x, y, k)

    return SymbolFamily(evaluator, max(a.order, b.order), a.dimension, derivative_evaluator, None,
                        f"({a.label}+{b.label})")


def scale(a, factor):
    def evaluator(x, y, k):
        return factor * a(x, y, k)

    def derivative_evaluator(alpha, beta, x, y, k):
        return factor * a.derivative(alpha, beta, x, y, k)

    return SymbolFamily(evaluator, a.order, a.dimension, derivative_evaluator, None, f"{factor}*{a.label}")


def subtract(a, b):
    return add(a, scale(b, -1.0))


def pointwise_product(a, b):
    """(a b)(x, y, k), of order m + m'; derivatives by finite differences."""
    if a.dimension != b.dimension:
        raise ConfigError("cannot multiply symbols of different dimension")

    def evaluator(x, y, k):
        return a(x, y, k) * b(x, y, k)

    return SymbolFamily(evaluator, a.order + b.order, a.dimension, label=f"({a.label}*{b.label})")


def derivative_family(a, coordinate, side="x"):
    """d/dx_coordinate (or d/dy_coordinate) of a, of order m + 1/2."""
    if side not in ("x", "y"):
        raise ConfigError(f"side must be 'x' or 'y', got {side!r}")
    if not 0 <= coordinate < a.dimension:
        raise ConfigError(f"coordinate {coordinate} out of range for dimension {a.dimension}")
    d = a.dimension
    step = tuple(1 if i == coordinate else 0 for i in range(d))

    def shifted(alpha, beta):
        if side == "x":
            return tuple(p + q for p, q in zip(alpha, step)), beta
        return alpha, tuple(p + q for p, q in zip(beta, step))

    def evaluator(x, y, k):
        alpha, beta = shifted(_zero_order(d), _zero_order(d))
        return a.derivative(alpha, beta, x, y, k)

    def derivative_evaluator(alpha, beta, x, y, k):
        return a.derivative(*shifted(alpha, beta), x, y, k)

    return SymbolFamily(evaluator, a.order + 0.5, d, derivative_evaluator, None,
                        f"d{side}{coordinate}({a.label})")


def scaled_gaussian_symbol(d, order=0.0, coefficient=1.0, width=1.0):
    """k^order * coefficient * exp(-k |x - y|^2 / width^2) with analytic derivatives."""
    if not width > 0:
        raise ConfigError("width must be positive")

    def evaluator(x, y, k):
        x, y = _real_points(x, d), _real_points(y, d)
        c = k / width ** 2
        return coefficient * k ** order * np.exp(-c * np.sum((x - y) ** 2, axis=-1)) + 0j

    def derivative_evaluator(alpha, beta, x, y, k):
        x, y = _real_points(x, d), _real_points(y, d)
        c = k / width ** 2
        s = x - y
        value = coefficient * k ** order * np.exp(-c * np.sum(s ** 2, axis=-1))
        for i in range(d):
            p = alpha[i] + beta[i]
            if p == 0:
                continue
            # d^p/ds^p exp(-c s^2) = (-sqrt(c))^p H_p(sqrt(c) s) exp(-c s^2); d/dy = -d/ds
            value = value * (-1.0) ** beta[i] * (-math.sqrt(c)) ** p * eval_hermite(p, math.sqrt(c) * s[..., i])
        return value + 0j

    return SymbolFamily(evaluator, float(order), d, derivative_evaluator, None,
                        f"gauss(m={order},w={width})")


def kernel_symbol(kernel, n, order, label="kernel"):
    """Wrap kernel(z, w, k) on C^n as a symbol on R^2n x R^2n."""

    def evaluator(x, y, k):
        return np.asarray(kernel(to_complex(x), to_complex(y), k), dtype=complex)

    return SymbolFamily(evaluator, float(order), 2 * n, label=label)


@dataclass
class SamplePairs:
    """Point pairs for membership estimates.

    Rescaled pairs (u, v) are evaluated at x = u / sqrt(k), y = v / sqrt(k);
    fixed pairs are evaluated as given at every k.
    """

    rescaled: tuple
    fixed: tuple = None

    def __post_init__(self):
        self.rescaled = tuple(np.asarray(p, dtype=float) for p in self.rescaled)
        self.fixed = tuple(np.asarray(p, dtype=float) for p in (self.fixed or (self.rescaled[0][:0],) * 2))

    @classmethod
    def default(cls, d, radius=2.0, count=None, fixed_radius=0.25):
        count = count or (5 if d <= 2 else 3)
        axis = np.linspace(-radius, radius, count)
        points = np.array(list(itertools.product(axis, repeat=d)))
        u, v = [np.array(p) for p in zip(*itertools.product(points, repeat=2))]
        fixed_axis = np.linspace(-fixed_radius, fixed_radius, 3)
        fixed_points = np.array(list(itertools.product(fixed_axis, repeat=d)))
        fu = fixed_points
        fv = fixed_points[::-1]
        return cls((u, v), (np.concatenate([fu, fu]), np.concatenate([fu, fv])))

    def at(self, k):
        u, v = self.rescaled
        fu, fv = self.fixed
        root = math.sqrt(k)
        x = np.concatenate([u / root, fu]) if fu.size else u / root
        y = np.concatenate([v / root, fv]) if fv.size else v / root
        return x, y


@dataclass
class MembershipEntry:
    alpha: tuple
    beta: tuple
    N: int
    l: int
    sup_ratios: dict
    passed: bool


@dataclass
class MembershipReport:
    """Per (alpha, beta, N) growth statistics of a symbol across k."""

    label: str
    order: float
    k_values: tuple
    entries: list = field(default_factory=list)

    @property
    def passed(self):
        return all(entry.passed for entry in self.entries)

    def to_frame(self):
        rows = []
        for entry in self.entries:
            row = {
                "alpha": " ".join(str(a) for a in entry.alpha),
                "beta": " ".join(str(b) for b in entry.beta),
                "N": entry.N,
                "l": entry.l,
            }
            for k in self.k_values:
                row[f"sup_ratio_k{k}"] = entry.sup_ratios[k]
            row["verdict"] = "pass" if entry.passed else "fail"
            rows.append(row)
        columns = ["alpha", "beta", "N", "l"] + [f"sup_ratio_k{k}" for k in self.k_values] + ["verdict"]
        return pd.DataFrame(rows, columns=columns)


def non_increasing(series, tolerance=GROWTH_TOLERANCE):
    """True when no later value exceeds tolerance times any earlier one."""
    return all(series[j] <= tolerance * series[i] for i in range(len(series)) for j in range(i + 1, len(series)))


def estimate_membership(a, m, deriv_orders, N_list=DEFAULT_N_LIST, params=None, pairs=None):
    """Sample the defining bounds of the order-m symbol class.

    For each (alpha, beta, N) the minimal l in 0..12 is searched for which the
    sup over sample pairs of |d^alpha d^beta a| (1 + sqrt(k)|x - y|)^N /
    (k^(m + (|alpha|+|beta|)/2) (1 + sqrt(k)|x| + sqrt(k)|y|)^l) does not grow
    by more than 10% along the k list.

    Args:
        a (SymbolFamily): Symbol under test
        m (float): Order to test
        deriv_orders: List of (alpha, beta) real multi-indices
        N_list: Off-diagonal decay powers
        params (SemiclassParams): k list
        pairs (SamplePairs): Point pairs (default grid when None)

    Returns:
        MembershipReport: Statistics and verdicts (informational, never raises on failure)
    """
    if params is None:
        params = SemiclassParams((25, 50, 100, 200, 400))
    pairs = pairs or SamplePairs.default(a.dimension)
    report = MembershipReport(a.label, m, params.k_values)
    for alpha, beta in deriv_orders:
        alpha, beta = tuple(alpha), tuple(beta)
        total = sum(alpha) + sum(beta)
        magnitudes = {}
        for k in params.k_values:
            x, y = pairs.at(k)
            root = math.sqrt(k)
            values = np.abs(a.derivative(alpha, beta, x, y, k)) / k ** (m + total / 2.0)
            magnitudes[k] = (
                values,
                1.0 + root * np.linalg.norm(x - y, axis=-1),
                1.0 + root * np.linalg.norm(x, axis=-1) + root * np.linalg.norm(y, axis=-1),
            )
        for N in N_list:
            chosen, verdict, sups = L_MAX, False, None
            for l in range(L_MAX + 1):
                candidate = {
                    k: float(np.max(vals * off ** N / grow ** l)) for k, (vals, off, grow) in magnitudes.items()
                }
                sups = candidate
                if non_increasing([candidate[k] for k in params.k_values]):
                    chosen, verdict = l, True
                    break
            report.entries.append(MembershipEntry(alpha, beta, N, chosen, sups, verdict))
            logger.debug(f"Membership {a.label} m={m} alpha={alpha} beta={beta} N={N}: l={chosen} pass={verdict}")
    return report


@dataclass
class BorelSchedule:
    """Orders m_j (decreasing), thresholds mu_j (increasing) and shrink exponents eps_j."""

    orders: tuple
    thresholds: tuple
    shrink_exponents: tuple

    def __post_init__(self):
        self.orders = tuple(float(m) for m in self.orders)
        self.thresholds = tuple(float(mu) for mu in self.thresholds)
        self.shrink_exponents = tuple(float(e) for e in self.shrink_exponents)
        if any(b >= a for a, b in zip(self.orders, self.orders[1:])):
            raise ConfigError("Borel orders must be strictly decreasing")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ConfigError("Borel thresholds must be strictly increasing")
        if any(not mu > 0 for mu in self.thresholds):
            raise ConfigError("Borel thresholds must be positive")
        if any(not e > 0 for e in self.shrink_exponents):
            raise ConfigError("shrink exponents must be positive")
        if not len(self.orders) == len(self.thresholds) == len(self.shrink_exponents):
            raise ConfigError("Borel schedule lists must have equal length")

    @classmethod
    def default(cls, orders, thresholds, epsilon0=0.1):
        """Shrink exponents eps_j = epsilon0 / (j + 1)."""
        return cls(orders, thresholds, tuple(epsilon0 / (j + 1) for j in range(len(orders))))

    def indicator(self, j, k):
        """tau_{j,k} = 1 iff mu_j <= k."""
        return 1.0 if self.thresholds[j] <= k else 0.0


def borel_sum(terms, schedule, chi=None, k=None):
    """Finite asymptotic sum of a_j chi(k^(1/2 - eps_j)(x, y)) tau_{j,k}.

    Args:
        terms: SymbolFamily a_j, in decreasing order
        schedule (BorelSchedule): At least as long as ``terms``
        chi (CutoffProfile): Window applied to |(x, y)| (standard cutoff by default)
        k (int, optional): Fix the indicators tau_{j,k} at this k; otherwise they
            follow the evaluation k

    Returns:
        SymbolFamily: Of the leading order m_0
    """
    terms = list(terms)
    if not terms:
        raise ConfigError("borel_sum needs at least one term")
    if len(schedule.orders) < len(terms):
        raise ConfigError("Borel schedule shorter than the term list")
    chi = chi or standard_cutoff()
    if not isinstance(chi, CutoffProfile):
        raise ConfigError("chi must be a CutoffProfile")
    d = terms[0].dimension
    fixed_k = validate_k(k) if k is not None else None

    def evaluator(x, y, k_eval):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        total = np.zeros(x.shape[:-1], dtype=complex)
        indicator_k = fixed_k if fixed_k is not None else k_eval
        radius = np.sqrt(np.sum(x ** 2, axis=-1) + np.sum(y ** 2, axis=-1))
        for j, term in enumerate(terms):
            if schedule.indicator(j, indicator_k) == 0.0:
                continue
            window = chi(k_eval ** (0.5 - schedule.shrink_exponents[j]) * radius)
            total = total + term(x, y, k_eval) * window
        return total

    return SymbolFamily(evaluator, schedule.orders[0], d, label=f"borel({len(terms)})")
