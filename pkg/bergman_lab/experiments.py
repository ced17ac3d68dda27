"""Experiment runner for the Bergman kernel laboratory.

Each subcommand sweeps over the configured k values, collects its tables
and evaluates the acceptance properties that apply to it. Properties are
always computed and logged; they only fail the run when checking is on.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from bergman_lab.config import SUBCOMMANDS
from bergman_lab.core import KernelGrid, MetricSpec, Polynomial, multi_indices, radial_region, unit_index
from bergman_lab.dbar import DEFAULT_RESOLUTION, Grid2D, gap_sweep, hodge_project, solve_dbar
from bergman_lab.errors import ConfigError, NumericalError, PropertyCheckError
from bergman_lab.modelkernel import model_diagonal, model_kernel, monomial_norm, reproduce_check
from bergman_lab.neumann import (
    DEFAULT_LEBESGUE_ORDER,
    DEFAULT_RADIUS_SIGMAS,
    decay_slope,
    expansion_sweep,
    neumann_grid,
    neumann_partial_sum,
)
from bergman_lab.normalform import coefficient_distance, normalize_weight, random_metric, random_taylor_weight
from bergman_lab.oracle import (
    build_oracle,
    compare,
    default_quadrature_order,
    offdiag_basis,
    offdiag_decay,
    offdiag_points,
    offdiag_scale,
    oracle_grid,
    oracle_kernel,
    project,
)
from bergman_lab.quadrature import gaussian_grid, integrate, lebesgue_real_grid
from bergman_lab.report_writer import ReportWriter
from bergman_lab.symbols import (
    SamplePairs,
    adjoint,
    compose,
    estimate_membership,
    kernel_symbol,
    scaled_gaussian_symbol,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

RANDOM_SEED = 0
NOISE_FLOOR = 1e-10

MONOMIAL_K_VALUES = (1, 4)
MONOMIAL_MAX_DEGREE = 6
MONOMIAL_ORDER = 8
SCALING_SAMPLES = 1000
REPRODUCTION_DEGREE = 5
REPRODUCTION_POINTS = 4
REPRODUCTION_ORDERS = {1: 32, 2: 16, 3: 10}
NORMALIZE_TRIALS = 100
NORMALIZE_DIMENSIONS = (1, 2, 3)
OFFDIAG_POINTS = {1: 9, 2: 5}
OFFDIAG_N = 2
COMPOSITION_WIDTHS = (1.0, 1.5)
COMPOSITION_ORDER = 96
COMPOSITION_SIGMAS = 10.0
HODGE_RADIUS = 3.0

# Acceptance thresholds
MONOMIAL_TOL = 1e-10
SCALING_TOL = 1e-12
REPRODUCTION_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-10
RESIDUAL_TOL = 1e-12
DIAGONAL_DECAY_MIN = 0.4
OFFDIAG_FACTOR = 10.0
NEUMANN_SLOPE_TOL = 0.3
GAP_RATIO_TOL = 0.05
GAP_SLOPE_RANGE = (0.95, 1.05)
DBAR_RESIDUAL_TOL = 1e-5
DBAR_BOUND_RANGE = (0.99, 1.01)
HODGE_TOL = 1e-2
COMPOSITION_TOL = 1e-8


@dataclass
class CheckResult:
    """One evaluated acceptance property."""

    name: str
    value: float
    passed: bool
    detail: str = ""


@dataclass
class ExperimentOutput:
    """Tables, documents and property checks produced by one subcommand."""

    subcommand: str
    tables: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def failed_checks(self):
        return [check for check in self.checks if not check.passed]

    def add_check(self, name, value, passed, detail=""):
        check = CheckResult(name, float(value), bool(passed), detail)
        self.checks.append(check)
        if check.passed:
            logger.info(f"Check {name}: {check.value:.6g} ok {detail}".rstrip())
        else:
            logger.error(f"Check {name}: {check.value:.6g} FAILED {detail}".rstrip())
        return check

    def raise_for_failures(self):
        failed = self.failed_checks
        if failed:
            raise PropertyCheckError(
                f"{len(failed)} acceptance properties failed for {self.subcommand}",
                {check.name: check.value for check in failed},
            )


def _random_points(rng, n, count, radius):
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norms * radius * rng.uniform(0.0, 1.0, (count, 1))


def _random_holomorphic(rng, n, degree):
    zero = tuple([0] * n)
    terms = {}
    for alpha in multi_indices(n, degree):
        terms[(alpha.entries, zero)] = complex(*rng.standard_normal(2))
    return Polynomial(n, terms)


def _low_order_residual(germ, normal_form):
    """Largest deviation of the degree <= 2 part from sum lambda |z|^2 in the new frame."""
    n = normal_form.n
    full = germ.as_polynomial().substitute(normal_form.coordinate_matrix) + normal_form.gauge.scaled(-1.0)
    canonical = full.canonical_real()
    expected = {(unit_index(n, i), unit_index(n, i)): normal_form.eigenvalues[i] for i in range(n)}
    keys = {key for key in canonical if sum(key[0]) + sum(key[1]) <= 2} | set(expected)
    return max(abs(canonical.get(key, 0j) - expected.get(key, 0.0)) for key in keys)


def _decays_with_k(k_values, values, minimum_rate):
    """(slope, passed) for values that should decay at least like k^(-minimum_rate)."""
    values = np.abs(np.asarray(values, dtype=float))
    if np.max(values) < NOISE_FLOOR:
        return 0.0, True
    slope = decay_slope(k_values, values)
    return slope, slope <= -minimum_rate


class ExperimentRunner:
    """Run the laboratory's experiments from a validated Config."""

    def __init__(self, config):
        """Initialize the runner.

        Args:
            config (Config): Validated experiment configuration
        """
        self.config = config
        self.weight = config.build_weight()
        self.metric = config.build_metric()
        self.params = config.build_params()

    def gram_grid(self, k, weight=None):
        """Gaussian grid for the oracle Gram matrix at quadrature.order (per-dimension default when null)."""
        weight = weight or self.weight
        order = self.config.get_section("quadrature").get("order") or default_quadrature_order(weight.n)
        return gaussian_grid(weight.n, k, weight.eigenvalues, order)

    def remainder_grid(self, k, z_points, w_points):
        """Lebesgue grid for the Neumann remainder integrals at quadrature.lebesgue_order and radius_sigmas."""
        section = self.config.get_section("quadrature")
        return neumann_grid(self.weight, k, z_points, w_points,
                            lebesgue_order=section.get("lebesgue_order", DEFAULT_LEBESGUE_ORDER),
                            radius_sigmas=section.get("radius_sigmas", DEFAULT_RADIUS_SIGMAS))

    def run(self, subcommand):
        """Run one subcommand.

        Args:
            subcommand (str): One of model, normalize, expand, oracle, gap, compare, symbols

        Returns:
            ExperimentOutput: Tables in fixed k order and evaluated checks
        """
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        logger.info(f"Running {subcommand} (n={self.weight.n}, lambda={list(self.weight.eigenvalues)}, "
                    f"epsilon={self.weight.epsilon}, k={list(self.params.k_values)})")
        output = ExperimentOutput(subcommand)
        getattr(self, f"run_{subcommand}")(output)
        return output

    def run_model(self, output):
        """Closed-form model kernel: K(0,0), semiclassical scaling, reproduction and monomial norms."""
        lam = self.weight.eigenvalues
        n = self.weight.n
        rng = np.random.default_rng(RANDOM_SEED)

        rows = []
        for k in self.params.k_values:
            logger.info(f"Model kernel: k={k}")
            z = _random_points(rng, n, SCALING_SAMPLES, 3.0 / math.sqrt(k))
            w = _random_points(rng, n, SCALING_SAMPLES, 3.0 / math.sqrt(k))
            scaled = k ** n * model_kernel(lam, 1, math.sqrt(k) * z, math.sqrt(k) * w)
            direct = model_kernel(lam, k, z, w)
            scaling_error = float(np.max(np.abs(scaled - direct) / np.abs(direct)))

            h = _random_holomorphic(rng, n, REPRODUCTION_DEGREE)
            targets = _random_points(rng, n, REPRODUCTION_POINTS, 1.0 / math.sqrt(k))
            grid = gaussian_grid(n, k, lam, REPRODUCTION_ORDERS.get(n, 8))
            result = reproduce_check(lam, k, h, targets, grid)
            reproduction_error = float(np.max(np.abs(result.value - result.expected)) / np.max(np.abs(result.expected)))

            rows.append({
                "k": k,
                "K00": model_diagonal(lam, k),
                "scaling_error": scaling_error,
                "reproduction_error": reproduction_error,
            })
        table = pd.DataFrame(rows, columns=["k", "K00", "scaling_error", "reproduction_error"])
        output.tables["model"] = table

        norm_rows = []
        for k in MONOMIAL_K_VALUES:
            grid = gaussian_grid(n, k, lam, MONOMIAL_ORDER)
            for alpha in multi_indices(n, MONOMIAL_MAX_DEGREE):
                closed = monomial_norm(alpha, lam, k)
                numeric = integrate(np.abs(alpha.power(grid.nodes)) ** 2, grid).real
                norm_rows.append({
                    "alpha": " ".join(str(a) for a in alpha.entries),
                    "k": k,
                    "closed_form": closed,
                    "quadrature": numeric,
                    "relative_error": abs(numeric - closed) / closed,
                })
        norms = pd.DataFrame(norm_rows, columns=["alpha", "k", "closed_form", "quadrature", "relative_error"])
        output.tables["monomial_norms"] = norms

        output.add_check("monomial_norms", norms["relative_error"].max(), norms["relative_error"].max() <= MONOMIAL_TOL)
        output.add_check("scaling_identity", table["scaling_error"].max(), table["scaling_error"].max() <= SCALING_TOL)
        output.add_check("reproducing_property", table["reproduction_error"].max(),
                         table["reproduction_error"].max() <= REPRODUCTION_TOL)

    def run_normalize(self, output):
        """Normal form of the configured germ, plus a batch of random germs."""
        if self.config.get("germ"):
            germ, metric = self.config.build_germ()
            normal_form = normalize_weight(germ, metric)
            output.tables["normal_form"] = pd.DataFrame({
                "index": np.arange(1, normal_form.n + 1),
                "eigenvalue": normal_form.eigenvalues,
                "curvature_eigenvalue": normal_form.curvature_eigenvalues,
            }, columns=["index", "eigenvalue", "curvature_eigenvalue"])
            output.documents["normal_form"] = normal_form.to_config(self.weight.epsilon)
            logger.info(f"Normal form eigenvalues: {normal_form.eigenvalues.tolist()}")
        else:
            logger.info("No germ configured; running the random germ batch only")

        rng = np.random.default_rng(RANDOM_SEED)
        rows = []
        for n in NORMALIZE_DIMENSIONS:
            worst_reconstruction, worst_residual = 0.0, 0.0
            for _ in range(NORMALIZE_TRIALS):
                germ = random_taylor_weight(n, rng)
                normal_form = normalize_weight(germ, random_metric(n, rng))
                worst_reconstruction = max(worst_reconstruction, coefficient_distance(normal_form.reconstruct(), germ))
                worst_residual = max(worst_residual, _low_order_residual(germ, normal_form))
            rows.append({
                "n": n,
                "trials": NORMALIZE_TRIALS,
                "max_reconstruction_error": worst_reconstruction,
                "max_low_order_residual": worst_residual,
            })
        batch = pd.DataFrame(rows, columns=["n", "trials", "max_reconstruction_error", "max_low_order_residual"])
        output.tables["normalize_random"] = batch
        output.add_check("normal_form_reconstruction", batch["max_reconstruction_error"].max(),
                         batch["max_reconstruction_error"].max() <= RECONSTRUCTION_TOL)
        output.add_check("normal_form_residual", batch["max_low_order_residual"].max(),
                         batch["max_low_order_residual"].max() <= RESIDUAL_TOL)

    def run_oracle(self, output):
        """Oracle diagonal asymptotics and off-diagonal negligibility across k."""
        w, n = self.weight, self.weight.n
        origin = np.zeros(n)
        scale = offdiag_scale(w.eigenvalues)
        rows = []
        for k in self.params.k_values:
            logger.info(f"Oracle: k={k}")
            grid = self.gram_grid(k)
            basis = build_oracle(w, self.metric, k, self.config.get("A"), grid=grid)
            diagonal = float(oracle_kernel(basis, origin, origin).real)
            z_points, w_points = offdiag_points(n, k, scale_factor=scale, points=OFFDIAG_POINTS.get(n, 3))
            resolved = offdiag_basis(basis, scale, grid)
            offdiag = offdiag_decay(oracle_grid(resolved, z_points, w_points), OFFDIAG_N, k, scale_factor=scale)
            rows.append({
                "k": k,
                "A_used": basis.max_degree,
                "gram_condition": basis.condition,
                "K00": diagonal,
                "diagonal_ratio": diagonal / model_diagonal(w.eigenvalues, k),
                "orthonormality_defect": basis.orthonormality_defect(),
                "offdiag_A": resolved.max_degree,
                "offdiag_N2": offdiag,
            })
        columns = ["k", "A_used", "gram_condition", "K00", "diagonal_ratio", "orthonormality_defect", "offdiag_A",
                   "offdiag_N2"]
        table = pd.DataFrame(rows, columns=columns)
        output.tables["oracle"] = table

        k_values = list(self.params.k_values)
        if len(k_values) >= 2:
            slope, passed = _decays_with_k(k_values, table["diagonal_ratio"] - 1.0, DIAGONAL_DECAY_MIN)
            output.add_check("diagonal_ratio_decay", slope, passed, "(slope of |ratio - 1|)")
            first, last = (k_values.index(100), k_values.index(400)) if {100, 400} <= set(k_values) else (0, -1)
            before, after = table["offdiag_N2"].iloc[first], table["offdiag_N2"].iloc[last]
            factor = before / after if after > 0 else math.inf
            output.add_check("offdiag_negligibility", factor, before > 0 and factor >= OFFDIAG_FACTOR,
                             f"(k={k_values[first]} over k={k_values[last]})")

    def run_expand(self, output):
        """Neumann partial sums against the oracle, with fitted slopes and coefficients."""
        w = self.weight
        region = self.config.get_section("region")
        quadrature = self.config.get_section("quadrature")
        result = expansion_sweep(
            w, self.metric, self.params.k_values, self.config.get("M_list"),
            region_scale=region.get("radius_scale", 0.5),
            points=region.get("points", 5),
            A=self.config.get("A"),
            order=quadrature.get("order"),
            lebesgue_order=quadrature.get("lebesgue_order", DEFAULT_LEBESGUE_ORDER),
            radius_sigmas=quadrature.get("radius_sigmas", DEFAULT_RADIUS_SIGMAS),
        )
        errors = result.errors_frame()
        output.tables["expansion_errors"] = errors
        output.tables["expansion_coefficients"] = result.coefficients_frame()

        if len(self.params.k_values) < 2:
            return
        for M in sorted(set(self.config.get("M_list")) & {1, 2}):
            rows = errors[errors["M"] == M]
            scale = np.array([model_diagonal(w.eigenvalues, k) for k in rows["k"]])
            expected = w.n - (M + 1) / 2.0
            if np.max(rows["sup_error"].to_numpy() / scale) < NOISE_FLOOR:
                output.add_check(f"neumann_order_M{M}", 0.0, True, "(errors at rounding level)")
                continue
            slope = result.slopes[M]
            output.add_check(f"neumann_order_M{M}", slope, abs(slope - expected) <= NEUMANN_SLOPE_TOL,
                             f"(expected {expected:g})")

    def run_gap(self, output):
        """Spectral gap sweeps, the L^2-minimal dbar solution and Hodge/oracle agreement (n = 1)."""
        if self.weight.n != 1:
            raise ConfigError("the gap subcommand discretizes n = 1 only")
        section = self.config.get_section("gap")
        resolution = section.get("resolution", DEFAULT_RESOLUTION)
        half_width_sigmas = section.get("half_width_sigmas", 8.0)
        gap_params = self.config.build_params("gap")
        model = self.config.build_weight(perturbed=False)
        lam = model.eigenvalues[0]

        sweeps = {"model": gap_sweep(model, gap_params.k_values, half_width_sigmas=half_width_sigmas,
                                     resolution=resolution)}
        if section.get("perturbed", True) and not self.weight.is_unperturbed:
            sweeps["perturbed"] = gap_sweep(self.weight, gap_params.k_values, half_width_sigmas=half_width_sigmas,
                                            resolution=resolution)
        for label, sweep in sweeps.items():
            output.tables[f"gap_{label}"] = pd.DataFrame(
                [report.to_row() for report in sweep.reports],
                columns=["k", "L", "points_per_side", "min_eig", "ratio_min_eig_over_k"],
            )
            if len(sweep.reports) >= 3:
                low, high = GAP_SLOPE_RANGE
                output.add_check(f"gap_order_{label}", sweep.order, low <= sweep.order <= high)
            else:
                logger.warning(f"Gap sweep {label}: fewer than 3 k values, order not fitted")

        deviation = max(abs(report.min_eig / (2.0 * lam * report.k) - 1.0) for report in sweeps["model"].reports)
        output.add_check("gap_model_value", deviation, deviation <= GAP_RATIO_TOL, "(max |min_eig / 2k lambda - 1|)")

        solve_rows, hodge_rows = [], []
        hodge_weight = self.weight if "perturbed" in sweeps else model
        for k in gap_params.k_values:
            grid = Grid2D.for_weight(model, k, half_width_sigmas, resolution)
            solution = solve_dbar(lambda z: np.exp(-k * lam * np.abs(z) ** 2), model, k, grid)
            solve_rows.append({
                "k": k,
                "points_per_side": grid.points_per_side,
                "residual": solution.residual,
                "gap": solution.gap,
                "norm_bound": solution.norm_bound,
                "bound_ratio": solution.bound_ratio,
            })

            basis = build_oracle(hodge_weight, MetricSpec.flat(1), k, self.config.get("A"),
                                 grid=self.gram_grid(k, hodge_weight))
            coarse = self._hodge_agreement(hodge_weight, basis, k, grid)
            finer = grid.refined()
            refined = self._hodge_agreement(hodge_weight, basis, k, finer)
            hodge_rows.append({
                "k": k,
                "points_per_side": grid.points_per_side,
                "relative_l2": coarse,
                "refined_points_per_side": finer.points_per_side,
                "refined_relative_l2": refined,
            })
        solves = pd.DataFrame(solve_rows, columns=["k", "points_per_side", "residual", "gap", "norm_bound",
                                                   "bound_ratio"])
        hodge = pd.DataFrame(hodge_rows, columns=["k", "points_per_side", "relative_l2", "refined_points_per_side",
                                                  "refined_relative_l2"])
        output.tables["dbar_solve"] = solves
        output.tables["hodge"] = hodge

        output.add_check("dbar_residual", solves["residual"].max(), solves["residual"].max() <= DBAR_RESIDUAL_TOL)
        low, high = DBAR_BOUND_RANGE
        worst = solves["bound_ratio"].iloc[int(np.argmax(np.abs(solves["bound_ratio"] - 1.0)))]
        output.add_check("dbar_norm_bound", worst, low <= worst <= high)
        output.add_check("hodge_agreement", hodge["refined_relative_l2"].max(),
                         hodge["relative_l2"].max() <= HODGE_TOL
                         and bool(np.all(hodge["refined_relative_l2"] <= hodge["relative_l2"])))

    @staticmethod
    def _hodge_agreement(w, basis, k, grid):
        """Relative L^2 gap between the discrete Hodge projection and the oracle projection on |z| <= 3/sqrt(k)."""
        z = grid.quadrature_coordinates()
        gauge = np.exp(-k * w.evaluate(grid.quadrature_points(), k))
        u = (1.0 + math.sqrt(k) * np.conj(z)) * gauge
        discrete = hodge_project(u, w, k, grid)
        reference = project(basis, u, grid.as_quadrature())
        mask = np.abs(z) <= HODGE_RADIUS / math.sqrt(k)
        weights = grid.quadrature_weights()[mask]
        difference = np.sum(weights * np.abs((discrete - reference)[mask]) ** 2)
        return float(math.sqrt(difference / np.sum(weights * np.abs(reference[mask]) ** 2)))

    def run_compare(self, output):
        """Oracle against the longest Neumann partial sum on the rescaled region.

        Without a perturbation and with flat density the closed-form model kernel is the reference.
        """
        w, n = self.weight, self.weight.n
        region_cfg = self.config.get_section("region")
        M = max(self.config.get("M_list"))
        exact_model = w.is_unperturbed and self.metric.is_flat
        rows = []
        for k in self.params.k_values:
            logger.info(f"Compare: k={k}")
            radius = region_cfg.get("radius_scale", 0.5) / math.sqrt(k)
            region = radial_region(n, radius, region_cfg.get("points", 5))
            if exact_model:
                basis = None
                reference = KernelGrid.from_kernel(lambda z, y: model_kernel(w.eigenvalues, k, z, y),
                                                   region, region, k, "model")
            else:
                basis = build_oracle(w, self.metric, k, self.config.get("A"), grid=self.gram_grid(k))
                reference = oracle_grid(basis, region, region, with_density=True)
            approximation = neumann_partial_sum(w, self.metric, k, M, region, region,
                                                grid=None if exact_model else self.remainder_grid(k, region, region))
            for norm in ("sup", "L2"):
                rows.append(compare(reference, approximation, region=radius, norm=norm, basis=basis).to_row())
        table = pd.DataFrame(rows, columns=["k", "region", "norm", "error", "A_used", "gram_condition"])
        output.tables["compare"] = table
        if exact_model:
            output.add_check("compare_model_exact", table["error"].max(), table["error"].max() == 0.0)

    def run_symbols(self, output):
        """Gaussian composition against its closed form, adjoint involution and composed-order membership."""
        section = self.config.get_section("symbols")
        d = section.get("dimension", 2)
        params = self.config.build_params("symbols")
        w1, w2 = COMPOSITION_WIDTHS
        a = scaled_gaussian_symbol(d, 0.0, 1.0, w1)
        b = scaled_gaussian_symbol(d, 0.0, 1.0, w2)
        pairs = SamplePairs(SamplePairs.default(d, radius=1.0, count=section.get("points", 5)).rescaled)

        def grid_for(k):
            return lebesgue_real_grid(d, (1.0 + COMPOSITION_SIGMAS * max(w1, w2)) / math.sqrt(k), COMPOSITION_ORDER)

        composed = compose(a, b, grid_for)
        rows = []
        for k in params.k_values:
            logger.info(f"Symbols: k={k}")
            x, y = pairs.at(k)
            numeric = composed(x, y, k)
            exact = (math.pi / (k * (1.0 / w1 ** 2 + 1.0 / w2 ** 2))) ** (d / 2.0) * np.exp(
                -k * np.sum((x - y) ** 2, axis=-1) / (w1 ** 2 + w2 ** 2))
            error = float(np.max(np.abs(numeric - exact)))
            scale = float(np.max(np.abs(exact)))
            rows.append({"k": k, "max_abs_error": error, "max_value": scale, "relative_error": error / scale})
        table = pd.DataFrame(rows, columns=["k", "max_abs_error", "max_value", "relative_error"])
        output.tables["symbols_composition"] = table

        zero = (0,) * d
        first = unit_index(d, 0)
        report = estimate_membership(
            composed, a.order + b.order - d / 2.0, [(zero, zero), (first, zero), (zero, first)],
            N_list=tuple(section.get("N_list", (2, 4, 8))), params=params, pairs=pairs,
        )
        output.tables["symbols_membership"] = report.to_frame()

        lam = self.weight.eigenvalues
        model = kernel_symbol(lambda z, y, k: model_kernel(lam, k, z, y), self.weight.n, self.weight.n, "P0")
        x, y = SamplePairs.default(2 * self.weight.n, count=3).at(params.k_values[0])
        involution = adjoint(adjoint(model))
        exact_involution = np.array_equal(involution(x, y, params.k_values[0]), model(x, y, params.k_values[0]))

        output.add_check("composition_closed_form", table["relative_error"].max(),
                         table["relative_error"].max() <= COMPOSITION_TOL)
        output.add_check("adjoint_involution", 0.0 if exact_involution else 1.0, exact_involution)
        output.add_check("composed_membership", sum(not e.passed for e in report.entries), report.passed,
                         "(failing entries)")


def run_experiment(config, subcommand, check=None, out_dir=None):
    """Run one subcommand, write its artifacts and map the outcome to an exit status.

    Args:
        config (Config): Validated configuration
        subcommand (str): Experiment name
        check (bool, optional): Enforce acceptance properties (config value by default)
        out_dir (str, optional): Output directory (config value by default)

    Returns:
        int: 0 on success, 1 on numerical or property failure, 2 on configuration errors
    """
    check = config.get("check") if check is None else check
    out_dir = out_dir or config.get("out_dir")
    try:
        output = ExperimentRunner(config).run(subcommand)
        ReportWriter(out_dir).write(output)
        if check:
            output.raise_for_failures()
        logger.info(f"{subcommand} finished: {len(output.tables)} tables written to {out_dir}")
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"Configuration error in {subcommand}: {e}")
        return EXIT_CONFIG
    except PropertyCheckError as e:
        logger.error(f"Property check failed: {e}")
        return EXIT_FAILURE
    except NumericalError as e:
        logger.error(f"Numerical failure in {subcommand}: {e}", exc_info=True)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Error running {subcommand}: {e}", exc_info=True)
        return EXIT_FAILURE
