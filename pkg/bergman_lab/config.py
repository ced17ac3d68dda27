"""Configuration management for the Bergman kernel laboratory.

This module handles loading and validating experiment configurations and
turns them into the typed weight, metric and parameter objects.
"""
import os
import copy
import json
import logging
import argparse

from bergman_lab.core import EPSILON_MAX, MetricSpec, Polynomial, SemiclassParams, WeightSpec
from bergman_lab.dbar import MAX_RESOLUTION
from bergman_lab.errors import ConfigError, LabError
from bergman_lab.normalform import TaylorWeight, parse_complex_array

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("model", "normalize", "expand", "oracle", "gap", "compare", "symbols")


def _merge(base, update):
    """Recursively merge ``update`` into ``base`` (nested sections are merged key by key)."""
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def parse_int_list(text):
    """Parse a comma-separated list such as ``"25,50,100"``."""
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


class Config:
    """Experiment configuration (the JSON schema plus run options)."""

    def __init__(self):
        """Initialize the configuration with the model defaults."""
        self.config = {
            # Weight and metric
            "n": 1,
            "lambda": [0.5],
            "perturbation": [],
            "density": None,
            "epsilon": 0.1,

            # Sweeps
            "k_values": [25, 50, 100, 200, 400],
            "M_list": [1, 2],
            "A": None,
            "quadrature": {"order": None, "radius_sigmas": 8.0, "lebesgue_order": 64},
            "region": {"radius_scale": 0.5, "points": 5},
            "gap": {"k_values": [10, 20, 40], "resolution": 0.1, "half_width_sigmas": 8.0, "perturbed": True},
            "symbols": {"k_values": [25, 50, 100, 200, 400], "N_list": [2, 4, 8], "points": 5},
            "germ": None,

            # Run options
            "check": False,
            "out_dir": "bergman-lab-output",
            "log_level": "INFO",
            "log_file": None,
        }

    def load_from_file(self, config_file=None):
        """Load an experiment configuration from a JSON file.

        Args:
            config_file (str, optional): Path to the configuration file

        Returns:
            bool: True if configuration was loaded successfully, False otherwise
        """
        if not config_file:
            logger.info("No config file specified. Using defaults.")
            return False

        try:
            with open(config_file, 'r') as f:
                loaded_config = json.load(f)

            if not isinstance(loaded_config, dict):
                logger.error(f"Configuration file must hold a JSON object: {config_file}")
                return False

            _merge(self.config, loaded_config)
            logger.info(f"Configuration loaded from {config_file}")
            return True
        except FileNotFoundError:
            logger.error(f"Configuration file not found: {config_file}")
            return False
        except json.JSONDecodeError:
            logger.error(f"Invalid JSON in configuration file: {config_file}")
            return False
        except Exception as e:
            logger.error(f"Error loading configuration: {e}")
            return False

    def save_to_file(self, config_file):
        """Save the experiment part of the configuration to a JSON file.

        Returns:
            bool: True if configuration was saved successfully, False otherwise
        """
        directory = os.path.dirname(config_file)
        if directory:
            os.makedirs(directory, exist_ok=True)

        experiment = {k: v for k, v in self.config.items() if k not in ("check", "out_dir", "log_level", "log_file")}
        try:
            with open(config_file, 'w') as f:
                json.dump(experiment, f, indent=4, sort_keys=True)

            logger.info(f"Configuration saved to {config_file}")
            return True
        except Exception as e:
            logger.error(f"Error saving configuration: {e}")
            return False

    def update_from_env(self):
        """Update run options from environment variables.

        Returns:
            bool: True if any configuration was updated, False otherwise
        """
        updated = False

        env_mapping = {
            "BERGMAN_LAB_OUT_DIR": "out_dir",
            "BERGMAN_LAB_LOG_LEVEL": "log_level",
            "BERGMAN_LAB_LOG_FILE": "log_file",
        }

        for env_var, config_key in env_mapping.items():
            value = os.environ.get(env_var)
            if value is not None:
                if config_key == "log_level":
                    value = value.upper()
                self.config[config_key] = value
                updated = True

        if updated:
            logger.info("Configuration updated from environment variables")

        return updated

    def update_from_args(self, args):
        """Update configuration from command-line overrides.

        Args:
            args (argparse.Namespace): Parsed command-line arguments

        Returns:
            bool: True if any configuration was updated, False otherwise
        """
        updated = False

        args_dict = {k: v for k, v in vars(args).items() if v is not None}

        # Not part of the experiment configuration
        args_dict.pop('config', None)
        args_dict.pop('subcommand', None)

        arg_mapping = {"out": "out_dir", "max_degree": "A"}
        for key, value in args_dict.items():
            key = arg_mapping.get(key, key)
            if key in self.config:
                self.config[key] = value
                updated = True

        if updated:
            logger.info("Configuration updated from command-line arguments")

        return updated

    def validate(self):
        """Validate the configuration against the experiment schema.

        Every violation is logged.

        Returns:
            bool: True if configuration is valid, False otherwise
        """
        errors = []
        n = self.config.get("n")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            errors.append(f"n must be a positive integer, got {n!r}")

        lam = self.config.get("lambda")
        if not isinstance(lam, list) or not all(isinstance(v, (int, float)) and v > 0 for v in lam):
            errors.append(f"lambda must be a list of positive numbers, got {lam!r}")
        elif isinstance(n, int) and len(lam) != n:
            errors.append(f"lambda has {len(lam)} entries, expected n={n}")

        epsilon = self.config.get("epsilon")
        if not isinstance(epsilon, (int, float)) or not 0 < epsilon < EPSILON_MAX:
            errors.append(f"epsilon must lie in (0, 1/6), got {epsilon!r}")

        for key in ("k_values", "M_list"):
            errors.extend(self._check_int_list(key, self.config.get(key), increasing=key == "k_values"))
        errors.extend(self._check_int_list("gap.k_values", self.get_section("gap").get("k_values"), True))
        errors.extend(self._check_int_list("symbols.k_values", self.get_section("symbols").get("k_values"), True))

        A = self.config.get("A")
        if A is not None and (not isinstance(A, int) or A < 0):
            errors.append(f"A must be a nonnegative integer, got {A!r}")

        quadrature = self.get_section("quadrature")
        order = quadrature.get("order")
        if order is not None and (not isinstance(order, int) or order < 1):
            errors.append(f"quadrature.order must be a positive integer, got {order!r}")
        lebesgue_order = quadrature.get("lebesgue_order")
        if not isinstance(lebesgue_order, int) or lebesgue_order < 1:
            errors.append(f"quadrature.lebesgue_order must be a positive integer, got {lebesgue_order!r}")
        radius_sigmas = quadrature.get("radius_sigmas")
        if not isinstance(radius_sigmas, (int, float)) or not radius_sigmas > 0:
            errors.append(f"quadrature.radius_sigmas must be positive, got {radius_sigmas!r}")
        resolution = self.get_section("gap").get("resolution")
        if not isinstance(resolution, (int, float)) or not 0 < resolution <= MAX_RESOLUTION:
            errors.append(f"gap.resolution must lie in (0, {MAX_RESOLUTION}], got {resolution!r}")

        if not errors:
            for builder in (self.build_weight, self.build_metric, self.build_params):
                try:
                    builder()
                except (LabError, ValueError, TypeError, AttributeError) as e:
                    errors.append(str(e))
            if self.config.get("germ") is not None:
                try:
                    self.build_germ()
                except (LabError, ValueError, TypeError, AttributeError) as e:
                    errors.append(f"germ: {e}")

        for error in errors:
            logger.error(f"Invalid configuration: {error}")
        return not errors

    @staticmethod
    def _check_int_list(key, values, increasing=False):
        if not isinstance(values, list) or not values:
            return [f"{key} must be a nonempty list of integers, got {values!r}"]
        if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in values):
            return [f"{key} entries must be positive integers, got {values!r}"]
        if increasing and any(b <= a for a, b in zip(values, values[1:])):
            return [f"{key} must be strictly increasing, got {values!r}"]
        return []

    def get(self, key, default=None):
        """Get a configuration value.

        Args:
            key (str): Configuration key
            default: Default value to return if key is not found

        Returns:
            The configuration value or default
        """
        return self.config.get(key, default)

    def get_section(self, key):
        return self.config.get(key) or {}

    def set(self, key, value):
        """Set a configuration value.

        Args:
            key (str): Configuration key
            value: Value to set
        """
        self.config[key] = value

    def copy(self):
        clone = Config()
        clone.config = copy.deepcopy(self.config)
        return clone

    def build_weight(self, perturbed=True):
        """WeightSpec from n, lambda, perturbation and epsilon."""
        n = self.config["n"]
        perturbation = Polynomial.from_config(n, self.config.get("perturbation"), min_degree=3) if perturbed else None
        return WeightSpec(tuple(self.config["lambda"]), perturbation, self.config["epsilon"])

    def build_metric(self):
        """MetricSpec from the optional density block (flat when absent)."""
        n = self.config["n"]
        density = self.config.get("density")
        if not density:
            return MetricSpec.flat(n)
        return MetricSpec(
            n,
            Polynomial.from_config(n, density.get("coeffs")),
            support_radius=density.get("support_radius", 1.0),
            rho_min=density.get("rho_min", 0.1),
        )

    def build_params(self, key="k_values"):
        """SemiclassParams for the top-level k list or a section's k list (``"gap"``, ``"symbols"``)."""
        values = self.config["k_values"] if key == "k_values" else self.get_section(key).get("k_values")
        return SemiclassParams(tuple(values), self.config["epsilon"])

    def build_germ(self):
        """TaylorWeight germ and the metric matrix at the origin (None for the identity).

        Raises:
            ConfigError: No germ block is configured
        """
        germ = self.config.get("germ")
        if not germ:
            raise ConfigError("the normalize subcommand needs a germ block")
        n = self.config["n"]
        metric = germ.get("metric")
        matrix = parse_complex_array(metric, (n, n)) if metric is not None else None
        return TaylorWeight.from_config(germ, n), matrix

    @staticmethod
    def setup_argparse():
        """Set up command-line argument parsing.

        Returns:
            argparse.ArgumentParser: Configured argument parser
        """
        parser = argparse.ArgumentParser(description="Bergman kernel expansion laboratory")

        parser.add_argument("subcommand", choices=SUBCOMMANDS,
                          help="Experiment to run")

        parser.add_argument("-c", "--config",
                          help="Path to the JSON experiment configuration")

        parser.add_argument("--check", action="store_true", default=None,
                          help="Fail with exit status 1 when an acceptance property does not hold")

        parser.add_argument("--out",
                          help="Directory for CSV and JSON results")

        parser.add_argument("--log-level", type=str.upper,
                          choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                          help="Root log level")

        parser.add_argument("--k-values", type=parse_int_list,
                          help="Override k_values, e.g. 25,50,100")

        parser.add_argument("--epsilon", type=float,
                          help="Override epsilon")

        parser.add_argument("--max-degree", type=int,
                          help="Override the oracle maximal monomial degree A")

        return parser
