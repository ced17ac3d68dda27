"""Tests for configuration management."""

import argparse
import json
import os
import tempfile
import unittest
from unittest.mock import patch

from bergman_lab.config import Config, parse_int_list
from bergman_lab.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


class TestConfig(unittest.TestCase):
    """Test cases for the Config class."""

    def setUp(self):
        """Set up test case."""
        self.config = Config()

    def test_defaults_validate(self):
        """Test that the defaults describe the unperturbed model."""
        self.assertTrue(self.config.validate())
        weight = self.config.build_weight()
        self.assertTrue(weight.is_unperturbed)
        self.assertEqual(weight.eigenvalues, (0.5,))
        self.assertTrue(self.config.build_metric().is_flat)
        self.assertEqual(self.config.build_params().k_values, (25, 50, 100, 200, 400))
        self.assertEqual(self.config.build_params("gap").k_values, (10, 20, 40))

    def test_invalid_epsilon(self):
        """Test that epsilon outside (0, 1/6) fails validation."""
        self.config.set("epsilon", 0.5)
        with self.assertLogs('bergman_lab.config', level='ERROR'):
            self.assertFalse(self.config.validate())

    def test_non_increasing_k_values(self):
        """Test that k lists must increase strictly."""
        self.config.set("k_values", [50, 25])
        with self.assertLogs('bergman_lab.config', level='ERROR'):
            self.assertFalse(self.config.validate())

    def test_lambda_length_mismatch(self):
        """Test that lambda must have n entries."""
        self.config.set("n", 2)
        with self.assertLogs('bergman_lab.config', level='ERROR'):
            self.assertFalse(self.config.validate())

    def test_bad_perturbation_is_reported(self):
        """Test that builder errors surface as validation errors."""
        self.config.set("perturbation", [{"degree": 2, "coeffs": [{"alpha": [1], "beta": [1], "value": 1.0}]}])
        with self.assertLogs('bergman_lab.config', level='ERROR'):
            self.assertFalse(self.config.validate())

    def test_load_missing_file(self):
        """Test loading a file that does not exist."""
        with self.assertLogs('bergman_lab.config', level='ERROR'):
            self.assertFalse(self.config.load_from_file("/nonexistent/config.json"))

    def test_load_merges_sections(self):
        """Test that nested sections are merged key by key."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            with open(path, "w") as f:
                json.dump({"gap": {"perturbed": False}, "k_values": [10, 20]}, f)
            self.assertTrue(self.config.load_from_file(path))
        self.assertFalse(self.config.get_section("gap")["perturbed"])
        self.assertEqual(self.config.get_section("gap")["k_values"], [10, 20, 40])
        self.assertEqual(self.config.get("k_values"), [10, 20])

    def test_save_round_trip(self):
        """Test that saved experiment settings load back."""
        self.config.set("epsilon", 0.05)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "nested", "saved.json")
            self.assertTrue(self.config.save_to_file(path))
            with open(path) as f:
                saved = json.load(f)
            other = Config()
            self.assertTrue(other.load_from_file(path))
        self.assertNotIn("out_dir", saved)
        self.assertEqual(other.get("epsilon"), 0.05)

    @patch.dict(os.environ, {"BERGMAN_LAB_OUT_DIR": "/tmp/results", "BERGMAN_LAB_LOG_LEVEL": "debug"})
    def test_update_from_env(self):
        """Test updating run options from environment variables."""
        self.assertTrue(self.config.update_from_env())
        self.assertEqual(self.config.get("out_dir"), "/tmp/results")
        self.assertEqual(self.config.get("log_level"), "DEBUG")

    def test_update_from_args(self):
        """Test command-line overrides."""
        parser = Config.setup_argparse()
        args = parser.parse_args(["expand", "--k-values", "25,50,100", "--max-degree", "20", "--out", "results"])
        self.assertTrue(self.config.update_from_args(args))
        self.assertEqual(self.config.get("k_values"), [25, 50, 100])
        self.assertEqual(self.config.get("A"), 20)
        self.assertEqual(self.config.get("out_dir"), "results")
        self.assertFalse(self.config.get("check"))

    def test_parse_int_list(self):
        """Test comma-separated integer parsing."""
        self.assertEqual(parse_int_list("1, 2,3"), [1, 2, 3])
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_int_list("1,a")

    def test_build_germ(self):
        """Test the germ in the sample configuration."""
        config = Config()
        self.assertTrue(config.load_from_file(os.path.join(CONFIG_DIR, "germ.json")))
        self.assertTrue(config.validate())
        germ, metric = config.build_germ()
        self.assertEqual(germ.n, 2)
        self.assertEqual(metric.shape, (2, 2))

    def test_missing_germ(self):
        """Test that build_germ needs a germ block."""
        with self.assertRaises(ConfigError):
            self.config.build_germ()


if __name__ == '__main__':
    unittest.main()
