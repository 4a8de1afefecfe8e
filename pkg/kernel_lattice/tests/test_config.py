import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from kernel_lattice.config import ConfigManager, RunConfig
from kernel_lattice.error_handling import (
    EXIT_CARRIER_SIZE,
    EXIT_HYPOTHESIS,
    EXIT_SCHEMA,
    EXIT_SPACE_MISMATCH,
    EXIT_TOLERANCE,
    CarrierTooLargeError,
    ConfigError,
    ConvergenceError,
    HypothesisFailure,
    LatticeExceptionHandler,
    PreconditionError,
    SchemaError,
    SpaceError,
    SpaceMismatchError,
    exit_code_for,
)


class TestConfigManager(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_packaged_defaults(self):
        config = ConfigManager().get_config()
        self.assertEqual(config.tolerances.tau_supp, 1e-12)
        self.assertEqual(config.tolerances.tau_cont, 0.05)
        self.assertEqual(config.oracle.n_oracle, 12)
        self.assertEqual(config.convergence.t_max, 128)
        self.assertEqual(config.seed, 0)

    def test_yaml_file(self):
        path = self.root / "config.yaml"
        path.write_text("seed: 11\ntolerances:\n  tau_cont: 0.1\nconvergence:\n  grid: linear\n", encoding='utf-8')
        config = ConfigManager(path).get_config()
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.tolerances.tau_cont, 0.1)
        self.assertEqual(config.tolerances.tau_supp, 1e-12)
        self.assertEqual(config.convergence.grid, "linear")

    def test_environment_overrides(self):
        env = {"KERNEL_LATTICE_SEED": "5", "KERNEL_LATTICE_TOLERANCES__TAU_SUPP": "1e-10"}
        with patch.dict(os.environ, env):
            config = ConfigManager().get_config()
        self.assertEqual(config.seed, 5)
        self.assertEqual(config.tolerances.tau_supp, 1e-10)

    def test_invalid_values(self):
        with patch.dict(os.environ, {"KERNEL_LATTICE_TOLERANCES__TAU_SUPP": "-1"}):
            with self.assertRaises(ConfigError):
                ConfigManager()
        path = self.root / "config.yaml"
        path.write_text("convergence:\n  grid: spiral\n", encoding='utf-8')
        with self.assertRaises(ConfigError):
            ConfigManager(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ConfigManager(self.root / "missing.yaml")


class TestRunConfig(unittest.TestCase):
    def test_flags_override_config(self):
        config = ConfigManager().get_config()
        run = RunConfig.from_sources(config, "doob", tau_supp=1e-9, seed=4, tol=None, n_oracle=None)
        self.assertEqual(run.tolerances.tau_supp, 1e-9)
        self.assertEqual(run.tolerances.tau_cont, config.tolerances.tau_cont)
        self.assertEqual(run.seed, 4)
        self.assertEqual(run.tol, config.convergence.tol)
        self.assertEqual(run.n_oracle, config.oracle.n_oracle)

    def test_invalid_flags(self):
        config = ConfigManager().get_config()
        with self.assertRaises(ConfigError):
            RunConfig.from_sources(config, "verify", n_oracle=0)
        with self.assertRaises(ConfigError):
            RunConfig.from_sources(config, "doob", tau_cont=-0.1)


class TestErrorHandling(unittest.TestCase):
    def test_exit_codes(self):
        self.assertEqual(exit_code_for(SchemaError("x")), EXIT_SCHEMA)
        self.assertEqual(exit_code_for(PreconditionError("x")), EXIT_SCHEMA)
        self.assertEqual(exit_code_for(SpaceError("x")), EXIT_SCHEMA)
        self.assertEqual(exit_code_for(SpaceMismatchError("x")), EXIT_SPACE_MISMATCH)
        self.assertEqual(exit_code_for(CarrierTooLargeError("x")), EXIT_CARRIER_SIZE)
        self.assertEqual(exit_code_for(HypothesisFailure("x")), EXIT_HYPOTHESIS)
        self.assertEqual(exit_code_for(ConvergenceError("x")), EXIT_TOLERANCE)
        self.assertEqual(exit_code_for(RuntimeError("x")), 1)
        self.assertIsInstance(PreconditionError("x"), ValueError)

    def test_handler_log_and_summary(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            handler = LatticeExceptionHandler(Path(temp_dir) / "errors")
            self.assertEqual(handler.handle_error(SchemaError("bad rows"), "kernel", "load", {"argv": ["k.json"]}),
                             EXIT_SCHEMA)
            handler.handle_error(SpaceMismatchError("n=2 vs n=3"), "kernel", "compute")
            handler.handle_error(SchemaError("bad weights"), "kernel", "load")

            summary = handler.get_error_summary("kernel")
            self.assertEqual(summary["total_errors"], 3)
            self.assertEqual(summary["error_types"], {"SchemaError": 2, "SpaceMismatchError": 1})
            first = json.loads((Path(temp_dir) / "errors" / "kernel_errors.log").read_text().splitlines()[0])
            self.assertEqual(first["record_info"], {"argv": ["k.json"]})
            self.assertEqual(handler.get_error_summary("doob")["total_errors"], 0)

    def test_handler_without_log_dir(self):
        handler = LatticeExceptionHandler()
        self.assertEqual(handler.handle_error(HypothesisFailure("not unique"), "doob", "compute"), EXIT_HYPOTHESIS)
        self.assertEqual(handler.get_error_summary("doob")["total_errors"], 0)


if __name__ == '__main__':
    unittest.main()
