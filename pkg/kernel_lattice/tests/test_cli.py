import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import pandas as pd

from kernel_lattice.cli import main
from kernel_lattice.config import DEFAULT_CONFIG_PATH
from kernel_lattice.error_handling import (
    EXIT_CARRIER_SIZE,
    EXIT_HYPOTHESIS,
    EXIT_OK,
    EXIT_SCHEMA,
    EXIT_SPACE_MISMATCH,
    EXIT_TOLERANCE,
    get_exception_handler,
)
from kernel_lattice.fixtures import sequence_example
from kernel_lattice.parsers import KernelParser
from kernel_lattice.utils import get_data_dir

SIGNED_KERNEL = {"space": {"kind": "discrete", "n": 2}, "rows": [[1.0, -1.0], [0.0, 2.0]]}
IDENTITY_3 = {"space": {"kind": "discrete", "n": 3}, "rows": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def write(self, name, payload):
        path = self.root / name
        path.write_text(json.dumps(payload), encoding='utf-8')
        return str(path)

    def run_cli(self, *argv, output="out.json"):
        out = self.root / output
        code = main(list(argv) + ["--output", str(out)])
        return code, out

    def read(self, path):
        return json.loads(Path(path).read_text(encoding='utf-8'))


class TestKernelCommands(CliTestCase):
    def test_modulus(self):
        """Modulus of the signed 2x2 kernel"""
        code, out = self.run_cli("kernel", "modulus", self.write("k.json", SIGNED_KERNEL))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read(out)["rows"], [[1.0, 1.0], [0.0, 2.0]])

    def test_sparse_output(self):
        code, out = self.run_cli("kernel", "pospart", self.write("k.json", SIGNED_KERNEL), "--sparse")
        self.assertEqual(code, EXIT_OK)
        rows = self.read(out)["rows"]
        self.assertEqual(rows[0], {"from": 0, "entries": [{"to": 0, "w": 1.0}]})

    def test_bound_of_sparse_sequence_example(self):
        path = self.root / "seq.json"
        KernelParser(sparse=True).dump(sequence_example(16), path)
        code, out = self.run_cli("kernel", "bound", str(path))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read(out), {"bound": 2.0})

    def test_binary_operations(self):
        k = self.write("k.json", SIGNED_KERNEL)
        code, out = self.run_cli("kernel", "meet", k, k)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read(out)["rows"], SIGNED_KERNEL["rows"])
        code, out = self.run_cli("kernel", "compose", k, k)
        self.assertEqual(self.read(out)["rows"], [[1.0, -3.0], [0.0, 4.0]])

    def test_space_mismatch(self):
        """Combining kernels on different spaces exits with code 3"""
        code, _ = self.run_cli("kernel", "join", self.write("a.json", SIGNED_KERNEL), self.write("b.json", IDENTITY_3))
        self.assertEqual(code, EXIT_SPACE_MISMATCH)

    def test_schema_errors(self):
        """Malformed documents exit with code 2"""
        bad = self.write("bad.json", {"space": {"kind": "discrete", "n": 2}, "rows": "abc"})
        self.assertEqual(self.run_cli("kernel", "modulus", bad)[0], EXIT_SCHEMA)
        short = self.write("short.json", {"space": {"kind": "discrete", "n": 2}, "rows": [[1.0], [0.0, 1.0]]})
        self.assertEqual(self.run_cli("kernel", "modulus", short)[0], EXIT_SCHEMA)
        self.assertEqual(self.run_cli("kernel", "modulus", str(self.root / "missing.json"))[0], EXIT_SCHEMA)
        self.assertEqual(self.run_cli("kernel", "meet", self.write("k.json", SIGNED_KERNEL))[0], EXIT_SCHEMA)
        (self.root / "broken.json").write_text("{not json", encoding='utf-8')
        self.assertEqual(self.run_cli("kernel", "modulus", str(self.root / "broken.json"))[0], EXIT_SCHEMA)


class TestMeasureCommands(CliTestCase):
    def setUp(self):
        super().setUp()
        space = {"kind": "discrete", "n": 3}
        self.mu = self.write("mu.json", {"space": space, "weights": [1.0, -2.0, 0.0]})
        self.nu = self.write("nu.json", {"space": space, "weights": [-1.0, 2.0, 0.5]})

    def test_jordan_and_tv(self):
        code, out = self.run_cli("measure", "jordan", self.mu)
        self.assertEqual(code, EXIT_OK)
        result = self.read(out)
        self.assertEqual(result["positive"]["weights"], [1.0, 0.0, 0.0])
        self.assertEqual(result["negative"]["weights"], [0.0, 2.0, 0.0])
        code, out = self.run_cli("measure", "tv", self.mu)
        self.assertEqual(self.read(out), {"total_variation": 3.0})

    def test_hahn(self):
        code, out = self.run_cli("measure", "hahn", self.mu)
        self.assertEqual(self.read(out), {"positive": [0], "negative": [1, 2]})

    def test_sup_as_csv(self):
        code, out = self.run_cli("measure", "sup", self.mu, self.nu, "--format", "csv", output="sup.csv")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.read_text(encoding='utf-8'), "state,weight\n0,1.0\n1,2.0\n2,0.5\n")

    def test_inf(self):
        code, out = self.run_cli("measure", "inf", self.mu, self.nu)
        self.assertEqual(self.read(out)["weights"], [-1.0, -2.0, 0.0])


class TestOperatorCommands(CliTestCase):
    def setUp(self):
        super().setUp()
        self.k = self.write("k.json", SIGNED_KERNEL)
        self.mu = self.write("mu.json", {"space": {"kind": "discrete", "n": 2}, "weights": [1.0, 1.0]})

    def test_pospart_oracle_matches_kernel(self):
        code, oracle = self.run_cli("operator", "pospart", self.k, self.mu, "--oracle", output="oracle.json")
        self.assertEqual(code, EXIT_OK)
        code, kernel = self.run_cli("operator", "pospart", self.k, self.mu, "--kernel", output="kernel.json")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read(oracle)["weights"], [1.0, 2.0])
        self.assertEqual(oracle.read_bytes(), kernel.read_bytes())

    def test_apply_and_adjoint(self):
        code, out = self.run_cli("operator", "apply", self.k, self.mu)
        self.assertEqual(self.read(out)["weights"], [1.0, 1.0])
        f = self.write("f.json", {"space": {"kind": "discrete", "n": 2}, "values": [1.0, 1.0]})
        code, out = self.run_cli("operator", "adjoint", self.k, f)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read(out)["values"], [0.0, 2.0])

    def test_oracle_carrier_limit(self):
        n = 13
        big = self.write("big.json", {"space": {"kind": "discrete", "n": n},
                                      "rows": [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]})
        mu = self.write("big_mu.json", {"space": {"kind": "discrete", "n": n}, "weights": [1.0] * n})
        self.assertEqual(self.run_cli("operator", "pospart", big, mu, "--oracle")[0], EXIT_CARRIER_SIZE)

    def test_rank_one_weak_continuity(self):
        code, out = self.run_cli("operator", "check-weak-continuity", "--fixture", "rank-one")
        self.assertEqual(code, EXIT_OK)
        result = self.read(out)
        self.assertFalse(result["passed"])
        self.assertEqual(result["witness_index"], 10)
        self.assertEqual(result["witness"], [0.0, 0.0] + [0.125] * 8)

    def test_kernel_weak_continuity(self):
        code, out = self.run_cli("operator", "check-weak-continuity", self.k, self.mu)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(self.read(out)["passed"])


class TestVerifyAndDemo(CliTestCase):
    def test_verify_pospart(self):
        """Oracle agreement on the signed kernel, reproducible for a fixed seed"""
        k = self.write("k.json", SIGNED_KERNEL)
        code, first = self.run_cli("verify", "pospart", k, "--trials", "100", "--seed", "3", output="first.json")
        self.assertEqual(code, EXIT_OK)
        result = self.read(first)
        self.assertLessEqual(result["max_deviation"], 1e-12)
        self.assertEqual(result["seed"], 3)
        code, second = self.run_cli("verify", "pospart", k, "--trials", "100", "--seed", "3", output="second.json")
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_verify_carrier_limit(self):
        n = 13
        big = self.write("big.json", {"space": {"kind": "discrete", "n": n}, "rows": [[0.0] * n for _ in range(n)]})
        self.assertEqual(self.run_cli("verify", "pospart", big)[0], EXIT_CARRIER_SIZE)

    def test_sequence_example(self):
        code, out = self.run_cli("demo", "sequence-example", "--N", "16")
        self.assertEqual(code, EXIT_OK)
        result = self.read(out)
        self.assertEqual(result["cb_invariant"], {"T": True, "U": False})
        self.assertTrue(result["U_star_one_is_twice_positive_indicator"])
        self.assertEqual(self.run_cli("demo", "sequence-example", "--N", "4")[0], EXIT_SCHEMA)

    def test_sequence_example_report_is_stable_in_N(self):
        for N in (16, 32, 64):
            with self.subTest(N=N):
                code, out = self.run_cli("demo", "sequence-example", "--N", str(N))
                self.assertEqual(code, EXIT_OK)
                result = self.read(out)
                self.assertEqual(result["cb_invariant"], {"T": True, "U": False})
                self.assertTrue(result["U_star_one_is_twice_positive_indicator"])
                self.assertEqual(result["bound"], {"T": 2.0, "U": 2.0})
                self.assertEqual(len(result["labels"]), 2 * N + 1)


class TestDoobCommands(CliTestCase):
    def fixture(self, name):
        return str(get_data_dir() / f"{name}.json")

    def test_run_two_state_chain(self):
        trace = self.root / "trace.csv"
        code, out = self.run_cli("doob", "run", self.fixture("two_state_chain"), "--t0", "1",
                                 "--tol", "1e-8", "--trace", str(trace))
        self.assertEqual(code, EXIT_OK)
        result = self.read(out)
        self.assertTrue(result["report"]["passed"])
        assert_measure = result["report"]["invariant_measure"]["witness"]["measure"]
        self.assertAlmostEqual(assert_measure[0], 2.0 / 3.0, places=12)
        self.assertEqual(len(result["traces"]), 2)
        frame = pd.read_csv(trace)
        self.assertEqual(list(frame.columns), ["start", "t", "tv_distance"])
        self.assertEqual(sorted(frame["start"].astype(str).unique()), ["0", "1"])

    def test_run_from_given_measure(self):
        nu = self.write("nu.json", {"space": {"kind": "discrete", "n": 2}, "weights": [0.0, 1.0]})
        trace = self.root / "trace.csv"
        code, out = self.run_cli("doob", "run", self.fixture("two_state_chain"), "--nu", nu,
                                 "--grid", "linear", "--t-max", "60", "--trace", str(trace))
        self.assertEqual(code, EXIT_OK)
        traces = self.read(out)["traces"]
        self.assertEqual(len(traces), 1)
        self.assertEqual(traces[0]["hitting_time"], 53)
        self.assertEqual(list(pd.read_csv(trace).columns), ["t", "tv_distance"])

    def test_run_generator(self):
        code, out = self.run_cli("doob", "run", self.fixture("two_state_generator"), "--t0", "0.5")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(self.read(out)["report"]["stochastic_continuity"]["pass"])

    def test_periodic_chain_fails_hypotheses(self):
        """Negative control: report is written and the exit code is 5"""
        code, out = self.run_cli("doob", "check", self.fixture("periodic_chain"))
        self.assertEqual(code, EXIT_HYPOTHESIS)
        failures = self.read(out)["report"]["failures"]
        self.assertIn("overlap", failures)
        self.assertIn("regularity", failures)

    def test_reducible_chain_fails_hypotheses(self):
        code, out = self.run_cli("doob", "check", self.fixture("reducible_chain"))
        self.assertEqual(code, EXIT_HYPOTHESIS)
        report = self.read(out)["report"]
        self.assertEqual(report["regularity"]["witness"], {"x": 0, "y": 2, "set": [0, 1]})
        self.assertEqual(report["convergence"]["status"], "n/a")

    def test_unreachable_tolerance(self):
        code, out = self.run_cli("doob", "run", self.fixture("two_state_chain"), "--t-max", "4", "--tol", "1e-12")
        self.assertEqual(code, EXIT_TOLERANCE)
        self.assertFalse(self.read(out)["report"]["convergence"]["pass"])

    def test_discrete_model_needs_integer_t0(self):
        self.assertEqual(self.run_cli("doob", "check", self.fixture("two_state_chain"), "--t0", "0.5")[0],
                         EXIT_SCHEMA)


class TestConfigurationSurface(CliTestCase):
    def tearDown(self):
        if hasattr(get_exception_handler, 'instance'):
            del get_exception_handler.instance
        super().tearDown()

    def test_error_log(self):
        errors = self.root / "errors"
        config = self.root / "config.yaml"
        config.write_text(f"error_handling:\n  error_log_dir: {errors}\n", encoding='utf-8')
        code, _ = self.run_cli("kernel", "modulus", str(self.root / "missing.json"), "--config", str(config))
        self.assertEqual(code, EXIT_SCHEMA)
        record = json.loads((errors / "kernel_errors.log").read_text(encoding='utf-8').splitlines()[0])
        self.assertEqual(record["error_type"], "SchemaError")
        self.assertEqual(record["stage"], "load")

    def test_seed_precedence(self):
        k = self.write("k.json", SIGNED_KERNEL)
        with patch.dict(os.environ, {"KERNEL_LATTICE_SEED": "7"}):
            code, out = self.run_cli("verify", "pospart", k, "--trials", "5", "--config", str(DEFAULT_CONFIG_PATH))
            self.assertEqual(self.read(out)["seed"], 7)
            code, out = self.run_cli("verify", "pospart", k, "--trials", "5", "--seed", "3",
                                     "--config", str(DEFAULT_CONFIG_PATH))
            self.assertEqual(self.read(out)["seed"], 3)

    def test_missing_config(self):
        code, _ = self.run_cli("kernel", "modulus", self.write("k.json", SIGNED_KERNEL),
                               "--config", str(self.root / "nope.yaml"))
        self.assertEqual(code, EXIT_SCHEMA)

    def test_no_command(self):
        with patch('sys.stdout'):
            self.assertEqual(main([]), 1)


if __name__ == '__main__':
    unittest.main()
