#!/usr/bin/env python3
"""
Kernel Lattice Command Line Interface
=====================================

Kernel algebra, measure operations, the positive-part oracle, the sequence
space demonstration and stability analyses of Markov models. Results are
JSON (and CSV traces) on stdout or in the --output file; logs go to stderr.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .config import ConfigManager, LatticeConfig, RunConfig, get_config_manager
from .doob import doob_convergence, doob_hypothesis_report, hypotheses_hold, traces_frame
from .error_handling import (
    EXIT_HYPOTHESIS,
    EXIT_OK,
    EXIT_TOLERANCE,
    SchemaError,
    get_exception_handler,
)
from .fixtures import rank_one_example, sequence_example_report
from .kernel import (
    bound,
    compose,
    kernel_join,
    kernel_meet,
    modulus,
    negative_part,
    positive_part,
)
from .measure import (
    band_projection_ac,
    hahn_sets,
    jordan_decomposition,
    measure_inf,
    measure_sup,
    total_variation,
)
from .operator import (
    BlackBoxOperator,
    adjoint_apply,
    apply,
    positive_part_oracle,
    weak_continuity_check,
)
from .parsers import FunctionParser, KernelParser, MeasureParser, ModelParser
from .reports import measure_frame, write_csv, write_json
from .semigroup import invariant_measure
from .utils import setup_logging
from .verification import verify_positive_part

logger = logging.getLogger(__name__)

KERNEL_UNARY = {
    "modulus": modulus,
    "pospart": positive_part,
    "negpart": negative_part,
}
KERNEL_BINARY = {
    "meet": kernel_meet,
    "join": kernel_join,
    "compose": compose,
}


class CommandContext:
    """Resolved configuration and output plumbing for one invocation"""

    def __init__(self, args: argparse.Namespace, config: LatticeConfig):
        self.args = args
        self.config = config
        self.run = RunConfig.from_sources(
            config,
            args.command,
            inputs=[Path(p) for p in getattr(args, "inputs", [])],
            output=Path(args.output) if args.output else None,
            tau_supp=args.tau_supp,
            tau_cont=args.tau_cont,
            n_oracle=args.n_oracle,
            tol=args.tol,
            seed=args.seed,
        )
        self.stage = "load"

    def emit(self, payload: Any) -> None:
        self.stage = "write"
        write_json(payload, self.run.output, stream=None if self.run.output else sys.stdout)

    def emit_measure(self, mu) -> None:
        if getattr(self.args, "format", "json") == "csv":
            self.stage = "write"
            write_csv(measure_frame(mu), self.run.output, stream=None if self.run.output else sys.stdout)
        else:
            self.emit(MeasureParser().emit(mu))


def _expect_inputs(args: argparse.Namespace, count: int) -> List[str]:
    if len(args.inputs) != count:
        raise SchemaError(f"{args.command} {args.action} expects {count} input file(s), got {len(args.inputs)}")
    return args.inputs


def kernel_command(ctx: CommandContext) -> int:
    """Handle the kernel command."""
    args = ctx.args
    parser = KernelParser(sparse=args.sparse)
    if args.action in KERNEL_BINARY:
        first, second = (parser.parse(p) for p in _expect_inputs(args, 2))
        ctx.stage = "compute"
        result = KERNEL_BINARY[args.action](first, second)
    else:
        k = parser.parse(_expect_inputs(args, 1)[0])
        ctx.stage = "compute"
        if args.action == "bound":
            ctx.emit({"bound": bound(k)})
            return EXIT_OK
        result = KERNEL_UNARY[args.action](k)
    ctx.emit(parser.emit(result))
    return EXIT_OK


def measure_command(ctx: CommandContext) -> int:
    """Handle the measure command."""
    args = ctx.args
    parser = MeasureParser()
    if args.action in ("sup", "inf"):
        first, second = (parser.parse(p) for p in _expect_inputs(args, 2))
        ctx.stage = "compute"
        ctx.emit_measure(measure_sup(first, second) if args.action == "sup" else measure_inf(first, second))
        return EXIT_OK

    mu = parser.parse(_expect_inputs(args, 1)[0])
    ctx.stage = "compute"
    if args.action == "jordan":
        positive, negative = jordan_decomposition(mu)
        ctx.emit({"positive": parser.emit(positive), "negative": parser.emit(negative)})
    elif args.action == "tv":
        ctx.emit({"total_variation": total_variation(mu)})
    elif args.action == "hahn":
        positive, negative = hahn_sets(mu)
        ctx.emit({"positive": positive, "negative": negative})
    else:
        ctx.emit_measure(band_projection_ac(mu))
    return EXIT_OK


def operator_command(ctx: CommandContext) -> int:
    """Handle the operator command."""
    args = ctx.args
    if args.action == "check-weak-continuity":
        return weak_continuity_command(ctx)

    kernel_path, other_path = _expect_inputs(args, 2)
    k = KernelParser().parse(kernel_path)
    if args.action == "adjoint":
        f = FunctionParser().parse(other_path)
        ctx.stage = "compute"
        ctx.emit(FunctionParser().emit(adjoint_apply(k, f)))
        return EXIT_OK

    mu = MeasureParser().parse(other_path)
    ctx.stage = "compute"
    if args.action == "apply":
        result = apply(k, mu)
    elif args.oracle:
        result = positive_part_oracle(k, mu, ctx.run.n_oracle)
    else:
        result = apply(positive_part(k), mu)
    ctx.emit_measure(result)
    return EXIT_OK


def weak_continuity_command(ctx: CommandContext) -> int:
    args = ctx.args
    if args.fixture == "rank-one":
        example = rank_one_example()
        operator, tests = example.operator, example.probes
    else:
        if not args.inputs:
            raise SchemaError("check-weak-continuity needs a kernel file or --fixture rank-one")
        k = KernelParser().parse(args.inputs[0])
        operator = BlackBoxOperator.from_kernel(k)
        tests = [MeasureParser().parse(p) for p in args.inputs[1:]] or k.rows()
    ctx.stage = "compute"
    report = weak_continuity_check(operator, tests, ctx.run.tolerances.weak_continuity)
    ctx.emit({
        "operator": operator.name,
        "passed": report.passed,
        "max_deviation": report.max_deviation,
        "witness_index": report.witness_index,
        "witness": report.witness.weights if report.witness is not None else None,
    })
    return EXIT_OK


def verify_command(ctx: CommandContext) -> int:
    """Handle the verify command."""
    args = ctx.args
    k = KernelParser().parse(_expect_inputs(args, 1)[0])
    ctx.stage = "compute"
    trials = args.trials if args.trials is not None else ctx.config.oracle.trials
    result = verify_positive_part(k, trials, ctx.run.seed, ctx.run.n_oracle, ctx.config.oracle.max_deviation)
    ctx.emit(result)
    if not result.passed:
        logger.error("Positive part deviates from the oracle by %.3e", result.max_deviation)
        return EXIT_TOLERANCE
    return EXIT_OK


def demo_command(ctx: CommandContext) -> int:
    """Handle the demo command."""
    ctx.stage = "compute"
    ctx.emit(sequence_example_report(ctx.args.N, ctx.run.tolerances.tau_cont))
    return EXIT_OK


def doob_command(ctx: CommandContext) -> int:
    """Handle the doob command."""
    args = ctx.args
    model = ModelParser().parse(_expect_inputs(args, 1)[0])
    nu = MeasureParser().parse(args.nu) if args.nu else None
    ctx.stage = "compute"

    convergence = ctx.config.convergence
    tolerances = ctx.run.tolerances
    t_max = args.t_max if args.t_max is not None else convergence.t_max
    grid = args.grid or convergence.grid
    if model.variant.value == "discrete":
        t_max = int(t_max)
    report, traces = doob_hypothesis_report(
        model, args.t0, t_max, ctx.run.tol, grid, convergence.fit_window, ctx.run.seed,
        tau_supp=tolerances.tau_supp, tau_sc=tolerances.tau_sc,
        semigroup_law=tolerances.semigroup_law, markov_mass=tolerances.markov_mass,
        power_tol=convergence.power_tol, max_iterations=convergence.max_iterations,
    )
    payload: Dict[str, Any] = {"report": report}
    hypotheses_ok = hypotheses_hold(report)

    if args.action == "run" and hypotheses_ok:
        if nu is not None:
            mu = invariant_measure(model, convergence.power_tol, convergence.max_iterations, ctx.run.seed).measure
            traces = [doob_convergence(model, nu, t_max, ctx.run.tol, args.t0, grid,
                                       convergence.fit_window, mu=mu, start="nu")]
        payload["traces"] = traces
        if args.trace:
            write_csv(traces_frame(traces), args.trace)

    ctx.emit(payload)
    if not hypotheses_ok:
        logger.error("Hypotheses failed: %s", ", ".join(report.failures))
        return EXIT_HYPOTHESIS
    if args.action == "run" and not all(trace.passed for trace in traces):
        logger.error("Convergence missed tol=%g", ctx.run.tol)
        return EXIT_TOLERANCE
    return EXIT_OK


COMMANDS: Dict[str, Callable[[CommandContext], int]] = {
    "kernel": kernel_command,
    "measure": measure_command,
    "operator": operator_command,
    "verify": verify_command,
    "demo": demo_command,
    "doob": doob_command,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per command group."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML configuration file')
    common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
                        help='Logging level (default: from configuration)')
    common.add_argument('--seed', type=int, help='Random seed (overrides KERNEL_LATTICE_SEED)')
    common.add_argument('--output', '-o', help='Output file (default: stdout)')
    common.add_argument('--tau-supp', type=float, help='Support detection tolerance')
    common.add_argument('--tau-cont', type=float, help='Tail continuity tolerance')
    common.add_argument('--n-oracle', type=int, help='Largest carrier for brute-force enumeration')
    common.add_argument('--tol', type=float, help='Convergence tolerance')

    parser = argparse.ArgumentParser(
        prog='kernel-lattice',
        description="Lattice operations on transition kernels and Markov semigroup stability",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  kernel-lattice kernel modulus k.json
  kernel-lattice verify pospart k.json --trials 100 --seed 0
  kernel-lattice demo sequence-example --N 16
  kernel-lattice doob run chain.json --t0 1 --tol 1e-8 --trace trace.csv
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    kernel_parser = subparsers.add_parser('kernel', parents=[common], help='Kernel algebra')
    kernel_parser.add_argument('action', choices=sorted(list(KERNEL_UNARY) + list(KERNEL_BINARY) + ['bound']))
    kernel_parser.add_argument('inputs', nargs='+', help='Kernel JSON file(s)')
    kernel_parser.add_argument('--sparse', action='store_true', help='Emit sparse rows')

    measure_parser = subparsers.add_parser('measure', parents=[common], help='Measure operations')
    measure_parser.add_argument('action', choices=['jordan', 'tv', 'sup', 'inf', 'hahn', 'band-ac'])
    measure_parser.add_argument('inputs', nargs='+', help='Measure JSON file(s)')
    measure_parser.add_argument('--format', choices=['json', 'csv'], default='json', help='Measure output format')

    operator_parser = subparsers.add_parser('operator', parents=[common], help='Operators on measures')
    operator_parser.add_argument('action', choices=['apply', 'adjoint', 'pospart', 'check-weak-continuity'])
    operator_parser.add_argument('inputs', nargs='*', help='Kernel JSON followed by measure/function JSON')
    mode = operator_parser.add_mutually_exclusive_group()
    mode.add_argument('--oracle', action='store_true', help='Positive part by brute-force enumeration')
    mode.add_argument('--kernel', action='store_true', help='Positive part through the kernel (default)')
    operator_parser.add_argument('--fixture', choices=['rank-one'], help='Built-in operator for the weak continuity check')
    operator_parser.add_argument('--format', choices=['json', 'csv'], default='json', help='Measure output format')

    verify_parser = subparsers.add_parser('verify', parents=[common], help='Randomized oracle comparisons')
    verify_parser.add_argument('action', choices=['pospart'])
    verify_parser.add_argument('inputs', nargs=1, help='Kernel JSON file')
    verify_parser.add_argument('--trials', type=int, help='Number of random positive measures')

    demo_parser = subparsers.add_parser('demo', parents=[common], help='Worked examples')
    demo_parser.add_argument('action', choices=['sequence-example'])
    demo_parser.add_argument('--N', type=int, default=16, help='Truncation of the sequence space (>= 8)')

    doob_parser = subparsers.add_parser('doob', parents=[common], help='Markov semigroup stability')
    doob_parser.add_argument('action', choices=['check', 'run'])
    doob_parser.add_argument('inputs', nargs=1, help='Model JSON file')
    doob_parser.add_argument('--t0', type=float, help='Regularity time (default: 1)')
    doob_parser.add_argument('--nu', help='Starting measure JSON (default: every point mass)')
    doob_parser.add_argument('--t-max', type=float, help='Last time of the convergence trace')
    doob_parser.add_argument('--grid', choices=['geometric', 'linear'], help='Time grid of the trace')
    doob_parser.add_argument('--trace', help='CSV file for the convergence trace')

    return parser


def _load_config(config_path: Optional[str]) -> LatticeConfig:
    if config_path:
        return ConfigManager(Path(config_path)).get_config()
    return get_config_manager().get_config()


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    if args.command == "doob" and args.t0 is not None and float(args.t0).is_integer():
        args.t0 = int(args.t0)

    handler = get_exception_handler()
    stage = "config"
    try:
        config = _load_config(args.config)
        setup_logging(args.log_level or config.logging.level, config.logging.format, config.logging.file)
        if config.error_handling.error_log_dir is not None:
            handler = get_exception_handler(config.error_handling.error_log_dir)
        ctx = CommandContext(args, config)
        try:
            return COMMANDS[args.command](ctx)
        finally:
            stage = ctx.stage
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return handler.handle_error(e, args.command, stage, {"argv": argv})


if __name__ == '__main__':
    sys.exit(main())
