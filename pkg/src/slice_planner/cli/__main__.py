#!/usr/bin/env python
"""
Command-line interface for the slice planner.

Exit codes: 0 on success, 1 on input errors, 2 when a planned service is
rejected (``plan``, ``oracle``) or an accepted deployment violates a KPI
(``validate``).
"""

import argparse
import asyncio
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from slice_planner.cli.results import ResultRow, result_row, sweep_rows, write_rows
from slice_planner.errors import AvailabilityError, ScenarioError, SlicePlannerError
from slice_planner.graphs.decision_graph import build_decision_graph
from slice_planner.graphs.expanded_graph import assign_weights, prune_availability
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.kpi import evaluate_deployment
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import PlannerConfig, ServiceRequest
from slice_planner.oracle.brute_force import optimal
from slice_planner.planner.decompose import decompose
from slice_planner.planner.planner import Planner, plan_all
from slice_planner.planner.sweep import SweepAxis, sweep, sweep_async
from slice_planner.scenarios import open_scenario
from slice_planner.scenarios.generator import random_scenarios
from slice_planner.utils.logging_utils import get_logger, set_level

logger = get_logger("cli")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_REJECTED = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors and exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _gamma(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"gamma must be >= 1, got {value}")
    return value


def _floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _gammas(text: str) -> List[int]:
    return [_gamma(item.strip()) for item in text.split(",") if item.strip()]


def _config(scenario: Scenario, gamma: Optional[int]) -> PlannerConfig:
    if gamma is None:
        return scenario.config
    return scenario.config.model_copy(update={"gamma": gamma})


def _services(scenario: Scenario, service_id: Optional[str]) -> List[ServiceRequest]:
    if service_id is None:
        return list(scenario.services)
    try:
        return [scenario.service(service_id)]
    except KeyError:
        raise ScenarioError(f"unknown service {service_id!r}", path=scenario.name)


def _summary(outcome, currency: str) -> str:
    if outcome.accepted:
        return f"{outcome.service}: accepted, cost {outcome.cost:.6g} {currency}"
    return f"{outcome.service}: rejected ({outcome.reason.value})"


def _emit(rows: Sequence[ResultRow], args: argparse.Namespace) -> None:
    path = write_rows(rows, args.out, timing=getattr(args, "timing", False))
    if path is not None:
        print(f"Wrote {len(rows)} rows to {path}")


def dump_decision_graph(
    scenario: Scenario, req: ServiceRequest, config: PlannerConfig, path: Path
) -> None:
    """Write the weighted decision graph of a request's first chain as GraphML."""
    graph = scenario.graph
    task = decompose(req)[0]
    dg = build_decision_graph(
        graph, ResidualLedger(graph), req, n_copies=len(task.chain.instances()),
        k_paths=config.k_paths,
    )
    steps = scenario.request_steps(req)
    try:
        dg = prune_availability(dg, req, graph, scenario.vnfs[task.chain.vnfs[0]], steps=steps)
    except AvailabilityError as e:
        logger.warning(f"Exporting the unpruned graph: {e}")
    path.parent.mkdir(parents=True, exist_ok=True)
    assign_weights(dg, req.max_delay, req.min_reliability, steps=steps).write_graphml(path)


def cmd_plan(args: argparse.Namespace) -> int:
    scenario = open_scenario(args.scenario)
    config = _config(scenario, args.gamma)
    services = _services(scenario, args.service)
    ledger = ResidualLedger(scenario.graph)
    planner = Planner(scenario, config)

    rows = []
    status = EXIT_OK
    for req in services:
        started = time.perf_counter()
        outcome = planner.place(req, ledger)
        elapsed = (time.perf_counter() - started) * 1000.0
        rows.append(result_row(scenario, req, outcome, elapsed_ms=elapsed))
        if not outcome.accepted:
            status = EXIT_REJECTED
        if args.out is not None:
            print(_summary(outcome, scenario.costs.currency))

    if args.dump_graph is not None and services:
        dump_decision_graph(scenario, services[0], config, Path(args.dump_graph))
    _emit(rows, args)
    return status


def cmd_oracle(args: argparse.Namespace) -> int:
    scenario = open_scenario(args.scenario)
    config = _config(scenario, args.gamma)
    ledger = ResidualLedger(scenario.graph)

    rows = []
    status = EXIT_OK
    for req in _services(scenario, args.service):
        outcome = optimal(req, scenario, ledger, config=config)
        rows.append(result_row(scenario, req, outcome, oracle=outcome))
        if not outcome.accepted:
            status = EXIT_REJECTED
        if args.out is not None:
            print(_summary(outcome, scenario.costs.currency))
    _emit(rows, args)
    return status


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = open_scenario(args.scenario)
    if not args.values:
        raise ValueError("--values needs at least one value")
    if args.parallel:
        points = asyncio.run(
            sweep_async(
                scenario, args.axis, args.values, args.gamma, args.with_oracle,
                workers=args.parallel,
            )
        )
    else:
        points = sweep(scenario, args.axis, args.values, args.gamma, args.with_oracle)
    _emit(sweep_rows(scenario, points), args)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = open_scenario(args.scenario)
    if not args.gamma_list:
        raise ValueError("--gamma-list needs at least one value")
    points = sweep(scenario, SweepAxis.GAMMA, args.gamma_list, with_oracle=args.with_oracle)
    _emit(sweep_rows(scenario, points), args)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenarios = [open_scenario(name) for name in args.scenarios]
    if args.random:
        scenarios.extend(random_scenarios(args.random, seed=args.seed))
    if not scenarios:
        raise ValueError("nothing to validate: name scenarios or use --random")

    checked = 0
    failed = 0
    for scenario in scenarios:
        ledger, outcomes = plan_all(scenario, config=_config(scenario, args.gamma))
        for req, outcome in zip(scenario.services, outcomes):
            if not outcome.accepted:
                continue
            checked += 1
            report = evaluate_deployment(outcome.deployment, req, scenario)
            if not report.feasible:
                failed += 1
                for violation in report.violations:
                    print(f"{scenario.name}/{req.id}: {violation}", file=sys.stderr)
        for link_id in scenario.graph.links:
            if ledger.link_residual(link_id) < -1e-9:
                failed += 1
                print(f"{scenario.name}: link {link_id} over capacity", file=sys.stderr)

    print(
        f"Validated {len(scenarios)} scenarios: {checked} accepted deployments checked, "
        f"{failed} violations"
    )
    return EXIT_OK if failed == 0 else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="slice-planner",
        description="Place network slices under delay, reliability and capacity targets.",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        help="Logging level, e.g. INFO or DEBUG (default: LOG_LEVEL from the environment)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=help_text)
        command.add_argument("scenario", help="Scenario file, or a bundled name: robots, vehicular")
        command.add_argument("--out", default=None, help="CSV output path (default: stdout)")
        return command

    plan_cmd = scenario_command("plan", "Plan the scenario's services in declaration order")
    plan_cmd.add_argument("--gamma", type=_gamma, default=None, help="Resolution override")
    plan_cmd.add_argument("--service", default=None, help="Plan only this service")
    plan_cmd.add_argument("--dump-graph", default=None, help="Write the decision graph as GraphML")
    plan_cmd.add_argument("--timing", action="store_true", help="Add the elapsed_ms column")
    plan_cmd.set_defaults(handler=cmd_plan)

    oracle_cmd = scenario_command("oracle", "Exhaustive optimum of each service")
    oracle_cmd.add_argument("--gamma", type=_gamma, default=None, help="Reported resolution")
    oracle_cmd.add_argument("--service", default=None, help="Solve only this service")
    oracle_cmd.set_defaults(handler=cmd_oracle)

    sweep_cmd = scenario_command("sweep", "Plan at every value of one parameter")
    sweep_cmd.add_argument(
        "--axis",
        choices=[axis.value for axis in SweepAxis],
        required=True,
        help="Parameter to vary",
    )
    sweep_cmd.add_argument("--values", type=_floats, required=True, help="Comma-separated values")
    sweep_cmd.add_argument("--gamma", type=_gamma, default=None, help="Resolution override")
    sweep_cmd.add_argument("--with-oracle", action="store_true", help="Add the oracle_cost column")
    sweep_cmd.add_argument("--parallel", type=int, default=0, help="Worker threads (default: off)")
    sweep_cmd.add_argument("--timing", action="store_true", help="Add the elapsed_ms column")
    sweep_cmd.set_defaults(handler=cmd_sweep)

    compare_cmd = scenario_command("compare", "Plan at several resolutions")
    compare_cmd.add_argument(
        "--gamma-list", type=_gammas, required=True, help="Comma-separated resolutions"
    )
    compare_cmd.add_argument("--with-oracle", action="store_true", help="Add oracle costs")
    compare_cmd.add_argument("--timing", action="store_true", help="Add the elapsed_ms column")
    compare_cmd.set_defaults(handler=cmd_compare)

    validate_cmd = commands.add_parser(
        "validate", help="Plan scenarios and check every accepted deployment's KPIs"
    )
    validate_cmd.add_argument("scenarios", nargs="*", help="Scenario files or bundled names")
    validate_cmd.add_argument("--random", type=int, default=0, help="Also check N random scenarios")
    validate_cmd.add_argument("--seed", type=int, default=0, help="First random seed (default: 0)")
    validate_cmd.add_argument("--gamma", type=_gamma, default=None, help="Resolution override")
    validate_cmd.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the slice planner CLI."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)

    try:
        return args.handler(args)
    except (SlicePlannerError, OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
