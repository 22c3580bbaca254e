"""Command-line entry point: ``transgress list | verify | sweep | all``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..exterior import DEFAULT_STEP
from ..indices import DegreeNotResolved
from ..quadrature import convergence_sweep
from .checks import run_scenario, sweep_quantity
from .report import Report
from .scenarios import Scenario, ScenarioError, builtin_scenarios, get_scenario, load_scenario_file

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def thread_count() -> int:
    raw = os.environ.get("TRANSGRESS_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ScenarioError(f"TRANSGRESS_THREADS must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ScenarioError(f"TRANSGRESS_THREADS must be a positive integer, got {raw!r}")
    return count


def _resolve(args) -> Scenario:
    if getattr(args, "file", None):
        scenario = load_scenario_file(args.file)
    elif args.scenario:
        scenario = get_scenario(args.scenario)
    else:
        raise ScenarioError("give --scenario NAME or --file PATH")
    return scenario.with_quadrature(args.order, args.subdiv)


def _step(args) -> float:
    if not args.fd_step > 0:
        raise ScenarioError(f"--fd-step must be positive, got {args.fd_step}")
    return args.fd_step


def execute(scenario: Scenario, step: float) -> Report:
    """Run one scenario; numerical failures become a failed report rather than a crash."""
    try:
        return run_scenario(scenario, step)
    except DegreeNotResolved as exc:
        report = Report(scenario.name, fd_step=step)
        report.error = str(exc)
        return report


def cmd_list(args) -> int:
    for name, s in builtin_scenarios().items():
        print(f"{name:<32} {s.kind:<20} {s.description}")
    return EXIT_PASS


def cmd_verify(args) -> int:
    scenario = _resolve(args)
    report = execute(scenario, _step(args))
    print(report.summary())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    return EXIT_PASS if report.passed else EXIT_FAIL


def parse_orders(text: str) -> list[int]:
    try:
        orders = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ScenarioError(f"--orders must be comma-separated integers, got {text!r}") from None
    if not orders or min(orders) < 1:
        raise ScenarioError("--orders needs at least one positive order")
    return orders


def cmd_sweep(args) -> int:
    scenario = _resolve(args)
    orders = parse_orders(args.orders)
    step = _step(args)
    rows = convergence_sweep(lambda spec: sweep_quantity(scenario, spec, step), orders, scenario.quadrature)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["order", "value", "error_estimate"])
        for order, value, err in rows:
            writer.writerow([order, repr(float(value)), repr(float(err))])
    finally:
        if args.out:
            out.close()
    return EXIT_PASS


def run_all(step: float = DEFAULT_STEP, order: int | None = None, subdivision: int | None = None,
            threads: int | None = None, names=None) -> list[Report]:
    """Every built-in scenario (or the named subset), reports ordered by scenario name."""
    registry = builtin_scenarios()
    if names is not None:
        unknown = sorted(set(names) - set(registry))
        if unknown:
            raise ScenarioError(f"unknown scenarios {unknown}; available: {', '.join(registry)}")
        registry = {k: v for k, v in registry.items() if k in names}
    scenarios = [s.with_quadrature(order, subdivision) for s in registry.values()]
    threads = thread_count() if threads is None else threads
    if threads == 1:
        reports = [execute(s, step) for s in scenarios]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda s: execute(s, step), scenarios))
    return sorted(reports, key=lambda r: r.scenario)


def cmd_all(args) -> int:
    reports = run_all(_step(args), args.order, args.subdiv)
    for report in reports:
        print(report.summary())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for report in reports:
            (Path(args.out) / f"{report.scenario}.json").write_text(report.to_json() + "\n")
    failed = [r.scenario for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} scenarios passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transgress",
                                     description="Verify transgression-form identities by quadrature.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="enumerate built-in scenarios").set_defaults(func=cmd_list)

    def common(p, out_help):
        p.add_argument("--order", type=int, default=None, help="quadrature order per axis")
        p.add_argument("--subdiv", type=int, default=None, help="cells per non-periodic axis")
        p.add_argument("--fd-step", type=float, default=DEFAULT_STEP, help="finite-difference step")
        p.add_argument("--out", default=None, help=out_help)

    for name, func, out_help in (("verify", cmd_verify, "write the JSON report here"),
                                 ("sweep", cmd_sweep, "write the CSV table here")):
        p = sub.add_parser(name)
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--scenario", help="built-in scenario name")
        group.add_argument("--file", help="scenario JSON file")
        common(p, out_help)
        p.set_defaults(func=func)
        if name == "sweep":
            p.add_argument("--orders", default="8,16,32", help="comma-separated quadrature orders")
    p = sub.add_parser("all", help="run every built-in scenario")
    common(p, "directory for per-scenario JSON reports")
    p.set_defaults(func=cmd_all)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
