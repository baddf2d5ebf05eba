"""Command-line front end.

Two subcommands:

* ``qkdplan rate PRESET [--distance M] [overrides]`` prints the modelled
  link budget, gains/QBERs and secret-key rate for one link class.
* ``qkdplan plan SCENARIO --objective {mmd,mr,dijkstra}`` loads a scenario
  file (a path or the name of a bundled scenario), accumulates the key
  pools over the declared window, runs the selected planner, verifies the
  solution independently, and emits a markdown or CSV report.

Exit codes: 0 success, 1 input error, 2 infeasible request set,
3 model-domain error (e.g. a near-field distance).  Timing goes to
stderr so stdout stays byte-identical for identical inputs.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import linkbudget, netmodel, router
from .decoy import DecoyProtocolParams
from .lp import LpStatus

__all__ = ["main", "entrypoint", "RunReport", "build_markdown"]

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_MODEL_DOMAIN = 3

LP_TOL_ENV = "QKDPLAN_LP_TOL"


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 by default, which this tool reserves for
    # infeasible plans; usage problems are input errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def _build_parser() -> _Parser:
    parser = _Parser(prog="qkdplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="link budget and key rate for a preset link class")
    rate.add_argument("preset", help="link class: leo-gs, geo-gs or leo-leo")
    rate.add_argument("--distance", type=float, default=None, help="link distance in meters")
    rate.add_argument("--mu", type=float, default=None, help="signal intensity override")
    rate.add_argument("--nu", type=float, default=None, help="decoy intensity override")
    rate.add_argument("--y0", type=float, default=None, help="background yield override")
    rate.add_argument("--q", type=float, default=None, help="protocol efficiency override")
    rate.add_argument("--f-ec", type=float, default=None, help="error-correction efficiency")
    rate.add_argument("--pulse-rate", type=float, default=None, help="pulses per second")
    rate.add_argument("--atm-db", type=float, default=None, help="atmospheric loss override (dB)")
    rate.add_argument("--pointing-db", type=float, default=None, help="pointing loss override (dB)")
    rate.add_argument("--rx-efficiency", type=float, default=None, help="detector efficiency")
    rate.add_argument("--fried-parameter", type=float, default=None, help="Fried parameter (m)")

    plan = sub.add_parser("plan", help="route key-exchange requests over a scenario")
    plan.add_argument("scenario", help="scenario file path or bundled scenario name")
    plan.add_argument(
        "--objective", required=True, choices=("mmd", "mr", "dijkstra"),
        help="mmd: maximize minimum demand; mr: minimize consumption; "
        "dijkstra: sequential shortest-path baseline",
    )
    plan.add_argument("--format", choices=("md", "csv"), default="md")
    plan.add_argument("--out", type=Path, default=None, help="write the report to this file")
    return parser


def _protocol_from_args(args) -> DecoyProtocolParams:
    defaults = DecoyProtocolParams()
    return DecoyProtocolParams(
        mu=defaults.mu if args.mu is None else args.mu,
        nu=defaults.nu if args.nu is None else args.nu,
        q=defaults.q if args.q is None else args.q,
        f_ec=defaults.f_ec if args.f_ec is None else args.f_ec,
        y0=defaults.y0 if args.y0 is None else args.y0,
        pulse_rate_hz=defaults.pulse_rate_hz if args.pulse_rate is None else args.pulse_rate,
    )


def _cmd_rate(args) -> int:
    if args.preset not in linkbudget.PRESETS:
        print(
            f"error: unknown preset {args.preset!r}; "
            f"known presets: {', '.join(sorted(linkbudget.PRESETS))}",
            file=sys.stderr,
        )
        return EXIT_INPUT_ERROR
    overrides = {}
    if args.atm_db is not None:
        overrides["atm_loss_db"] = args.atm_db
    if args.pointing_db is not None:
        overrides["pointing_loss_db"] = args.pointing_db
    if args.rx_efficiency is not None:
        overrides["rx_efficiency"] = args.rx_efficiency
    if args.fried_parameter is not None:
        overrides["fried_parameter_m"] = args.fried_parameter
    try:
        params = linkbudget.preset_link(args.preset, distance_m=args.distance, **overrides)
        protocol = _protocol_from_args(args)
        perf = linkbudget.link_performance(params, protocol)
    except linkbudget.NearFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    rows = [
        ("preset", args.preset),
        ("wavelength_nm", f"{params.wavelength_m * 1e9:g}"),
        ("distance_km", f"{params.distance_m / 1e3:g}"),
        ("total_attenuation_db", f"{perf.attenuation_db:.2f}"),
        ("transmittance", f"{perf.transmittance:.4e}"),
        ("gain_signal_q_mu", f"{perf.q_mu:.4e}"),
        ("qber_signal_e_mu_percent", f"{perf.e_mu * 100:.4g}"),
        ("gain_decoy_q_nu", f"{perf.q_nu:.4e}"),
        ("qber_decoy_e_nu_percent", f"{perf.e_nu * 100:.4g}"),
        ("secret_key_rate_bps", f"{perf.rate_bps:.4g}"),
    ]
    print("| quantity | value |")
    print("| --- | --- |")
    for name, value in rows:
        print(f"| {name} | {value} |")
    return EXIT_OK


def _resolve_scenario(token: str) -> netmodel.Scenario:
    path = Path(token)
    if path.exists():
        return netmodel.load_scenario(path)
    name = token if token.endswith(".json") else f"{token}.json"
    bundle = resources.files("qkdplan").joinpath("scenarios", name)
    if bundle.is_file():
        import json

        return netmodel.load_scenario(json.loads(bundle.read_text()))
    raise netmodel.ScenarioError(
        f"scenario {token!r} is neither a file nor a bundled scenario "
        f"(bundled: {', '.join(sorted(bundled_scenarios()))})"
    )


def bundled_scenarios() -> tuple[str, ...]:
    base = resources.files("qkdplan").joinpath("scenarios")
    return tuple(sorted(p.name[: -len(".json")] for p in base.iterdir() if p.name.endswith(".json")))


@dataclass(frozen=True)
class RunReport:
    """Everything one planning run produced, ready for rendering."""

    scenario_name: str
    objective: str
    gs_relay: bool
    window_seconds: float
    graph: netmodel.QkdGraph
    solution: router.FlowSolution
    wall_seconds: float


def _mmd_pairs(scenario: netmodel.Scenario) -> tuple[tuple[str, str], ...]:
    if not scenario.requests:
        return router.gs_pairs(scenario.graph)
    seen = []
    for req in scenario.requests:
        pair = tuple(sorted((req.src, req.dst)))
        if pair not in seen:
            seen.append(pair)
    return tuple(seen)


def build_markdown(report: RunReport) -> str:
    solution = report.solution
    lines = [
        "# qkdplan plan report",
        "",
        f"- scenario: {report.scenario_name}",
        f"- objective: {report.objective}",
        f"- status: {solution.status.value}",
        f"- gs_relay: {str(report.gs_relay).lower()}",
        f"- elapsed_seconds: {report.window_seconds:g}",
        "",
        "## Links",
        "",
        "| link | rate_bps | pool_bits | consumed_bits | remaining_bits |",
        "| --- | --- | --- | --- | --- |",
    ]
    consumed_by_link: dict[tuple[str, str], float] = {
        link.endpoints: 0.0 for link in report.graph.links
    }
    for (_, (a, b)), value in solution.flows.items():
        pair = (a, b) if a <= b else (b, a)
        consumed_by_link[pair] += value
    for link in report.graph.links:
        used = consumed_by_link[link.endpoints]
        lines.append(
            f"| {link.a}-{link.b} | {link.rate_bps:g} | {link.pool_bits} "
            f"| {used:g} | {link.pool_bits - used:g} |"
        )
    lines += [
        "",
        "## Pairs",
        "",
        "| pair | fulfilled_bits | consumed_bits | consumption_rate |",
        "| --- | --- | --- | --- |",
    ]
    for i, commodity in enumerate(solution.commodities):
        delivered = solution.demands[i]
        consumed = solution.consumed_for(i)
        rate = consumed / delivered if delivered > 0 else 0.0
        lines.append(
            f"| {commodity.source}->{commodity.sink} | {delivered:g} "
            f"| {consumed:g} | {rate:.4g} |"
        )
    lines += [
        "",
        "## Totals",
        "",
        "| delivered_bits | consumed_bits | consumption_rate | min_fulfilled_bits |",
        "| --- | --- | --- | --- |",
        f"| {solution.total_demand:g} | {solution.total_flow:g} "
        f"| {solution.consumption_rate:.4g} | {solution.min_demand:g} |",
        "",
    ]
    return "\n".join(lines)


def _cmd_plan(args) -> int:
    lp_tol = None
    if os.environ.get(LP_TOL_ENV):
        try:
            lp_tol = float(os.environ[LP_TOL_ENV])
        except ValueError:
            print(f"error: {LP_TOL_ENV} must be a number", file=sys.stderr)
            return EXIT_INPUT_ERROR

    started = time.perf_counter()
    try:
        scenario = _resolve_scenario(args.scenario)
    except netmodel.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    graph = netmodel.accumulate_pools(scenario.graph, scenario.window_seconds)
    requests = [(r.src, r.dst, r.demand_bits) for r in scenario.requests]
    if args.objective == "mmd":
        solution = router.route_mmd(
            graph, _mmd_pairs(scenario), gs_relay=scenario.gs_relay, lp_tol=lp_tol
        )
    elif args.objective == "mr":
        solution = router.route_mr(
            graph, requests, gs_relay=scenario.gs_relay, lp_tol=lp_tol
        )
    else:
        solution = router.route_sequential_dijkstra(
            graph, requests, gs_relay=scenario.gs_relay
        )

    if solution.status is LpStatus.INFEASIBLE:
        print(
            "infeasible: the requested demands exceed what the key pools can carry",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    if solution.status is not LpStatus.OPTIMAL:  # pragma: no cover - defensive
        print(f"error: solver returned {solution.status.value}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    check = router.verify_solution(graph, solution.commodities, solution)
    if not check.ok:  # pragma: no cover - would be a planner bug
        for violation in check.violations:
            print(f"verification failed: {violation}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    report = RunReport(
        scenario_name=Path(args.scenario).name,
        objective=args.objective,
        gs_relay=scenario.gs_relay,
        window_seconds=scenario.window_seconds,
        graph=graph,
        solution=solution,
        wall_seconds=time.perf_counter() - started,
    )
    text = build_markdown(report) if args.format == "md" else router.solution_to_csv(solution)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    print(f"wall-clock: {report.wall_seconds:.3f} s", file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2 as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.command == "rate":
        return _cmd_rate(args)
    return _cmd_plan(args)


def entrypoint() -> None:  # pragma: no cover - console-script shim
    raise SystemExit(main())
