"""Command-line front end.

    mip6sim run <scenario.json> [--mtu N] [--seed N] [--trace out.jsonl]
                [--report out.txt] [--format table|csv]
    mip6sim validate <scenario.json> [--mtu N]
    mip6sim reproduce-paper [--mtu N] [--seed N] [--trace out.jsonl]
                [--report out.txt] [--format table|csv]

Every failure exits nonzero after printing a single line of the form
"error:<category>: <detail>" on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .metrics import (
    EmptyTraceError,
    analytic_delay,
    analytic_overhead,
    comparison_runs,
    measured_delay,
    measured_overhead,
    render_csv,
    render_table,
)
from .packet import OversizeError, PacketError
from .scenario import (
    ScenarioParseError,
    ScenarioValidationError,
    scenario_from_dict,
)
from .simnet import HorizonExceededError, build_world, trace_to_jsonl


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep usage failures single-line too
        print(f"error:usage: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mip6sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_outputs: bool = True) -> None:
        p.add_argument("--mtu", type=int, default=None, help="override the scenario MTU")
        if with_outputs:
            p.add_argument("--seed", type=int, default=None, help="override the payload seed")
            p.add_argument("--trace", metavar="PATH", help="write the JSON Lines trace here")
            p.add_argument("--report", metavar="PATH", help="also write the report here")
            p.add_argument(
                "--format", choices=("table", "csv"), default="table", help="report format"
            )

    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    add_common(run)

    val = sub.add_parser("validate", help="check a scenario file and print findings")
    val.add_argument("scenario", help="scenario JSON file")
    add_common(val, with_outputs=False)

    rep = sub.add_parser(
        "reproduce-paper",
        help="run the bundled four-mechanism comparison and print the table",
    )
    add_common(rep)
    return parser


def _load(path: str, mtu: int | None, seed: int | None):
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict):
        if mtu is not None:
            raw["mtu"] = mtu
        if seed is not None:
            raw["seed"] = seed
    return scenario_from_dict(raw)


def _write_outputs(args, trace_text: str, report_text: str) -> None:
    if args.trace:
        Path(args.trace).write_text(trace_text, encoding="utf-8")
    if args.report:
        Path(args.report).write_text(report_text, encoding="utf-8")
    sys.stdout.write(report_text)


def _run_summary(scenario_path: str, config, result, fmt: str) -> str:
    rows: list[tuple[str, str]] = [
        ("scenario", scenario_path),
        ("mtu", str(config.mtu)),
        ("injected", str(len(result.injections))),
        ("delivered", str(len(result.deliveries))),
        ("dropped", str(sum(result.drops.values()))),
        ("signaling_bytes", str(result.signaling_bytes)),
    ]
    for reason in sorted(result.drops):
        rows.append((f"drops.{reason}", str(result.drops[reason])))
    try:
        rows.append(("overhead_pct_measured", f"{measured_overhead(result.trace, result.deliveries):.4f}"))
        rows.append(("delay_units_measured", f"{measured_delay(result.deliveries):g}"))
    except EmptyTraceError:
        rows.append(("overhead_pct_measured", "n/a"))
        rows.append(("delay_units_measured", "n/a"))
    if config.mechanism is not None:
        rows.append(
            ("overhead_pct_analytic", f"{analytic_overhead(config.mechanism, config.mtu):.4f}")
        )
        rows.append(("delay_units_analytic", str(analytic_delay(config.mechanism))))
    if fmt == "csv":
        return "".join(f"{key},{value}\n" for key, value in rows)
    width = max(len(key) for key, _ in rows)
    return "".join(f"{key.ljust(width)}  {value}\n" for key, value in rows)


def cmd_run(args) -> int:
    config = _load(args.scenario, args.mtu, args.seed)
    result = build_world(config).run_until_quiescent()
    report_text = _run_summary(args.scenario, config, result, args.format)
    _write_outputs(args, trace_to_jsonl(result.trace), report_text)
    return 0


def cmd_validate(args) -> int:
    try:
        _load(args.scenario, args.mtu, None)
    except ScenarioValidationError as exc:
        for finding in exc.findings:
            print(f"config-invalid: {finding}")
        return 1
    print("ok")
    return 0


def cmd_reproduce(args) -> int:
    mtu = args.mtu if args.mtu is not None else 1500
    seed = args.seed if args.seed is not None else 0
    runs = comparison_runs(mtu=mtu, seed=seed)
    reports = [report for report, _ in runs]
    report_text = render_csv(reports) if args.format == "csv" else render_table(reports)
    trace_text = "".join(trace_to_jsonl(result.trace) for _, result in runs)
    _write_outputs(args, trace_text, report_text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_reproduce(args)
    except ScenarioParseError as exc:
        print(f"error:parse-error: {exc}", file=sys.stderr)
    except ScenarioValidationError as exc:
        print(f"error:config-invalid: {exc.findings[0]}", file=sys.stderr)
    except HorizonExceededError as exc:
        print(f"error:horizon-exceeded: {exc}", file=sys.stderr)
    except OversizeError as exc:
        print(f"error:oversize: {exc}", file=sys.stderr)
    except PacketError as exc:
        print(f"error:packet: {exc}", file=sys.stderr)
    except EmptyTraceError as exc:
        print(f"error:empty-trace: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error:invalid-value: {exc}", file=sys.stderr)
    except FileNotFoundError as exc:
        print(f"error:file-not-found: {exc.filename}", file=sys.stderr)
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
