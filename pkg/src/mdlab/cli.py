"""Command-line entry point.

    mdlab verify <check|all> [--config cfg.json] [--set key=value ...]
    mdlab sweep  [--config cfg.json] [--set key=value ...] [--figures DIR]
    mdlab report --in reports.jsonl --format csv [--out FILE] [--figures DIR]

Exit status is 0 iff every executed check passed.
"""

from __future__ import annotations

import argparse
import sys

from .checks import CHECKS, CheckError, run_check, run_sweep
from .config import ConfigError, LabConfig, apply_overrides, load_config
from .reporting import emit_report, read_jsonl, render_figures, write_jsonl


def _load(args) -> LabConfig:
    cfg = load_config(args.config) if args.config else LabConfig()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _emit(reports, args):
    if args.out:
        write_jsonl(reports, args.out)
        print(f"wrote {len(reports)} report(s) to {args.out}")


def cmd_verify(args) -> int:
    cfg = _load(args)
    names = list(CHECKS) if args.check == "all" else [args.check]
    reports = []
    for name in names:
        report = run_check(name, cfg)
        reports.append(report)
        print(report.summary_line())
    _emit(reports, args)
    return 0 if all(r.passed for r in reports) else 1


def cmd_sweep(args) -> int:
    cfg = _load(args)
    reports, summary = run_sweep(cfg)
    for report in reports:
        print(report.summary_line())
    print(f"sweep: {summary['points']} point(s), "
          f"{summary['n_passed']} passed / {summary['n_failed']} failed")
    for name, worst in sorted(summary["worst_by_check"].items()):
        print(f"  worst {name}: {worst:.3e}")
    _emit(reports, args)
    if args.figures:
        for path in render_figures(reports, args.figures):
            print(f"figure: {path}")
    return 0 if summary["n_failed"] == 0 else 1


def cmd_report(args) -> int:
    reports = read_jsonl(args.input)
    suffix = "csv" if args.format == "csv" else "jsonl"
    out = args.out or f"mdlab-reports.{suffix}"
    emit_report(reports, args.format, out)
    print(f"wrote {len(reports)} report(s) to {out}")
    if args.figures:
        for path in render_figures(reports, args.figures):
            print(f"figure: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults built in)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. model.N=64")
    common.add_argument("--out", help="append reports to this JSON-lines file")

    p_verify = sub.add_parser("verify", parents=[common],
                              help="run one named check (or 'all')")
    p_verify.add_argument("check", choices=sorted(CHECKS) + ["all"])
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="run every check over the configured sweep axes")
    p_sweep.add_argument("--figures", help="directory for metric-vs-parameter figures")
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="convert stored reports")
    p_report.add_argument("--in", dest="input", required=True,
                          help="JSON-lines report file")
    p_report.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    p_report.add_argument("--out", help="output path")
    p_report.add_argument("--figures", help="directory for figures")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
