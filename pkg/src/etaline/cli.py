"""Batch verification harness: ``toolkit verify --suite <name> ...``.

Runs named check suites, prints one line per check, and emits deterministic
JSON or CSV reports.  Exit codes: 0 all checks pass, 1 check failure,
2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict

from .checks import RunConfig, SuiteReport, all_suites, run_suite

__all__ = ["main", "emit", "load_config"]


def load_config(path):
    """Flat key = value text file (resolutions, seeds, gap_min, ...)."""
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            mapping[key] = val
    return mapping


def _fmt(x):
    return f"{float(x):.17g}"


def report_payload(report):
    """Deterministic JSON payload (volatile wall time excluded)."""
    return {
        "suite": report.suite,
        "environment": {k: report.environment[k]
                        for k in sorted(report.environment)},
        "checks": [
            {"name": r.name, "anchor": r.anchor, "value": float(_fmt(r.value)),
             "tolerance": float(_fmt(r.tol)), "passed": r.passed,
             "detail": r.detail}
            for r in report.records
        ],
    }


def emit(report, fmt, path):
    """Serialize a report; numeric values at 17 significant digits."""
    if fmt == "json":
        text = json.dumps(report_payload(report), indent=2, sort_keys=True)
        with open(path, "w") as fh:
            fh.write(text + "\n")
        return
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["suite", "name", "anchor", "value",
                             "tolerance", "passed", "detail"])
            for r in report.records:
                writer.writerow([report.suite, r.name, r.anchor,
                                 _fmt(r.value), _fmt(r.tol),
                                 "pass" if r.passed else "fail", r.detail])
        return
    raise ValueError(f"unknown format {fmt!r}")


def load_report(path):
    with open(path) as fh:
        return json.load(fh)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="toolkit",
        description="numerical verification suites for the eta-form / "
                    "Pfaffian line bundle toolkit")
    sub = parser.add_subparsers(dest="command")
    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True,
                     help=f"one of: {', '.join(all_suites())}")
    ver.add_argument("--config", help="flat key=value configuration file")
    ver.add_argument("--out", help="report output path")
    ver.add_argument("--format", choices=["json", "csv"], default="json")
    ver.add_argument("--seed", type=int, help="override the config seed")

    args = parser.parse_args(argv)
    if args.command != "verify":
        parser.print_help()
        return 2

    mapping = {}
    if args.config:
        try:
            mapping = load_config(args.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = RunConfig.from_mapping(mapping)
    except (TypeError, ValueError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed

    try:
        report = run_suite(args.suite, cfg)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2

    width = max(len(r.name) for r in report.records)
    for r in report.records:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name:<{width}}  value={_fmt(r.value):<24} "
              f"tol={r.tol:g}  ({r.anchor})")
    print(f"suite {report.suite}: "
          f"{sum(r.passed for r in report.records)}/{len(report.records)} "
          f"checks passed in {report.wall_time:.1f} s")

    if args.out:
        try:
            emit(report, args.format, args.out)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return 2

    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
