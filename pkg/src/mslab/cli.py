"""Command line entry point ``mslab``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import workbench
from .errors import ConfigError, MslabError


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mslab", description="Operator criteria workbench for "
                                "model spaces and H(Gamma, v) spaces on the upper half-plane.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity self-checks")
    v.add_argument("--c-lp", type=float, default=4.0, help="Littlewood-Paley constant to check")
    v.add_argument("--cache-dir", help="where to store the verification token")

    a = sub.add_parser("analyze", help="run an analysis from a JSON config")
    a.add_argument("--config", required=True)
    a.add_argument("--out", help="report path (overrides the config's output)")
    a.add_argument("--c-lp", type=float, help="override c_lp from the config")
    a.add_argument("--cache-dir")

    e = sub.add_parser("export", help="write CSV tables from a report")
    e.add_argument("--report", required=True)
    e.add_argument("--out", required=True, help="output directory")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            status, checks = workbench.cmd_verify(args.c_lp, args.cache_dir)
            for c in checks:
                print(c.line())
            return status
        if args.command == "analyze":
            cfg = workbench.load_run_config(args.config)
            if args.out:
                cfg.output = str(Path(args.out).resolve())
            if args.c_lp is not None:
                cfg.c_lp = args.c_lp
            status, report = workbench.cmd_analyze(cfg, args.cache_dir)
            if not cfg.output:
                sys.stdout.write(workbench.dump_report(report))
            if report.get("error"):
                print(f"mslab: {report['error']}", file=sys.stderr)
            return status
        try:
            report = json.loads(Path(args.report).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read report: {exc}") from None
        for path in workbench.cmd_export_plotdata(report, args.out):
            print(path)
        return workbench.EXIT_OK
    except ConfigError as exc:
        print(f"mslab: config error: {exc}", file=sys.stderr)
        return workbench.EXIT_CONFIG
    except MslabError as exc:
        print(f"mslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return workbench.EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
