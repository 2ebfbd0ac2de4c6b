"""
Batch front door: `run <config>` and `verify <trace>`.

Exit codes: 0 clean, 2 invariant breach or failed check, 3 config error.
"""

import argparse
import logging
import sys

from src.config import get_log_level
from src.processor import run, verify
from src.status import ExitStatus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="punctual", description="Run and verify stage-by-stage constructions.")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run a config and write its trace")
    run_cmd.add_argument("config", help="YAML run config")
    run_cmd.add_argument("--horizon", type=int, help="override the config's horizon")
    run_cmd.add_argument("--out", help="trace file to write")

    verify_cmd = commands.add_parser("verify", help="replay a trace through its invariant suites")
    verify_cmd.add_argument("trace", help="trace file")
    verify_cmd.add_argument("--out", help="report file to write")
    verify_cmd.add_argument("--config", help="run config, to re-derive modal decisions against the adversaries")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=get_log_level(), format="%(levelname)s %(name)s: %(message)s")

    if args.command == "run":
        if args.horizon is not None and args.horizon < 1:
            print("❌ Config error: --horizon must be >= 1", file=sys.stderr)
            return ExitStatus.CONFIG_ERROR
        status, message = run(args.config, horizon=args.horizon, out=args.out)
        print(message)
        return status

    status, report = verify(args.trace, out=args.out, config_path=args.config)
    if 'error' not in report:
        failed = report['summary'].get('failed', [])
        print(f"{'✅' if not failed else '❌'} {report['engine']}: {len(report['checks'])} checks, "
              f"{len(failed)} failed" + (f" ({', '.join(failed)})" if failed else ""))
        for requirement, text in report.get('certificates', {}).items():
            print(f"   {requirement}: {text}")
    return status


if __name__ == "__main__":
    sys.exit(main())
