import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .errors import ConfigError, EitChannelError, ExitCode
from .logger import ConsoleLogger, LogLevel
from .runner import MANIFEST, run_scenario
from .scenario import find_scenario, list_scenarios, load_scenario

logger = logging.getLogger("eit_channel.cli")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eit-channel",
                                     description="EIT delay line as a Gaussian quantum channel: sweeps, "
                                                 "Monte-Carlo runs and fits")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run
    parser_run = subparsers.add_parser("run", help="Run a scenario and write its tables")
    parser_run.add_argument("scenario", help="Scenario file or bundled scenario name")
    parser_run.add_argument("--out", default=None, help="Output directory (overrides output.directory)")
    parser_run.add_argument("--seed", type=int, default=None, help="Seed (overrides the scenario)")
    parser_run.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials (overrides the scenario)")
    parser_run.add_argument("--quiet", action="store_true", help="Only print warnings and errors")

    # validate
    parser_validate = subparsers.add_parser("validate", help="Check a scenario file without running it")
    parser_validate.add_argument("scenario", help="Scenario file or bundled scenario name")

    # list-scenarios
    subparsers.add_parser("list-scenarios", help="List bundled scenarios")
    return parser


def _report_config_error(e: ConfigError):
    print(f"Configuration error: {e}", file=sys.stderr)
    for line in e.errors:
        print(f" - {line}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-scenarios":
        for name in list_scenarios():
            print(name)
        return ExitCode.OK

    try:
        scenario = load_scenario(find_scenario(args.scenario))
        if args.command == "validate":
            print(f"Scenario '{scenario.name}' is valid.")
            return ExitCode.OK
        scenario = scenario.with_overrides(seed=args.seed, trials=args.trials)
    except ConfigError as e:
        _report_config_error(e)
        return ExitCode.CONFIG_ERROR

    console = ConsoleLogger(LogLevel.WARN if args.quiet else LogLevel.INFO)
    out_dir = args.out or scenario.output.directory
    try:
        run_scenario(scenario, out_dir, console)
    except ConfigError as e:
        _report_config_error(e)
        return ExitCode.CONFIG_ERROR
    except EitChannelError as e:
        console.log(LogLevel.ERROR, "CLI", str(e))
        logger.debug("run failed", exc_info=True)
        return ExitCode.RUNTIME_ERROR

    if not args.quiet:
        with open(os.path.join(out_dir, MANIFEST)) as f:
            outputs = json.load(f)["outputs"]
        print(f"Wrote {len(outputs)} table(s) and {MANIFEST} to {out_dir}")
    return ExitCode.OK


if __name__ == "__main__":
    sys.exit(main())
