import argparse
import asyncio
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from core.config import RUN_MODES, Config, RunConfig
from gridsched.coordinator.engine import Coordinator
from gridsched.errors import GridSchedError, ScenarioError
from gridsched.metrics.sweeps import DEFAULT_W_VALUES, w_sweep
from gridsched.model.io import load_scenario, override_scenario, save_scenario
from gridsched.model.reference import build_reference_scenario
from gridsched.model.scenario import Scenario
from gridsched.reproduce import STUDIES, reproduce
from gridsched.results.writer import ResultWriter

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_SOLVER_FAILED = 3


# --- Structured JSON Logging ---
class JsonFormatter(logging.Formatter):
    """Outputs log records as single-line JSON."""
    def format(self, record):
        log_entry = {
            "timestamp": self.formatTime(record),
            "severity": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info and record.exc_info[0]:
            log_entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_entry)


def setup_logging(level: str = "INFO", log_format: str = "text"):
    """Configure logging to stdout."""
    handler = logging.StreamHandler(sys.stdout)
    if log_format == "json":
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        ))
    logging.root.handlers = [handler]
    logging.root.setLevel(getattr(logging, level, logging.INFO))


logger = logging.getLogger("gridsched")


def build_parser(config: Config) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridsched", description="Coordinated HEMS scheduling on a radial feeder")
    commands = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(sub: argparse.ArgumentParser):
        sub.add_argument("--scenario", help="scenario JSON file (default: reference scenario for --seed)")
        sub.add_argument("--out", default=config.output_dir, help="output directory")
        sub.add_argument("--seed", type=int, default=config.seed, help="seed for the reference scenario")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="dotted-path scenario override, repeatable")
        sub.add_argument("--max-iters", type=int, default=None, help="ADMM iteration cap")
        sub.add_argument("--tol", type=float, default=None, help="primal and dual residual tolerance")

    run = commands.add_parser("run", help="run one mode and write its results")
    scenario_flags(run)
    run.add_argument("--mode", default="global", help=f"one of {', '.join(RUN_MODES)}")

    study = commands.add_parser("reproduce", help="run one experiment study")
    scenario_flags(study)
    study.add_argument("study", choices=sorted(STUDIES))

    ref = commands.add_parser("scenario", help="write the reference scenario JSON")
    ref.add_argument("--seed", type=int, default=config.seed)
    ref.add_argument("--out", default=os.path.join(config.output_dir, "scenario.json"), help="output file")
    return parser


def _run_config(args: argparse.Namespace, mode: str) -> RunConfig:
    return RunConfig(
        mode=mode,
        output_dir=args.out,
        scenario_path=args.scenario,
        seed=args.seed,
        overrides=tuple(args.overrides),
        max_iters=args.max_iters,
        tol=args.tol,
    ).validate()


def _load(run_config: RunConfig) -> Scenario:
    overrides = run_config.scenario_overrides()
    if run_config.scenario_path:
        return load_scenario(run_config.scenario_path, overrides)
    return override_scenario(build_reference_scenario(run_config.seed), overrides)


async def _run(run_config: RunConfig, scenario: Scenario, config: Config) -> int:
    writer = ResultWriter(run_config.output_dir)
    async with Coordinator(config) as coordinator:
        if run_config.mode == "w-sweep":
            table = await w_sweep(
                scenario,
                DEFAULT_W_VALUES,
                executor=coordinator.executor,
                baseline=await coordinator.baseline(scenario),
                max_iters=coordinator.max_iters_for(scenario),
            )
            writer.write_table(os.path.join("w-sweep", "w_sweep.csv"), table)
            converged = bool(table["converged"].all())
        else:
            result = await coordinator.run(scenario, run_config.mode)
            writer.write_run(result)
            converged = result.converged
    if not converged:
        logger.warning(f"{run_config.mode} did not converge; results written and flagged")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


async def _reproduce(run_config: RunConfig, study: str, scenario: Scenario, config: Config) -> int:
    async with Coordinator(config) as coordinator:
        await reproduce(study, scenario, coordinator, ResultWriter(run_config.output_dir))
    return EXIT_OK


def _report(error: GridSchedError):
    logger.error(str(error))
    print(f"error: {error}", file=sys.stderr)
    if isinstance(error, ScenarioError):
        for violation in error.violations:
            print(f"  - {violation}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    config = Config.load()
    setup_logging(config.log_level, config.log_format)
    args = build_parser(config).parse_args(argv)

    try:
        if args.command == "scenario":
            scenario = build_reference_scenario(args.seed)
            save_scenario(scenario, args.out)
            logger.info(f"Reference scenario (seed {args.seed}) written to {args.out}")
            return EXIT_OK

        mode = args.mode if args.command == "run" else "global"
        run_config = _run_config(args, mode)
        scenario = _load(run_config)
        logger.info(f"Scenario: {len(scenario.homes)} homes, {scenario.grid.num_slots} slots")
        if args.command == "run":
            return asyncio.run(_run(run_config, scenario, config))
        return asyncio.run(_reproduce(run_config, args.study, scenario, config))
    except ScenarioError as e:
        _report(e)
        return EXIT_INVALID
    except GridSchedError as e:
        # the input was accepted; a solver failed while running it
        _report(e)
        return EXIT_SOLVER_FAILED


if __name__ == "__main__":
    sys.exit(main())
