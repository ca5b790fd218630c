"""
Event Kiwi command line.

    event-kiwi <subcommand> [--config FILE] [--set section.key=value ...]
                            [--seed N] [--out DIR] [-v]

Every subcommand prints one JSON document on stdout; logs go to stderr.
Exit code 0 means success, 2 a usage error, 1 anything else.
"""

import argparse
import asyncio
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .errors import UsageError
from .tools import (
    CatalogTool,
    EvaluateTool,
    HelpTool,
    PredictTool,
    ReportTool,
    SynthTool,
    TrainTool,
)

logger = logging.getLogger(__name__)

TOOLS = {
    "synth": SynthTool,
    "catalog": CatalogTool,
    "train": TrainTool,
    "evaluate": EvaluateTool,
    "predict": PredictTool,
    "report": ReportTool,
    "help": HelpTool,
}

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


@dataclass
class CliConfig:
    subcommand: str
    config_path: Optional[str] = None
    overrides: List[str] = field(default_factory=list)
    verbosity: int = 0
    seed: Optional[int] = None
    out: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def tool_params(self) -> Dict[str, Any]:
        return {
            **self.params,
            "config": self.config_path,
            "set": list(self.overrides),
            "seed": self.seed,
            "out": self.out,
        }


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message, self.format_usage())


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config value (repeatable)",
    )
    common.add_argument("--seed", type=int, help="Experiment seed (synth: master seed)")
    common.add_argument("--out", help="Output directory")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")

    parser = _Parser(prog="event-kiwi", description="Undesired-event detection for oil wells")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, metavar="SUBCOMMAND")

    synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic dataset")
    synth.add_argument("--event", type=int)
    synth.add_argument("--episodes", type=int)
    synth.add_argument("--normals", type=int)

    catalog = sub.add_parser("catalog", parents=[common], help="Scan a data root")
    catalog.add_argument("--data-root", dest="data_root")

    train = sub.add_parser("train", parents=[common], help="Train one event/method/task model")
    train.add_argument("--event", type=int, required=True)
    train.add_argument("--method", choices=["rf", "tcn"], required=True)
    train.add_argument("--task", choices=["classify", "regress"], required=True)
    train.add_argument("--source", choices=["real", "simulated", "synthetic", "all"])

    evaluate = sub.add_parser("evaluate", parents=[common], help="Full per-event experiment")
    evaluate.add_argument("--event", type=int)
    evaluate.add_argument("--source", choices=["real", "simulated", "synthetic", "all"])

    predict = sub.add_parser("predict", parents=[common], help="Stream a CSV through a model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--input", required=True)

    report = sub.add_parser("report", parents=[common], help="Aggregate report files")
    report.add_argument("paths", nargs="+")

    help_cmd = sub.add_parser("help", parents=[common], help="Workflow guidance")
    help_cmd.add_argument("query", nargs="*")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> CliConfig:
    parser = build_parser()
    args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    if not args.subcommand:
        raise UsageError(
            f"Missing subcommand, expected one of: {', '.join(TOOLS)}", parser.format_usage()
        )

    values = vars(args)
    shared = {"subcommand", "config", "overrides", "seed", "out", "verbose"}
    return CliConfig(
        subcommand=args.subcommand,
        config_path=args.config,
        overrides=list(args.overrides),
        verbosity=args.verbose,
        seed=args.seed,
        out=args.out,
        params={k: v for k, v in values.items() if k not in shared and v is not None},
    )


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


async def call_tool(cli: CliConfig) -> str:
    """Handle tool execution."""
    tool = TOOLS[cli.subcommand]()
    return await tool.execute(cli.tool_params())


def dispatch(cli: CliConfig) -> str:
    return asyncio.run(call_tool(cli))


def exit_code(result: str) -> int:
    try:
        status = json.loads(result).get("status", "success")
    except (ValueError, AttributeError):
        return EXIT_FAILED
    return EXIT_OK if status == "success" else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the event-kiwi command"""
    try:
        cli = parse_args(argv)
    except UsageError as e:
        print(json.dumps({"status": "error", "error": e.to_dict()}, indent=2))
        print(e.usage.rstrip(), file=sys.stderr)
        return EXIT_USAGE

    configure_logging(cli.verbosity)
    logger.debug(f"Running {cli.subcommand} with {cli.tool_params()}")
    result = dispatch(cli)
    print(result)
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
