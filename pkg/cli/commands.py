"""
Command-line router: one subcommand per pipeline stage
"""
import argparse
import typing
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config import settings
from models.run_config import ARTICLE_METHODS, RunConfig
from services.pipeline import PipelineRunner
from services.synthetic import SbmConfig
from utils.helpers import OutputDirLock
from logs.log import logger


GLOBAL_FIELDS = ("seed", "out_dir", "threads", "offline")
FLAG_NAMES = {"out_dir": "--out"}


def _flag(name: str) -> str:
    return FLAG_NAMES.get(name, "--" + name.replace("_", "-"))


def _choices(annotation) -> Optional[List[str]]:
    if typing.get_origin(annotation) is typing.Literal:
        return list(typing.get_args(annotation))
    return None


def _default_text(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def add_config_flags(parser: argparse.ArgumentParser, names: Sequence[str]) -> None:
    """
    One flag per RunConfig field; unset flags stay out of the namespace so
    config-file values are not overwritten by defaults
    """
    for name in names:
        field = RunConfig.model_fields[name]
        default = field.get_default(call_default_factory=True)
        help_text = f"{field.description} (default: {_default_text(default)})"
        if field.annotation is bool:
            parser.add_argument(
                _flag(name), dest=name, action=argparse.BooleanOptionalAction,
                default=argparse.SUPPRESS, help=help_text,
            )
        else:
            parser.add_argument(
                _flag(name), dest=name, choices=_choices(field.annotation),
                default=argparse.SUPPRESS, metavar=None if _choices(field.annotation) else name.upper(),
                help=help_text,
            )


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="key = value configuration file")
    add_config_flags(common, GLOBAL_FIELDS)
    return common


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with every subcommand"""
    common = _common_parser()
    run_fields = [n for n in RunConfig.model_fields if n not in GLOBAL_FIELDS]
    run_flags = argparse.ArgumentParser(add_help=False)
    add_config_flags(run_flags, run_fields)

    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Co-authorship network reconstruction and collaboration recommendation",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text, description=help_text, parents=[common, run_flags])
        cmd.set_defaults(parser=cmd)
        return cmd

    add("ingest", "parse the corpus and persist graphs, author table and features")
    add("embed", "train the article-embedding method on the citation graph")
    train = add("train", "split co-authorship edges and train the link model")
    train.add_argument("--resume", action="store_true", help="continue from this configuration's checkpoint")

    evaluate = add("evaluate", "score the test partition and append to the results table")
    evaluate.add_argument("--checkpoint", type=Path, default=None, help="checkpoint file (default: the run's own)")

    rec = add("recommend", "rank new collaborators for one author")
    rec.add_argument("--author", required=True, help="author name or id")
    rec.add_argument("-k", type=int, default=10, help="number of recommendations (default: 10)")
    rec.add_argument("--checkpoint", type=Path, default=None, help="checkpoint file (default: the run's own)")

    grad = add("gradcheck", "compare analytic and finite-difference gradients")
    grad.add_argument("--inject-fault", default=None, metavar="BLOCK",
                      help="corrupt this parameter block's gradient (negative control)")

    synth = add("gen-synthetic", "write stochastic-block-model ingest artifacts")
    sbm = SbmConfig()
    synth.add_argument("--blocks", type=int, default=sbm.blocks, help=f"number of blocks (default: {sbm.blocks})")
    synth.add_argument("--block-size", type=int, default=sbm.block_size, help=f"nodes per block (default: {sbm.block_size})")
    synth.add_argument("--p-in", type=float, default=sbm.p_in, help=f"edge probability inside a block (default: {sbm.p_in})")
    synth.add_argument("--p-out", type=float, default=sbm.p_out, help=f"edge probability across blocks (default: {sbm.p_out})")
    synth.add_argument("--graph-seed", type=int, default=sbm.graph_seed, help=f"generator seed (default: {sbm.graph_seed})")

    grid = add("grid", "run the article-method x aggregator x operator x pooling ablation")
    grid.add_argument("--methods", default=None,
                      help=f"comma-separated subset of {','.join(ARTICLE_METHODS)} (default: all)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with the explicitly given flags"""
    overrides: Dict[str, Any] = {n: getattr(args, n) for n in RunConfig.model_fields if hasattr(args, n)}
    return RunConfig.load(getattr(args, "config", None), overrides)


def _sbm_config(args: argparse.Namespace, cfg: RunConfig) -> SbmConfig:
    values = dict(
        blocks=args.blocks, block_size=args.block_size, p_in=args.p_in, p_out=args.p_out, graph_seed=args.graph_seed,
    )
    if "interest_dim" in cfg.model_fields_set:
        values["interest_dim"] = cfg.interest_dim
    return SbmConfig(**values)


def dispatch(args: argparse.Namespace) -> int:
    """Run the parsed command; returns the exit code"""
    command = args.command
    if command == "recommend" and args.k < 1:
        args.parser.error(f"-k must be >= 1, got {args.k}")
    methods = None
    if command == "grid" and args.methods:
        methods = [m.strip() for m in args.methods.split(",")]
        unknown = sorted(set(methods) - set(ARTICLE_METHODS))
        if unknown:
            args.parser.error(f"unknown article method(s): {', '.join(unknown)}")

    cfg = config_from_args(args)
    runner = PipelineRunner(cfg)
    logger.info("Running %s (seed %d, out %s)", command, cfg.seed, cfg.out_dir)

    if command == "gradcheck":
        runner.gradcheck(args.inject_fault)
        return 0

    with OutputDirLock(cfg.out_dir):
        if command == "ingest":
            runner.ingest()
        elif command == "gen-synthetic":
            runner.gen_synthetic(_sbm_config(args, cfg))
        elif command == "embed":
            runner.embed()
        elif command == "train":
            runner.train(resume=args.resume)
        elif command == "evaluate":
            runner.evaluate(args.checkpoint)
        elif command == "recommend":
            runner.recommend(args.author, args.k, args.checkpoint)
        elif command == "grid":
            runner.grid(methods)
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args)
