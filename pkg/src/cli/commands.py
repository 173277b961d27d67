"""Command-line subcommands: collect, train-bc, train-rl, eval, report, probe, diversity."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import torch

from src.config.enums import ExecutionMode, InitMode, ResetMode
from src.config.exceptions import ConfigError
from src.config.settings import settings
from src.config.train_config import TrainConfig, parse_overrides
from src.data.exceptions import DatasetError
from src.data.models import OfflineDataset
from src.data.storage import load_dataset, save_dataset
from src.envs.registry import ENV_IDS, get_spec, make_env
from src.envs.recorder import collect_demos
from src.evaluation.experiments import diversity_experiment, value_propagation_probe
from src.evaluation.harness import EvalReport, evaluate
from src.evaluation.report import EVAL_FILE, RUN_FILE, compare_report, load_run
from src.evaluation.exceptions import ReportError
from src.neural.exceptions import CheckpointError
from src.training.exceptions import TrainingError
from src.training.pipeline import (
    Checkpoint,
    check_bc_compatible,
    dataset_env_spec,
    prepare_dataset,
    train_bc,
    train_offline_rl,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

CONFIG_SNAPSHOT = "config.cfg"
DATASET_FILE = "dataset.jsonl"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class UsageError(Exception):
    """Bad command line: unknown flag, missing argument or occupied output directory."""
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def setup_logging(run_dir: Optional[Path] = None) -> None:
    """Log to stdout and, when a run directory is known, to its log file."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if run_dir is not None:
        handlers.insert(0, logging.FileHandler(run_dir / settings.log_file, encoding="utf-8"))
    logging.basicConfig(format=LOG_FORMAT, level=settings.log_level.upper(), handlers=handlers, force=True)


def prepare_run_dir(out: Optional[str], command: str, force: bool) -> Path:
    """Create the run directory; an existing non-empty one needs --force."""
    run_dir = Path(out) if out else settings.output_root / command
    if run_dir.exists() and any(run_dir.iterdir()) and not force:
        raise UsageError(f"output directory {run_dir} is not empty (use --force to reuse it)")
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def load_config(path: Optional[str], overrides: Optional[Sequence[str]]) -> TrainConfig:
    base = TrainConfig.from_file(path) if path else TrainConfig()
    return base.with_overrides(parse_overrides(overrides)) if overrides else base


def write_run_info(run_dir: Path, command: str, config: Optional[TrainConfig], env_id: str,
                   extra: Optional[Dict[str, Any]] = None) -> None:
    info = {"run_id": run_dir.name, "command": command, "env_id": env_id}
    if config is not None:
        (run_dir / CONFIG_SNAPSHOT).write_text(config.to_text(), encoding="utf-8")
        info.update({"seed": config.seed, "config_hash": config.config_hash()})
    info.update(extra or {})
    (run_dir / RUN_FILE).write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_reports(run_dir: Path, reports: Sequence[EvalReport]) -> None:
    with (run_dir / EVAL_FILE).open("w", encoding="utf-8") as f:
        for report in reports:
            f.write(report.to_line() + "\n")


def _collect_from_config(config: TrainConfig) -> OfflineDataset:
    reset_mode = ResetMode.IND_FIXED if config.init_mode is InitMode.FIXED else ResetMode.IND_RANDOM
    return collect_demos(make_env(config.env_id), config.n_demos, reset_mode, config.upsample_k,
                         seed=config.seed, h=config.h, gamma=config.gamma)


def _load_data(path: str) -> OfflineDataset:
    try:
        return load_dataset(path)
    except OSError as e:
        raise DatasetError(f"cannot read dataset {path}: {e}") from e


def _dataset_for(config: TrainConfig, run_dir: Path, dataset: Optional[OfflineDataset]) -> OfflineDataset:
    if dataset is not None:
        return dataset
    dataset = _collect_from_config(config)
    save_dataset(dataset, run_dir / DATASET_FILE)
    return dataset


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _discount(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {value}")
    return value


# Subcommands

def cmd_collect(args) -> int:
    run_dir = prepare_run_dir(args.out, "collect", args.force)
    setup_logging(run_dir)
    reset_mode = ResetMode(args.init_mode)
    dataset = collect_demos(make_env(args.env), args.episodes, reset_mode, args.upsample,
                            seed=args.seed, h=args.h, gamma=args.gamma)
    path = save_dataset(dataset, run_dir / DATASET_FILE)
    write_run_info(run_dir, "collect", None, args.env, {"seed": args.seed, "dataset": path.name,
                                                         "metadata": dataset.metadata})
    logger.info(f"Dataset with {len(dataset.episodes)} episodes written to {path}")
    return EXIT_OK


def cmd_train_bc(args) -> int:
    config = load_config(args.config, args.override)
    dataset = prepare_dataset(_load_data(args.data), config) if args.data else None
    run_dir = prepare_run_dir(args.out, "train-bc", args.force)
    setup_logging(run_dir)
    dataset = _dataset_for(config, run_dir, dataset)
    write_run_info(run_dir, "train-bc", config, config.env_id)
    checkpoint = train_bc(dataset, config, out_dir=run_dir, evaluate_final=True)
    write_reports(run_dir, checkpoint.reports)
    return EXIT_OK


def cmd_train_rl(args) -> int:
    config = load_config(args.config, args.override)
    dataset = prepare_dataset(_load_data(args.data), config) if args.data else None
    bc = None
    if args.bc:
        bc = Checkpoint.load(args.bc)
        env_spec = dataset_env_spec(dataset) if dataset is not None else get_spec(config.env_id)
        check_bc_compatible(bc, config, env_spec)
    run_dir = prepare_run_dir(args.out, "train-rl", args.force)
    setup_logging(run_dir)
    dataset = _dataset_for(config, run_dir, dataset)
    write_run_info(run_dir, "train-rl", config, config.env_id)
    if bc is None:
        logger.info("No --bc checkpoint given; running behavior cloning first")
        bc = train_bc(dataset, config, out_dir=run_dir / "bc")
    result = train_offline_rl(dataset, bc, config, out_dir=run_dir)
    best = [r for r in result.reports if r.step == result.step]
    write_reports(run_dir, best[-1:] or result.reports[-1:])
    return EXIT_OK


def cmd_eval(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    run_dir = prepare_run_dir(args.out, "eval", args.force)
    setup_logging(run_dir)
    config = checkpoint.config
    env = make_env(checkpoint.env_spec.env_id)
    mode = ExecutionMode(args.execution_mode) if args.execution_mode else config.execution_mode
    trials = args.trials or config.eval_trials
    reports = []
    for region in args.modes:
        reset_mode = ResetMode.OOD if region == "OOD" else ResetMode.IND_RANDOM
        report = evaluate(checkpoint.actor, env, trials, reset_mode, seed=args.seed, execution_mode=mode)
        reports.append(report.model_copy(update={"run_id": run_dir.name, "step": checkpoint.step}))
    write_run_info(run_dir, "eval", config, env.spec.env_id,
                   {"checkpoint": str(args.checkpoint), "stage": checkpoint.stage})
    write_reports(run_dir, reports)
    return EXIT_OK


def cmd_report(args) -> int:
    runs = [load_run(path) for path in args.runs]
    out_dir = prepare_run_dir(args.out, "report", args.force)
    setup_logging(out_dir)
    compare_report(runs, out_dir)
    return EXIT_OK


def cmd_probe(args) -> int:
    config = load_config(args.config, args.override)
    run_dir = prepare_run_dir(args.out, "probe", args.force)
    setup_logging(run_dir)
    write_run_info(run_dir, "probe", config, "chain-sparse")
    result = value_propagation_probe(config, horizons=args.horizons)
    (run_dir / "probe.json").write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_diversity(args) -> int:
    config = load_config(args.config, args.override)
    run_dir = prepare_run_dir(args.out, "diversity", args.force)
    setup_logging(run_dir)
    write_run_info(run_dir, "diversity", config, config.env_id)
    table = diversity_experiment(config)
    (run_dir / "diversity.txt").write_text(table.to_text(), encoding="utf-8")
    (run_dir / "diversity.json").write_text(table.model_dump_json(indent=2) + "\n", encoding="utf-8")
    write_reports(run_dir, table.reports)
    logger.info("\n" + table.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corft", description="Chunked offline RL fine-tuning on toy sparse-reward tasks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        p.add_argument("--out", help="Run directory (default: $CORFT_OUTPUT_ROOT/<command>)")
        p.add_argument("--force", action="store_true", help="Reuse a non-empty output directory")
        if config:
            p.add_argument("--config", help="key = value config file")
            p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                           help="Override one config key (repeatable)")

    p = sub.add_parser("collect", help="Record expert demonstrations")
    p.add_argument("--env", required=True, choices=ENV_IDS)
    p.add_argument("--episodes", type=_positive_int, default=30)
    p.add_argument("--upsample", type=_non_negative_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-mode", default=ResetMode.IND_RANDOM.value, choices=[m.value for m in ResetMode])
    p.add_argument("--h", type=_positive_int, default=4)
    p.add_argument("--gamma", type=_discount, default=0.99)
    common(p, config=False)
    p.set_defaults(handler=cmd_collect)

    p = sub.add_parser("train-bc", help="Stage 1: behavior cloning")
    p.add_argument("--data", help="Dataset file (collected from the config when omitted)")
    common(p)
    p.set_defaults(handler=cmd_train_bc)

    p = sub.add_parser("train-rl", help="Stage 2: chunked offline RL")
    p.add_argument("--data", help="Dataset file (collected from the config when omitted)")
    p.add_argument("--bc", help="BC checkpoint (trained first when omitted)")
    common(p)
    p.set_defaults(handler=cmd_train_rl)

    p = sub.add_parser("eval", help="Evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--modes", nargs="+", default=["IND"], choices=["IND", "OOD"])
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--execution-mode", choices=[m.value for m in ExecutionMode])
    common(p, config=False)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("report", help="CSV and SVG comparison of run directories")
    p.add_argument("--runs", nargs="+", required=True)
    common(p, config=False)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("probe", help="Value-propagation probe on chain-sparse")
    p.add_argument("--horizons", type=_positive_int, nargs="+", default=[1, 2, 4])
    common(p)
    p.set_defaults(handler=cmd_probe)

    p = sub.add_parser("diversity", help="Fixed- vs random-init data diversity experiment")
    common(p)
    p.set_defaults(handler=cmd_diversity)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv and run one subcommand.

    Returns:
        0 on success, 1 on usage or config errors, 2 on dataset errors, 3 on training aborts
    """
    torch.set_num_threads(settings.torch_threads)
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except (UsageError, ConfigError, ReportError) as e:
        logger.error(f"Usage error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, CheckpointError) as e:
        logger.error(f"Data error: {e}")
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as e:
        logger.error(f"Training aborted: {e}")
        print(f"training aborted: {e}", file=sys.stderr)
        return EXIT_TRAINING
