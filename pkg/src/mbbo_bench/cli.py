"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data or configuration error,
4 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .agents import AGENT_KINDS, CheckpointError, load_checkpoint
from .metrics import DataError, aei, mgd, mte
from .optimizers import CLASSIC
from .testsuite.problems import DIFFICULTIES, SUITE_SIZE, SUITES, split_indices
from .workflow import ConfigError, ExperimentConfig, MissingCheckpointError, load_config, run_experiment, run_seed
from .workflow.config import parse_key_values
from .workflow.experiment import _load_records, make_clock
from .workflow.logger import REPORT_FILES, fmt_sci, read_aei
from .workflow.tester import fill_unknown_optima, run_learned
from .workflow.trainer import read_validation, trainer_train
from .testsuite import split_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

# flag -> (config field, help); defaults come from ExperimentConfig
CONFIG_FLAGS = {
    "--problem-type": ("problem_type", f"test suite, one of {{{', '.join(SUITES)}}} (default synthetic)"),
    "--dim": ("dim", "problem dimension (default 10; docking is always 12)"),
    "--difficulty": ("difficulty", "train/test split, one of {easy, difficult} (default easy)"),
    "--max-learning-steps": ("max_learning_steps", "learning steps M (default 1500000)"),
    "--test-runs": ("test_runs", "test runs N per problem (default 51)"),
    "--max-fes": ("max_fes", "evaluation budget per run (default 20000; 1000 for protein-docking)"),
    "--seed": ("seed", "master seed (default 0)"),
    "--instance-seed": ("instance_seed", "seed of the problem instances (default 0)"),
    "--agent": ("agent", f"learned agent, one of {{{', '.join(sorted(AGENT_KINDS))}, none}} (default qlearning)"),
    "--backbone": ("backbone", "backbone of the agent (default: the agent's own, de or pso)"),
    "--baselines": ("baselines", "comma-separated classic optimizers (default random-search,de,pso,cma-es)"),
    "--out": ("out", "output directory (default runs/experiment)"),
    "--clock": ("clock", "timing source, wall or logical (default wall; logical makes reports reproducible)"),
    "--gap-reference": ("gap_reference", "reference algorithm of the Gap rows (default cma-es)"),
    "--pop-size": ("pop_size", "population size of every optimizer (default 50)"),
}
CHOICES = {
    "--problem-type": SUITES,
    "--difficulty": DIFFICULTIES,
    "--agent": tuple(sorted(AGENT_KINDS)) + ("none",),
    "--backbone": ("de", "pso"),
    "--clock": ("wall", "logical"),
}
INT_FLAGS = {"--dim", "--max-learning-steps", "--test-runs", "--max-fes", "--seed", "--instance-seed", "--pop-size"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    try:
        return int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with the same keys as the flags; flags win")
    for flag, (_, help_) in CONFIG_FLAGS.items():
        kwargs = {"default": None, "help": help_}
        if flag in CHOICES:
            kwargs["choices"] = CHOICES[flag]
        if flag in INT_FLAGS:
            kwargs["type"] = _positive_int
        p.add_argument(flag, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbbo-bench", description="Meta-black-box optimization benchmark")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("train", "train the agent and write checkpoints"),
                        ("test", "test the roster (after train) and write records"),
                        ("run-experiment", "train, test and log")):
        _add_config_flags(sub.add_parser(name, help=help_))

    p = sub.add_parser("report", help="render the reports of a finished experiment")
    p.add_argument("ledger", help="experiment output directory")

    p = sub.add_parser("mgd", help="meta generalization decay of source checkpoints on target experiments")
    p.add_argument("--source", action="append", required=True, metavar="NAME=CHECKPOINT",
                   help="agent checkpoint trained on suite NAME (repeatable)")
    p.add_argument("--target", action="append", required=True, metavar="NAME=DIR",
                   help="finished experiment on suite NAME (repeatable)")
    p.add_argument("--matrix", help="write the source x target MGD matrix CSV here")

    p = sub.add_parser("mte", help="meta transfer efficiency of a pre-trained checkpoint")
    p.add_argument("--scratch", required=True, help="experiment directory trained from scratch on the target")
    p.add_argument("--pretrained", required=True, help="checkpoint trained on another suite")
    p.add_argument("--out", required=True, help="directory for fine-tune checkpoints and the return curves CSV")

    sub.add_parser("list", help="list suites, splits, agents and baselines")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, str] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_key_values(path.read_text(encoding="utf-8")))
    for flag, (field_name, _) in CONFIG_FLAGS.items():
        v = getattr(args, field_name)
        if v is not None:
            values[flag[2:]] = str(v)
    return ExperimentConfig.from_mapping(values).validate()


def parse_args(argv: list[str]):
    """``(namespace, config)``; ``config`` is None for subcommands that take none."""
    if not argv:
        raise UsageError("mbbo-bench: a subcommand is required")
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args) if args.command in ("train", "test", "run-experiment") else None
    return args, cfg


# -- subcommands ---------------------------------------------------------------


def cmd_workflow(args, cfg: ExperimentConfig) -> int:
    until = {"train": "train", "test": "test", "run-experiment": "log"}[args.command]
    if args.command == "test" and cfg.agent is not None and not (Path(cfg.out) / "phases" / "train.done").is_file():
        raise MissingCheckpointError(f"no trained {cfg.agent_name} in {cfg.out}; run 'train' first")
    ledger = run_experiment(cfg, until=until)
    print(f"{args.command}: done -> {ledger.out}")
    if ledger.best_checkpoint:
        print(f"best checkpoint: {ledger.best_checkpoint}")
    if until == "log":
        for name, path in ledger.reports.items():
            print(f"  {name}: {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = Path(args.ledger) / "reports"
    missing = [f for f in REPORT_FILES if not (reports / f).is_file()]
    if missing:
        raise DataError(f"{reports} lacks {', '.join(missing)}; 'run-experiment' writes {', '.join(REPORT_FILES)}")
    print((reports / "perf_table.md").read_text(encoding="utf-8"))
    print("Wall time")
    with open(reports / "walltime.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    print("| Algorithm | mean T2 (s) | mean T1 (s) | complexity Z |")
    print("|---|---|---|---|")
    for r in rows:
        z = fmt_sci(float(r["mean_z_com"])) if r["mean_z_com"] else "n/a"
        print(f"| {r['algorithm']} | {fmt_sci(float(r['mean_t2_s']))} | {fmt_sci(float(r['mean_t1_s']))} | {z} |")
    print()
    print("AEI (dispersion = std of per-problem scores)")
    print("| Algorithm | AEI | dispersion |")
    print("|---|---|---|")
    with open(reports / "aei.csv", newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            if r["problem"] == "overall":
                print(f"| {r['algorithm']} | {fmt_sci(float(r['score']))} | {fmt_sci(float(r['dispersion']))} |")
    return EXIT_OK


def _named(items: list[str], what: str) -> list[tuple[str, Path]]:
    out = []
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"{what} must look like NAME=PATH, got {item!r}")
        out.append((name, Path(path)))
    return out


def _experiment(target: Path) -> ExperimentConfig:
    snap = target / "config.snapshot"
    if not snap.is_file():
        raise DataError(f"{target} is not an experiment directory (no config.snapshot); run 'run-experiment' first")
    return load_config(snap)


def mgd_entry(checkpoint: Path, target: Path) -> tuple[float, float, float]:
    """``(AEI_A, AEI_B, MGD)`` of a source checkpoint on a finished target experiment."""
    cfg = _experiment(target)
    aei_path = target / "reports" / "aei.csv"
    if not aei_path.is_file() or not (target / "test" / "records.csv").is_file():
        raise DataError(f"{target} has no test records or AEI report; run 'run-experiment' with "
                        f"--out {target} first")
    scores = read_aei(aei_path)
    if cfg.agent_name not in scores:
        raise DataError(f"{aei_path} has no AEI for {cfg.agent_name}; run 'run-experiment' with an agent first")
    if not checkpoint.is_file():
        raise MissingCheckpointError(f"checkpoint not found: {checkpoint}")
    agent = load_checkpoint(checkpoint)
    if agent.name != cfg.agent_name:
        raise ConfigError(f"{checkpoint} holds {agent.name}, but {target} evaluated {cfg.agent_name}")
    split = split_dataset(cfg.problem_type, cfg.dim, cfg.difficulty, cfg.instance_seed, cfg.max_fes)
    clock = make_clock(cfg.clock)
    records = [run_learned(agent, p, run_seed(cfg.seed, p.key, n), n, cfg.max_fes, clock)
               for p in split.test for n in range(cfg.test_runs)]
    records = fill_unknown_optima(records, split.test)
    rs = [r for r in _load_records(target) if r.algorithm == "random-search"]
    t0 = float((target / "test" / "t0.txt").read_text(encoding="utf-8"))
    aei_a = aei(records, rs, cfg.max_fes, t0).score
    aei_b = scores[cfg.agent_name]
    return aei_a, aei_b, mgd(aei_a, aei_b)


def cmd_mgd(args) -> int:
    sources = _named(args.source, "--source")
    targets = _named(args.target, "--target")
    matrix = {}
    for sname, ckpt in sources:
        for tname, tdir in targets:
            a, b, m = mgd_entry(ckpt, tdir)
            matrix[sname, tname] = m
            print(f"MGD({sname}, {tname}) = {m:.3f}%  (AEI_A = {a!r}, AEI_B = {b!r})")
    if args.matrix:
        with open(args.matrix, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source"] + [t for t, _ in targets])
            for s, _ in sources:
                w.writerow([s] + [repr(matrix[s, t]) for t, _ in targets])
        print(f"matrix: {args.matrix}")
    return EXIT_OK


def cmd_mte(args) -> int:
    scratch = Path(args.scratch)
    cfg = _experiment(scratch)
    val_path = scratch / "train" / "validation.csv"
    if cfg.agent is None or not val_path.is_file():
        raise MissingCheckpointError(f"{scratch} has no scratch checkpoints; run 'train' there first")
    scratch_hist = [(s, r) for s, r, _ in read_validation(val_path)]
    peak = max(r for _, r in scratch_hist)
    pre = Path(args.pretrained)
    if not pre.is_file():
        raise MissingCheckpointError(f"pretrained checkpoint not found: {pre}")
    agent = load_checkpoint(pre, expected_kind=cfg.agent)
    agent.learning_step = 0
    agent.history = []
    split = split_dataset(cfg.problem_type, cfg.dim, cfg.difficulty, cfg.instance_seed, cfg.max_fes)
    out = Path(args.out)
    interval = scratch_hist[1][0] - scratch_hist[0][0] if len(scratch_hist) > 1 else scratch_hist[0][0]
    log = trainer_train(agent, split.train, cfg.max_learning_steps, cfg.seed, cfg.max_fes, out, make_clock(cfg.clock),
                        interval=max(1, interval), stop_when=lambda r: r >= peak, validate_at_start=True)
    finetune_hist = [(s, r) for s, r, _ in log.checkpoints]
    res = mte(scratch_hist, finetune_hist)
    with open(out / "return_curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("curve", "learning_step", "validation_return"))
        for name, hist in (("scratch", scratch_hist), ("finetune", finetune_hist)):
            for s, r in hist:
                w.writerow((name, s, repr(float(r))))
    print(f"T_scratch = {res.t_scratch}, T_finetune = {res.t_finetune if res.t_finetune is not None else 'never'}")
    print(f"MTE = {res.value:.3f}%")
    if res.transfer_failure:
        print("transfer failure: the fine-tuned agent never reached the scratch peak return")
    print(f"return curves: {out / 'return_curves.csv'}")
    return EXIT_OK


def cmd_list(args) -> int:
    for suite in SUITES:
        print(f"{suite}: {SUITE_SIZE[suite]} problems")
        for d in DIFFICULTIES:
            train, test = split_indices(suite, d)
            print(f"  {d}: train {len(train)}, test {len(test)} -> test ids {_ranges(test)}")
    print("agents: " + ", ".join(f"{k} ({cls.backbone_name} backbone)" for k, cls in sorted(AGENT_KINDS.items())))
    print("baselines: " + ", ".join(sorted(CLASSIC)))
    return EXIT_OK


def _ranges(ids) -> str:
    ids = sorted(ids)
    parts, start = [], ids[0]
    for a, b in zip(ids, ids[1:] + [None]):
        if b != a + 1:
            parts.append(str(start) if start == a else f"{start}-{a}")
            start = b
    return ",".join(parts)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args, cfg = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command in ("train", "test", "run-experiment"):
            return cmd_workflow(args, cfg)
        return {"report": cmd_report, "mgd": cmd_mgd, "mte": cmd_mte, "list": cmd_list}[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
