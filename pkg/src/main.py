"""Command-line entry point for aqmsense."""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from tqdm import tqdm

from .aqm import default_discipline
from .config import (
    ExperimentConfig,
    config_to_dict,
    dump_config,
    load_config,
    load_train_config,
)
from .errors import AqmSenseError, ConfigError, StratificationError
from .features import featurize_many
from .learner import evaluate, permutation_importance, train
from .loader import load_dataset, load_model, load_topology, load_trace
from .model_selection import baseline_candidates, compare_classifiers, random_search
from .netsim import simulate
from .output_writer import (
    format_cv_scores,
    format_summary,
    write_confusion_matrix,
    write_cv_scores,
    write_dataset,
    write_importance,
    write_json,
    write_model,
    write_topology,
    write_trace,
)
from .pipeline import build_dataset, emit_report, pair_counts, run_generalization_test
from .qa_checker import (
    check_leakage,
    check_manifest,
    print_qa_report,
    run_qa_check,
    save_qa_report,
)
from .rng import STREAM_GENERALIZATION, derive_seed
from .topo_gen import generate_scenario
from .types import ImportanceReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_generate(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    out_dir = Path(args.out)
    for seed in range(args.seed, args.seed + args.count):
        t, flows = generate_scenario(seed, cfg.profile)
        path = write_topology(t, flows, out_dir / f"topology_{seed}.json")
        print(f"Wrote topology {seed} ({len(t.nodes)} nodes, {len(t.links)} links) to {path}")


def cmd_simulate(args: argparse.Namespace) -> None:
    t, flows = load_topology(args.topology)
    trace = simulate(t, flows, default_discipline(args.discipline, t), args.duration, args.seed)
    write_trace(trace, Path(args.out))
    print(f"Wrote {len(trace.rtt)} RTT / {len(trace.cwnd)} CWND samples to {args.out}")


def _trace_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    return files


def cmd_featurize(args: argparse.Namespace) -> None:
    files = _trace_files(args.traces)
    data = featurize_many(load_trace(p) for p in tqdm(files, desc="Featurizing"))
    write_dataset(data, Path(args.out), split=Path(args.out).stem)


def cmd_train(args: argparse.Namespace) -> None:
    cfg = load_train_config(args.config) if args.config else None
    model = train(load_dataset(args.data), cfg)
    write_model(model, Path(args.out))
    print(f"Wrote model {model.layer_sizes} to {args.out}")


def cmd_search(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    best, score, trials = random_search(
        load_dataset(args.data),
        cfg.search.space,
        n_evals=args.evals,
        seed=args.seed,
        repeats=args.repeats,
        test_fraction=cfg.search.test_fraction,
        parallelism=cfg.parallelism,
        base=cfg.train,
    )
    print(f"\nBest score: {score:.4f}")
    print(f"Best config: {best}")
    if args.out:
        log = [
            {"index": t.index, "score": t.score, "config": config_to_dict(t.config)}
            for t in trials
        ]
        doc = {"best": config_to_dict(best), "best_score": score, "trials": log}
        write_json(doc, Path(args.out))
        print(f"Wrote trial log to {args.out}")


def cmd_cv(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    scores = compare_classifiers(
        load_dataset(args.data), baseline_candidates(cfg.train), args.folds, args.seed
    )
    print(f"{args.folds}-fold accuracy:")
    print(format_cv_scores(scores), end="")
    if args.out:
        write_cv_scores(scores, Path(args.out))


def cmd_evaluate(args: argparse.Namespace) -> None:
    cm = evaluate(load_model(args.model), load_dataset(args.data), args.threshold)
    print(format_summary(cm, ImportanceReport(ranked=[]), top=0), end="")
    if args.out:
        write_confusion_matrix(cm, Path(args.out))


def cmd_importance(args: argparse.Namespace) -> None:
    imp = permutation_importance(
        load_model(args.model), load_dataset(args.data), args.repeats, args.seed
    )
    for rank, (name, value) in enumerate(imp.ranked[: args.top], start=1):
        print(f"  {rank:2d}. {name} {value:.4f}")
    if args.out:
        write_importance(imp, Path(args.out))


def cmd_config(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    print(dump_config(cfg))


def run_pipeline(cfg: ExperimentConfig, output_path: Path) -> None:
    """End-to-end experiment: dataset, QA, (search), CV, train, evaluate, generalize."""
    print("=" * 60)
    print("aqmsense: bottleneck queue discipline classification")
    print("=" * 60)

    # Step 1: Paired simulations
    print(f"\n[1/8] Building dataset ({cfg.n_topologies} topologies)...")
    train_data, held_out, manifest = build_dataset(cfg, output_path)
    print(f"  Train: {len(train_data)} examples (DropTail/Pie {pair_counts(train_data)})")
    print(f"  Held out: {len(held_out)} examples (DropTail/Pie {pair_counts(held_out)})")
    print(f"  Skipped topologies: {len(manifest.skipped)}")

    # Step 2: QA checks
    print("\n[2/8] Running QA checks...")
    reports = [run_qa_check(train_data, "train"), run_qa_check(held_out, "held_out")]
    reports[0].warnings += check_leakage(train_data, held_out) + check_manifest(manifest)
    for report in reports:
        print_qa_report(report)
    save_qa_report(reports, output_path)

    # Step 3: Hyperparameter search
    train_cfg = cfg.train
    if cfg.search.enabled:
        print(f"\n[3/8] Random search ({cfg.search.n_evals} configs)...")
        train_cfg, score, _ = random_search(
            train_data,
            cfg.search.space,
            n_evals=cfg.search.n_evals,
            seed=cfg.base_seed,
            repeats=cfg.search.repeats,
            test_fraction=cfg.search.test_fraction,
            parallelism=cfg.parallelism,
            base=cfg.train,
        )
        print(f"  Best score {score:.4f}: {train_cfg}")
    else:
        print("\n[3/8] Random search disabled, using configured model")

    # Step 4: Cross-validated comparison against logistic regression
    if cfg.cv_folds:
        print(f"\n[4/8] {cfg.cv_folds}-fold cross-validation...")
        try:
            scores = compare_classifiers(
                train_data, baseline_candidates(train_cfg), cfg.cv_folds, cfg.base_seed
            )
        except StratificationError as exc:
            print(f"  Skipped: {exc}")
        else:
            write_cv_scores(scores, output_path / "cv_scores.csv")
            print(format_cv_scores(scores), end="")
    else:
        print("\n[4/8] Cross-validation disabled")

    # Step 5: Train
    print("\n[5/8] Training...")
    model = train(train_data, train_cfg)
    write_model(model, output_path / "model.json")
    print(f"  Layers {model.layer_sizes}, solver {train_cfg.solver}")

    # Steps 6-7: Held-out evaluation and importance
    if len(held_out):
        print("\n[6/8] Evaluating held-out topologies...")
        cm = evaluate(model, held_out)
        print("\n[7/8] Permutation importance...")
        imp = permutation_importance(model, held_out, cfg.importance_repeats, cfg.base_seed)
        emit_report(cm, imp, output_path / "report")
        print(format_summary(cm, imp), end="")
    else:
        print("\n[6/8] No held-out examples, skipping evaluation")
        print("\n[7/8] No held-out examples, skipping importance")

    # Step 8: Generalization
    if cfg.n_complex > 0:
        print(f"\n[8/8] Generalization test ({cfg.n_complex} complex topologies)...")
        cm_complex = run_generalization_test(
            model,
            cfg.complex_profile,
            cfg.n_complex,
            derive_seed(cfg.base_seed, STREAM_GENERALIZATION),
            train_profile=cfg.profile,
            duration_s=cfg.duration_s,
            parallelism=cfg.parallelism,
        )
        (output_path / "generalization").mkdir(parents=True, exist_ok=True)
        write_confusion_matrix(cm_complex, output_path / "generalization" / "confusion_matrix.csv")
        print(f"  Accuracy: {cm_complex.accuracy:.4f}")
        print(f"  DropTail accuracy: {cm_complex.droptail_accuracy:.4f}")
        print(f"  Pie accuracy: {cm_complex.pie_accuracy:.4f}")
    else:
        print("\n[8/8] Generalization test disabled")

    print("\n" + "=" * 60)
    print("Done!")
    print("=" * 60)


def cmd_pipeline(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    if args.parallelism is not None:
        cfg = dataclasses.replace(cfg, parallelism=args.parallelism).validate()
    run_pipeline(cfg, Path(args.out or cfg.output_dir))


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="aqmsense", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("generate", help="generate random topologies")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--config", help="experiment config JSON (profile)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate one topology under a discipline")
    p.add_argument("--topology", required=True)
    p.add_argument("--discipline", required=True, choices=["droptail", "pie"])
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("featurize", help="turn trace CSVs into a dataset CSV")
    p.add_argument("--traces", nargs="+", required=True, help="trace CSVs or directories")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train a model on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="training config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="randomized hyperparameter search")
    p.add_argument("--data", required=True)
    p.add_argument("--evals", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--config", help="experiment config JSON (search space)")
    p.add_argument("--out", help="write the trial log as JSON")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("cv", help="k-fold accuracy of the MLP and its logistic baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="experiment config JSON (train settings)")
    p.add_argument("--out", help="write the per-fold accuracies as CSV")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("evaluate", help="confusion matrix of a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", help="write the confusion matrix CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", help="write the ranked importance CSV")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("pipeline", help="run the full experiment from one config")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("config", help="print the effective configuration")
    p.add_argument("--dump", action="store_true", help="print defaults as JSON")
    p.add_argument("--config", help="experiment config JSON")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"aqmsense: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AqmSenseError, OSError) as exc:
        print(f"aqmsense: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
