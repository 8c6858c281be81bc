"""Paired dataset generation, generalization testing and report emission."""

import functools
import logging
import multiprocessing
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from tqdm import tqdm

from . import __version__
from .aqm import default_discipline
from .config import ComplexityProfile, ExperimentConfig, config_hash, data_hash
from .errors import AqmSenseError, ConfigError, InsufficientDataError, MalformedFileError
from .features import concat_datasets, featurize, vectors_to_dataset
from .learner import evaluate
from .loader import load_dataset, load_manifest
from .mlp import MlpModel
from .netsim import simulate
from .output_writer import (
    file_sha256,
    write_confusion_matrix,
    write_dataset,
    write_importance,
    write_manifest,
    write_summary,
    write_topology,
)
from .rng import STREAM_PIPELINE, STREAM_SIMULATION, STREAM_SPLIT, child_rng, derive_seed
from .topo_gen import generate_scenario
from .types import LABELS, ConfusionMatrix, Dataset, ImportanceReport, RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

PairOutcome = tuple[int, Dataset | None, str | None]


def scenario_seeds(base_seed: int, n: int) -> list[int]:
    """Topology seeds for a run; a longer run extends a shorter one."""
    return [derive_seed(base_seed, STREAM_PIPELINE, i) for i in range(n)]


def simulate_pair(seed: int, profile: ComplexityProfile, duration_s: float) -> Dataset:
    """Simulate one scenario under DropTail then Pie; two labelled rows.

    Both runs share the topology, flow set and simulation seed, so they
    differ only in the bottleneck discipline.
    """
    t, flows = generate_scenario(seed, profile)
    sim_seed = derive_seed(seed, STREAM_SIMULATION)
    vectors = [
        featurize(simulate(t, flows, default_discipline(label, t), duration_s, sim_seed))
        for label in LABELS
    ]
    return vectors_to_dataset(vectors)


def _pair_relpath(seed: int) -> str:
    return f"pairs/{seed}.csv"


def _pair_job(
    seed: int, profile: ComplexityProfile, duration_s: float, out_dir: Path | None
) -> PairOutcome:
    try:
        pair = simulate_pair(seed, profile, duration_s)
    except AqmSenseError as exc:
        return seed, None, f"{type(exc).__name__}: {exc}"
    if out_dir is not None:
        t, flows = generate_scenario(seed, profile)
        write_topology(t, flows, out_dir / "topologies" / f"{seed}.json")
        write_dataset(pair, out_dir / _pair_relpath(seed))
    return seed, pair, None


def run_pairs(
    seeds: list[int],
    profile: ComplexityProfile,
    duration_s: float,
    parallelism: int = 1,
    out_dir: Path | None = None,
    desc: str = "Simulating",
) -> list[PairOutcome]:
    """Run _pair_job for every seed; results follow seed order."""
    job = functools.partial(_pair_job, profile=profile, duration_s=duration_s, out_dir=out_dir)
    if parallelism > 1 and len(seeds) > 1:
        with multiprocessing.Pool(parallelism) as pool:
            return list(tqdm(pool.imap(job, seeds), total=len(seeds), desc=desc))
    return [job(seed) for seed in tqdm(seeds, desc=desc)]


def _previous_manifest(out_dir: Path, digest: str) -> RunManifest | None:
    """The manifest of an earlier run whose pairs were simulated with the same settings."""
    path = out_dir / MANIFEST_NAME
    if not path.exists():
        return None
    try:
        previous = load_manifest(path)
    except MalformedFileError as exc:
        logger.warning("ignoring unreadable manifest: %s", exc)
        return None
    return previous if previous.data_hash == digest else None


def _reusable(out_dir: Path, previous: RunManifest | None, seed: int) -> bool:
    rel = _pair_relpath(seed)
    path = out_dir / rel
    return (
        previous is not None
        and rel in previous.files
        and path.exists()
        and file_sha256(path) == previous.files[rel]
    )


def split_pairs(
    pairs: list[tuple[int, Dataset]], held_out_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Hold out round(fraction * pairs) whole topology pairs."""
    n_held = round(held_out_fraction * len(pairs))
    rng = child_rng(seed, STREAM_SPLIT)
    held = set(rng.choice(len(pairs), size=n_held, replace=False).tolist()) if n_held else set()
    train = concat_datasets([p for i, (_, p) in enumerate(pairs) if i not in held])
    held_out = concat_datasets([p for i, (_, p) in enumerate(pairs) if i in held])
    return train, held_out


def build_dataset(
    cfg: ExperimentConfig, out_dir: str | Path | None = None
) -> tuple[Dataset, Dataset, RunManifest]:
    """Simulate every topology twice (DropTail, Pie) and split by topology pair.

    With out_dir set, per-pair files and a manifest are written. A rerun whose
    profile, duration, base seed and tool version match reuses every pair file
    whose hash matches the manifest and simulates only the missing seeds.
    """
    cfg.validate()
    digest = data_hash(cfg)
    seeds = scenario_seeds(cfg.base_seed, cfg.n_topologies)
    out = Path(out_dir) if out_dir is not None else None

    previous = _previous_manifest(out, digest) if out is not None else None
    reused: dict[int, Dataset] = {}
    if out is not None:
        for seed in seeds:
            if _reusable(out, previous, seed):
                reused[seed] = load_dataset(out / _pair_relpath(seed))
        if reused:
            logger.info("reusing %d of %d pairs from %s", len(reused), len(seeds), out)

    todo = [s for s in seeds if s not in reused]
    outcomes = {
        seed: (pair, error)
        for seed, pair, error in run_pairs(
            todo, cfg.profile, cfg.duration_s, cfg.parallelism, out, desc="Simulating pairs"
        )
    }

    pairs: list[tuple[int, Dataset]] = []
    skipped: dict[int, str] = {}
    for seed in seeds:
        if seed in reused:
            pairs.append((seed, reused[seed]))
            continue
        pair, error = outcomes[seed]
        if pair is None:
            logger.warning("seed %d skipped: %s", seed, error)
            skipped[seed] = error or "unknown error"
        else:
            pairs.append((seed, pair))
    if not pairs:
        raise InsufficientDataError(f"all {len(seeds)} topologies failed to simulate")

    train, held_out = split_pairs(pairs, cfg.held_out_fraction, cfg.base_seed)
    manifest = RunManifest(
        config_hash=config_hash(cfg),
        seeds=seeds,
        data_hash=digest,
        skipped=skipped,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        tool_version=__version__,
    )
    if out is not None:
        write_dataset(train, out / "train.csv")
        write_dataset(held_out, out / "held_out.csv")
        rels = [_pair_relpath(s) for s, _ in pairs] + [f"topologies/{s}.json" for s, _ in pairs]
        for rel in [*rels, "train.csv", "held_out.csv"]:
            if (out / rel).exists():
                manifest.files[rel] = file_sha256(out / rel)
        write_manifest(manifest, out / MANIFEST_NAME)

    logger.info(
        "built %d train / %d held-out examples, %d seeds skipped",
        len(train),
        len(held_out),
        len(skipped),
    )
    return train, held_out, manifest


def run_generalization_test(
    model: MlpModel,
    complex_profile: ComplexityProfile,
    n: int,
    seed: int,
    train_profile: ComplexityProfile | None = None,
    duration_s: float = 20.0,
    parallelism: int = 1,
) -> ConfusionMatrix:
    """Evaluate model on n fresh paired topologies drawn from a larger profile."""
    train_profile = train_profile or ComplexityProfile()
    if not complex_profile.validate().dominates(train_profile):
        raise ConfigError("complex profile must strictly exceed the training profile")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")

    outcomes = run_pairs(
        scenario_seeds(seed, n), complex_profile, duration_s, parallelism, desc="Complex pairs"
    )
    pairs = [pair for _, pair, _ in outcomes if pair is not None]
    for s, _, error in outcomes:
        if error is not None:
            logger.warning("complex seed %d skipped: %s", s, error)
    if not pairs:
        raise InsufficientDataError("no complex topology simulated successfully")
    return evaluate(model, concat_datasets(pairs))


def emit_report(cm: ConfusionMatrix, imp: ImportanceReport, out_dir: str | Path) -> list[Path]:
    """Write confusion_matrix.csv, importance.csv and summary.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        write_confusion_matrix(cm, out / "confusion_matrix.csv"),
        write_importance(imp, out / "importance.csv"),
        write_summary(cm, imp, out / "summary.txt"),
    ]


def pair_counts(data: Dataset) -> tuple[int, int]:
    """(DropTail, Pie) example counts."""
    pie = int(np.sum(data.y == 1))
    return len(data) - pie, pie
