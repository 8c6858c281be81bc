"""Quality assurance checker for generated datasets."""

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import LABEL_TO_Y
from .types import Dataset, RunManifest

MAX_SKIP_RATE = 0.05


@dataclass
class QAReport:
    """QA check report."""

    split: str
    total_records: int
    topologies: int
    pie_rate: float
    nonfinite_rows: int = 0
    constant_features: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def run_qa_check(data: Dataset, split: str) -> QAReport:
    """Run QA checks on one split."""
    if len(data) == 0:
        return QAReport(
            split=split,
            total_records=0,
            topologies=0,
            pie_rate=0.0,
            warnings=["No data found"],
        )

    warnings: list[str] = []
    pie = int(np.sum(data.y == LABEL_TO_Y["Pie"]))
    pie_rate = pie / len(data)

    # Q1: pairing integrity
    seeds = Counter(int(s) for s in data.topology_seeds)
    broken = []
    for seed, count in seeds.items():
        labels = set(data.y[data.topology_seeds == np.uint64(seed)].tolist())
        if count != 2 or labels != {0, 1}:
            broken.append(seed)
    if broken:
        warnings.append(f"Q1: {len(broken)} topologies without exactly one DropTail/Pie pair")

    # Q2: class balance
    if pie * 2 != len(data):
        warnings.append(f"Q2: Classes unbalanced: Pie rate {pie_rate:.1%} (expected 50%)")

    # Q3: finite features
    nonfinite = int(np.sum(~np.all(np.isfinite(data.X), axis=1)))
    if nonfinite:
        warnings.append(f"Q3: {nonfinite} rows with NaN or infinite features")

    # Q4: zero-variance features carry no signal
    constant = [
        name for name, column in zip(data.feature_names, data.X.T) if np.ptp(column) == 0
    ]
    if constant and len(data) > 2:
        warnings.append(f"Q4: {len(constant)} constant features")

    return QAReport(
        split=split,
        total_records=len(data),
        topologies=len(seeds),
        pie_rate=pie_rate,
        nonfinite_rows=nonfinite,
        constant_features=constant,
        warnings=warnings,
    )


def check_leakage(train: Dataset, held_out: Dataset) -> list[str]:
    """Q5: no topology may appear on both sides of the split."""
    shared = np.intersect1d(train.topology_seeds, held_out.topology_seeds)
    if shared.size:
        return [f"Q5: {shared.size} topologies appear in both train and held_out"]
    return []


def check_manifest(manifest: RunManifest) -> list[str]:
    """Q6: skipped seeds."""
    if not manifest.seeds:
        return []
    rate = len(manifest.skipped) / len(manifest.seeds)
    if rate > MAX_SKIP_RATE:
        return [f"Q6: {rate:.1%} of topologies skipped (expected <{MAX_SKIP_RATE:.0%})"]
    return []


def print_qa_report(report: QAReport) -> None:
    """Print QA report to stdout."""
    print(f"\n{'=' * 50}")
    print(f"QA Report: {report.split}")
    print(f"{'=' * 50}")
    print(f"Total records: {report.total_records}")
    print(f"Topologies: {report.topologies}")
    print(f"Pie rate: {report.pie_rate:.1%}")

    if report.constant_features:
        print("\nConstant features:")
        for name in report.constant_features:
            print(f"  {name}")

    if report.warnings:
        print("\nWARNINGS:")
        for w in report.warnings:
            print(f"  ! {w}")
    else:
        print("\nNo warnings.")


def save_qa_report(reports: list[QAReport], output_path: Path) -> Path:
    """Save QA reports to JSON."""
    output_file = Path(output_path) / "qa_report.json"
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w") as f:
        json.dump([asdict(r) for r in reports], f, indent=2)

    print(f"\nSaved QA report to {output_file}")
    return output_file
