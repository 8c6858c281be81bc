"""Output writers for topologies, traces, datasets, models and reports."""

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .features import LABEL_TO_Y, Y_TO_LABEL
from .mlp import MlpModel, model_to_dict
from .topo_gen import topology_to_dict
from .types import (
    ConfusionMatrix,
    Dataset,
    FlowSpec,
    ImportanceReport,
    RunManifest,
    Topology,
    Trace,
)

# 17 significant digits round-trip every float64 exactly
FLOAT_FORMAT = "%.17g"


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(doc: Any, output_file: str | Path) -> Path:
    """Pretty-print a JSON document, creating parent directories."""
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return output_file


def write_topology(t: Topology, flows: list[FlowSpec] | None, output_file: Path) -> Path:
    return write_json(topology_to_dict(t, flows), Path(output_file))


def write_trace(trace: Trace, output_file: Path) -> Path:
    """Long-format CSV (series, t_s, value) plus a JSON sidecar with the label."""
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    rows = [("rtt_ms", t, v) for t, v in trace.rtt]
    rows += [("cwnd_pkts", t, v) for t, v in trace.cwnd]
    frame = pd.DataFrame(rows, columns=["series", "t_s", "value"])
    frame.to_csv(output_file, index=False, float_format=FLOAT_FORMAT)
    sidecar = {
        "label": trace.label,
        "topology_seed": trace.topology_seed,
        "duration_s": trace.duration_s,
        "metadata": trace.metadata,
    }
    write_json(sidecar, output_file.with_suffix(".json"))
    return output_file


def dataset_to_frame(data: Dataset) -> pd.DataFrame:
    """Feature columns followed by label and topology_seed."""
    frame = pd.DataFrame(data.X, columns=list(data.feature_names))
    frame["label"] = [Y_TO_LABEL[int(y)] for y in data.y]
    frame["topology_seed"] = np.asarray(data.topology_seeds, dtype=np.uint64)
    return frame


def write_dataset(data: Dataset, output_file: Path, split: str | None = None) -> Path:
    """Write one CSV row per example: features, label, topology_seed."""
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)
    dataset_to_frame(data).to_csv(output_file, index=False, float_format=FLOAT_FORMAT)
    if split is not None:
        print(f"Wrote {len(data)} examples to {output_file}")
        _print_statistics(data, split)
    return output_file


def _print_statistics(data: Dataset, split: str) -> None:
    """Print dataset statistics."""
    total = len(data)
    print(f"\n=== Dataset Statistics ({split}) ===")
    if total == 0:
        print("  No examples to report.")
        return

    pie = int(np.sum(data.y == LABEL_TO_Y["Pie"]))
    droptail = total - pie
    topologies = len(np.unique(data.topology_seeds))
    print(f"  Total examples: {total}")
    print(f"  Topologies: {topologies}")
    print(f"  DropTail: {droptail} ({droptail / total * 100:.1f}%)")
    print(f"  Pie: {pie} ({pie / total * 100:.1f}%)")
    print(f"  Features: {data.X.shape[1]}")


def write_model(m: MlpModel, output_file: Path) -> Path:
    """Write a model as JSON."""
    return write_json(model_to_dict(m), Path(output_file))


def manifest_to_dict(manifest: RunManifest) -> dict[str, Any]:
    """JSON form of a run manifest with sorted keys."""
    return {
        "config_hash": manifest.config_hash,
        "data_hash": manifest.data_hash,
        "seeds": [int(s) for s in manifest.seeds],
        "files": dict(sorted(manifest.files.items())),
        "skipped": {str(k): v for k, v in sorted(manifest.skipped.items())},
        "created_at": manifest.created_at,
        "tool_version": manifest.tool_version,
    }


def write_manifest(manifest: RunManifest, output_file: Path) -> Path:
    """Write a run manifest as JSON."""
    return write_json(manifest_to_dict(manifest), Path(output_file))


def write_confusion_matrix(cm: ConfusionMatrix, output_file: Path) -> Path:
    """2x2 CSV: rows are true labels, columns predicted labels."""
    frame = pd.DataFrame(
        [["DropTail", cm.tn, cm.fp], ["Pie", cm.fn, cm.tp]],
        columns=["true_label", "pred_DropTail", "pred_Pie"],
    )
    frame.to_csv(output_file, index=False)
    return Path(output_file)


def write_importance(imp: ImportanceReport, output_file: Path) -> Path:
    """Ranked importance CSV: rank, feature, importance."""
    frame = pd.DataFrame(imp.ranked, columns=["feature", "importance"])
    frame.insert(0, "rank", np.arange(1, len(frame) + 1))
    frame.to_csv(output_file, index=False, float_format=FLOAT_FORMAT)
    return Path(output_file)


def write_cv_scores(scores: dict[str, np.ndarray], output_file: Path) -> Path:
    """One row per fold, one accuracy column per classifier."""
    frame = pd.DataFrame({name: np.asarray(s, dtype=float) for name, s in scores.items()})
    frame.insert(0, "fold", np.arange(1, len(frame) + 1))
    frame.to_csv(output_file, index=False, float_format=FLOAT_FORMAT)
    return Path(output_file)


def format_cv_scores(scores: dict[str, np.ndarray]) -> str:
    """Mean, standard deviation and fold accuracies, one line per classifier."""
    lines = []
    for name, s in scores.items():
        folds = " ".join(f"{v:.3f}" for v in s)
        lines.append(f"  {name}: mean {np.mean(s):.4f} (sd {np.std(s):.4f}) folds [{folds}]")
    return "\n".join(lines) + "\n"


def format_summary(cm: ConfusionMatrix, imp: ImportanceReport, top: int = 10) -> str:
    lines = [
        f"examples: {cm.total}",
        f"accuracy: {cm.accuracy:.4f}",
        f"droptail_accuracy: {cm.droptail_accuracy:.4f}",
        f"pie_accuracy: {cm.pie_accuracy:.4f}",
        f"confusion: tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}",
    ]
    if imp.ranked and top > 0:
        lines.append(f"top {min(top, len(imp.ranked))} features:")
    for rank, (name, value) in enumerate(imp.ranked[:top], start=1):
        lines.append(f"  {rank:2d}. {name} {value:.4f}")
    return "\n".join(lines) + "\n"


def write_summary(cm: ConfusionMatrix, imp: ImportanceReport, output_file: Path) -> Path:
    Path(output_file).write_text(format_summary(cm, imp), encoding="utf-8")
    return Path(output_file)
