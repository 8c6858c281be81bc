"""Readers for the files written by output_writer."""

import json
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .errors import AqmSenseError, MalformedFileError, ShapeError
from .features import FEATURE_NAMES, LABEL_TO_Y
from .mlp import MlpModel, model_from_dict
from .topo_gen import topology_from_dict
from .types import Dataset, FlowSpec, RunManifest, Topology, Trace


@contextmanager
def _decoding(path: str | Path) -> Iterator[None]:
    """Re-raise decode errors and missing fields as MalformedFileError."""
    try:
        yield
    except AqmSenseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFileError(f"{path}: {type(exc).__name__}: {exc}") from exc


def _read_json(path: str | Path) -> Any:
    with _decoding(path), open(path, encoding="utf-8") as f:
        return json.load(f)


def load_topology(path: str | Path) -> tuple[Topology, list[FlowSpec]]:
    """Load a topology JSON and its flow set (Primary only when absent)."""
    doc = _read_json(path)
    with _decoding(path):
        return topology_from_dict(doc)


def load_trace(csv_path: str | Path) -> Trace:
    """Load a trace CSV and the JSON sidecar next to it."""
    csv_path = Path(csv_path)
    sidecar = _read_json(csv_path.with_suffix(".json"))
    with _decoding(csv_path):
        frame = pd.read_csv(csv_path, float_precision="round_trip")

        def series(name: str) -> list[tuple[float, float]]:
            rows = frame[frame["series"] == name]
            return [(float(t), float(v)) for t, v in zip(rows["t_s"], rows["value"])]

        return Trace(
            rtt=series("rtt_ms"),
            cwnd=series("cwnd_pkts"),
            label=sidecar["label"],
            topology_seed=int(sidecar["topology_seed"]),
            duration_s=float(sidecar["duration_s"]),
            metadata=sidecar.get("metadata", {}),
        )


def frame_to_dataset(frame: pd.DataFrame) -> Dataset:
    """Dataset from a frame holding the 72 feature columns and a label column."""
    missing = [name for name in FEATURE_NAMES if name not in frame.columns]
    if missing or "label" not in frame.columns:
        raise ShapeError(f"dataset is missing columns: {missing or ['label']}")
    unknown = set(frame["label"]) - set(LABEL_TO_Y)
    if unknown:
        raise ShapeError(f"unknown labels in dataset: {sorted(unknown)}")
    seeds = (
        frame["topology_seed"].to_numpy(dtype=np.uint64)
        if "topology_seed" in frame.columns
        else np.zeros(len(frame), dtype=np.uint64)
    )
    return Dataset(
        X=frame[FEATURE_NAMES].to_numpy(dtype=float),
        y=frame["label"].map(LABEL_TO_Y).to_numpy(dtype=int),
        topology_seeds=seeds,
        feature_names=list(FEATURE_NAMES),
    )


def load_dataset(csv_path: str | Path) -> Dataset:
    """Load a dataset CSV with the 72 feature columns, label and topology_seed."""
    with _decoding(csv_path):
        frame = pd.read_csv(
            csv_path,
            dtype={"label": str, "topology_seed": np.uint64},
            float_precision="round_trip",
        )
        return frame_to_dataset(frame)


def load_model(path: str | Path) -> MlpModel:
    """Load a model JSON written by write_model."""
    doc = _read_json(path)
    with _decoding(path):
        return model_from_dict(doc)


def load_manifest(path: str | Path) -> RunManifest:
    doc = _read_json(path)
    with _decoding(path):
        return RunManifest(
            config_hash=doc["config_hash"],
            seeds=[int(s) for s in doc["seeds"]],
            data_hash=doc.get("data_hash", ""),
            files=dict(doc.get("files", {})),
            skipped={int(k): v for k, v in doc.get("skipped", {}).items()},
            created_at=doc.get("created_at", ""),
            tool_version=doc.get("tool_version", ""),
        )
