"""Core type definitions for the queue-discipline detection pipeline."""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Literal, NamedTuple

import numpy as np

NodeKind = Literal["Switch", "Host"]
NodeRole = Literal["Source", "Sink", "Interior"]
FlowKind = Literal["Primary", "Auxiliary"]
QueueLabel = Literal["DropTail", "Pie"]
TcpMode = Literal["SlowStart", "CongestionAvoidance"]
TcpSignal = Literal["Ack", "Loss", "Timeout"]
EnqueueVerdict = Literal["Accept", "Drop"]
SolverType = Literal["SGD", "ADAM", "LBFGS"]

LABELS: tuple[QueueLabel, QueueLabel] = ("DropTail", "Pie")


@dataclass(frozen=True)
class Node:
    """A switch or host in a generated topology."""

    id: int
    kind: NodeKind
    role: NodeRole = "Interior"


@dataclass(frozen=True)
class Link:
    """An undirected link; each direction has its own egress queue."""

    a: int
    b: int
    delay_ms: float
    capacity_mbps: float

    def joins(self, u: int, v: int) -> bool:
        return (self.a, self.b) in ((u, v), (v, u))


@dataclass(frozen=True)
class FlowSpec:
    """A long-running TCP flow from src to dst starting at start_s."""

    src: int
    dst: int
    start_s: float = 0.0
    kind: FlowKind = "Auxiliary"


@dataclass
class Topology:
    """A generated network with a designated source-to-sink path."""

    nodes: list[Node]
    links: list[Link]
    path: list[int]  # (s, v1, ..., vn, g)
    n_switches: int
    rng_seed: int
    bottleneck_link: int | None = None  # index into links, set by enforce_bottleneck

    @property
    def source(self) -> int:
        return self.path[0]

    @property
    def sink(self) -> int:
        return self.path[-1]

    def link_index(self, u: int, v: int) -> int:
        """Index of the link joining u and v."""
        for idx, link in enumerate(self.links):
            if link.joins(u, v):
                return idx
        raise KeyError(f"no link between {u} and {v}")

    def path_links(self) -> list[int]:
        """Link indices along the source-to-sink path, in order."""
        return [self.link_index(u, v) for u, v in zip(self.path, self.path[1:])]


@dataclass(frozen=True)
class DropTail:
    """FIFO queue that drops arrivals only when the buffer is full."""

    buffer_pkts: int

    @property
    def label(self) -> QueueLabel:
        return "DropTail"


@dataclass(frozen=True)
class Pie:
    """PIE controller parameters (burst allowance omitted)."""

    buffer_pkts: int
    target_delay_ms: float = 15.0
    alpha: float = 0.125
    beta: float = 1.25
    update_interval_ms: float = 16.0

    @property
    def label(self) -> QueueLabel:
        return "Pie"


QueueDiscipline = DropTail | Pie


@dataclass(frozen=True)
class PieState:
    """Controller state carried between PIE updates."""

    drop_prob: float = 0.0
    qdelay_old_ms: float = 0.0
    last_update_s: float = 0.0
    depart_rate_est: float = 0.0  # packets/s, 0 until a departure is observed


@dataclass(frozen=True)
class TcpState:
    """Reno sender state."""

    cwnd_pkts: float = 1.0
    ssthresh_pkts: float = float("inf")
    in_flight: int = 0
    mode: TcpMode = "SlowStart"
    rto_s: float = 3.0


class EventKind(IntEnum):
    ARRIVAL = 0  # packet reaches the egress queue of its next hop
    DEPARTURE = 1  # packet leaves its last hop and is delivered
    PIE_TIMER = 2
    PROBE_SEND = 3
    PROBE_RETURN = 4
    TIMEOUT = 5
    ACK = 6
    LOSS = 7
    FLOW_START = 8


class Event(NamedTuple):
    """Heap entry; (time_s, seq) is a total order."""

    time_s: float
    seq: int
    kind: EventKind
    payload: Any = None


@dataclass
class Trace:
    """RTT and CWND time series from one simulation run."""

    rtt: list[tuple[float, float]]  # (t_s, rtt_ms)
    cwnd: list[tuple[float, float]]  # (t_s, cwnd_pkts)
    label: QueueLabel
    topology_seed: int
    duration_s: float
    metadata: dict[str, Any] = field(default_factory=dict)


@dataclass
class FeatureVector:
    """72 features (RTT block then CWND block) for one trace."""

    features: np.ndarray
    label: QueueLabel
    topology_seed: int
    feature_names: list[str]


@dataclass
class Dataset:
    """Rows of feature vectors; y is 1 for Pie, 0 for DropTail."""

    X: np.ndarray
    y: np.ndarray
    topology_seeds: np.ndarray
    feature_names: list[str]

    def __len__(self) -> int:
        return int(self.X.shape[0])

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.topology_seeds[idx], self.feature_names)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Pie as the positive class."""

    tp: int  # Pie predicted Pie
    fp: int  # DropTail predicted Pie
    tn: int  # DropTail predicted DropTail
    fn: int  # Pie predicted DropTail

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def pie_accuracy(self) -> float:
        pie = self.tp + self.fn
        return self.tp / pie if pie else 0.0

    @property
    def droptail_accuracy(self) -> float:
        droptail = self.tn + self.fp
        return self.tn / droptail if droptail else 0.0


@dataclass
class ImportanceReport:
    """Features ranked by descending importance."""

    ranked: list[tuple[str, float]]

    def names(self) -> list[str]:
        return [name for name, _ in self.ranked]


@dataclass
class RunManifest:
    """Record of one build_dataset run."""

    config_hash: str
    seeds: list[int]
    data_hash: str = ""  # pairs are reused across runs only while this matches
    files: dict[str, str] = field(default_factory=dict)  # relative path -> sha256
    skipped: dict[int, str] = field(default_factory=dict)  # seed -> reason
    created_at: str = ""
    tool_version: str = ""


@dataclass
class SearchTrial:
    """One sampled configuration and its shuffle-split scores."""

    index: int
    config: Any
    score: float
    split_scores: list[float] = field(default_factory=list)
