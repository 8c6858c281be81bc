"""Shared fixtures: hand-built topologies and synthetic datasets."""

import numpy as np
import pytest

from src.features import FEATURE_NAMES, N_FEATURES
from src.types import Dataset, FlowSpec, Link, Node, Topology


def make_line_topology(
    delays_ms: list[float],
    capacities_mbps: list[float],
    bottleneck: int | None = None,
    seed: int = 7,
) -> Topology:
    """Source, len(delays_ms) - 1 switches and sink in a line, plus one extra host."""
    n_links = len(delays_ms)
    n = n_links - 1
    nodes = [Node(0, "Host", "Source")]
    nodes += [Node(v, "Switch") for v in range(1, n + 1)]
    nodes.append(Node(n + 1, "Host", "Sink"))
    nodes.append(Node(n + 2, "Host"))
    links = [
        Link(i, i + 1, float(d), float(c))
        for i, (d, c) in enumerate(zip(delays_ms, capacities_mbps))
    ]
    # extra host hangs off the first switch
    links.append(Link(1, n + 2, 5.0, 100.0))
    return Topology(
        nodes=nodes,
        links=links,
        path=list(range(n + 2)),
        n_switches=n,
        rng_seed=seed,
        bottleneck_link=bottleneck,
    )


@pytest.fixture
def line_topology() -> Topology:
    """Three path links (10, 20, 30 ms) with the 5 Mbps middle link as bottleneck."""
    return make_line_topology([10.0, 20.0, 30.0], [10.0, 5.0, 10.0], bottleneck=1)


@pytest.fixture
def primary_only(line_topology: Topology) -> list[FlowSpec]:
    return [FlowSpec(line_topology.source, line_topology.sink, 0.0, "Primary")]


def make_dataset(
    n_pairs: int = 40,
    seed: int = 0,
    informative: int = 2,
    noise: float = 0.0,
    separable: bool = True,
) -> Dataset:
    """Paired rows where the label is the sign of the sum of the first columns.

    Every topology seed carries one DropTail and one Pie row.
    """
    rng = np.random.default_rng(seed)
    n = 2 * n_pairs
    y = np.tile([0, 1], n_pairs)
    X = np.zeros((n, N_FEATURES))
    signal = np.where(y == 1, 1.0, -1.0)
    for j in range(informative):
        base = signal * (1.0 + rng.random(n)) if separable else signal + rng.normal(0, 2.0, n)
        X[:, j] = base + noise * rng.normal(size=n)
    seeds = np.repeat(np.arange(1000, 1000 + n_pairs, dtype=np.uint64), 2)
    return Dataset(X=X, y=y, topology_seeds=seeds, feature_names=list(FEATURE_NAMES))


@pytest.fixture
def separable_dataset() -> Dataset:
    return make_dataset()
