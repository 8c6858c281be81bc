"""Seeded random topology and flow generation.

A topology is a source-to-sink path of switches. Each path switch gets the
largest connected component of an Erdos-Renyi blob and a handful of extra
hosts. Link parameters are drawn uniformly, auxiliary flows run from random
hosts to the sink, and one path link is rescaled into the single bottleneck.
"""

import dataclasses
import logging
from typing import Any

import networkx as nx
import numpy as np

from .config import ComplexityProfile
from .errors import ConfigError, TopologyError
from .rng import STREAM_BOTTLENECK, STREAM_FLOWS, STREAM_LINKS, STREAM_STRUCTURE, child_rng
from .types import FlowSpec, Link, Node, Topology

logger = logging.getLogger(__name__)

BOTTLENECK_FACTOR = 0.5
AUX_LOAD_WEIGHT = 0.8  # share of an extra auxiliary flow counted against headroom
AUX_START_MAX_S = 2.0


def erdos_renyi(n_p: int, p: float, rng: np.random.Generator) -> nx.Graph:
    """G(n_p, p): each of the n_p(n_p-1)/2 edges present independently with probability p."""
    if n_p < 1:
        raise ConfigError(f"erdos_renyi needs n_p >= 1, got {n_p}")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"edge probability must lie in [0, 1], got {p}")

    g = nx.Graph()
    g.add_nodes_from(range(n_p))
    draws = rng.random(n_p * (n_p - 1) // 2)
    k = 0
    for i in range(n_p):
        for j in range(i + 1, n_p):
            if draws[k] < p:
                g.add_edge(i, j)
            k += 1
    return g


def largest_component(g: nx.Graph) -> nx.Graph:
    """Induced subgraph on the largest component; ties go to the smallest node id."""
    best = max(nx.connected_components(g), key=lambda c: (len(c), -min(c)))
    return g.subgraph(sorted(best)).copy()


def draw_link_parameters(
    pairs: list[tuple[int, int]], rng: np.random.Generator, profile: ComplexityProfile
) -> list[Link]:
    """One link per node pair with uniformly drawn delay and capacity."""
    links = []
    for a, b in pairs:
        delay = float(rng.uniform(*profile.delay_ms))
        capacity = float(rng.uniform(*profile.capacity_mbps))
        links.append(Link(a, b, delay, capacity))
    return links


def _draw_int(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1], endpoint=True))


def gen_topology(seed: int, profile: ComplexityProfile | None = None) -> Topology:
    """Build a connected random topology around a path of n switches."""
    profile = (profile or ComplexityProfile()).validate()
    rng = child_rng(seed, STREAM_STRUCTURE)

    n = _draw_int(rng, profile.switches)
    source, sink = 0, n + 1
    nodes = [Node(source, "Host", "Source")]
    nodes += [Node(v, "Switch") for v in range(1, n + 1)]
    nodes.append(Node(sink, "Host", "Sink"))
    path = list(range(n + 2))
    pairs = list(zip(path, path[1:]))

    next_id = n + 2
    for v in range(1, n + 1):
        n_p = _draw_int(rng, profile.component_nodes)
        p = float(rng.uniform(*profile.edge_prob))
        blob = erdos_renyi(n_p, p, rng)
        kinds = ["Switch" if u < 0.5 else "Host" for u in rng.random(n_p)]

        component = largest_component(blob)
        mapping = {}
        for old in sorted(component.nodes):
            mapping[old] = next_id
            nodes.append(Node(next_id, kinds[old]))
            next_id += 1
        pairs += [(mapping[a], mapping[b]) for a, b in sorted(component.edges)]
        pairs.append((v, mapping[min(component.nodes)]))

        for _ in range(_draw_int(rng, profile.hosts_per_switch)):
            nodes.append(Node(next_id, "Host"))
            pairs.append((v, next_id))
            next_id += 1

    links = draw_link_parameters(pairs, child_rng(seed, STREAM_LINKS), profile)
    return Topology(nodes=nodes, links=links, path=path, n_switches=n, rng_seed=seed)


def to_graph(t: Topology) -> nx.Graph:
    """Undirected networkx view of the nodes and links."""
    g = nx.Graph()
    g.add_nodes_from(n.id for n in t.nodes)
    g.add_edges_from((link.a, link.b) for link in t.links)
    return g


def route(t: Topology, src: int, dst: int, graph: nx.Graph | None = None) -> list[int]:
    """Hop-count shortest path from src to dst as a node list."""
    if src == t.source and dst == t.sink:
        return list(t.path)
    g = graph if graph is not None else to_graph(t)
    try:
        return nx.shortest_path(g, src, dst)
    except (nx.NetworkXNoPath, nx.NodeNotFound) as exc:
        raise TopologyError(f"no route from {src} to {dst}") from exc


def draw_aux_flows(t: Topology, rng: np.random.Generator, n_aux: int) -> list[FlowSpec]:
    """Primary flow plus n_aux auxiliary flows from random interior hosts to the sink."""
    flows = [FlowSpec(t.source, t.sink, 0.0, "Primary")]
    if n_aux <= 0:
        return flows
    candidates = [n.id for n in t.nodes if n.kind == "Host" and n.role == "Interior"]
    if not candidates:
        raise TopologyError("no interior hosts to originate auxiliary flows")
    picks = rng.choice(candidates, size=n_aux, replace=n_aux > len(candidates))
    for src in picks:
        start = float(rng.uniform(0.0, AUX_START_MAX_S))
        flows.append(FlowSpec(int(src), t.sink, start, "Auxiliary"))
    return flows


def assign_links_and_flows(
    t: Topology,
    rng: np.random.Generator,
    n_aux: int,
    profile: ComplexityProfile | None = None,
    flow_rng: np.random.Generator | None = None,
) -> tuple[Topology, list[FlowSpec]]:
    """Draw link delays/capacities from rng and n_aux auxiliary flows from flow_rng.

    Without flow_rng the flows are drawn from rng after the link parameters.
    """
    profile = profile or ComplexityProfile()
    links = draw_link_parameters([(link.a, link.b) for link in t.links], rng, profile)
    flows = draw_aux_flows(t, flow_rng if flow_rng is not None else rng, n_aux)
    return dataclasses.replace(t, links=links), flows


def _aux_routes(t: Topology, flows: list[FlowSpec]) -> list[list[int]]:
    """Link indices along each auxiliary flow's route."""
    graph = to_graph(t)
    routes = []
    for flow in flows:
        if flow.kind != "Auxiliary":
            continue
        hops = route(t, flow.src, flow.dst, graph)
        routes.append([t.link_index(u, v) for u, v in zip(hops, hops[1:])])
    return routes


def fair_share_headroom(capacity_mbps: float, n_aux: int) -> float:
    """Capacity left on a link after AUX_LOAD_WEIGHT of each auxiliary fair share."""
    share = capacity_mbps / (n_aux + 1)
    return capacity_mbps - AUX_LOAD_WEIGHT * n_aux * share


def enforce_bottleneck(
    t: Topology, flows: list[FlowSpec], rng: np.random.Generator
) -> Topology:
    """Rescale one random path link into the unique bottleneck.

    Every other path link keeps its capacity minus AUX_LOAD_WEIGHT of each
    auxiliary flow's fair share there; the chosen link gets half the smallest
    such headroom. Auxiliary flows that never cross the chosen link have their
    access link throttled so that, together with the Primary flow, they cannot
    fill any path link they share with it.
    """
    path_links = t.path_links()
    if len(path_links) < 2:
        raise TopologyError("path needs at least 2 links to place a bottleneck")

    chosen = path_links[int(rng.integers(len(path_links)))]
    routes = _aux_routes(t, flows)
    on_path = set(path_links)

    aux_load = [0] * len(t.links)
    for links_used in routes:
        for idx in links_used:
            aux_load[idx] += 1

    headroom = [
        fair_share_headroom(t.links[idx].capacity_mbps, aux_load[idx])
        for idx in path_links
        if idx != chosen
    ]
    capacity = BOTTLENECK_FACTOR * min(headroom)

    links = list(t.links)
    links[chosen] = dataclasses.replace(links[chosen], capacity_mbps=capacity)

    bypassing = [r for r in routes if chosen not in r]
    shared_load = [0] * len(t.links)
    for links_used in bypassing:
        for idx in links_used:
            shared_load[idx] += 1
    access_limit: dict[int, float] = {}
    for links_used in bypassing:
        shared = [idx for idx in links_used if idx in on_path]
        if not shared:
            continue
        limit = min(
            AUX_LOAD_WEIGHT * (t.links[idx].capacity_mbps - capacity) / shared_load[idx]
            for idx in shared
        )
        access = links_used[0]
        access_limit[access] = access_limit.get(access, 0.0) + limit
    for idx, limit in access_limit.items():
        if limit < links[idx].capacity_mbps:
            links[idx] = dataclasses.replace(links[idx], capacity_mbps=limit)

    logger.debug(
        "seed %d: bottleneck link %d at %.2f Mbps, %d access links throttled",
        t.rng_seed,
        chosen,
        capacity,
        sum(links[i] != t.links[i] for i in access_limit),
    )
    return dataclasses.replace(t, links=links, bottleneck_link=chosen)


def generate_scenario(
    seed: int, profile: ComplexityProfile | None = None, n_aux: int | None = None
) -> tuple[Topology, list[FlowSpec]]:
    """Topology plus flows with an enforced bottleneck, pure in (seed, profile, n_aux)."""
    profile = (profile or ComplexityProfile()).validate()
    t = gen_topology(seed, profile)
    flow_rng = child_rng(seed, STREAM_FLOWS)
    if n_aux is None:
        n_aux = _draw_int(flow_rng, profile.aux_flows)
    t, flows = assign_links_and_flows(
        t, child_rng(seed, STREAM_LINKS), n_aux, profile, flow_rng=flow_rng
    )
    t = enforce_bottleneck(t, flows, child_rng(seed, STREAM_BOTTLENECK))
    return t, flows


def is_bottleneck(t: Topology, idx: int) -> bool:
    """Whether path link idx has at most half the capacity of every other path link."""
    path_links = t.path_links()
    others = [t.links[i].capacity_mbps for i in path_links if i != idx]
    return idx in path_links and t.links[idx].capacity_mbps <= BOTTLENECK_FACTOR * min(others)


def topology_to_dict(t: Topology, flows: list[FlowSpec] | None = None) -> dict[str, Any]:
    """JSON document for a topology and, when given, its flow set."""
    doc: dict[str, Any] = {
        "nodes": [{"id": n.id, "kind": n.kind, "role": n.role} for n in t.nodes],
        "links": [
            {"a": lk.a, "b": lk.b, "delay_ms": lk.delay_ms, "capacity_mbps": lk.capacity_mbps}
            for lk in t.links
        ],
        "path": list(t.path),
        "bottleneck_link": t.bottleneck_link,
        "n_switches": t.n_switches,
        "seed": t.rng_seed,
    }
    if flows is not None:
        doc["flows"] = [
            {"src": f.src, "dst": f.dst, "start_s": f.start_s, "kind": f.kind} for f in flows
        ]
    return doc


def topology_from_dict(doc: dict[str, Any]) -> tuple[Topology, list[FlowSpec]]:
    """Inverse of topology_to_dict."""
    try:
        t = Topology(
            nodes=[Node(n["id"], n["kind"], n["role"]) for n in doc["nodes"]],
            links=[
                Link(lk["a"], lk["b"], float(lk["delay_ms"]), float(lk["capacity_mbps"]))
                for lk in doc["links"]
            ],
            path=list(doc["path"]),
            n_switches=int(doc.get("n_switches", len(doc["path"]) - 2)),
            rng_seed=int(doc["seed"]),
            bottleneck_link=doc.get("bottleneck_link"),
        )
        flows = [
            FlowSpec(f["src"], f["dst"], float(f["start_s"]), f["kind"])
            for f in doc.get("flows", [])
        ]
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"malformed topology document: {exc}") from exc
    if not flows:
        flows = [FlowSpec(t.source, t.sink, 0.0, "Primary")]
    return t, flows
