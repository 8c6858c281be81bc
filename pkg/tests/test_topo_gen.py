import networkx as nx
import numpy as np
import pytest
from conftest import make_line_topology
from scipy import stats

from src.config import ComplexityProfile
from src.errors import ConfigError, TopologyError
from src.rng import STREAM_FLOWS, child_rng
from src.topo_gen import (
    assign_links_and_flows,
    draw_aux_flows,
    enforce_bottleneck,
    erdos_renyi,
    fair_share_headroom,
    gen_topology,
    generate_scenario,
    is_bottleneck,
    largest_component,
    route,
    to_graph,
    topology_from_dict,
    topology_to_dict,
)
from src.types import FlowSpec, Node


def test_same_seed_same_topology():
    assert topology_to_dict(gen_topology(42)) == topology_to_dict(gen_topology(42))


def test_generate_scenario_is_deterministic():
    t1, flows1 = generate_scenario(42)
    t2, flows2 = generate_scenario(42)
    assert topology_to_dict(t1, flows1) == topology_to_dict(t2, flows2)


def test_different_seeds_differ():
    assert topology_to_dict(gen_topology(1)) != topology_to_dict(gen_topology(2))


def test_path_shape():
    for seed in range(200):
        t = gen_topology(seed)
        assert 3 <= t.n_switches <= 5
        assert len(t.path) == t.n_switches + 2
        kinds = {n.id: n for n in t.nodes}
        assert kinds[t.source].kind == "Host" and kinds[t.source].role == "Source"
        assert kinds[t.sink].kind == "Host" and kinds[t.sink].role == "Sink"
        assert all(kinds[v].kind == "Switch" for v in t.path[1:-1])
        assert sum(n.role == "Source" for n in t.nodes) == 1
        assert sum(n.role == "Sink" for n in t.nodes) == 1


def test_each_path_switch_gets_blob_and_hosts():
    for seed in range(200):
        t = gen_topology(seed)
        g = to_graph(t)
        on_path = set(t.path)
        for v in t.path[1:-1]:
            extra = [u for u in g.neighbors(v) if u not in on_path]
            # one component attachment plus h in [1, 5] hosts
            assert 2 <= len(extra) <= 6


def test_topologies_are_connected():
    for seed in range(200):
        assert nx.is_connected(to_graph(gen_topology(seed)))


def test_no_duplicate_or_self_links():
    for seed in range(100):
        t = gen_topology(seed)
        pairs = [frozenset((lk.a, lk.b)) for lk in t.links]
        assert all(lk.a != lk.b for lk in t.links)
        assert len(pairs) == len(set(pairs))


def test_invalid_profile_raises():
    with pytest.raises(ConfigError):
        gen_topology(0, ComplexityProfile(switches=(5, 3)))


def test_erdos_renyi_extremes():
    rng = np.random.default_rng(0)
    assert erdos_renyi(5, 0.0, rng).number_of_edges() == 0
    assert erdos_renyi(5, 1.0, rng).number_of_edges() == 10
    assert erdos_renyi(1, 0.5, rng).number_of_nodes() == 1


def test_erdos_renyi_rejects_bad_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        erdos_renyi(0, 0.5, rng)
    with pytest.raises(ConfigError):
        erdos_renyi(3, 1.5, rng)


def test_erdos_renyi_mean_edge_count():
    rng = np.random.default_rng(123)
    counts = np.array([erdos_renyi(6, 0.5, rng).number_of_edges() for _ in range(10_000)])
    # binomial(15, 0.5): sd of the mean is sqrt(3.75 / 10000)
    assert abs(counts.mean() - 7.5) <= 3 * np.sqrt(3.75 / 10_000)


def test_largest_component_of_connected_graph():
    g = nx.path_graph(4)
    assert set(largest_component(g).nodes) == {0, 1, 2, 3}


def test_largest_component_tie_break():
    g = nx.empty_graph(4)
    assert set(largest_component(g).nodes) == {0}


def test_largest_component_picks_biggest():
    g = nx.Graph()
    g.add_nodes_from(range(5))
    g.add_edges_from([(0, 1), (2, 3), (3, 4)])
    assert set(largest_component(g).nodes) == {2, 3, 4}


def _aux_link_routes(t, flows):
    routes = []
    for f in flows:
        if f.kind == "Auxiliary":
            hops = route(t, f.src, f.dst)
            routes.append([t.link_index(u, v) for u, v in zip(hops, hops[1:])])
    return routes


def test_link_parameters_in_range():
    profile = ComplexityProfile()
    for seed in range(300):
        t, flows = generate_scenario(seed, profile)
        drawn = gen_topology(seed, profile)
        # only the bottleneck and auxiliary access links are rescaled, and only downwards
        rescalable = {t.bottleneck_link} | {r[0] for r in _aux_link_routes(t, flows)}
        for idx, (lk, orig) in enumerate(zip(t.links, drawn.links)):
            assert lk.delay_ms == orig.delay_ms
            assert 10.0 <= lk.delay_ms <= 100.0
            assert 10.0 <= orig.capacity_mbps <= 1000.0
            if idx in rescalable:
                assert 0.0 < lk.capacity_mbps <= orig.capacity_mbps
            else:
                assert lk.capacity_mbps == orig.capacity_mbps


def test_no_aux_flows_means_primary_only():
    t = gen_topology(3)
    _, flows = assign_links_and_flows(t, np.random.default_rng(0), 0)
    assert flows == [FlowSpec(t.source, t.sink, 0.0, "Primary")]


def test_aux_flows_start_at_interior_hosts():
    for seed in range(50):
        t, flows = generate_scenario(seed)
        kinds = {n.id: n for n in t.nodes}
        aux = [f for f in flows if f.kind == "Auxiliary"]
        assert 1 <= len(aux) <= 3
        assert sum(f.kind == "Primary" for f in flows) == 1
        for f in aux:
            assert kinds[f.src].kind == "Host" and kinds[f.src].role == "Interior"
            assert f.dst == t.sink
            assert 0.0 <= f.start_s <= 2.0


def test_bottleneck_on_two_equal_links():
    t = make_line_topology([10.0, 10.0], [100.0, 100.0])
    flows = [FlowSpec(t.source, t.sink, 0.0, "Primary")]
    out = enforce_bottleneck(t, flows, np.random.default_rng(0))
    caps = [out.links[i].capacity_mbps for i in out.path_links()]
    assert sorted(caps) == [50.0, 100.0]
    assert caps[out.path_links().index(out.bottleneck_link)] == 50.0


def test_bottleneck_needs_two_links():
    t = make_line_topology([10.0], [100.0])
    with pytest.raises(TopologyError):
        enforce_bottleneck(t, [FlowSpec(0, 1, 0.0, "Primary")], np.random.default_rng(0))


def test_bottleneck_is_unique_and_on_path():
    for seed in range(200):
        t, _ = generate_scenario(seed)
        path_links = t.path_links()
        assert t.bottleneck_link in path_links
        assert is_bottleneck(t, t.bottleneck_link)
        assert [i for i in path_links if is_bottleneck(t, i)] == [t.bottleneck_link]


def test_bottleneck_choice_is_deterministic():
    assert generate_scenario(9)[0].bottleneck_link == generate_scenario(9)[0].bottleneck_link


def test_fair_share_headroom():
    assert fair_share_headroom(100.0, 0) == 100.0
    assert fair_share_headroom(100.0, 1) == pytest.approx(60.0)
    assert fair_share_headroom(90.0, 2) == pytest.approx(42.0)


def test_bottleneck_headroom_counts_every_aux_flow():
    t = make_line_topology([10.0, 10.0, 10.0], [100.0, 100.0, 100.0])
    extra = t.path[-1] + 1
    flows = [FlowSpec(t.source, t.sink, 0.0, "Primary")]
    flows += [FlowSpec(extra, t.sink, 0.5, "Auxiliary")] * 2
    access = t.link_index(extra, 1)
    chosen = set()
    for s in range(30):
        out = enforce_bottleneck(t, flows, np.random.default_rng(s))
        chosen.add(out.bottleneck_link)
        # both downstream links carry two aux flows: 100 - 0.8 * 2 * 100 / 3
        assert out.links[out.bottleneck_link].capacity_mbps == pytest.approx(70.0 / 3)
        if out.bottleneck_link == 0:
            # the aux flows bypass the bottleneck, so their access link is throttled
            assert out.links[access].capacity_mbps == pytest.approx(0.8 * (100.0 - 70.0 / 3))
        else:
            assert out.links[access].capacity_mbps == 100.0
    assert chosen == {0, 1, 2}


def test_bypassing_aux_flows_cannot_fill_shared_path_links():
    for seed in range(200):
        t, flows = generate_scenario(seed)
        b = t.bottleneck_link
        bottleneck_mbps = t.links[b].capacity_mbps
        bypassing = [r for r in _aux_link_routes(t, flows) if b not in r]
        for idx in t.path_links():
            if idx == b:
                continue
            access = {r[0] for r in bypassing if idx in r}
            load = bottleneck_mbps + sum(t.links[a].capacity_mbps for a in access)
            assert load < t.links[idx].capacity_mbps


def test_aux_flows_come_from_the_flow_stream():
    for seed in range(20):
        _, flows = generate_scenario(seed)
        rng = child_rng(seed, STREAM_FLOWS)
        n_aux = int(rng.integers(1, 3, endpoint=True))
        assert flows == draw_aux_flows(gen_topology(seed), rng, n_aux)


def test_link_draws_do_not_move_aux_flows():
    t = gen_topology(8)
    _, a = assign_links_and_flows(t, np.random.default_rng(0), 3,
                                  flow_rng=np.random.default_rng(5))
    _, b = assign_links_and_flows(t, np.random.default_rng(1), 3,
                                  flow_rng=np.random.default_rng(5))
    assert a == b


def test_route_source_to_sink_is_path():
    t = gen_topology(5)
    assert route(t, t.source, t.sink) == t.path


def test_route_unreachable():
    t = make_line_topology([10.0, 10.0], [100.0, 100.0])
    t.nodes.append(Node(99, "Host"))
    with pytest.raises(TopologyError):
        route(t, 99, t.sink)


def test_topology_document_round_trip():
    t, flows = generate_scenario(11)
    t2, flows2 = topology_from_dict(topology_to_dict(t, flows))
    assert t2 == t
    assert flows2 == flows


def test_topology_document_without_flows_defaults_to_primary():
    t = gen_topology(4)
    _, flows = topology_from_dict(topology_to_dict(t))
    assert flows == [FlowSpec(t.source, t.sink, 0.0, "Primary")]


@pytest.mark.slow
def test_switch_count_is_uniform():
    counts = np.bincount([gen_topology(seed).n_switches for seed in range(3000)], minlength=6)
    result = stats.chisquare(counts[3:6])
    assert result.pvalue > 0.001


@pytest.mark.slow
def test_link_delay_is_uniform():
    delays = []
    for seed in range(1000):
        delays.extend(lk.delay_ms for lk in generate_scenario(seed)[0].links)
    counts, _ = np.histogram(delays, bins=10, range=(10.0, 100.0))
    assert stats.chisquare(counts).pvalue > 0.001
