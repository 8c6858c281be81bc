"""Packet-level discrete-event simulator.

Runs long-lived Reno flows over a Topology with one FIFO egress queue per
link direction. The bottleneck queue runs the discipline under test and every
other queue is Drop-Tail. The Primary flow's CWND is sampled on every ACK and
its RTT by zero-length probes sent along the Primary path every 100 ms.
"""

import dataclasses
import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .aqm import (
    PACKET_BITS,
    droptail_enqueue,
    pie_enqueue,
    pie_update,
    queue_delay_estimate,
)
from .errors import ConfigError, ResourceError, TopologyError
from .rng import STREAM_SIMULATION, child_rng
from .tcp import tcp_step
from .topo_gen import route, to_graph
from .types import (
    DropTail,
    Event,
    EventKind,
    FlowSpec,
    Pie,
    PieState,
    QueueDiscipline,
    TcpState,
    Topology,
    Trace,
)

logger = logging.getLogger(__name__)

MIN_RTO_S = 0.2
SRTT_GAIN = 0.125
RATE_GAIN = 0.125


@dataclass(frozen=True)
class SimOptions:
    probe_period_s: float = 0.1
    max_pending_events: int = 2_000_000
    cwnd_cap: float | None = None  # receiver-window analogue
    drain_cap_s: float = 10.0  # how long past duration to wait for in-flight probes


@dataclass
class QueueStats:
    """Counters for one egress queue.

    offered = accepted + dropped and accepted = departed + in_queue.
    """

    offered: int = 0
    accepted: int = 0
    dropped: int = 0
    departed: int = 0
    in_queue: int = 0
    primary_dropped: int = 0


@dataclass
class SimResult:
    trace: Trace
    queue_stats: dict[tuple[int, int], QueueStats] = field(default_factory=dict)
    bottleneck: tuple[int, int] = (0, 0)
    bottleneck_qdelay_ms: list[float] = field(default_factory=list)  # seen by each probe
    events_processed: int = 0

    def primary_drops(self) -> tuple[int, int]:
        """Primary-flow drops at the bottleneck queue and at every other queue."""
        at_bottleneck = elsewhere = 0
        for key, stats in self.queue_stats.items():
            if key == self.bottleneck:
                at_bottleneck += stats.primary_dropped
            else:
                elsewhere += stats.primary_dropped
        return at_bottleneck, elsewhere


class _Packet:
    __slots__ = ("flow", "seq", "sent_s", "hop")

    def __init__(self, flow: "_Flow | None", seq: int, sent_s: float) -> None:
        self.flow = flow  # None for probes
        self.seq = seq
        self.sent_s = sent_s
        self.hop = 0


class _EgressQueue:
    """FIFO transmitter; departure times of queued packets are known at admission."""

    def __init__(
        self, key: tuple[int, int], capacity_mbps: float, delay_ms: float, disc: QueueDiscipline
    ) -> None:
        self.key = key
        self.service_s = PACKET_BITS / (capacity_mbps * 1e6)
        self.delay_s = delay_ms / 1000.0
        self.disc = disc
        self.pie_state = PieState()
        self.pending: deque[float] = deque()
        self.busy_until = 0.0
        self.stats = QueueStats()
        self._departed_at_tick = 0
        self._backlogged_at_tick = False

    def occupancy(self, now: float) -> int:
        pending = self.pending
        while pending and pending[0] <= now:
            pending.popleft()
            self.stats.departed += 1
        return len(pending)

    def admit(self, now: float, rng: np.random.Generator, primary: bool = False) -> float | None:
        """Departure time of an arriving data packet, or None if dropped."""
        qlen = self.occupancy(now)
        self.stats.offered += 1
        if isinstance(self.disc, Pie):
            verdict = pie_enqueue(self.pie_state, qlen, self.disc, rng)
        else:
            verdict = droptail_enqueue(qlen, self.disc.buffer_pkts)
        if verdict == "Drop":
            self.stats.dropped += 1
            self.stats.primary_dropped += int(primary)
            return None
        self.stats.accepted += 1
        leave = max(now, self.busy_until) + self.service_s
        self.busy_until = leave
        self.pending.append(leave)
        return leave

    def probe_leave(self, now: float) -> float:
        """Probes wait behind every queued packet but take no service time."""
        return max(now, self.busy_until)

    def pie_tick(self, now: float) -> None:
        disc = self.disc
        assert isinstance(disc, Pie)
        qlen = self.occupancy(now)
        interval_s = disc.update_interval_ms / 1000.0
        departed = self.stats.departed - self._departed_at_tick
        rate = self.pie_state.depart_rate_est
        if departed > 0:
            sample = departed / interval_s
            if rate <= 0.0:
                rate = sample
            elif self._backlogged_at_tick:
                rate = (1.0 - RATE_GAIN) * rate + RATE_GAIN * sample
        qdelay_ms = queue_delay_estimate(qlen, rate)
        state = dataclasses.replace(self.pie_state, depart_rate_est=rate)
        self.pie_state = pie_update(state, qdelay_ms, disc, now)
        self._departed_at_tick = self.stats.departed
        self._backlogged_at_tick = qlen > 0

    def finish(self, now: float) -> QueueStats:
        self.stats.in_queue = self.occupancy(now)
        return self.stats


class _Flow:
    __slots__ = (
        "spec",
        "route",
        "reverse_delay_s",
        "state",
        "outstanding",
        "next_seq",
        "srtt",
        "last_reduction_s",
        "last_progress_s",
        "timer_armed",
        "primary",
    )

    def __init__(self, spec: FlowSpec, queues: list[_EgressQueue]) -> None:
        self.spec = spec
        self.route = queues
        self.reverse_delay_s = sum(q.delay_s for q in queues)
        self.state = TcpState()
        self.outstanding: dict[int, float] = {}
        self.next_seq = 0
        self.srtt: float | None = None
        self.last_reduction_s = -math.inf
        self.last_progress_s = spec.start_s
        self.timer_armed = False
        self.primary = spec.kind == "Primary"

    def loss_notice_delay(self) -> float:
        return self.srtt if self.srtt is not None else 2.0 * self.reverse_delay_s


class _Simulator:
    def __init__(
        self,
        t: Topology,
        flows: list[FlowSpec],
        disc: QueueDiscipline,
        duration_s: float,
        seed: int,
        options: SimOptions,
    ) -> None:
        self.duration_s = duration_s
        self.options = options
        self.rng = child_rng(seed, STREAM_SIMULATION)
        self.heap: list[Event] = []
        self.seq = 0
        self.now = 0.0
        self.events_processed = 0

        primaries = [f for f in flows if f.kind == "Primary"]
        if len(primaries) != 1:
            raise TopologyError(f"expected exactly one Primary flow, got {len(primaries)}")

        path_links = _path_links(t)
        bottleneck_idx = t.bottleneck_link
        if bottleneck_idx is None:
            bottleneck_idx = min(path_links, key=lambda i: t.links[i].capacity_mbps)
        pos = path_links.index(bottleneck_idx)
        self.bottleneck_key = (t.path[pos], t.path[pos + 1])

        self.disc = disc
        self.queues: dict[tuple[int, int], _EgressQueue] = {}
        graph = to_graph(t)
        self.flows: list[_Flow] = []
        for spec in flows:
            hops = route(t, spec.src, spec.dst, graph)
            self.flows.append(_Flow(spec, self._queues_along(t, hops)))
        self.probe_route = self._queues_along(t, list(t.path))
        self.probe_reverse_s = sum(q.delay_s for q in self.probe_route)
        self.bottleneck_queue = self.queues[self.bottleneck_key]

        self.rtt: list[tuple[float, float]] = []
        self.cwnd: list[tuple[float, float]] = []
        self.bottleneck_qdelay_ms: list[float] = []
        self.probes_in_flight = 0

    def _queues_along(self, t: Topology, hops: list[int]) -> list[_EgressQueue]:
        queues = []
        for u, v in zip(hops, hops[1:]):
            key = (u, v)
            if key not in self.queues:
                link = t.links[t.link_index(u, v)]
                disc = self.disc if key == self.bottleneck_key else DropTail(self.disc.buffer_pkts)
                self.queues[key] = _EgressQueue(key, link.capacity_mbps, link.delay_ms, disc)
            queues.append(self.queues[key])
        return queues

    def push(self, time_s: float, kind: EventKind, payload: object = None) -> None:
        if len(self.heap) >= self.options.max_pending_events:
            raise ResourceError(
                f"event queue exceeded {self.options.max_pending_events} pending events"
            )
        heapq.heappush(self.heap, Event(time_s, self.seq, kind, payload))
        self.seq += 1

    def run(self) -> SimResult:
        for flow in self.flows:
            self.push(flow.spec.start_s, EventKind.FLOW_START, flow)
        self.push(0.0, EventKind.PROBE_SEND, 0)
        if isinstance(self.disc, Pie):
            self.push(self.disc.update_interval_ms / 1000.0, EventKind.PIE_TIMER, None)

        hard_end = self.duration_s + self.options.drain_cap_s
        heap = self.heap
        while heap:
            head = heap[0].time_s
            if head > self.duration_s and (self.probes_in_flight == 0 or head > hard_end):
                break
            ev = heapq.heappop(heap)
            self.now = ev.time_s
            self.events_processed += 1
            self._dispatch(ev)

        if self.probes_in_flight:
            logger.warning("%d probes still in flight at drain cap", self.probes_in_flight)
        stats = {key: q.finish(self.now) for key, q in self.queues.items()}
        trace = Trace(
            rtt=sorted(self.rtt),
            cwnd=self.cwnd,
            label=self.disc.label,
            topology_seed=0,
            duration_s=self.duration_s,
        )
        return SimResult(
            trace=trace,
            queue_stats=stats,
            bottleneck=self.bottleneck_key,
            bottleneck_qdelay_ms=self.bottleneck_qdelay_ms,
            events_processed=self.events_processed,
        )

    def _dispatch(self, ev: Event) -> None:
        kind = ev.kind
        if kind == EventKind.ARRIVAL:
            self._forward(ev.payload)
        elif kind == EventKind.ACK:
            self._on_ack(ev.payload)
        elif kind == EventKind.DEPARTURE:
            self._deliver(ev.payload)
        elif kind == EventKind.LOSS:
            self._on_loss(ev.payload)
        elif kind == EventKind.PROBE_RETURN:
            pkt = ev.payload
            self.probes_in_flight -= 1
            self.rtt.append((pkt.sent_s, (self.now - pkt.sent_s) * 1000.0))
        elif kind == EventKind.PROBE_SEND:
            self._send_probe(ev.payload)
        elif kind == EventKind.PIE_TIMER:
            self.bottleneck_queue.pie_tick(self.now)
            interval_s = self.disc.update_interval_ms / 1000.0
            self.push(self.now + interval_s, EventKind.PIE_TIMER, None)
        elif kind == EventKind.TIMEOUT:
            self._on_timer(ev.payload)
        elif kind == EventKind.FLOW_START:
            flow = ev.payload
            flow.last_progress_s = self.now
            self._send(flow)

    def _forward(self, pkt: _Packet) -> None:
        """Enqueue pkt at the egress queue of its current hop."""
        now = self.now
        flow = pkt.flow
        if flow is None:
            q = self.probe_route[pkt.hop]
            leave = q.probe_leave(now)
            if q is self.bottleneck_queue:
                self.bottleneck_qdelay_ms.append((leave - now) * 1000.0)
            hops = self.probe_route
        else:
            q = flow.route[pkt.hop]
            leave = q.admit(now, self.rng, flow.primary)
            if leave is None:
                self.push(now + flow.loss_notice_delay(), EventKind.LOSS, pkt)
                return
            hops = flow.route
        pkt.hop += 1
        kind = EventKind.DEPARTURE if pkt.hop == len(hops) else EventKind.ARRIVAL
        self.push(leave + q.delay_s, kind, pkt)

    def _deliver(self, pkt: _Packet) -> None:
        if pkt.flow is None:
            self.push(self.now + self.probe_reverse_s, EventKind.PROBE_RETURN, pkt)
        else:
            self.push(self.now + pkt.flow.reverse_delay_s, EventKind.ACK, pkt)

    def _send_probe(self, k: int) -> None:
        period = self.options.probe_period_s
        pkt = _Packet(None, k, self.now)
        self.probes_in_flight += 1
        self._forward(pkt)
        next_t = (k + 1) * period
        if next_t < self.duration_s - 1e-9:
            self.push(next_t, EventKind.PROBE_SEND, k + 1)

    def _send(self, flow: _Flow) -> None:
        window = math.floor(flow.state.cwnd_pkts)
        if self.options.cwnd_cap is not None:
            window = min(window, math.floor(self.options.cwnd_cap))
        outstanding = flow.outstanding
        while len(outstanding) < window:
            pkt = _Packet(flow, flow.next_seq, self.now)
            outstanding[flow.next_seq] = self.now
            flow.next_seq += 1
            self._forward(pkt)
        if outstanding and not flow.timer_armed:
            flow.timer_armed = True
            self.push(self.now + flow.state.rto_s, EventKind.TIMEOUT, flow)

    def _on_ack(self, pkt: _Packet) -> None:
        flow = pkt.flow
        sent = flow.outstanding.pop(pkt.seq, None)
        if sent is None:
            return
        now = self.now
        sample = now - sent
        if flow.srtt is None:
            flow.srtt = sample
        else:
            flow.srtt = (1 - SRTT_GAIN) * flow.srtt + SRTT_GAIN * sample
        flow.state = dataclasses.replace(
            tcp_step(flow.state, "Ack"),
            in_flight=len(flow.outstanding),
            rto_s=max(2.0 * flow.srtt, MIN_RTO_S),
        )
        flow.last_progress_s = now
        if flow.primary and now <= self.duration_s:
            self._sample_cwnd(now, flow.state.cwnd_pkts)
        self._send(flow)

    def _sample_cwnd(self, now: float, cwnd: float) -> None:
        if self.cwnd and self.cwnd[-1][0] >= now:
            self.cwnd[-1] = (now, cwnd)
        else:
            self.cwnd.append((now, cwnd))

    def _on_loss(self, pkt: _Packet) -> None:
        flow = pkt.flow
        if flow.outstanding.pop(pkt.seq, None) is None:
            return
        flow.last_progress_s = self.now
        if pkt.sent_s > flow.last_reduction_s:
            flow.state = dataclasses.replace(
                tcp_step(flow.state, "Loss"), in_flight=len(flow.outstanding)
            )
            flow.last_reduction_s = self.now
        self._send(flow)

    def _on_timer(self, flow: _Flow) -> None:
        flow.timer_armed = False
        if not flow.outstanding:
            return
        deadline = flow.last_progress_s + flow.state.rto_s
        if self.now + 1e-12 < deadline:
            flow.timer_armed = True
            self.push(deadline, EventKind.TIMEOUT, flow)
            return
        flow.outstanding.clear()
        flow.state = dataclasses.replace(tcp_step(flow.state, "Timeout"), in_flight=0)
        flow.last_reduction_s = self.now
        flow.last_progress_s = self.now
        self._send(flow)


def _path_links(t: Topology) -> list[int]:
    try:
        return t.path_links()
    except KeyError as exc:
        raise TopologyError(f"path is not backed by links: {exc}") from exc


def discipline_metadata(disc: QueueDiscipline) -> dict[str, object]:
    """Discipline kind and parameters for a trace sidecar."""
    return {"kind": disc.label, **dataclasses.asdict(disc)}


def run_simulation(
    t: Topology,
    flows: list[FlowSpec],
    disc: QueueDiscipline,
    duration_s: float,
    seed: int,
    options: SimOptions | None = None,
) -> SimResult:
    """simulate() with queue statistics and bottleneck delay samples."""
    if duration_s <= 0:
        raise ConfigError(f"duration_s must be > 0, got {duration_s}")
    if disc.buffer_pkts < 1:
        raise ConfigError("buffer_pkts must be >= 1")
    options = options or SimOptions()
    result = _Simulator(t, flows, disc, duration_s, seed, options).run()
    result.trace.topology_seed = t.rng_seed
    result.trace.metadata = {
        "label": disc.label,
        "topology_seed": t.rng_seed,
        "sim_seed": seed,
        "duration_s": duration_s,
        "discipline": discipline_metadata(disc),
    }
    logger.debug(
        "seed %d %s: %d events, %d rtt / %d cwnd samples",
        t.rng_seed,
        disc.label,
        result.events_processed,
        len(result.trace.rtt),
        len(result.trace.cwnd),
    )
    at_bottleneck, elsewhere = result.primary_drops()
    if elsewhere > at_bottleneck:
        logger.warning(
            "seed %d %s: primary flow lost %d packets off the bottleneck, %d at it",
            t.rng_seed,
            disc.label,
            elsewhere,
            at_bottleneck,
        )
    return result


def simulate(
    t: Topology,
    flows: list[FlowSpec],
    disc: QueueDiscipline,
    duration_s: float,
    seed: int,
    options: SimOptions | None = None,
) -> Trace:
    """Simulate the flows for duration_s under disc at the bottleneck."""
    return run_simulation(t, flows, disc, duration_s, seed, options).trace
