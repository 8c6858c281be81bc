"""Bottleneck queue disciplines: Drop-Tail and PIE."""

import dataclasses
import math

import numpy as np

from .errors import ConfigError
from .types import DropTail, EnqueueVerdict, Pie, PieState, QueueLabel, Topology

PACKET_BITS = 8 * 1500
MIN_BUFFER_PKTS = 20


def droptail_enqueue(qlen: int, buffer_pkts: int) -> EnqueueVerdict:
    """Drop only when the buffer is full."""
    return "Drop" if qlen >= buffer_pkts else "Accept"


def queue_delay_estimate(qlen_pkts: int, depart_rate_est: float) -> float:
    """Little's-law queueing delay in ms; 0 before any departure was seen."""
    if depart_rate_est <= 0.0 or qlen_pkts <= 0:
        return 0.0
    return 1000.0 * qlen_pkts / depart_rate_est


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def pie_update(s: PieState, qdelay_ms: float, disc: Pie, now_s: float | None = None) -> PieState:
    """One PIE control step: proportional on the delay error, integral-like on its trend."""
    delta = (
        disc.alpha * (qdelay_ms - disc.target_delay_ms) / 1000.0
        + disc.beta * (qdelay_ms - s.qdelay_old_ms) / 1000.0
    )
    return dataclasses.replace(
        s,
        drop_prob=_clamp01(s.drop_prob + delta),
        qdelay_old_ms=qdelay_ms,
        last_update_s=s.last_update_s if now_s is None else now_s,
    )


def pie_enqueue(
    s: PieState, qlen: int, disc: Pie, rng: np.random.Generator
) -> EnqueueVerdict:
    """Random early drop with probability drop_prob; hard drop at a full buffer."""
    if qlen >= disc.buffer_pkts:
        return "Drop"
    if s.drop_prob > 0.0 and rng.random() < s.drop_prob:
        return "Drop"
    return "Accept"


def bdp_buffer_pkts(t: Topology) -> int:
    """Two bandwidth-delay products of the path in packets, at least MIN_BUFFER_PKTS."""
    path_links = t.path_links()
    bottleneck = t.bottleneck_link
    if bottleneck is None:
        capacity = min(t.links[i].capacity_mbps for i in path_links)
    else:
        capacity = t.links[bottleneck].capacity_mbps
    base_rtt_s = 2.0 * sum(t.links[i].delay_ms for i in path_links) / 1000.0
    bdp = capacity * 1e6 * base_rtt_s / PACKET_BITS
    return max(MIN_BUFFER_PKTS, math.ceil(2.0 * bdp))


def default_discipline(kind: QueueLabel | str, t: Topology) -> DropTail | Pie:
    """Discipline of the given kind with the BDP buffer rule and standard PIE constants."""
    buffer_pkts = bdp_buffer_pkts(t)
    key = kind.lower().replace("-", "").replace("_", "")
    if key == "droptail":
        return DropTail(buffer_pkts)
    if key == "pie":
        return Pie(buffer_pkts)
    raise ConfigError(f"unknown discipline {kind!r}")
