"""Reno-style congestion window rules."""

import dataclasses

from .types import TcpSignal, TcpState

MIN_SSTHRESH = 2.0


def tcp_step(s: TcpState, ev: TcpSignal) -> TcpState:
    """Apply one ACK, loss or timeout to the sender state."""
    if ev == "Ack":
        if s.mode == "SlowStart":
            cwnd = s.cwnd_pkts + 1.0
            mode = "CongestionAvoidance" if cwnd >= s.ssthresh_pkts else "SlowStart"
            return dataclasses.replace(s, cwnd_pkts=cwnd, mode=mode)
        return dataclasses.replace(s, cwnd_pkts=s.cwnd_pkts + 1.0 / s.cwnd_pkts)

    ssthresh = max(s.cwnd_pkts / 2.0, MIN_SSTHRESH)
    if ev == "Loss":
        return dataclasses.replace(
            s, ssthresh_pkts=ssthresh, cwnd_pkts=ssthresh, mode="CongestionAvoidance"
        )
    if ev == "Timeout":
        return dataclasses.replace(s, ssthresh_pkts=ssthresh, cwnd_pkts=1.0, mode="SlowStart")
    raise ValueError(f"unknown TCP event {ev!r}")
