"""Discrete-event point-to-multipoint radio with a virtual clock.

One coordinator plus any number of leaf nodes, each joined to the
coordinator by a single configurable link (star topology; leaf-to-leaf
traffic is rejected). Link feasibility is a free-space path loss
budget against receiver sensitivity; loss beyond free space is
expressed through the per-link drop probability. All randomness comes
from one injected generator, so a seed fixes the entire event trace.

Time is virtual throughout: ``advance(until)`` dispatches queued
deliveries in (time, insertion) order and moves the clock, and nothing
here ever reads the wall clock.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass, field

from .errors import TopologyError

FSPL_CONSTANT_DB = 32.44
SUPPORTED_BANDS_MHZ = (2400.0, 900.0, 868.0)
DEFAULT_TX_POWER_DBM = 2.0
DEFAULT_SENSITIVITY_DBM = -100.0
DEFAULT_LATENCY_S = 1.0

# A duplicate delivery rides one queue tick behind its original.
DUP_DELAY_S = 1e-9


@dataclass(frozen=True)
class LinkParams:
    """Radio link model for one leaf-to-coordinator pair."""

    distance_m: float
    tx_power_dbm: float = DEFAULT_TX_POWER_DBM
    freq_mhz: float = 2400.0
    drop_prob: float = 0.0
    dup_prob: float = 0.0
    latency_s: float = DEFAULT_LATENCY_S
    sensitivity_dbm: float = DEFAULT_SENSITIVITY_DBM

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ValueError(f"distance must be positive: {self.distance_m}")
        if self.freq_mhz not in SUPPORTED_BANDS_MHZ:
            raise ValueError(f"unsupported band: {self.freq_mhz} MHz")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob outside [0, 1]: {self.drop_prob}")
        if not 0.0 <= self.dup_prob <= 1.0:
            raise ValueError(f"dup_prob outside [0, 1]: {self.dup_prob}")
        if self.latency_s < 0:
            raise ValueError(f"latency must be >= 0: {self.latency_s}")


@dataclass(frozen=True)
class NetEvent:
    """One scheduled delivery of raw bytes to a node."""

    deliver_at: float
    src: str
    dst: str
    raw: bytes


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    duplicated: int = 0


@dataclass(frozen=True)
class TraceRow:
    time: float
    src: str
    dst: str
    raw: bytes
    disposition: str  # sent | dropped | duplicated | delivered


def fspl_db(distance_m: float, freq_mhz: float) -> float:
    """Free-space path loss in dB for a distance in meters."""
    return (
        FSPL_CONSTANT_DB
        + 20.0 * math.log10(distance_m / 1000.0)
        + 20.0 * math.log10(freq_mhz)
    )


def rssi_dbm(link: LinkParams) -> float:
    """Received signal strength at the far end of the link."""
    return link.tx_power_dbm - fspl_db(link.distance_m, link.freq_mhz)


def deliverable(link: LinkParams) -> bool:
    """True when the received level meets sensitivity (inclusive)."""
    return rssi_dbm(link) >= link.sensitivity_dbm


def feasible_range_m(link: LinkParams) -> float:
    """Distance at which the received level equals sensitivity."""
    margin_db = link.tx_power_dbm - link.sensitivity_dbm - FSPL_CONSTANT_DB
    return 1000.0 * 10.0 ** ((margin_db - 20.0 * math.log10(link.freq_mhz)) / 20.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


class RadioSim:
    """Single-owner event loop for one star network.

    Node callbacks run sequentially in virtual-time order and may call
    :meth:`send` re-entrantly. Run parallel simulations as separate
    instances; nothing is shared.
    """

    def __init__(self, rng: random.Random, coordinator: str = "coordinator"):
        self._rng = rng
        self.coordinator = coordinator
        self._now = 0.0
        self._queue: list[tuple[float, int, NetEvent]] = []
        self._order = itertools.count()
        self._callbacks: dict[str, object] = {}
        self._links: dict[str, LinkParams] = {}
        self.stats: dict[str, LinkStats] = {}
        self.trace: list[TraceRow] = []

    @property
    def now(self) -> float:
        return self._now

    @property
    def pending_deliveries(self) -> int:
        return len(self._queue)

    def add_node(self, node_id: str, callback, link: LinkParams | None = None):
        """Register a node. The coordinator carries no link of its own."""
        if node_id in self._callbacks:
            raise TopologyError(f"node already registered: {node_id}")
        if node_id == self.coordinator:
            if link is not None:
                raise TopologyError("the coordinator does not carry a link")
        elif link is None:
            raise TopologyError(f"leaf node needs a link: {node_id}")
        else:
            self._links[node_id] = link
            self.stats[node_id] = LinkStats()
        self._callbacks[node_id] = callback

    def set_link(self, node_id: str, link: LinkParams):
        if node_id not in self._links:
            raise TopologyError(f"no such leaf node: {node_id}")
        self._links[node_id] = link

    def _leaf_of(self, src: str, dst: str) -> str:
        if src == dst:
            raise TopologyError(f"cannot send to self: {src}")
        for node in (src, dst):
            if node not in self._callbacks:
                raise TopologyError(f"unknown node: {node}")
        if src == self.coordinator:
            return dst
        if dst == self.coordinator:
            return src
        raise TopologyError(f"no leaf-to-leaf links in a star: {src} -> {dst}")

    def send(self, src: str, dst: str, raw: bytes) -> list[NetEvent]:
        """Offer bytes to the link; returns the deliveries scheduled.

        An infeasible or randomly dropped transmission schedules
        nothing; a duplicated one schedules two identical deliveries.
        """
        leaf = self._leaf_of(src, dst)
        link = self._links[leaf]
        stats = self.stats[leaf]
        raw = bytes(raw)
        stats.sent += 1
        if not deliverable(link) or self._rng.random() < link.drop_prob:
            stats.dropped += 1
            self.trace.append(TraceRow(self._now, src, dst, raw, "dropped"))
            return []
        events = [NetEvent(self._now + link.latency_s, src, dst, raw)]
        self.trace.append(TraceRow(self._now, src, dst, raw, "sent"))
        if self._rng.random() < link.dup_prob:
            events.append(NetEvent(self._now + link.latency_s + DUP_DELAY_S, src, dst, raw))
            stats.duplicated += 1
            self.trace.append(TraceRow(self._now, src, dst, raw, "duplicated"))
        for ev in events:
            heapq.heappush(self._queue, (ev.deliver_at, next(self._order), ev))
        return events

    def advance(self, until: float) -> list[NetEvent]:
        """Dispatch everything due by ``until`` and move the clock there.

        Ties dispatch in insertion order; calling twice with the same
        time dispatches nothing the second time.
        """
        if until < self._now:
            raise ValueError(f"cannot advance backwards: {until} < {self._now}")
        delivered: list[NetEvent] = []
        while self._queue and self._queue[0][0] <= until:
            _, _, ev = heapq.heappop(self._queue)
            self._now = ev.deliver_at
            self.stats[self._leaf_of(ev.src, ev.dst)].delivered += 1
            self.trace.append(TraceRow(ev.deliver_at, ev.src, ev.dst, ev.raw, "delivered"))
            delivered.append(ev)
            callback = self._callbacks[ev.dst]
            if callback is not None:
                callback(ev)
        self._now = until
        return delivered
