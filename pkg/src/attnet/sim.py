"""Virtual-time pipeline harness: scenario in, artifact files out.

Runs the whole chain for one scenario: scan attempts feed edge nodes,
edge nodes journal and relay framed records over the simulated radio,
the coordinator host decodes them into the attendance server and acks
back, and edge nodes retransmit anything unacknowledged on a fixed
retry tick. After the last scripted action the loop keeps ticking
until every journaled record is acknowledged and the air is clear, or
until the quiescence limit gives up (a link that never recovers leaves
records unacked, which is a valid outcome).

Everything is driven by the scenario seed; no wall-clock reads occur
anywhere, so a run is reproducible byte for byte.
"""

from __future__ import annotations

import json
import random
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .edgenode import EdgeNode, Journal
from .frames import ADDR16_UNKNOWN, FrameDecoder, RxIndicator, TxRequest, TxStatus, encode
from .radio import RadioSim
from .rtc import Clock
from .scenario import Scenario
from .server import AttendanceServer, IngestStatus
from .tagcard import NfcTag, Reader, ScanRecord

COORDINATOR_ID = "server"
COORDINATOR_ADDR64 = (0).to_bytes(8, "big")
RETRY_TICK_S = 1.0
QUIESCENCE_LIMIT_S = 600.0

# Output file names under the simulate --out directory.
RECEIVER_LOG_NAME = "receiver.log"
STORE_NAME = "store.txt"
TRACE_NAME = "trace.csv"
COUNTERS_NAME = "counters.json"


def node_addr64(index: int) -> bytes:
    """Stable radio address for the index-th declared node."""
    return (index + 1).to_bytes(8, "big")


class CoordinatorHost:
    """Coordinator-side glue: decode inbound frames, ingest, ack.

    Receiving a transmit request plays the role of the remote radio:
    the payload is rewrapped as a receive indicator for the server,
    and a zero-status report echoing the frame id goes back to the
    sender unless no ack was requested. Duplicates are acked too, so
    a retransmitting node always converges.
    """

    def __init__(self, server: AttendanceServer, radio: RadioSim,
                 addr_of: dict[str, bytes]):
        self.server = server
        self.radio = radio
        self._addr_of = addr_of
        self._decoders: dict[str, FrameDecoder] = {}

    def on_radio(self, event):
        decoder = self._decoders.setdefault(event.src, FrameDecoder())
        for frame in decoder.feed(event.raw):
            if not isinstance(frame, TxRequest):
                continue
            indicator = RxIndicator(
                src64=self._addr_of[event.src],
                src16=ADDR16_UNKNOWN,
                options=0x01,
                payload=frame.payload,
            )
            result = self.server.ingest(indicator, self.radio.now)
            if frame.frame_id != 0 and result is not IngestStatus.PARSE_ERROR:
                status = TxStatus(frame_id=frame.frame_id)
                self.radio.send(COORDINATOR_ID, event.src, encode(status))


@dataclass
class SimulationResult:
    scenario: Scenario
    server: AttendanceServer
    nodes: dict[str, EdgeNode]
    journals: dict[str, Journal]
    radio: RadioSim
    scan_times: dict[tuple[str, int], float] = field(default_factory=dict)
    misses: dict[str, int] = field(default_factory=dict)
    final_time: float = 0.0

    @property
    def receiver_log(self) -> list[str]:
        return self.server.receiver_log

    def counters(self) -> dict:
        return {
            "duplicates_ingested": self.server.duplicates,
            "parse_errors": self.server.parse_errors,
            "events_stored": len(self.server.store.events),
            "final_virtual_time": self.final_time,
            "links": {
                node: {
                    "sent": s.sent,
                    "delivered": s.delivered,
                    "dropped": s.dropped,
                    "duplicated": s.duplicated,
                }
                for node, s in sorted(self.radio.stats.items())
            },
            "nodes": {
                name: {
                    "journaled": len(self.journals[name].records),
                    "unacked": node.unacked_count,
                    "retransmits": node.retransmits,
                    "journal_failures": node.journal_failures,
                    "scan_misses": self.misses[name],
                }
                for name, node in sorted(self.nodes.items())
            },
        }


def run_scenario(
    scenario: Scenario,
    out_dir: Path | str | None = None,
    debounce_s: float = 60.0,
) -> SimulationResult:
    """Execute one scenario; write artifacts when ``out_dir`` is given."""
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        journal_dir = out_dir
        scratch = None
    else:
        scratch = tempfile.TemporaryDirectory(prefix="attnet-")
        journal_dir = Path(scratch.name)

    try:
        rng = random.Random(scenario.seed)
        radio = RadioSim(rng, coordinator=COORDINATOR_ID)
        server = AttendanceServer(debounce_s=debounce_s)
        addr_of = {spec.node_id: node_addr64(i) for i, spec in enumerate(scenario.nodes)}
        coordinator = CoordinatorHost(server, radio, addr_of)
        radio.add_node(COORDINATOR_ID, coordinator.on_radio)

        nodes: dict[str, EdgeNode] = {}
        journals: dict[str, Journal] = {}
        misses = {spec.node_id: 0 for spec in scenario.nodes}
        for spec in scenario.nodes:
            server.register_node(addr_of[spec.node_id], spec.node_id)
            clock = Clock(spec.rtc_start if spec.rtc_start is not None else scenario.start)
            journal = Journal(journal_dir / f"journal_{spec.node_id}.log")
            node = EdgeNode(
                node_id=spec.node_id,
                reader=Reader(spec.reader, clock),
                journal=journal,
                radio=radio,
                coordinator_id=COORDINATOR_ID,
                coordinator_addr64=COORDINATOR_ADDR64,
                rng=rng,
            )
            radio.add_node(spec.node_id, node.on_radio, spec.link)
            nodes[spec.node_id] = node
            journals[spec.node_id] = journal

        for staff in scenario.staff:
            server.enroll(staff.name, staff.job, staff.card, now=scenario.start)

        result = SimulationResult(
            scenario=scenario, server=server, nodes=nodes,
            journals=journals, radio=radio, misses=misses,
        )

        # Merge scripted actions: link changes apply before scans at
        # the same instant, both in file order.
        actions = sorted(
            [(c.t, 0, c) for c in scenario.link_changes]
            + [(e.t, 1, e) for e in scenario.events],
            key=lambda a: (a[0], a[1]),
        )
        last_scripted = actions[-1][0] if actions else 0.0
        deadline = last_scripted + QUIESCENCE_LIMIT_S

        index = 0
        next_tick = RETRY_TICK_S
        while True:
            busy = any(n.unacked_count for n in nodes.values()) or radio.pending_deliveries
            if index >= len(actions) and not busy:
                break
            step_to = actions[index][0] if index < len(actions) else next_tick
            step_to = min(step_to, next_tick)
            if step_to > deadline:
                break
            radio.advance(step_to)
            while index < len(actions) and actions[index][0] == step_to:
                _, kind, action = actions[index]
                if kind == 0:
                    radio.set_link(action.node, action.link)
                else:
                    node = nodes[action.node]
                    outcome = node.handle_scan(NfcTag(action.uid), action.distance_cm, step_to)
                    if isinstance(outcome, ScanRecord):
                        result.scan_times[(action.node, outcome.seq)] = step_to
                    elif outcome is not None:
                        misses[action.node] += 1
                index += 1
            if step_to == next_tick:
                for node in nodes.values():
                    node.retransmit_pending(step_to)
                next_tick += RETRY_TICK_S

        result.final_time = radio.now
        for journal in journals.values():
            journal.close()

        if out_dir is not None:
            write_outputs(result, out_dir)
        return result
    finally:
        if scratch is not None:
            scratch.cleanup()


def write_outputs(result: SimulationResult, out_dir: Path):
    """Write receiver log, store, event trace, and counters."""
    out_dir = Path(out_dir)
    receiver = "".join(line + "\n" for line in result.receiver_log)
    (out_dir / RECEIVER_LOG_NAME).write_text(receiver, encoding="utf-8")
    result.server.store.persist(out_dir / STORE_NAME)
    trace_lines = ["time,src,dst,bytes_hex,disposition"]
    trace_lines += [
        f"{row.time!r},{row.src},{row.dst},{row.raw.hex()},{row.disposition}"
        for row in result.radio.trace
    ]
    (out_dir / TRACE_NAME).write_text(
        "".join(line + "\n" for line in trace_lines), encoding="utf-8"
    )
    (out_dir / COUNTERS_NAME).write_text(
        json.dumps(result.counters(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
