"""Coordinator-side service: enrollment, deduplicated ingest, presence.

Ingest is exactly-once on the (node, sequence) pair carried in every
payload: replays and duplicated deliveries change nothing and produce
no log line, so arbitrary retransmission upstream is safe. Every
parseable, novel payload is persisted with a grant/deny decision
(denied scans are kept for audit) and echoed verbatim into the
receiver log.

Presence uses toggle semantics over granted scans: the first counted
scan of a card marks it in, the next out, and so on, where repeats
within the debounce window of the previous counted scan collapse into
it. Store files are line-delimited text:

    S|<card>|<name>|<job>|<Y/M/D H:M:S>
    E|<node>|<seq>|<card>|<Y/M/D H:M:S>|<G-or-D>

The '|' separator is forbidden in names and jobs, which enroll
rejects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .edgenode import parse_payload
from .errors import AlreadyEnrolled, LoadError, ParseError, RangeError
from .frames import RxIndicator
from .rtc import RtcState, epoch_seconds, parse_timestamp, render_timestamp

DEBOUNCE_WINDOW_S = 60.0
_CARD_LIMIT = 1 << 32


class Decision(Enum):
    GRANTED = "G"
    DENIED = "D"


class IngestStatus(Enum):
    """Non-event outcomes of ingesting one frame."""

    DUPLICATE = "duplicate"
    PARSE_ERROR = "parse_error"


@dataclass(frozen=True)
class StaffRecord:
    card_key: int
    name: str
    job_spec: str
    enrolled_at: RtcState


@dataclass(frozen=True)
class AttendanceEvent:
    node: str
    seq: int
    card: int
    datetime: RtcState
    decision: Decision
    # Virtual receive time; run metadata only, not persisted (-1 after load).
    received_at: float = field(default=-1.0, compare=False)


class AttendanceStore:
    """Staff and attendance tables with line-delimited file persistence."""

    def __init__(self):
        self.staff: dict[int, StaffRecord] = {}
        self.events: list[AttendanceEvent] = []
        self._seen: set[tuple[str, int]] = set()

    def __eq__(self, other):
        if not isinstance(other, AttendanceStore):
            return NotImplemented
        return self.staff == other.staff and self.events == other.events

    def seen(self, node: str, seq: int) -> bool:
        return (node, seq) in self._seen

    def add_event(self, event: AttendanceEvent):
        self._seen.add((event.node, event.seq))
        self.events.append(event)

    def persist(self, path):
        lines = [
            f"S|{s.card_key}|{s.name}|{s.job_spec}|{render_timestamp(s.enrolled_at)}"
            for s in self.staff.values()
        ]
        lines += [
            f"E|{e.node}|{e.seq}|{e.card}|{render_timestamp(e.datetime)}|{e.decision.value}"
            for e in self.events
        ]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "AttendanceStore":
        """Read a store file back; a missing file is an empty store."""
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            parts = line.split("|")
            try:
                if parts[0] == "S" and len(parts) == 5:
                    card = int(parts[1])
                    if card in store.staff or not parts[2]:
                        raise LoadError(lineno, f"bad staff row: {line!r}")
                    store.staff[card] = StaffRecord(
                        card_key=card,
                        name=parts[2],
                        job_spec=parts[3],
                        enrolled_at=parse_timestamp(parts[4]),
                    )
                elif parts[0] == "E" and len(parts) == 6:
                    node, seq, card = parts[1], int(parts[2]), int(parts[3])
                    if store.seen(node, seq):
                        raise LoadError(lineno, f"duplicate event: {line!r}")
                    store.add_event(
                        AttendanceEvent(
                            node=node,
                            seq=seq,
                            card=card,
                            datetime=parse_timestamp(parts[4]),
                            decision=Decision(parts[5]),
                        )
                    )
                else:
                    raise LoadError(lineno, f"bad line: {line!r}")
            except (ValueError, ParseError) as exc:
                raise LoadError(lineno, str(exc)) from exc
        return store


def counted_scans(
    events, window_s: float = DEBOUNCE_WINDOW_S
) -> dict[int, list[AttendanceEvent]]:
    """Granted scans per card with debounced repeats collapsed.

    A scan within ``window_s`` (inclusive) of the previous *counted*
    scan of the same card is folded into it. Events are ordered by
    scan datetime with (node, seq) as a deterministic tie-break, so
    the result is a pure function of the store contents.
    """
    by_card: dict[int, list[AttendanceEvent]] = {}
    for event in events:
        if event.decision is Decision.GRANTED:
            by_card.setdefault(event.card, []).append(event)
    counted: dict[int, list[AttendanceEvent]] = {}
    for card, scans in by_card.items():
        scans.sort(key=lambda e: (epoch_seconds(e.datetime), e.node, e.seq))
        kept: list[AttendanceEvent] = []
        last_t = None
        for event in scans:
            t = epoch_seconds(event.datetime)
            if last_t is None or t - last_t > window_s:
                kept.append(event)
                last_t = t
        counted[card] = kept
    return counted


class AttendanceServer:
    """Ingest pipeline and queries over one attendance store.

    Ingest is serialized by the caller's event loop; queries are
    read-only and never observe a half-applied ingest.
    """

    def __init__(self, store: AttendanceStore | None = None,
                 debounce_s: float = DEBOUNCE_WINDOW_S):
        self.store = store if store is not None else AttendanceStore()
        self.debounce_s = debounce_s
        self.receiver_log: list[str] = []
        self.parse_errors = 0
        self.duplicates = 0
        self._node_names: dict[bytes, str] = {}

    def register_node(self, addr64: bytes, name: str):
        self._node_names[bytes(addr64)] = name

    def node_name(self, addr64: bytes) -> str:
        return self._node_names.get(bytes(addr64), bytes(addr64).hex())

    def enroll(self, name: str, job_spec: str, card_key: int, now: RtcState) -> StaffRecord:
        if not name:
            raise ValueError("name must not be empty")
        if "|" in name or "|" in job_spec:
            raise ValueError("'|' is not allowed in names or jobs")
        if not 0 <= card_key < _CARD_LIMIT:
            raise RangeError(f"card key must fit 32 bits: {card_key}")
        if card_key in self.store.staff:
            raise AlreadyEnrolled(f"card already enrolled: {card_key}")
        record = StaffRecord(card_key=card_key, name=name, job_spec=job_spec, enrolled_at=now)
        self.store.staff[card_key] = record
        return record

    def revoke(self, card_key: int):
        if card_key not in self.store.staff:
            raise KeyError(f"card not enrolled: {card_key}")
        del self.store.staff[card_key]

    def ingest(self, frame: RxIndicator, now: float) -> AttendanceEvent | IngestStatus:
        """Apply one received frame exactly once.

        Duplicates change nothing and log nothing; malformed payloads
        are counted and discarded. Every new payload is persisted with
        its decision and its ASCII portion appended to the receiver
        log.
        """
        try:
            seq, card, stamp = parse_payload(frame.payload)
        except ParseError:
            self.parse_errors += 1
            return IngestStatus.PARSE_ERROR
        node = self.node_name(frame.src64)
        if self.store.seen(node, seq):
            self.duplicates += 1
            return IngestStatus.DUPLICATE
        decision = Decision.GRANTED if card in self.store.staff else Decision.DENIED
        event = AttendanceEvent(
            node=node, seq=seq, card=card, datetime=stamp,
            decision=decision, received_at=now,
        )
        self.store.add_event(event)
        self.receiver_log.append(frame.payload[4:].decode("ascii"))
        return event

    def present(self, at) -> set[int]:
        """Card keys present at ``at`` (a clock state, or virtual seconds).

        A card is present when its counted granted scans up to ``at``
        number odd. Virtual-second queries only see events ingested by
        this process (loaded events carry no receive time). Revoked
        staff never show as present.
        """
        if isinstance(at, RtcState):
            cutoff = epoch_seconds(at)
            events = [e for e in self.store.events if epoch_seconds(e.datetime) <= cutoff]
        else:
            events = [e for e in self.store.events if 0 <= e.received_at <= at]
        counted = counted_scans(events, self.debounce_s)
        inside = {card for card, scans in counted.items() if len(scans) % 2 == 1}
        return inside & self.store.staff.keys()
