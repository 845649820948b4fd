"""Reader-side device: journal first, then framed relay with retry.

Every accepted scan is appended to a local journal before any radio
transmission is attempted, so a record that was ever on the air is
always already on disk. Unacknowledged records are retransmitted,
oldest first, once they have aged past the retry timeout.

Journal format, one entry per line (LF, UTF-8, pure append-only):

    J|<seq>|<card>|<Y/M/D H:M:S>
    A|<seq>

A-lines mark acknowledged sequence numbers; nothing is ever rewritten
in place, so a crash can only cost a partial trailing line.

Wire payload of one record: 4-byte big-endian sequence number followed
by the ASCII text ``ID FOUND -> <card> <Y/M/D H:M:S>``. The binary
prefix gives the server a dedup key while the ASCII portion is printed
verbatim in the receiver log.
"""

from __future__ import annotations

import random
from pathlib import Path

from .errors import ParseError, ReplayError
from .frames import FrameDecoder, TxRequest, TxStatus, encode
from .rtc import RtcState, parse_timestamp, render_timestamp
from .tagcard import NfcTag, Reader, ScanMiss, ScanRecord

RETRY_TIMEOUT_S = 3.0
RETRY_BATCH = 16
WIRE_PREFIX = "ID FOUND -> "
_SEQ_BYTES = 4
_CARD_LIMIT = 1 << 32


def wire_text(record: ScanRecord) -> str:
    """ASCII portion of the payload, exactly as the receiver logs it."""
    return f"{WIRE_PREFIX}{record.card} {render_timestamp(record.datetime)}"


def wire_payload(record: ScanRecord) -> bytes:
    return record.seq.to_bytes(_SEQ_BYTES, "big") + wire_text(record).encode("ascii")


def parse_payload(payload: bytes) -> tuple[int, int, RtcState]:
    """Inverse of :func:`wire_payload`: (seq, card, datetime)."""
    if len(payload) <= _SEQ_BYTES:
        raise ParseError(f"payload too short: {len(payload)} bytes")
    seq = int.from_bytes(payload[:_SEQ_BYTES], "big")
    try:
        text = payload[_SEQ_BYTES:].decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"payload is not ASCII: {exc}") from exc
    if not text.startswith(WIRE_PREFIX):
        raise ParseError(f"missing record prefix: {text!r}")
    card_text, _, stamp = text[len(WIRE_PREFIX):].partition(" ")
    if not card_text.isdigit():
        raise ParseError(f"bad card number: {card_text!r}")
    card = int(card_text)
    if card >= _CARD_LIMIT:
        raise ParseError(f"card number exceeds 32 bits: {card}")
    return seq, card, parse_timestamp(stamp)


class Journal:
    """Append-only scan log backed by one text file."""

    def __init__(self, path, _replayed=None):
        self.path = Path(path)
        self.records: list[ScanRecord] = []
        self._by_seq: dict[int, ScanRecord] = {}
        self.discarded_partial = 0
        if _replayed is not None:
            self.records, self._by_seq, self.discarded_partial = _replayed
        self._handle = open(self.path, "a", encoding="utf-8", newline="")

    def append_record(self, record: ScanRecord):
        """Persist one scan; completes (flushed) before returning."""
        line = f"J|{record.seq}|{record.card}|{render_timestamp(record.datetime)}\n"
        self._handle.write(line)
        self._handle.flush()
        self.records.append(record)
        self._by_seq[record.seq] = record

    def append_ack(self, seq: int):
        self._handle.write(f"A|{seq}\n")
        self._handle.flush()
        self._by_seq[seq].acked = True

    def close(self):
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def unacked(self) -> list[ScanRecord]:
        return [r for r in self.records if not r.acked]

    @classmethod
    def replay(cls, path) -> "Journal":
        """Rebuild journal state from disk and reopen it for appending.

        Complete lines are restored exactly; a partial trailing line
        (crash artifact) is truncated away and counted in
        ``discarded_partial``. A corrupt *complete* line raises
        :class:`ReplayError` naming its line number.
        """
        path = Path(path)
        raw = path.read_bytes() if path.exists() else b""
        discarded = 0
        if raw and not raw.endswith(b"\n"):
            cut = raw.rfind(b"\n") + 1
            raw = raw[:cut]
            discarded = 1
            with open(path, "r+b") as fh:
                fh.truncate(cut)
        records: list[ScanRecord] = []
        by_seq: dict[int, ScanRecord] = {}
        for lineno, line in enumerate(raw.decode("utf-8", "replace").splitlines(), 1):
            parts = line.split("|")
            if parts[0] == "J":
                if len(parts) != 4:
                    raise ReplayError(lineno, f"bad field count: {line!r}")
                try:
                    seq, card = int(parts[1]), int(parts[2])
                    stamp = parse_timestamp(parts[3])
                except (ValueError, ParseError) as exc:
                    raise ReplayError(lineno, str(exc)) from exc
                if seq in by_seq or not 0 <= card < _CARD_LIMIT:
                    raise ReplayError(lineno, f"bad record: {line!r}")
                record = ScanRecord(seq=seq, card=card, datetime=stamp)
                records.append(record)
                by_seq[seq] = record
            elif parts[0] == "A":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise ReplayError(lineno, f"bad ack line: {line!r}")
                seq = int(parts[1])
                if seq not in by_seq or by_seq[seq].acked:
                    raise ReplayError(lineno, f"ack without record: {line!r}")
                by_seq[seq].acked = True
            else:
                raise ReplayError(lineno, f"unknown line type: {line!r}")
        return cls(path, _replayed=(records, by_seq, discarded))


class EdgeNode:
    """State machine tying one reader, its journal, and the radio together.

    Driven entirely by event-loop callbacks (scan attempts, inbound
    status frames, the retry timer); no internal concurrency. Acks are
    matched through the one-byte frame id, which cycles 1..255; the id
    space is ample because at most a retry batch is ever in flight per
    timeout window.
    """

    def __init__(
        self,
        node_id: str,
        reader: Reader,
        journal: Journal,
        radio,
        coordinator_id: str,
        coordinator_addr64: bytes,
        rng: random.Random,
        retry_timeout_s: float = RETRY_TIMEOUT_S,
        retry_batch: int = RETRY_BATCH,
    ):
        self.node_id = node_id
        self.reader = reader
        self.journal = journal
        self.radio = radio
        self.coordinator_id = coordinator_id
        self.coordinator_addr64 = coordinator_addr64
        self.retry_timeout_s = retry_timeout_s
        self.retry_batch = retry_batch
        self._rng = rng
        self._decoder = FrameDecoder()
        self._pending: dict[int, ScanRecord] = {}
        self._last_attempt: dict[int, float] = {}
        self._inflight: dict[int, int] = {}  # frame_id -> seq
        self._next_frame_id = 1
        self.journal_failures = 0
        self.retransmits = 0

    @property
    def unacked_count(self) -> int:
        return len(self._pending)

    def handle_scan(
        self, tag: NfcTag, distance_cm: float, now: float
    ) -> ScanRecord | ScanMiss | None:
        """Run one scan attempt; journal, then transmit.

        Returns the record on success, the miss reason from the
        reader, or None when the journal write failed (the scan is
        rejected and the sequence counter rolled back).
        """
        outcome = self.reader.scan(tag, distance_cm, now, self._rng)
        if not isinstance(outcome, ScanRecord):
            return outcome
        try:
            self.journal.append_record(outcome)
        except OSError:
            self.reader.rollback_last()
            self.journal_failures += 1
            return None
        self._pending[outcome.seq] = outcome
        self._transmit(outcome, now)
        return outcome

    def _transmit(self, record: ScanRecord, now: float):
        frame_id = self._next_frame_id
        self._next_frame_id = frame_id + 1 if frame_id < 255 else 1
        self._inflight[frame_id] = record.seq
        frame = TxRequest(
            frame_id=frame_id,
            dest64=self.coordinator_addr64,
            payload=wire_payload(record),
        )
        self._last_attempt[record.seq] = now
        self.radio.send(self.node_id, self.coordinator_id, encode(frame))

    def on_radio(self, event):
        """Radio delivery callback: absorb status frames."""
        for frame in self._decoder.feed(event.raw):
            if isinstance(frame, TxStatus) and frame.delivery_status == 0:
                self._on_ack(frame.frame_id)

    def _on_ack(self, frame_id: int):
        seq = self._inflight.pop(frame_id, None)
        if seq is None:
            return
        record = self._pending.pop(seq, None)
        if record is None:
            return  # a retransmit of this record was already confirmed
        record.acked = True
        self.journal.append_ack(seq)
        self._last_attempt.pop(seq, None)

    def retransmit_pending(self, now: float) -> int:
        """Re-send aged unacked records, oldest first, up to one batch."""
        due = [
            seq
            for seq in sorted(self._pending)
            if now - self._last_attempt[seq] >= self.retry_timeout_s
        ][: self.retry_batch]
        for seq in due:
            self._transmit(self._pending[seq], now)
        self.retransmits += len(due)
        return len(due)
