"""Edge node: wire payloads, the append-only journal, and retry logic."""

from __future__ import annotations

import random

import pytest

from attnet.edgenode import (
    EdgeNode,
    Journal,
    parse_payload,
    wire_payload,
    wire_text,
)
from attnet.errors import ParseError, ReplayError
from attnet.frames import TxStatus, encode
from attnet.rtc import Clock, RtcState
from attnet.tagcard import NfcTag, Reader, ReaderConfig, ScanRecord

START = RtcState.from_datetime(2015, 7, 5, 19, 41, 51)
COORD64 = (0).to_bytes(8, "big")


def record(seq=1, card=1374762826, dt=START) -> ScanRecord:
    return ScanRecord(seq=seq, card=card, datetime=dt)


class FakeRadio:
    """Collects sends; delivery is orchestrated by the test."""

    def __init__(self):
        self.sent = []

    def send(self, src, dst, raw):
        self.sent.append((src, dst, bytes(raw)))
        return []


class FakeEvent:
    def __init__(self, raw):
        self.raw = raw


def make_node(tmp_path, radio=None, **kw) -> EdgeNode:
    journal = Journal(tmp_path / "journal.log")
    return EdgeNode(
        node_id="door",
        reader=Reader(ReaderConfig(), Clock(START)),
        journal=journal,
        radio=radio if radio is not None else FakeRadio(),
        coordinator_id="server",
        coordinator_addr64=COORD64,
        rng=random.Random(0),
        **kw,
    )


def test_wire_payload_byte_exact():
    payload = wire_payload(record())
    assert payload[:4] == b"\x00\x00\x00\x01"
    assert payload[4:] == b"ID FOUND -> 1374762826 2015/7/5 19:41:51"


def test_wire_text_shape():
    text = wire_text(record())
    head, sep, tail = text.partition("-> ")
    assert (head, sep) == ("ID FOUND ", "-> ")
    assert tail.count(" ") == 2  # card, date, time


def test_parse_payload_roundtrip():
    r = record(seq=77, card=3293375039)
    seq, card, stamp = parse_payload(wire_payload(r))
    assert (seq, card) == (77, 3293375039)
    assert stamp == r.datetime


@pytest.mark.parametrize(
    "payload",
    [
        b"",
        b"\x00\x00\x00\x01",
        b"\x00\x00\x00\x01NOPE -> 1 2015/7/5 19:41:51",
        b"\x00\x00\x00\x01ID FOUND -> abc 2015/7/5 19:41:51",
        b"\x00\x00\x00\x01ID FOUND -> 1 2015/13/5 19:41:51",
        b"\x00\x00\x00\x01ID FOUND -> 99999999999 2015/7/5 19:41:51",
        b"\x00\x00\x00\x01ID FOUND -> 1 2015/7/5\xff19:41:51",
    ],
)
def test_parse_payload_rejects(payload):
    with pytest.raises(ParseError):
        parse_payload(payload)


def test_journal_roundtrip(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        for seq in (1, 2, 3):
            journal.append_record(record(seq=seq, card=100 + seq))
        journal.append_ack(2)
    replayed = Journal.replay(path)
    assert [r.seq for r in replayed.records] == [1, 2, 3]
    assert [r.card for r in replayed.records] == [101, 102, 103]
    assert [r.acked for r in replayed.records] == [False, True, False]
    assert replayed.discarded_partial == 0
    replayed.close()


def test_journal_replay_discards_partial_tail(tmp_path):
    path = tmp_path / "j.log"
    with Journal(path) as journal:
        journal.append_record(record(seq=1))
        journal.append_record(record(seq=2))
        journal.append_record(record(seq=3))
    raw = path.read_bytes()
    path.write_bytes(raw[:-7])  # tear the last line mid-byte
    replayed = Journal.replay(path)
    assert [r.seq for r in replayed.records] == [1, 2]
    assert replayed.discarded_partial == 1
    # the torn tail is gone for good, so appends stay line-aligned
    replayed.append_record(record(seq=3))
    replayed.close()
    again = Journal.replay(path)
    assert [r.seq for r in again.records] == [1, 2, 3]
    again.close()


def test_journal_replay_empty_file(tmp_path):
    path = tmp_path / "j.log"
    path.write_bytes(b"")
    replayed = Journal.replay(path)
    assert replayed.records == []
    assert replayed.discarded_partial == 0
    replayed.close()


@pytest.mark.parametrize(
    "lines,bad_line",
    [
        ("J|1|100|2015/7/5 19:41:51\nX|2\n", 2),
        ("J|one|100|2015/7/5 19:41:51\n", 1),
        ("J|1|100|2015/7/5 19:41:51\nJ|1|200|2015/7/5 19:41:52\n", 2),
        ("A|1\n", 1),
        ("J|1|100|2015/7/5 19:41:51|extra\n", 1),
    ],
)
def test_journal_replay_corrupt_complete_line(tmp_path, lines, bad_line):
    path = tmp_path / "j.log"
    path.write_text(lines, encoding="utf-8")
    with pytest.raises(ReplayError) as info:
        Journal.replay(path)
    assert info.value.line == bad_line


def test_scan_journals_before_transmit(tmp_path):
    radio = FakeRadio()
    node = make_node(tmp_path, radio)
    outcome = node.handle_scan(NfcTag(bytes([0x51, 0xF1, 0x37, 0x4A])), 2.0, 0.0)
    assert isinstance(outcome, ScanRecord)
    assert len(node.journal.records) == 1
    assert len(radio.sent) == 1
    # the journaled record is exactly what went on the air
    src, dst, raw = radio.sent[0]
    assert (src, dst) == ("door", "server")


def test_journal_failure_rejects_scan_without_transmit(tmp_path):
    radio = FakeRadio()
    node = make_node(tmp_path, radio)

    def boom(record):
        raise OSError("disk full")

    node.journal.append_record = boom
    assert node.handle_scan(NfcTag(bytes(4)), 2.0, 0.0) is None
    assert radio.sent == []
    assert node.journal_failures == 1
    assert node.reader.next_seq == 1  # counter not advanced
    # and the node keeps working afterwards
    del node.journal.append_record
    accepted = node.handle_scan(NfcTag(bytes(4)), 2.0, 0.1)  # no cooldown residue
    assert isinstance(accepted, ScanRecord)
    assert accepted.seq == 1


def test_ack_marks_record_and_journal(tmp_path):
    radio = FakeRadio()
    node = make_node(tmp_path, radio)
    rec = node.handle_scan(NfcTag(bytes(4)), 2.0, 0.0)
    assert node.unacked_count == 1
    node.on_radio(FakeEvent(encode(TxStatus(frame_id=1))))
    assert node.unacked_count == 0
    assert rec.acked
    assert "A|1" in (node.journal.path.read_text()).splitlines()[-1]
    # a duplicated ack is ignored
    node.on_radio(FakeEvent(encode(TxStatus(frame_id=1))))
    assert node.unacked_count == 0


def test_failed_status_does_not_ack(tmp_path):
    node = make_node(tmp_path)
    node.handle_scan(NfcTag(bytes(4)), 2.0, 0.0)
    node.on_radio(FakeEvent(encode(TxStatus(frame_id=1, delivery_status=0x21))))
    assert node.unacked_count == 1


def _sent_seqs(radio):
    from attnet.frames import FrameDecoder
    from attnet.edgenode import parse_payload

    seqs = []
    for _, _, raw in radio.sent:
        (frame,) = FrameDecoder().feed(raw)
        seqs.append(parse_payload(frame.payload)[0])
    return seqs


def test_retransmit_batches_oldest_first(tmp_path):
    radio = FakeRadio()
    node = make_node(tmp_path, radio)
    for k in range(20):
        node.handle_scan(NfcTag(bytes([0, 0, 0, k])), 2.0, 0.5 * (k + 1))
    assert node.unacked_count == 20
    radio.sent.clear()

    assert node.retransmit_pending(100.0) == 16
    assert _sent_seqs(radio) == list(range(1, 17))  # oldest first

    radio.sent.clear()
    assert node.retransmit_pending(100.0) == 4  # the 16 are now fresh
    assert _sent_seqs(radio) == [17, 18, 19, 20]
    assert node.retransmit_pending(100.0) == 0


def test_retransmit_nothing_when_all_acked(tmp_path):
    node = make_node(tmp_path)
    node.handle_scan(NfcTag(bytes(4)), 2.0, 0.0)
    node.on_radio(FakeEvent(encode(TxStatus(frame_id=1))))
    assert node.retransmit_pending(50.0) == 0


def test_retransmit_respects_age_threshold(tmp_path):
    node = make_node(tmp_path)
    node.handle_scan(NfcTag(bytes(4)), 2.0, 0.0)
    assert node.retransmit_pending(2.9) == 0
    assert node.retransmit_pending(3.0) == 1  # aged exactly one timeout
