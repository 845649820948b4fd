"""Contactless tag and proximity-reader models for the scan front end.

Tags are MIFARE Classic 1K style: a 4-byte non-unique id that maps
big-endian onto the decimal card number shown everywhere downstream
(0x51F1374A reads as card 1374762826). The reader accepts a tag held
within range, enforces a rescan cooldown, and can be configured with a
misread probability for error-rate experiments; a misread simply
yields no record.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .rtc import Clock, RtcState


@dataclass(frozen=True)
class NfcTag:
    uid: bytes
    kind: str = "MifareClassic1K"

    def __post_init__(self):
        if len(self.uid) != 4:
            raise ValueError(f"uid must be 4 bytes, got {len(self.uid)}")
        object.__setattr__(self, "uid", bytes(self.uid))


def card_number(uid: bytes) -> int:
    """Big-endian card number of a 4-byte tag id."""
    if len(uid) != 4:
        raise ValueError(f"uid must be 4 bytes, got {len(uid)}")
    return int.from_bytes(uid, "big")


@dataclass(frozen=True)
class ReaderConfig:
    max_range_cm: float = 5.0
    cooldown_s: float = 0.5
    misread_prob: float = 0.0

    def __post_init__(self):
        if self.max_range_cm <= 0:
            raise ValueError(f"max_range_cm must be positive: {self.max_range_cm}")
        if self.cooldown_s < 0:
            raise ValueError(f"cooldown_s must be >= 0: {self.cooldown_s}")
        if not 0.0 <= self.misread_prob <= 1.0:
            raise ValueError(f"misread_prob outside [0, 1]: {self.misread_prob}")


class ScanMiss(Enum):
    """Why a scan attempt produced no record."""

    OUT_OF_RANGE = "out_of_range"
    COOLDOWN = "cooldown"
    READ_ERROR = "read_error"


@dataclass
class ScanRecord:
    """One accepted tag read, pending acknowledgement from the server."""

    seq: int
    card: int
    datetime: RtcState
    acked: bool = False


class Reader:
    """Stateful scan gate; owned by exactly one edge node.

    Range is inclusive at ``max_range_cm`` and the cooldown is
    inclusive at ``cooldown_s``: a rescan exactly one cooldown after
    the last accepted read is accepted. Sequence numbers are assigned
    per reader, strictly increasing from 1.
    """

    def __init__(self, config: ReaderConfig, clock: Clock, first_seq: int = 1):
        self.config = config
        self.clock = clock
        self._next_seq = first_seq
        self._last_scan: float | None = None
        self._before_last: tuple[float | None, int] | None = None

    @property
    def next_seq(self) -> int:
        return self._next_seq

    @property
    def last_scan_at(self) -> float | None:
        return self._last_scan

    def scan(
        self, tag: NfcTag, distance_cm: float, now: float, rng: random.Random
    ) -> ScanRecord | ScanMiss:
        if distance_cm > self.config.max_range_cm:
            return ScanMiss.OUT_OF_RANGE
        if self._last_scan is not None and now - self._last_scan < self.config.cooldown_s:
            return ScanMiss.COOLDOWN
        if self.config.misread_prob > 0 and rng.random() < self.config.misread_prob:
            return ScanMiss.READ_ERROR
        self._before_last = (self._last_scan, self._next_seq)
        self._last_scan = now
        seq = self._next_seq
        self._next_seq += 1
        return ScanRecord(seq=seq, card=card_number(tag.uid), datetime=self.clock.at(now))

    def rollback_last(self):
        """Undo the most recent accepted scan's state changes.

        Used by the edge node when the journal write fails, so the
        rejected scan neither consumes a sequence number nor starts a
        cooldown.
        """
        if self._before_last is None:
            raise RuntimeError("no scan to roll back")
        self._last_scan, self._next_seq = self._before_last
        self._before_last = None
