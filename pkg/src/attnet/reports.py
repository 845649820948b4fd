"""Attendance analytics and check-in method comparisons.

The method comparison is a linear service-time model: manual sign-in
takes 30 s per worker, RFID badge-in 2 s, and contactless tag-in
0.5 s. ``curve_data`` generalizes the comparison table to arbitrary
worker counts for plotting; the standard table uses 1, 10, 60 and 100
workers.

Daily reports and presence both run on debounced granted scans (see
:func:`attnet.server.counted_scans`), so a burst of rescans at the
door counts as one attendance action.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import RangeError
from .rtc import RtcState
from .server import AttendanceStore, counted_scans
from .scenario import Scenario
from . import sim


class Method(Enum):
    MANUAL = "Manual"
    RFID = "RFID"
    NFC = "NFC"


PER_WORKER_SECONDS = {Method.MANUAL: 30.0, Method.RFID: 2.0, Method.NFC: 0.5}
TABLE_WORKER_COUNTS = (1, 10, 60, 100)


@dataclass(frozen=True)
class BusinessWindow:
    """Working-hours window as seconds from midnight."""

    start_s: int = 9 * 3600
    end_s: int = 17 * 3600

    def __post_init__(self):
        if not 0 <= self.start_s <= self.end_s <= 24 * 3600:
            raise ValueError(f"bad business window: {self.start_s}..{self.end_s}")

    @classmethod
    def from_text(cls, text: str) -> "BusinessWindow":
        """Parse ``H:MM-H:MM``, e.g. ``9:00-17:00``."""
        try:
            start, end = text.split("-")
            sh, sm = (int(p) for p in start.split(":"))
            eh, em = (int(p) for p in end.split(":"))
        except ValueError as exc:
            raise ValueError(f"bad window spec: {text!r}") from exc
        return cls(start_s=sh * 3600 + sm * 60, end_s=eh * 3600 + em * 60)


DEFAULT_BUSINESS_WINDOW = BusinessWindow()


@dataclass(frozen=True)
class DayReport:
    """One card's day: first/last counted scan and lateness."""

    card: int
    name: str
    check_in: RtcState
    check_out: RtcState
    late: bool
    scan_count: int


@dataclass(frozen=True)
class LatencyRow:
    node: str
    seq: int
    card: int
    scan_t: float
    stored_t: float

    @property
    def latency_s(self) -> float:
        return self.stored_t - self.scan_t


def throughput(method: Method, n_workers: int) -> float:
    """Total seconds for ``n_workers`` to check in with ``method``."""
    if n_workers < 0:
        raise RangeError(f"worker count must be >= 0: {n_workers}")
    return PER_WORKER_SECONDS[method] * n_workers


def speedup_percent(baseline_s: float, new_s: float) -> float:
    """Percentage of the baseline time saved by the new method."""
    if baseline_s <= 0:
        raise RangeError(f"baseline must be positive: {baseline_s}")
    return 100.0 * (baseline_s - new_s) / baseline_s


def curve_data(
    methods=tuple(Method), worker_counts=TABLE_WORKER_COUNTS
) -> list[tuple[str, int, float]]:
    """(method, workers, seconds) rows for the comparison curves."""
    return [
        (method.value, n, throughput(method, n))
        for method in methods
        for n in worker_counts
    ]


def table2_rows() -> list[tuple[str, int, float]]:
    """The standard 12-cell comparison table."""
    return curve_data()


def _time_of_day_s(state: RtcState) -> int:
    return state.hour * 3600 + state.minute * 60 + state.second


def daily_report(
    store: AttendanceStore,
    date: tuple[int, int, int],
    window: BusinessWindow = DEFAULT_BUSINESS_WINDOW,
    debounce_s: float = 60.0,
) -> list[DayReport]:
    """Per-card check-in/out rows for one calendar date, sorted by card.

    Only enrolled cards with at least one counted granted scan that
    date appear. ``late`` means the first counted scan fell strictly
    after the window start.
    """
    day_events = [
        e
        for e in store.events
        if (e.datetime.year, e.datetime.month, e.datetime.day) == tuple(date)
        and e.card in store.staff
    ]
    reports = []
    for card, scans in sorted(counted_scans(day_events, debounce_s).items()):
        if not scans:
            continue
        first, last = scans[0], scans[-1]
        reports.append(
            DayReport(
                card=card,
                name=store.staff[card].name,
                check_in=first.datetime,
                check_out=last.datetime,
                late=_time_of_day_s(first.datetime) > window.start_s,
                scan_count=len(scans),
            )
        )
    return reports


def end_to_end_latency(scenario: Scenario, debounce_s: float = 60.0) -> list[LatencyRow]:
    """Run a scenario and report scan-to-stored delay per record."""
    result = sim.run_scenario(scenario, debounce_s=debounce_s)
    return latency_rows(result)


def latency_rows(result) -> list[LatencyRow]:
    """Latency rows from a finished simulation, in (node, seq) order."""
    rows = [
        LatencyRow(
            node=event.node,
            seq=event.seq,
            card=event.card,
            scan_t=result.scan_times[(event.node, event.seq)],
            stored_t=event.received_at,
        )
        for event in result.server.store.events
    ]
    rows.sort(key=lambda r: (r.node, r.seq))
    return rows
