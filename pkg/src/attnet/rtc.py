"""Software model of a DS1307-style BCD clock/calendar.

Register values are held in binary-coded decimal exactly as the part
stores them; calendar math converts to plain integers, advances, and
converts back. The device spans 2000-01-01 through 2099-12-31, where
"year divisible by 4" is an exact leap rule, and wraps back to 2000
past the end of the century like the real register file.

Timestamps render as ``Y/M/D H:M:S`` with no zero padding on any
field; that exact text is the single interchange format used in
journal lines, wire payloads, and receiver logs.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass, replace

from .errors import InvalidBcd, ParseError, RangeError

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
_SECONDS_PER_DAY = 86400
_DAYS_PER_CENTURY = 36525  # 2000-01-01 .. 2099-12-31 inclusive
_PM_BIT = 0x20

_TIMESTAMP_RE = re.compile(
    r"(\d{4})/(\d{1,2})/(\d{1,2}) (\d{1,2}):(\d{1,2}):(\d{1,2})"
)


def bcd_encode(n: int) -> int:
    """Pack 0..99 into one BCD byte (tens in the high nibble)."""
    if not 0 <= n <= 99:
        raise RangeError(f"BCD value out of range: {n}")
    return ((n // 10) << 4) | (n % 10)


def bcd_decode(b: int) -> int:
    """Unpack one BCD byte; both nibbles must be decimal digits."""
    if not 0 <= b <= 0xFF:
        raise RangeError(f"not a byte: {b}")
    hi, lo = b >> 4, b & 0x0F
    if hi > 9 or lo > 9:
        raise InvalidBcd(f"nibble > 9 in 0x{b:02X}")
    return 10 * hi + lo


def is_leap_year(year: int) -> bool:
    if not 2000 <= year <= 2099:
        raise RangeError(f"year out of device range: {year}")
    return year % 4 == 0


def days_in_month(year: int, month: int) -> int:
    if not 1 <= month <= 12:
        raise RangeError(f"month out of range: {month}")
    if month == 2 and is_leap_year(year):
        return 29
    return _DAYS_IN_MONTH[month - 1]


def _days_before_year(y: int) -> int:
    # y counts from 2000; leap years before it are 2000, 2004, ...
    return 365 * y + (y + 3) // 4


def _days_before_month(year: int, month: int) -> int:
    return sum(_DAYS_IN_MONTH[: month - 1]) + (month > 2 and is_leap_year(year))


def _day_number(year: int, month: int, day: int) -> int:
    """Days since 2000-01-01."""
    return _days_before_year(year - 2000) + _days_before_month(year, month) + day - 1


def _weekday(day_number: int) -> int:
    # 2000-01-01 was a Saturday; 1 = Monday .. 7 = Sunday.
    return (day_number + 5) % 7 + 1


@dataclass(frozen=True)
class RtcState:
    """One snapshot of the clock's register file.

    All ``*_bcd`` fields are raw register bytes. ``hours_bcd`` holds
    0..23 in 24-hour mode; in 12-hour mode it holds 1..12 with the PM
    flag in bit 5. ``year_bcd`` 00..99 means 2000..2099.
    """

    seconds_bcd: int
    minutes_bcd: int
    hours_bcd: int
    day_of_week: int
    date_bcd: int
    month_bcd: int
    year_bcd: int
    clock_halt: bool = False
    mode_12h: bool = False

    def __post_init__(self):
        if bcd_decode(self.seconds_bcd) > 59:
            raise RangeError(f"seconds out of range: 0x{self.seconds_bcd:02X}")
        if bcd_decode(self.minutes_bcd) > 59:
            raise RangeError(f"minutes out of range: 0x{self.minutes_bcd:02X}")
        if self.mode_12h:
            if not 1 <= bcd_decode(self.hours_bcd & ~_PM_BIT) <= 12:
                raise RangeError(f"12h hours out of range: 0x{self.hours_bcd:02X}")
        elif bcd_decode(self.hours_bcd) > 23:
            raise RangeError(f"hours out of range: 0x{self.hours_bcd:02X}")
        if not 1 <= self.day_of_week <= 7:
            raise RangeError(f"day of week out of range: {self.day_of_week}")
        month = bcd_decode(self.month_bcd)
        if not 1 <= month <= 12:
            raise RangeError(f"month out of range: {month}")
        year = 2000 + bcd_decode(self.year_bcd)
        date = bcd_decode(self.date_bcd)
        if not 1 <= date <= days_in_month(year, month):
            raise RangeError(f"date {date} invalid for {year}-{month:02d}")

    @classmethod
    def from_datetime(
        cls,
        year: int,
        month: int,
        day: int,
        hour: int,
        minute: int,
        second: int,
        *,
        mode_12h: bool = False,
        clock_halt: bool = False,
    ) -> "RtcState":
        """Build a state from plain calendar fields (hour always 0..23)."""
        if not 2000 <= year <= 2099:
            raise RangeError(f"year out of device range: {year}")
        if not 0 <= hour <= 23:
            raise RangeError(f"hour out of range: {hour}")
        if mode_12h:
            pm = hour >= 12
            h12 = hour % 12 or 12
            hours_bcd = bcd_encode(h12) | (_PM_BIT if pm else 0)
        else:
            hours_bcd = bcd_encode(hour)
        return cls(
            seconds_bcd=bcd_encode(second),
            minutes_bcd=bcd_encode(minute),
            hours_bcd=hours_bcd,
            day_of_week=_weekday(_day_number(year, month, day)),
            date_bcd=bcd_encode(day),
            month_bcd=bcd_encode(month),
            year_bcd=bcd_encode(year - 2000),
            clock_halt=clock_halt,
            mode_12h=mode_12h,
        )

    @property
    def year(self) -> int:
        return 2000 + bcd_decode(self.year_bcd)

    @property
    def month(self) -> int:
        return bcd_decode(self.month_bcd)

    @property
    def day(self) -> int:
        return bcd_decode(self.date_bcd)

    @property
    def hour(self) -> int:
        """Hour of day 0..23 regardless of register mode."""
        if not self.mode_12h:
            return bcd_decode(self.hours_bcd)
        h12 = bcd_decode(self.hours_bcd & ~_PM_BIT)
        return h12 % 12 + (12 if self.hours_bcd & _PM_BIT else 0)

    @property
    def minute(self) -> int:
        return bcd_decode(self.minutes_bcd)

    @property
    def second(self) -> int:
        return bcd_decode(self.seconds_bcd)

    def fields(self) -> tuple[int, int, int, int, int, int]:
        return (self.year, self.month, self.day, self.hour, self.minute, self.second)


def epoch_seconds(state: RtcState) -> int:
    """Seconds since 2000-01-01 00:00:00."""
    days = _day_number(state.year, state.month, state.day)
    return days * _SECONDS_PER_DAY + state.hour * 3600 + state.minute * 60 + state.second


def tick(state: RtcState, elapsed_s: int) -> RtcState:
    """Advance the calendar by ``elapsed_s`` whole seconds.

    Month-end and leap-day rollover follow the Gregorian rules for
    2000..2099; the day-of-week register steps once per midnight. A
    halted clock is returned unchanged.
    """
    elapsed = operator.index(elapsed_s)
    if elapsed < 0:
        raise RangeError(f"elapsed seconds must be >= 0: {elapsed}")
    if state.clock_halt or elapsed == 0:
        return state

    old_day = _day_number(state.year, state.month, state.day)
    total = epoch_seconds(state) + elapsed
    day_raw, rem = divmod(total, _SECONDS_PER_DAY)
    hour, rem = divmod(rem, 3600)
    minute, second = divmod(rem, 60)

    day = day_raw % _DAYS_PER_CENTURY  # century wrap, as the hardware would
    year = 2000
    while True:
        length = 366 if is_leap_year(year) else 365
        if day < length:
            break
        day -= length
        year += 1
    month = 1
    while day >= days_in_month(year, month):
        day -= days_in_month(year, month)
        month += 1

    dow = (state.day_of_week - 1 + (day_raw - old_day)) % 7 + 1
    advanced = RtcState.from_datetime(
        year, month, day + 1, hour, minute, second,
        mode_12h=state.mode_12h, clock_halt=state.clock_halt,
    )
    return replace(advanced, day_of_week=dow)


def render_timestamp(state: RtcState) -> str:
    """Format as ``Y/M/D H:M:S`` with unpadded fields, 24-hour time."""
    y, mo, d, h, mi, s = state.fields()
    return f"{y}/{mo}/{d} {h}:{mi}:{s}"


def parse_timestamp(text: str) -> RtcState:
    """Inverse of :func:`render_timestamp`; rejects out-of-range fields."""
    m = _TIMESTAMP_RE.fullmatch(text)
    if m is None:
        raise ParseError(f"bad timestamp: {text!r}")
    y, mo, d, h, mi, s = (int(g) for g in m.groups())
    if not 2000 <= y <= 2099:
        raise ParseError(f"year out of device range: {text!r}")
    if not (1 <= mo <= 12 and 1 <= d <= days_in_month(y, mo)):
        raise ParseError(f"bad calendar date: {text!r}")
    if h > 23 or mi > 59 or s > 59:
        raise ParseError(f"bad time of day: {text!r}")
    return RtcState.from_datetime(y, mo, d, h, mi, s)


class Clock:
    """Maps virtual seconds onto an RTC started at a fixed instant."""

    def __init__(self, start: RtcState):
        self.start = start

    def at(self, t: float) -> RtcState:
        """State shown at virtual time ``t`` (1-second register resolution)."""
        return tick(self.start, int(t))
