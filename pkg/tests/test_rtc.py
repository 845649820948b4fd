"""Clock/calendar model: BCD codec, calendar arithmetic, timestamp text.

The calendar oracle is the standard library's datetime, which is an
independent proleptic-Gregorian day count; the module under test does
its own register math.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta

import pytest
from hypothesis import given, strategies as st

from attnet.errors import InvalidBcd, ParseError, RangeError
from attnet.rtc import (
    Clock,
    RtcState,
    bcd_decode,
    bcd_encode,
    epoch_seconds,
    parse_timestamp,
    render_timestamp,
    tick,
)


def state_at(y, mo, d, h, mi, s, **kw) -> RtcState:
    return RtcState.from_datetime(y, mo, d, h, mi, s, **kw)


@pytest.mark.parametrize("n,expected", [(0, 0x00), (59, 0x59), (7, 0x07), (99, 0x99)])
def test_bcd_encode_examples(n, expected):
    assert bcd_encode(n) == expected


@pytest.mark.parametrize("b,expected", [(0x45, 45), (0x00, 0), (0x99, 99)])
def test_bcd_decode_examples(b, expected):
    assert bcd_decode(b) == expected


@pytest.mark.parametrize("bad", [0x5A, 0xA5, 0xFF])
def test_bcd_decode_rejects_bad_nibbles(bad):
    with pytest.raises(InvalidBcd):
        bcd_decode(bad)


@pytest.mark.parametrize("bad", [-1, 100, 255])
def test_bcd_encode_rejects_out_of_range(bad):
    with pytest.raises(RangeError):
        bcd_encode(bad)


@given(st.integers(0, 99))
def test_bcd_roundtrip(n):
    assert bcd_decode(bcd_encode(n)) == n


@pytest.mark.parametrize(
    "start,expected",
    [
        # month-end rollover
        ((2015, 6, 30, 23, 59, 59), (2015, 7, 1, 0, 0, 0)),
        # leap year: 2016 divisible by 4
        ((2016, 2, 28, 23, 59, 59), (2016, 2, 29, 0, 0, 0)),
        # non-leap February
        ((2015, 2, 28, 23, 59, 59), (2015, 3, 1, 0, 0, 0)),
        # year rollover
        ((2015, 12, 31, 23, 59, 59), (2016, 1, 1, 0, 0, 0)),
    ],
)
def test_tick_one_second_rollovers(start, expected):
    assert tick(state_at(*start), 1).fields() == expected
    # independent check against the stdlib calendar
    assert (datetime(*start) + timedelta(seconds=1)).timetuple()[:6] == expected


def test_tick_halted_clock_is_frozen():
    frozen = state_at(2015, 7, 3, 17, 44, 6, clock_halt=True)
    assert tick(frozen, 1000) == frozen


def test_tick_rejects_negative_elapsed():
    with pytest.raises(RangeError):
        tick(state_at(2015, 1, 1, 0, 0, 0), -1)


def test_tick_weekday_steps_once_per_midnight():
    saturday = state_at(2000, 1, 1, 23, 59, 59)
    assert saturday.day_of_week == 6
    assert tick(saturday, 1).day_of_week == 7
    assert tick(saturday, 1 + 6 * 86400).day_of_week == 6


def test_tick_matches_datetime_oracle_randomized():
    rng = random.Random(0xD51307)
    lo = datetime(2000, 1, 1)
    span = int((datetime(2099, 12, 31, 23, 59, 59) - lo).total_seconds())
    for _ in range(10_000):
        start_s = rng.randrange(span)
        start = lo + timedelta(seconds=start_s)
        elapsed = rng.randrange(span - start_s)
        expected = start + timedelta(seconds=elapsed)
        got = tick(state_at(*start.timetuple()[:6]), elapsed)
        assert got.fields() == expected.timetuple()[:6]
        assert got.day_of_week == expected.isoweekday()


@given(
    st.integers(0, 3_155_759_999),  # seconds covering 2000..2099
    st.integers(0, 10_000_000),
    st.integers(0, 10_000_000),
)
def test_tick_is_additive(start_s, a, b):
    lo = datetime(2000, 1, 1)
    if start_s + a + b >= 3_155_760_000:
        return  # stay inside the century
    start = lo + timedelta(seconds=start_s)
    state = state_at(*start.timetuple()[:6])
    assert tick(tick(state, a), b) == tick(state, a + b)


def test_tick_wraps_the_century_like_the_register_file():
    end = state_at(2099, 12, 31, 23, 59, 59)
    assert tick(end, 1).fields() == (2000, 1, 1, 0, 0, 0)


@pytest.mark.parametrize(
    "fields,text",
    [
        ((2015, 7, 3, 17, 44, 6), "2015/7/3 17:44:6"),
        ((2015, 7, 5, 19, 41, 51), "2015/7/5 19:41:51"),
        ((2000, 1, 1, 0, 0, 0), "2000/1/1 0:0:0"),
    ],
)
def test_render_timestamp_is_unpadded(fields, text):
    assert render_timestamp(state_at(*fields)) == text


def test_parse_timestamp_example():
    assert parse_timestamp("2015/7/3 17:44:6").fields() == (2015, 7, 3, 17, 44, 6)


@pytest.mark.parametrize(
    "bad",
    [
        "2015/13/1 0:0:0",  # month
        "2015/2/29 0:0:0",  # not a leap year
        "2015/7/3 24:0:0",  # hour
        "1999/7/3 1:2:3",  # before the device range
        "15/7/3 1:2:3",  # two-digit year
        "2015-7-3 1:2:3",
        "2015/7/3",
        "",
    ],
)
def test_parse_timestamp_rejects(bad):
    with pytest.raises(ParseError):
        parse_timestamp(bad)


@given(st.integers(0, 3_155_759_999))
def test_render_parse_roundtrip(offset):
    start = datetime(2000, 1, 1) + timedelta(seconds=offset)
    state = state_at(*start.timetuple()[:6])
    again = parse_timestamp(render_timestamp(state))
    assert again.fields() == state.fields()
    assert again == state  # weekday recomputed identically


def test_twelve_hour_mode_encode_decode():
    noon = state_at(2015, 7, 3, 12, 0, 0, mode_12h=True)
    midnight = state_at(2015, 7, 3, 0, 0, 0, mode_12h=True)
    evening = state_at(2015, 7, 3, 17, 44, 6, mode_12h=True)
    assert (noon.hour, midnight.hour, evening.hour) == (12, 0, 17)
    assert render_timestamp(evening) == "2015/7/3 17:44:6"
    assert tick(evening, 3600).hour == 18


def test_epoch_seconds_zero_at_century_start():
    assert epoch_seconds(state_at(2000, 1, 1, 0, 0, 0)) == 0
    assert epoch_seconds(state_at(2000, 1, 2, 0, 0, 1)) == 86401


def test_clock_floors_to_whole_seconds():
    clock = Clock(state_at(2015, 7, 5, 19, 41, 51))
    assert clock.at(0.0).fields() == (2015, 7, 5, 19, 41, 51)
    assert clock.at(1.9).fields() == (2015, 7, 5, 19, 41, 52)


def test_invalid_register_dates_rejected():
    with pytest.raises(RangeError):
        RtcState.from_datetime(2015, 2, 29, 0, 0, 0)
    with pytest.raises(RangeError):
        RtcState.from_datetime(2100, 1, 1, 0, 0, 0)
