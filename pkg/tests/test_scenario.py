"""Scenario file parsing and validation."""

from __future__ import annotations

import pytest

from attnet.errors import ScenarioError
from attnet.scenario import load_scenario, parse_scenario
from tests.conftest import SCENARIO_DIR

GOOD = """\
# comment line
SEED 42
START 2015/7/5 19:41:51
NODE readerA dist_m=15 drop=0.1 dup=0.05 latency_s=1 range_cm=5 cooldown_s=0.5
NODE readerB dist_m=25 rtc="2015/7/5 18:39:25"
STAFF 1374762826 "Ama Mensah" "Engineer"
EVENT 0 readerA 51f1374a 2.0
EVENT 2.5 readerB 51f1374a 3.0   # trailing comment
LINK 30 readerA drop=0
"""


def test_parse_good_scenario():
    scenario = parse_scenario(GOOD)
    assert scenario.seed == 42
    assert scenario.start.fields() == (2015, 7, 5, 19, 41, 51)
    assert [n.node_id for n in scenario.nodes] == ["readerA", "readerB"]
    assert scenario.nodes[0].link.drop_prob == 0.1
    assert scenario.nodes[0].reader.cooldown_s == 0.5
    assert scenario.nodes[1].rtc_start.fields() == (2015, 7, 5, 18, 39, 25)
    assert scenario.staff[0].name == "Ama Mensah"
    assert [e.t for e in scenario.events] == [0.0, 2.5]
    assert scenario.events[0].uid == bytes([0x51, 0xF1, 0x37, 0x4A])
    assert scenario.link_changes[0].t == 30.0
    assert scenario.link_changes[0].link.drop_prob == 0.0


def test_link_change_merges_over_previous_settings():
    scenario = parse_scenario(GOOD)
    change = scenario.link_changes[0].link
    assert change.distance_m == 15.0  # carried over from the NODE line
    assert change.dup_prob == 0.05


def test_defaults_when_directives_absent():
    scenario = parse_scenario('NODE a dist_m=5\nEVENT 0 a 00000001 1.0\n')
    assert scenario.seed == 0
    assert scenario.start.fields() == (2000, 1, 1, 9, 0, 0)
    assert scenario.nodes[0].reader.max_range_cm == 5.0
    assert scenario.nodes[0].link.latency_s == 1.0
    assert scenario.nodes[0].link.sensitivity_dbm == -100.0


@pytest.mark.parametrize(
    "text,line",
    [
        ("SEED x\n", 1),
        ("NODE a dist_m=5\nNODE a dist_m=5\n", 2),
        ("NODE a dist_m=5\nEVENT 1 a 0000001 1.0\n", 2),  # 7 hex digits
        ("NODE a dist_m=5\nEVENT 1 b 00000001 1.0\n", 2),  # undeclared node
        ("EVENT 1 a 00000001 1.0\n", 1),
        ("NODE a dist_m=5\nEVENT 2 a 00000001 1\nEVENT 1 a 00000001 1\n", 3),
        ("NODE a dist_m=5\nLINK 5 a drop=0\nLINK 1 a drop=1\n", 3),
        ("NODE a dist_m=5 warp=9\n", 1),
        ("NODE a dist_m=0\n", 1),
        ("NODE a dist_m=5 drop=1.5\n", 1),
        ("START nope\n", 1),
        ("WHAT 1 2\n", 1),
        ("STAFF 1 OnlyTwo\n", 1),
        ('STAFF 99999999999 "A" "B"\n', 1),
        ('NODE a dist_m=5\nSTAFF 5 "A" "B"\nSTAFF 5 "C" "D"\n', 3),
        ('NODE a dist_m=5\nEVENT -1 a 00000001 1\n', 2),
        ('NODE bad|name dist_m=5\n', 1),
        ('NODE a dist_m=5\nLINK 1 a\n', 2),
        ('STAFF 5 "Unterminated name\n', 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.line == line


def test_bundled_scenarios_parse():
    fig6 = load_scenario(SCENARIO_DIR / "fig6.scn")
    assert len(fig6.events) == 22
    assert len(fig6.staff) == 6
    table2 = load_scenario(SCENARIO_DIR / "table2.scn")
    assert len(table2.events) == 100
    assert table2.events[-1].t == 50.0
    load_scenario(SCENARIO_DIR / "default.scn")
    lossy = load_scenario(SCENARIO_DIR / "lossy.scn")
    assert lossy.link_changes[0].link.drop_prob == 0.0
    assert lossy.link_changes[0].link.dup_prob == 0.2  # merge keeps dup


def test_events_at_equal_times_allowed():
    text = (
        "NODE a dist_m=5\nNODE b dist_m=5\n"
        "EVENT 1 a 00000001 1\nEVENT 1 b 00000002 1\n"
    )
    scenario = parse_scenario(text)
    assert [e.node for e in scenario.events] == ["a", "b"]
