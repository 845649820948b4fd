"""Line-oriented scenario files for deterministic pipeline runs.

One directive per line; ``#`` starts a comment and quoting follows
shell rules (names with spaces need quotes). Directives:

    SEED <int>                     default 0
    START <Y/M/D H:M:S>            RTC start for all nodes, default 2000/1/1 9:0:0
    NODE <id> [key=value ...]      declare a reader node and its link
    STAFF <card> <name> <job>      enrollment seed
    EVENT <t> <node> <uid8> <cm>   scan attempt at virtual time t
    LINK <t> <node> [key=value ...]  change link settings at time t

NODE and LINK keys: dist_m, tx_dbm, freq_mhz, drop, dup, latency_s,
sens_dbm; NODE additionally takes range_cm, cooldown_s, misread, and
rtc="Y/M/D H:M:S" to start that node's clock away from the scenario
start. LINK values merge over the node's previous settings. Events
must be sorted by time and may only name declared nodes.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass
from pathlib import Path

from .errors import ScenarioError
from .radio import LinkParams
from .rtc import RtcState, parse_timestamp
from .tagcard import ReaderConfig

_NODE_ID_RE = re.compile(r"[A-Za-z0-9_-]+")
_UID_RE = re.compile(r"[0-9a-fA-F]{8}")

DEFAULT_START = "2000/1/1 9:0:0"

_LINK_KEYS = {
    "dist_m": "distance_m",
    "tx_dbm": "tx_power_dbm",
    "freq_mhz": "freq_mhz",
    "drop": "drop_prob",
    "dup": "dup_prob",
    "latency_s": "latency_s",
    "sens_dbm": "sensitivity_dbm",
}
_READER_KEYS = {
    "range_cm": "max_range_cm",
    "cooldown_s": "cooldown_s",
    "misread": "misread_prob",
}


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    link: LinkParams
    reader: ReaderConfig
    rtc_start: RtcState | None = None


@dataclass(frozen=True)
class StaffSpec:
    card: int
    name: str
    job: str


@dataclass(frozen=True)
class ScanEvent:
    t: float
    node: str
    uid: bytes
    distance_cm: float


@dataclass(frozen=True)
class LinkChange:
    t: float
    node: str
    link: LinkParams


@dataclass(frozen=True)
class Scenario:
    seed: int
    start: RtcState
    nodes: tuple[NodeSpec, ...]
    staff: tuple[StaffSpec, ...]
    events: tuple[ScanEvent, ...]
    link_changes: tuple[LinkChange, ...]


def _split_kv(tokens, lineno):
    pairs = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ScenarioError(lineno, f"expected key=value, got {token!r}")
        if key in pairs:
            raise ScenarioError(lineno, f"duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _float(value, lineno, what):
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(lineno, f"bad {what}: {value!r}") from None


def _link_from(pairs, base: dict, lineno) -> dict:
    """Merge link key=value pairs over the current settings."""
    merged = dict(base)
    for key, value in pairs.items():
        if key not in _LINK_KEYS:
            continue
        merged[_LINK_KEYS[key]] = _float(value, lineno, key)
    return merged


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    """Parse scenario text; raises :class:`ScenarioError` with a line number."""
    seed = 0
    start = parse_timestamp(DEFAULT_START)
    nodes: list[NodeSpec] = []
    node_links: dict[str, dict] = {}
    staff: list[StaffSpec] = []
    events: list[ScanEvent] = []
    changes: list[LinkChange] = []
    seen_nodes: set[str] = set()
    seen_cards: set[int] = set()

    for lineno, line in enumerate(text.splitlines(), 1):
        try:
            tokens = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ScenarioError(lineno, f"bad quoting: {exc}") from None
        if not tokens:
            continue
        directive, args = tokens[0].upper(), tokens[1:]

        if directive == "SEED":
            if len(args) != 1 or not re.fullmatch(r"-?\d+", args[0]):
                raise ScenarioError(lineno, "SEED takes one integer")
            seed = int(args[0])

        elif directive == "START":
            try:
                start = parse_timestamp(" ".join(args))
            except ValueError as exc:
                raise ScenarioError(lineno, f"bad START: {exc}") from None

        elif directive == "NODE":
            if not args:
                raise ScenarioError(lineno, "NODE takes an id")
            node_id = args[0]
            if not _NODE_ID_RE.fullmatch(node_id):
                raise ScenarioError(lineno, f"bad node id: {node_id!r}")
            if node_id in seen_nodes:
                raise ScenarioError(lineno, f"duplicate node: {node_id!r}")
            pairs = _split_kv(args[1:], lineno)
            unknown = set(pairs) - set(_LINK_KEYS) - set(_READER_KEYS) - {"rtc"}
            if unknown:
                raise ScenarioError(lineno, f"unknown keys: {sorted(unknown)}")
            link_kw = _link_from(pairs, {"distance_m": 10.0}, lineno)
            reader_kw = {
                _READER_KEYS[k]: _float(v, lineno, k)
                for k, v in pairs.items()
                if k in _READER_KEYS
            }
            rtc_start = None
            if "rtc" in pairs:
                try:
                    rtc_start = parse_timestamp(pairs["rtc"])
                except ValueError as exc:
                    raise ScenarioError(lineno, f"bad rtc: {exc}") from None
            try:
                spec = NodeSpec(
                    node_id=node_id,
                    link=LinkParams(**link_kw),
                    reader=ReaderConfig(**reader_kw),
                    rtc_start=rtc_start,
                )
            except ValueError as exc:
                raise ScenarioError(lineno, str(exc)) from None
            nodes.append(spec)
            node_links[node_id] = link_kw
            seen_nodes.add(node_id)

        elif directive == "STAFF":
            if len(args) != 3:
                raise ScenarioError(lineno, "STAFF takes card, name, job")
            if not re.fullmatch(r"\d+", args[0]):
                raise ScenarioError(lineno, f"bad card: {args[0]!r}")
            card = int(args[0])
            if card >= 1 << 32:
                raise ScenarioError(lineno, f"card exceeds 32 bits: {card}")
            if card in seen_cards:
                raise ScenarioError(lineno, f"duplicate card: {card}")
            seen_cards.add(card)
            staff.append(StaffSpec(card=card, name=args[1], job=args[2]))

        elif directive == "EVENT":
            if len(args) != 4:
                raise ScenarioError(lineno, "EVENT takes t, node, uid, distance")
            t = _float(args[0], lineno, "time")
            if t < 0:
                raise ScenarioError(lineno, f"negative time: {t}")
            if events and t < events[-1].t:
                raise ScenarioError(lineno, "events must be sorted by time")
            if args[1] not in seen_nodes:
                raise ScenarioError(lineno, f"undeclared node: {args[1]!r}")
            if not _UID_RE.fullmatch(args[2]):
                raise ScenarioError(lineno, f"uid must be 8 hex digits: {args[2]!r}")
            events.append(
                ScanEvent(
                    t=t,
                    node=args[1],
                    uid=bytes.fromhex(args[2]),
                    distance_cm=_float(args[3], lineno, "distance"),
                )
            )

        elif directive == "LINK":
            if len(args) < 2:
                raise ScenarioError(lineno, "LINK takes t, node, key=value...")
            t = _float(args[0], lineno, "time")
            if changes and t < changes[-1].t:
                raise ScenarioError(lineno, "link changes must be sorted by time")
            node_id = args[1]
            if node_id not in seen_nodes:
                raise ScenarioError(lineno, f"undeclared node: {node_id!r}")
            pairs = _split_kv(args[2:], lineno)
            unknown = set(pairs) - set(_LINK_KEYS)
            if unknown:
                raise ScenarioError(lineno, f"unknown keys: {sorted(unknown)}")
            merged = _link_from(pairs, node_links[node_id], lineno)
            try:
                link = LinkParams(**merged)
            except ValueError as exc:
                raise ScenarioError(lineno, str(exc)) from None
            node_links[node_id] = merged
            changes.append(LinkChange(t=t, node=node_id, link=link))

        else:
            raise ScenarioError(lineno, f"unknown directive: {directive!r}")

    return Scenario(
        seed=seed,
        start=start,
        nodes=tuple(nodes),
        staff=tuple(staff),
        events=tuple(events),
        link_changes=tuple(changes),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), name=str(path))
