"""Command line entry points.

Exit codes are a stable contract for scripting: 0 success, 1 usage or
parse error, 2 domain error (e.g. enrolling a duplicate card). All
output is LF-terminated UTF-8 and report commands print CSV on
standard output. The store path defaults to the ATTNET_STORE
environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import reports
from .errors import AlreadyEnrolled, LoadError, ParseError, RangeError, ScenarioError
from .frames import (
    NEED_MORE_DATA,
    SKIP,
    RxIndicator,
    TxRequest,
    TxStatus,
    decode_stream,
    encode,
)
from .rtc import parse_timestamp, render_timestamp
from .scenario import load_scenario
from .server import AttendanceServer, AttendanceStore
from .sim import run_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2

DEFAULT_ENROLL_AT = "2000/1/1 0:0:0"


class _UsageError(Exception):
    """Bad arguments discovered after argparse; maps to exit code 1."""


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage failures mapped onto exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _card(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 32:
        raise ValueError(f"card must fit 32 bits: {value}")
    return value


def _store_path(args) -> Path:
    if args.store:
        return Path(args.store)
    env = os.environ.get("ATTNET_STORE")
    if env:
        return Path(env)
    raise _UsageError("no store path: pass --store or set ATTNET_STORE")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="attnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_enroll = sub.add_parser("enroll", help="add one staff record to a store")
    p_enroll.add_argument("name")
    p_enroll.add_argument("job")
    p_enroll.add_argument("card", type=_card)
    p_enroll.add_argument("--store", "-s", help="store file (default: $ATTNET_STORE)")
    p_enroll.add_argument("--at", default=DEFAULT_ENROLL_AT,
                          help="enrollment timestamp, Y/M/D H:M:S")

    p_sim = sub.add_parser("simulate", help="run a scenario deterministically")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--out", "-o", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, help="override the scenario seed")
    p_sim.add_argument("--debounce", type=float, default=60.0,
                       help="presence debounce window in seconds")

    p_rep = sub.add_parser("report", help="print a CSV report")
    p_rep.add_argument("kind", choices=["daily", "presence", "table2", "curves", "latency"])
    p_rep.add_argument("--store", "-s", help="store file (default: $ATTNET_STORE)")
    p_rep.add_argument("--date", help="daily: date as Y/M/D")
    p_rep.add_argument("--window", default="9:00-17:00",
                       help="daily: business window, H:MM-H:MM")
    p_rep.add_argument("--debounce", type=float, default=60.0)
    p_rep.add_argument("--at", help="presence: virtual seconds or Y/M/D H:M:S")
    p_rep.add_argument("--scenario", help="latency: scenario file to run")
    p_rep.add_argument("--workers", help="curves: comma-separated worker counts")

    p_dump = sub.add_parser("framedump", help="decode frame hex, or encode a description")
    p_dump.add_argument("input", nargs="?",
                        help="hex string, frame description, or file path; stdin if absent")
    return parser


def cmd_enroll(args) -> int:
    store_path = _store_path(args)
    store = AttendanceStore.load(store_path)
    server = AttendanceServer(store)
    at = parse_timestamp(args.at)
    try:
        record = server.enroll(args.name, args.job, args.card, at)
    except AlreadyEnrolled as exc:
        print(f"attnet: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (RangeError, ValueError) as exc:
        raise _UsageError(str(exc)) from None
    store.persist(store_path)
    print(f"enrolled {record.name} ({record.job_spec}) card {record.card_key}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    result = run_scenario(scenario, out_dir=args.out, debounce_s=args.debounce)
    counters = result.counters()
    print(f"wrote {args.out}: {counters['events_stored']} events stored, "
          f"{counters['duplicates_ingested']} duplicates dropped, "
          f"final t={result.final_time}")
    return EXIT_OK


def _print_csv(header: str, rows) -> None:
    print(header)
    for row in rows:
        print(row)


def _seconds_text(value: float) -> str:
    return f"{value:g}"


def cmd_report(args) -> int:
    if args.kind in ("table2", "curves"):
        counts = reports.TABLE_WORKER_COUNTS
        if args.kind == "curves" and args.workers:
            try:
                counts = tuple(int(w) for w in args.workers.split(","))
            except ValueError:
                raise _UsageError(f"bad --workers: {args.workers!r}") from None
        rows = reports.curve_data(worker_counts=counts)
        _print_csv(
            "method,workers,seconds",
            (f"{m},{n},{_seconds_text(s)}" for m, n, s in rows),
        )
        return EXIT_OK

    if args.kind == "latency":
        if not args.scenario:
            raise _UsageError("latency needs --scenario")
        scenario = load_scenario(args.scenario)
        rows = reports.end_to_end_latency(scenario, debounce_s=args.debounce)
        _print_csv(
            "node,seq,card,scan_t,stored_t,latency_s",
            (
                f"{r.node},{r.seq},{r.card},{r.scan_t!r},{r.stored_t!r},{r.latency_s!r}"
                for r in rows
            ),
        )
        return EXIT_OK

    store = AttendanceStore.load(_store_path(args))
    if args.kind == "presence":
        if args.at is None:
            raise _UsageError("presence needs --at")
        try:
            at = float(args.at)
        except ValueError:
            at = parse_timestamp(args.at)
        server = AttendanceServer(store, debounce_s=args.debounce)
        _print_csv("card", (str(card) for card in sorted(server.present(at))))
        return EXIT_OK

    # daily
    if not args.date:
        raise _UsageError("daily needs --date")
    try:
        y, mo, d = (int(part) for part in args.date.split("/"))
        window = reports.BusinessWindow.from_text(args.window)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    day = reports.daily_report(store, (y, mo, d), window, debounce_s=args.debounce)
    _print_csv(
        "card,name,check_in,check_out,late,scans",
        (
            f"{r.card},{r.name},{render_timestamp(r.check_in)},"
            f"{render_timestamp(r.check_out)},{str(r.late).lower()},{r.scan_count}"
            for r in day
        ),
    )
    return EXIT_OK


_FRAME_NAMES = {"TxRequest", "RxIndicator", "TxStatus"}


def _describe(frame) -> str:
    if isinstance(frame, TxRequest):
        return (
            f"TxRequest frame_id={frame.frame_id} dest64={frame.dest64.hex()} "
            f"dest16={frame.dest16:04x} radius={frame.radius} "
            f"options={frame.options} payload={frame.payload.hex()}"
        )
    if isinstance(frame, RxIndicator):
        return (
            f"RxIndicator src64={frame.src64.hex()} src16={frame.src16:04x} "
            f"options={frame.options} payload={frame.payload.hex()}"
        )
    return (
        f"TxStatus frame_id={frame.frame_id} retry={frame.retry_count} "
        f"status={frame.delivery_status}"
    )


def _parse_description(tokens: list[str]):
    kind = tokens[0]
    fields = {}
    for token in tokens[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"expected key=value, got {token!r}")
        fields[key] = value
    try:
        if kind == "TxStatus":
            return TxStatus(
                frame_id=int(fields.get("frame_id", "0"), 0),
                retry_count=int(fields.get("retry", "0"), 0),
                delivery_status=int(fields.get("status", "0"), 0),
            )
        if kind == "TxRequest":
            return TxRequest(
                frame_id=int(fields.get("frame_id", "0"), 0),
                dest64=bytes.fromhex(fields.get("dest64", "00" * 8)),
                dest16=int(fields.get("dest16", "fffe"), 16),
                radius=int(fields.get("radius", "0"), 0),
                options=int(fields.get("options", "0"), 0),
                payload=bytes.fromhex(fields.get("payload", "")),
            )
        return RxIndicator(
            src64=bytes.fromhex(fields.get("src64", "00" * 8)),
            src16=int(fields.get("src16", "fffe"), 16),
            options=int(fields.get("options", "0"), 0),
            payload=bytes.fromhex(fields.get("payload", "")),
        )
    except ValueError as exc:
        raise ParseError(f"bad {kind} description: {exc}") from exc


def cmd_framedump(args) -> int:
    if args.input is None or args.input == "-":
        text = sys.stdin.read()
    elif Path(args.input).is_file():
        text = Path(args.input).read_text(encoding="utf-8")
    else:
        text = args.input
    text = text.strip()
    if not text:
        return EXIT_OK

    tokens = text.split()
    if tokens[0] in _FRAME_NAMES:
        frame = _parse_description(tokens)
        print(encode(frame).hex())
        return EXIT_OK

    try:
        data = bytes.fromhex("".join(text.split()))
    except ValueError:
        raise _UsageError("input is neither hex nor a frame description") from None
    cursor = 0
    while True:
        result, cursor = decode_stream(data, cursor)
        if result is NEED_MORE_DATA:
            break
        if result is SKIP:
            print("checksum mismatch, skipped")
            continue
        print(_describe(result))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "enroll":
            return cmd_enroll(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "report":
            return cmd_report(args)
        return cmd_framedump(args)
    except ScenarioError as exc:
        print(f"attnet: scenario error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _UsageError as exc:
        print(f"attnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LoadError, ParseError) as exc:
        print(f"attnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"attnet: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
