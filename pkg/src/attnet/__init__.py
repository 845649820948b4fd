"""attnet: a deterministic virtual-time simulator of a badge-in pipeline.

Tag scan -> RTC timestamp -> local journal -> framed radio relay ->
coordinator server -> authentication, persistence, and attendance
reports, all on a virtual clock so every run is reproducible from its
seed.
"""

from .errors import (
    AlreadyEnrolled,
    AttnetError,
    EncodeError,
    InvalidBcd,
    LoadError,
    ParseError,
    RangeError,
    ReplayError,
    ScenarioError,
    TopologyError,
)
from .rtc import RtcState, bcd_decode, bcd_encode, parse_timestamp, render_timestamp, tick

__version__ = "0.1.0"

__all__ = [
    "AlreadyEnrolled",
    "AttnetError",
    "EncodeError",
    "InvalidBcd",
    "LoadError",
    "ParseError",
    "RangeError",
    "ReplayError",
    "RtcState",
    "ScenarioError",
    "TopologyError",
    "__version__",
    "bcd_decode",
    "bcd_encode",
    "parse_timestamp",
    "render_timestamp",
    "tick",
]
