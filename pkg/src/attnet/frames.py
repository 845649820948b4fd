"""Codec for the framed serial protocol on the radio link.

Wire layout (API mode 1, no byte escaping):

    0      start delimiter 0x7E
    1-2    length of the API data, big-endian
    3..    API data (type byte + fields)
    last   checksum = 0xFF - (sum of API data bytes) & 0xFF

API data layouts:

    TxRequest    0x10 frame_id dest64[8] dest16[2] radius options payload...
    RxIndicator  0x90 src64[8] src16[2] options payload...
    TxStatus     0x8B frame_id dest16[2] retry_count delivery_status

16-bit address fields carry the placeholder 0xFFFE when no short
address is known.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EncodeError

START_DELIMITER = 0x7E
TYPE_TX_REQUEST = 0x10
TYPE_RX_INDICATOR = 0x90
TYPE_TX_STATUS = 0x8B
ADDR16_UNKNOWN = 0xFFFE
MAX_PAYLOAD = 255

# Longest well-formed API block is a full TxRequest; anything claiming
# more is treated as garbage so a corrupt length byte cannot stall the
# decoder.
_MAX_API_DATA = 512
_HEADER_LEN = 3  # delimiter + two length bytes


def _check_addr(addr: bytes, name: str) -> bytes:
    if len(addr) != 8:
        raise ValueError(f"{name} must be 8 bytes, got {len(addr)}")
    return bytes(addr)


@dataclass(frozen=True)
class TxRequest:
    """Outbound transmit request; frame_id 0 means no ack wanted."""

    frame_id: int
    dest64: bytes
    dest16: int = ADDR16_UNKNOWN
    radius: int = 0
    options: int = 0
    payload: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "dest64", _check_addr(self.dest64, "dest64"))
        object.__setattr__(self, "payload", bytes(self.payload))


@dataclass(frozen=True)
class RxIndicator:
    """Inbound data notification as seen by the receiving host."""

    src64: bytes
    src16: int = ADDR16_UNKNOWN
    options: int = 0
    payload: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "src64", _check_addr(self.src64, "src64"))
        object.__setattr__(self, "payload", bytes(self.payload))


@dataclass(frozen=True)
class TxStatus:
    """Delivery report; echoes the frame_id of the TxRequest it answers."""

    frame_id: int
    retry_count: int = 0
    delivery_status: int = 0  # 0x00 = delivered


ApiFrame = TxRequest | RxIndicator | TxStatus


class _Marker:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self):
        return self._name


#: A garbage run or corrupt frame was consumed; call again.
SKIP = _Marker("SKIP")
#: The buffer ends mid-frame; feed more bytes before retrying.
NEED_MORE_DATA = _Marker("NEED_MORE_DATA")


def checksum(api_data: bytes) -> int:
    return 0xFF - (sum(api_data) & 0xFF)


def _byte(value: int, name: str) -> int:
    if not 0 <= value <= 0xFF:
        raise EncodeError(f"{name} out of byte range: {value}")
    return value


def _addr16(value: int, name: str) -> bytes:
    if not 0 <= value <= 0xFFFF:
        raise EncodeError(f"{name} out of 16-bit range: {value}")
    return value.to_bytes(2, "big")


def _api_data(frame: ApiFrame) -> bytes:
    if isinstance(frame, TxRequest):
        if len(frame.payload) > MAX_PAYLOAD:
            raise EncodeError(f"payload too long: {len(frame.payload)}")
        return bytes(
            [TYPE_TX_REQUEST, _byte(frame.frame_id, "frame_id")]
            + list(frame.dest64)
            + list(_addr16(frame.dest16, "dest16"))
            + [_byte(frame.radius, "radius"), _byte(frame.options, "options")]
        ) + frame.payload
    if isinstance(frame, RxIndicator):
        if len(frame.payload) > MAX_PAYLOAD:
            raise EncodeError(f"payload too long: {len(frame.payload)}")
        return bytes(
            [TYPE_RX_INDICATOR]
            + list(frame.src64)
            + list(_addr16(frame.src16, "src16"))
            + [_byte(frame.options, "options")]
        ) + frame.payload
    if isinstance(frame, TxStatus):
        return bytes(
            [
                TYPE_TX_STATUS,
                _byte(frame.frame_id, "frame_id"),
                0xFF,
                0xFE,
                _byte(frame.retry_count, "retry_count"),
                _byte(frame.delivery_status, "delivery_status"),
            ]
        )
    raise EncodeError(f"not an API frame: {frame!r}")


def encode(frame: ApiFrame) -> bytes:
    """Serialize one frame to its full on-wire byte string."""
    api = _api_data(frame)
    return (
        bytes([START_DELIMITER, len(api) >> 8, len(api) & 0xFF])
        + api
        + bytes([checksum(api)])
    )


def decode_api_data(api: bytes) -> ApiFrame | None:
    """Parse a checksum-verified API block; None if the type is unknown."""
    if not api:
        return None
    kind = api[0]
    if kind == TYPE_TX_REQUEST and len(api) >= 14:
        return TxRequest(
            frame_id=api[1],
            dest64=bytes(api[2:10]),
            dest16=int.from_bytes(api[10:12], "big"),
            radius=api[12],
            options=api[13],
            payload=bytes(api[14:]),
        )
    if kind == TYPE_RX_INDICATOR and len(api) >= 12:
        return RxIndicator(
            src64=bytes(api[1:9]),
            src16=int.from_bytes(api[9:11], "big"),
            options=api[11],
            payload=bytes(api[12:]),
        )
    if kind == TYPE_TX_STATUS and len(api) == 6:
        return TxStatus(frame_id=api[1], retry_count=api[4], delivery_status=api[5])
    return None


def _resync(buf: bytes, cursor: int) -> int:
    nxt = buf.find(START_DELIMITER, cursor + 1)
    return nxt if nxt != -1 else len(buf)


def decode_stream(buf: bytes, cursor: int = 0):
    """One decode step over ``buf`` starting at ``cursor``.

    Returns ``(frame, new_cursor)`` for a valid frame, ``(SKIP, ...)``
    after consuming garbage or a corrupt frame, or
    ``(NEED_MORE_DATA, ...)`` when the buffer ends mid-frame. Never
    raises on arbitrary input; a checksum failure resynchronizes at
    the next start delimiter.
    """
    n = len(buf)
    if cursor >= n:
        return NEED_MORE_DATA, cursor
    if buf[cursor] != START_DELIMITER:
        nxt = buf.find(START_DELIMITER, cursor)
        return SKIP, (nxt if nxt != -1 else n)
    if cursor + _HEADER_LEN > n:
        return NEED_MORE_DATA, cursor
    length = (buf[cursor + 1] << 8) | buf[cursor + 2]
    if length > _MAX_API_DATA:
        return SKIP, _resync(buf, cursor)
    end = cursor + _HEADER_LEN + length + 1
    if end > n:
        return NEED_MORE_DATA, cursor
    api = bytes(buf[cursor + _HEADER_LEN : end - 1])
    if checksum(api) != buf[end - 1]:
        return SKIP, _resync(buf, cursor)
    frame = decode_api_data(api)
    if frame is None:
        return SKIP, end  # framing sound, content unknown: step past it
    return frame, end


class FrameDecoder:
    """Streaming decoder for one serial link.

    Owns a buffer and cursor; single-owner, not safe to share across
    threads.
    """

    def __init__(self):
        self._buf = bytearray()
        self.skipped = 0

    def feed(self, data: bytes) -> list[ApiFrame]:
        """Append bytes and return every frame completed by them."""
        self._buf += data
        frames: list[ApiFrame] = []
        cursor = 0
        while True:
            result, cursor = decode_stream(self._buf, cursor)
            if result is NEED_MORE_DATA:
                break
            if result is SKIP:
                self.skipped += 1
                continue
            frames.append(result)
        del self._buf[:cursor]
        return frames
