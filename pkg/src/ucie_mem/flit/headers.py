"""CXL.Mem request and response headers.

Fields are packed in table row order, least significant bit first within a
field, into a single integer; :func:`header_bytes` lays that integer out
little-endian. An all-zero header (``cmd == 0``, ``poison == 0``) is a NOP.
"""

import enum
from dataclasses import dataclass, fields

from ucie_mem.errors import FieldOverflowError, FlitParseError


class Layout(str, enum.Enum):
    """Flit layouts of the symmetric approaches."""

    CXL_UNOPT = "cxl-unopt"
    CXL_OPT = "cxl-opt"
    CHI = "chi-x"

    @property
    def header_widths(self) -> "Layout":
        """Layout whose header field widths this layout uses."""
        return Layout.CXL_UNOPT if self is Layout.CHI else self


class ReqCmd(enum.IntEnum):
    """Request opcodes."""

    NOP = 0
    MEM_RD = 1
    MEM_WR = 2


class RespCmd(enum.IntEnum):
    """Response opcodes."""

    NOP = 0
    MEM_DATA = 1
    CMP = 2


REQUEST_FIELDS: dict[Layout, tuple[tuple[str, int], ...]] = {
    Layout.CXL_UNOPT: (("cmd", 4), ("meta_data", 7), ("tag", 16), ("address", 46), ("poison", 1)),
    Layout.CXL_OPT: (("cmd", 3), ("meta_data", 4), ("tag", 8), ("address", 46), ("poison", 1)),
}

RESPONSE_FIELDS: dict[Layout, tuple[tuple[str, int], ...]] = {
    Layout.CXL_UNOPT: (("cmd", 3), ("meta_data", 4), ("devload", 2), ("tag", 16), ("poison", 1)),
    Layout.CXL_OPT: (("cmd", 3), ("meta_data", 4), ("devload", 0), ("tag", 8), ("poison", 1)),
}


@dataclass(frozen=True)
class RequestHeader:
    """SoC to memory request; ``address`` is a cache-line index."""

    cmd: int
    meta_data: int = 0
    tag: int = 0
    address: int = 0
    poison: int = 0

    @property
    def is_nop(self) -> bool:
        return self.cmd == 0 and self.poison == 0

    @property
    def carries_data(self) -> bool:
        return self.cmd == ReqCmd.MEM_WR


@dataclass(frozen=True)
class ResponseHeader:
    """Memory to SoC response."""

    cmd: int
    meta_data: int = 0
    devload: int = 0
    tag: int = 0
    poison: int = 0

    @property
    def is_nop(self) -> bool:
        return self.cmd == 0 and self.poison == 0

    @property
    def carries_data(self) -> bool:
        return self.cmd == RespCmd.MEM_DATA


Header = RequestHeader | ResponseHeader


def _layout(layout: Layout | str) -> Layout:
    return Layout(layout).header_widths


def request_width(layout: Layout | str) -> int:
    """Bits of a request header in ``layout``."""
    return sum(w for _, w in REQUEST_FIELDS[_layout(layout)])


def response_width(layout: Layout | str) -> int:
    """Bits of a response header in ``layout``."""
    return sum(w for _, w in RESPONSE_FIELDS[_layout(layout)])


def _encode(header: Header, spec: tuple[tuple[str, int], ...]) -> int:
    value, offset = 0, 0
    for name, width in spec:
        field_value = getattr(header, name)
        if not 0 <= field_value < (1 << width):
            raise FieldOverflowError(name, field_value, width)
        value |= field_value << offset
        offset += width
    return value


def _decode(bits: int, spec: tuple[tuple[str, int], ...]) -> dict[str, int]:
    values, offset = {}, 0
    for name, width in spec:
        values[name] = (bits >> offset) & ((1 << width) - 1)
        offset += width
    if bits >> offset:
        raise FlitParseError(f"header value has bits set beyond its {offset}-bit width")
    return values


def encode_request(header: RequestHeader, layout: Layout | str) -> int:
    """Pack a request header into an integer of :func:`request_width` bits.

    Raises
    ------
    FieldOverflowError
        If a field value does not fit its width for ``layout``.
    """
    return _encode(header, REQUEST_FIELDS[_layout(layout)])


def decode_request(bits: int, layout: Layout | str) -> RequestHeader:
    """Inverse of :func:`encode_request`."""
    return RequestHeader(**_decode(bits, REQUEST_FIELDS[_layout(layout)]))


def encode_response(header: ResponseHeader, layout: Layout | str) -> int:
    """Pack a response header into an integer, first field in the low bits."""
    return _encode(header, RESPONSE_FIELDS[_layout(layout)])


def decode_response(bits: int, layout: Layout | str) -> ResponseHeader:
    """Inverse of :func:`encode_response`."""
    return ResponseHeader(**_decode(bits, RESPONSE_FIELDS[_layout(layout)]))


def header_bytes(value: int, width: int) -> bytes:
    """Little-endian byte image of a ``width``-bit header."""
    return value.to_bytes((width + 7) // 8, "little")


def to_bitstring(value: int, width: int) -> str:
    """Bits of ``value`` in transmission order (field LSB first)."""
    return "".join("1" if value >> i & 1 else "0" for i in range(width))


def header_fields(header: Header) -> dict[str, int]:
    """Field values of a header by name."""
    return {f.name: getattr(header, f.name) for f in fields(header)}
