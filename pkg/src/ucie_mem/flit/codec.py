"""Encoding and decoding of single flits, and a stateful stream decoder."""

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from ucie_mem.core import Direction
from ucie_mem.errors import CorruptFlitError, FlitParseError
from ucie_mem.flit.crc import crc16
from ucie_mem.flit.headers import (
    Header,
    Layout,
    RequestHeader,
    decode_request,
    decode_response,
    encode_request,
    encode_response,
    request_width,
    response_width,
)
from ucie_mem.flit.layout import (
    CHI_CREDIT,
    CHI_KIND_BYTES,
    CHI_LINK_HEADER,
    CRC_REGIONS,
    FLIT_BYTES,
    GEOMETRY,
    SLOT_BYTES,
    chi_granule_offsets,
)

logger = logging.getLogger(__name__)

LINE_BYTES = 64
CHUNKS_PER_LINE = LINE_BYTES // SLOT_BYTES
#: Bits of the optimised HS-slot that carry headers; the slot format map sits above them.
HS_HEADER_BITS = 65
SEQUENCE_MODULUS = 1 << 12


class ProtocolId(enum.IntEnum):
    """Protocol identifier in the flit header."""

    NOP = 0
    CXL_MEM = 1
    OTHER = 2


class AckCode(enum.IntEnum):
    """Ack/nak field in the flit header."""

    NONE = 0
    ACK = 1
    NAK = 2


class GranuleKind(enum.IntEnum):
    """Two-bit granule code of the CHI layout."""

    EMPTY = 0
    HEADER = 1
    DATA = 2


@dataclass(frozen=True)
class FlitHeader:
    """Two-byte flit header: protocol id (2 bits), ack/nak (2 bits), sequence number (12 bits)."""

    protocol: ProtocolId = ProtocolId.CXL_MEM
    sequence: int = 0
    ack: AckCode = AckCode.NONE

    def encode(self) -> bytes:
        if not 0 <= self.sequence < SEQUENCE_MODULUS:
            raise FlitParseError(f"sequence number {self.sequence} exceeds 12 bits")
        value = int(self.protocol) | int(self.ack) << 2 | self.sequence << 4
        return value.to_bytes(2, "little")

    @classmethod
    def decode(cls, raw: bytes) -> "FlitHeader":
        value = int.from_bytes(raw, "little")
        try:
            return cls(ProtocolId(value & 0x3), value >> 4, AckCode(value >> 2 & 0x3))
        except ValueError as e:
            raise FlitParseError(f"invalid flit header 0x{value:04x}") from e


@dataclass(frozen=True)
class Transaction:
    """A request or response header with its 64-byte line when the command carries one."""

    header: Header
    data: bytes | None = None

    def __post_init__(self):
        if self.header.is_nop:
            raise FlitParseError("NOP headers are not transactions")
        if self.header.carries_data:
            if self.data is None or len(self.data) != LINE_BYTES:
                raise FlitParseError(f"{type(self.header).__name__} cmd {self.header.cmd} needs a {LINE_BYTES}-byte line")
        elif self.data is not None:
            raise FlitParseError(f"{type(self.header).__name__} cmd {self.header.cmd} carries no data")

    @property
    def direction(self) -> Direction:
        return Direction.S2M if isinstance(self.header, RequestHeader) else Direction.M2S

    def chunk(self, index: int) -> bytes:
        return self.data[index * SLOT_BYTES : (index + 1) * SLOT_BYTES]


@dataclass(frozen=True)
class HeaderSlot:
    """A slot holding one or more headers."""

    headers: tuple[Header, ...] = ()


@dataclass(frozen=True)
class DataSlot:
    """A slot holding ``chunk``, the ``index``-th 16-byte piece of a line."""

    chunk: bytes
    index: int = 0


Slot = HeaderSlot | DataSlot | None


@dataclass(frozen=True)
class Flit:
    """Decoded view of a 256-byte flit; ``slots`` are in decode order."""

    layout: Layout
    direction: Direction
    header: FlitHeader
    credit: int
    slots: tuple[Slot, ...]
    raw: bytes = field(repr=False)

    @property
    def headers(self) -> list[Header]:
        return [h for s in self.slots if isinstance(s, HeaderSlot) for h in s.headers]

    @property
    def used_positions(self) -> int:
        """Slots or granules holding at least one header or a data chunk."""
        return sum(1 for s in self.slots if isinstance(s, DataSlot) or (isinstance(s, HeaderSlot) and s.headers))


def _width(layout: Layout, direction: Direction) -> int:
    return request_width(layout) if direction is Direction.S2M else response_width(layout)


def _encode_header(header: Header, layout: Layout) -> int:
    if isinstance(header, RequestHeader):
        return encode_request(header, layout)
    return encode_response(header, layout)


def _decode_header(bits: int, layout: Layout, direction: Direction) -> Header:
    if direction is Direction.S2M:
        return decode_request(bits, layout)
    return decode_response(bits, layout)


def slot_capacity(layout: Layout | str, direction: Direction, *, header_slot: bool, dual_request_g_slot: bool = False) -> int:
    """Headers one slot (or granule) can hold."""
    layout = Layout(layout)
    if direction is Direction.S2M:
        if layout is Layout.CXL_OPT and dual_request_g_slot and not header_slot:
            return 2
        return 1
    return 4 if layout is Layout.CXL_OPT else 2


def _pack_headers(headers: tuple[Header, ...], layout: Layout, width: int, region_bits: int) -> int:
    if len(headers) * width > region_bits:
        raise FlitParseError(f"{len(headers)} headers of {width} bits do not fit {region_bits} bits")
    value = 0
    for k, header in enumerate(headers):
        value |= _encode_header(header, layout) << (k * width)
    return value


def _unpack_headers(value: int, layout: Layout, direction: Direction, width: int, region_bits: int) -> tuple[Header, ...]:
    mask = (1 << width) - 1
    headers = []
    for k in range(region_bits // width):
        header = _decode_header(value >> (k * width) & mask, layout, direction)
        if not header.is_nop:
            headers.append(header)
    return tuple(headers)


def encode_flit(layout: Layout | str, direction: Direction, header: FlitHeader, slots: tuple[Slot, ...], credit: int = 0) -> bytes:
    """Lay out ``slots`` (header slot first for CXL layouts, granules for CHI) and fill the CRC fields."""
    layout = Layout(layout)
    raw = bytearray(FLIT_BYTES)
    width = _width(layout, direction)
    if not 0 <= credit < 1 << 16:
        raise FlitParseError(f"credit value {credit} exceeds 16 bits")

    if layout is Layout.CHI:
        granules = chi_granule_offsets()
        if len(slots) != len(granules):
            raise FlitParseError(f"CHI flits carry {len(granules)} granules, got {len(slots)}")
        kinds = 0
        for g, (slot, offsets) in enumerate(zip(slots, granules, strict=True)):
            image = bytearray(len(offsets))
            if isinstance(slot, DataSlot):
                kinds |= GranuleKind.DATA << (2 * g)
                image[:SLOT_BYTES] = slot.chunk
                image[SLOT_BYTES] = slot.index
            elif isinstance(slot, HeaderSlot) and slot.headers:
                kinds |= GranuleKind.HEADER << (2 * g)
                image[:] = _pack_headers(slot.headers, layout, width, 8 * len(offsets)).to_bytes(len(offsets), "little")
            for b, value in zip(offsets, image, strict=True):
                raw[b] = value
        raw[CHI_KIND_BYTES[0] : CHI_KIND_BYTES[-1] + 1] = kinds.to_bytes(len(CHI_KIND_BYTES), "little")
        raw[CHI_LINK_HEADER[0] : CHI_LINK_HEADER[1] + 1] = header.encode()
        raw[CHI_CREDIT[0] : CHI_CREDIT[1] + 1] = credit.to_bytes(2, "little")
    else:
        geometry = GEOMETRY[layout]
        if len(slots) != 1 + geometry.slot_count:
            raise FlitParseError(f"{layout.value} flits carry {1 + geometry.slot_count} slots, got {len(slots)}")
        format_map = 0
        for i, (slot, span) in enumerate(zip(slots[1:], geometry.g_slots, strict=True)):
            if isinstance(slot, DataSlot):
                raw[span] = slot.chunk
            else:
                format_map |= 1 << i
                headers = slot.headers if slot is not None else ()
                raw[span] = _pack_headers(headers, layout, width, 8 * SLOT_BYTES).to_bytes(SLOT_BYTES, "little")
        hs = slots[0]
        if not isinstance(hs, HeaderSlot | None):
            raise FlitParseError("the header slot cannot carry data")
        hs_headers = hs.headers if hs is not None else ()
        hs_len = geometry.header_slot.stop - geometry.header_slot.start
        if layout is Layout.CXL_OPT:
            value = _pack_headers(hs_headers, layout, width, HS_HEADER_BITS) | format_map << HS_HEADER_BITS
            raw[geometry.header_slot] = value.to_bytes(hs_len, "little")
        else:
            raw[geometry.header_slot] = _pack_headers(hs_headers, layout, width, 8 * hs_len).to_bytes(hs_len, "little")
            raw[geometry.format_map] = format_map.to_bytes(2, "little")
        raw[geometry.header] = header.encode()
        raw[geometry.credit] = credit.to_bytes(2, "little")

    for region in CRC_REGIONS[layout]:
        raw[region.field] = crc16(raw[region.covered.start : region.covered.stop]).to_bytes(2, "little")
    return bytes(raw)


def _flit_header_bytes(raw: bytes, layout: Layout) -> bytes:
    if layout is Layout.CHI:
        return raw[CHI_LINK_HEADER[0] : CHI_LINK_HEADER[1] + 1]
    return raw[GEOMETRY[layout].header]


def flit_sequence(raw: bytes, layout: Layout | str) -> int:
    """Sequence number carried in the flit header of ``raw``."""
    return FlitHeader.decode(_flit_header_bytes(raw, Layout(layout))).sequence


def verify_flit(raw: bytes, layout: Layout | str) -> None:
    """Check every CRC region of ``raw``.

    Raises
    ------
    FlitParseError
        If ``raw`` is not 256 bytes.
    CorruptFlitError
        Naming each region whose CRC does not match.
    """
    layout = Layout(layout)
    if len(raw) != FLIT_BYTES:
        raise FlitParseError(f"flit must be {FLIT_BYTES} bytes, got {len(raw)}", offset=len(raw))
    failed = [
        region.name
        for region in CRC_REGIONS[layout]
        if crc16(raw[region.covered.start : region.covered.stop]) != int.from_bytes(raw[region.field], "little")
    ]
    if failed:
        sequence = int.from_bytes(_flit_header_bytes(raw, layout), "little") >> 4
        raise CorruptFlitError(failed, sequence)


def decode_flit(raw: bytes, layout: Layout | str, direction: Direction, *, verify: bool = True) -> Flit:
    """Split one flit into slots, checking its CRC regions unless ``verify`` is off."""
    layout = Layout(layout)
    if verify:
        verify_flit(raw, layout)
    elif len(raw) != FLIT_BYTES:
        raise FlitParseError(f"flit must be {FLIT_BYTES} bytes, got {len(raw)}", offset=len(raw))
    width = _width(layout, direction)
    slots: list[Slot] = []

    if layout is Layout.CHI:
        kinds = int.from_bytes(raw[CHI_KIND_BYTES[0] : CHI_KIND_BYTES[-1] + 1], "little")
        for g, offsets in enumerate(chi_granule_offsets()):
            image = bytes(raw[b] for b in offsets)
            kind = kinds >> (2 * g) & 0x3
            if kind == GranuleKind.DATA:
                slots.append(DataSlot(image[:SLOT_BYTES], image[SLOT_BYTES]))
            elif kind == GranuleKind.HEADER:
                slots.append(HeaderSlot(_unpack_headers(int.from_bytes(image, "little"), layout, direction, width, 8 * len(offsets))))
            elif kind == GranuleKind.EMPTY:
                slots.append(None)
            else:
                raise FlitParseError(f"unknown granule kind {kind}", offset=CHI_KIND_BYTES[0])
        header = FlitHeader.decode(raw[CHI_LINK_HEADER[0] : CHI_LINK_HEADER[1] + 1])
        credit = int.from_bytes(raw[CHI_CREDIT[0] : CHI_CREDIT[1] + 1], "little")
        return Flit(layout, direction, header, credit, tuple(slots), bytes(raw))

    geometry = GEOMETRY[layout]
    hs_value = int.from_bytes(raw[geometry.header_slot], "little")
    if layout is Layout.CXL_OPT:
        format_map = hs_value >> HS_HEADER_BITS
        slots.append(HeaderSlot(_unpack_headers(hs_value & ((1 << HS_HEADER_BITS) - 1), layout, direction, width, HS_HEADER_BITS)))
    else:
        format_map = int.from_bytes(raw[geometry.format_map], "little")
        hs_bits = 8 * (geometry.header_slot.stop - geometry.header_slot.start)
        slots.append(HeaderSlot(_unpack_headers(hs_value, layout, direction, width, hs_bits)))
    for i, span in enumerate(geometry.g_slots):
        chunk = bytes(raw[span])
        if format_map >> i & 1:
            slots.append(HeaderSlot(_unpack_headers(int.from_bytes(chunk, "little"), layout, direction, width, 8 * SLOT_BYTES)))
        else:
            slots.append(DataSlot(chunk))
    header = FlitHeader.decode(raw[geometry.header])
    credit = int.from_bytes(raw[geometry.credit], "little")
    return Flit(layout, direction, header, credit, tuple(slots), bytes(raw))


class DecodedTransaction(NamedTuple):
    """A transaction with the flits its header and last data chunk arrived in."""

    transaction: Transaction
    first_flit: int
    last_flit: int


@dataclass
class _Partial:
    header: Header
    first_flit: int
    chunks: list[bytes] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.header.carries_data or len(self.chunks) == CHUNKS_PER_LINE


class FlitDecoder:
    """Turns a stream of flits of one direction back into transactions.

    Data chunks belong to the oldest header still waiting for data, and
    transactions are released in header order once their data is complete.
    On the optimised layout a flit's protocol id announces the *next* flit, so
    the decoder parks on NOP after (re)training until a flit announces CXL.Mem.
    """

    def __init__(self, layout: Layout | str, direction: Direction, *, synced: bool = True):
        self.layout = Layout(layout)
        self.direction = direction
        self.flits_seen = 0
        self._pending: deque[_Partial] = deque()
        self._awaiting_data: deque[_Partial] = deque()
        self.expected_protocol = ProtocolId.CXL_MEM
        if not synced:
            self.retrain()

    def retrain(self) -> None:
        """Forget the lookahead state as after link (re)training."""
        if self.layout is Layout.CXL_OPT:
            self.expected_protocol = ProtocolId.NOP

    @property
    def pending(self) -> int:
        return len(self._pending)

    def feed(self, raw: bytes, *, verify: bool = True) -> list[DecodedTransaction]:
        """Decode one flit; returns the transactions it completes, in order."""
        flit = decode_flit(raw, self.layout, self.direction, verify=verify)
        index = self.flits_seen
        self.flits_seen += 1
        if self.layout is Layout.CXL_OPT:
            active, self.expected_protocol = self.expected_protocol, flit.header.protocol
        else:
            active = flit.header.protocol
        if active is not ProtocolId.CXL_MEM:
            return []

        for slot in flit.slots:
            if isinstance(slot, HeaderSlot):
                for header in slot.headers:
                    partial = _Partial(header, first_flit=index)
                    self._pending.append(partial)
                    if header.carries_data:
                        self._awaiting_data.append(partial)
            elif isinstance(slot, DataSlot):
                if not self._awaiting_data:
                    raise FlitParseError("data slot without a header awaiting data", offset=index * FLIT_BYTES)
                owner = self._awaiting_data[0]
                owner.chunks.append(slot.chunk)
                if owner.complete:
                    self._awaiting_data.popleft()

        released = []
        while self._pending and self._pending[0].complete:
            partial = self._pending.popleft()
            data = b"".join(partial.chunks) if partial.header.carries_data else None
            released.append(DecodedTransaction(Transaction(partial.header, data), partial.first_flit, index))
        return released

    def finish(self) -> None:
        """Raise if the stream ended in the middle of a transaction."""
        if self._pending:
            raise FlitParseError(f"stream ended with {len(self._pending)} incomplete transactions")
