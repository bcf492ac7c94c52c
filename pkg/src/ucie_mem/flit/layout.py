"""Byte maps of the 256-byte flit layouts."""

import enum
from collections import Counter
from dataclasses import dataclass
from functools import cache

from ucie_mem.flit.headers import Layout

FLIT_BYTES = 256
SLOT_BYTES = 16
GRANULE_BYTES = 20


class ByteRole(str, enum.Enum):
    """What a byte of a flit is used for."""

    FLIT_HEADER = "flit-header"
    HEADER_SLOT = "header-slot"
    G_SLOT = "g-slot"
    GRANULE = "granule"
    PROTOCOL_HEADER = "protocol-header"
    RESERVED = "reserved"
    CREDIT = "credit"
    CRC = "crc"


@dataclass(frozen=True)
class CrcRegion:
    """A CRC field and the bytes it protects."""

    name: str
    covered: range
    field: slice


# CHI container: link headers at 0-1, 126-127, 254-255 and protocol headers between granules.
CHI_LINK_HEADER = (0, 1)
CHI_CREDIT = (126, 127)
CHI_CRC = (254, 255)
CHI_PROTOCOL_HEADERS = (62, 63, 64, 65, 128, 129, 190, 191, 192, 193)
#: Granule kind codes live in ProtHdr0..2.
CHI_KIND_BYTES = (62, 63, 64)

CRC_REGIONS: dict[Layout, tuple[CrcRegion, ...]] = {
    Layout.CXL_UNOPT: (
        CrcRegion("CRC0", range(0, 128), slice(252, 254)),
        CrcRegion("CRC1", range(128, 252), slice(254, 256)),
    ),
    Layout.CXL_OPT: (CrcRegion("CRC", range(0, 254), slice(254, 256)),),
    Layout.CHI: (CrcRegion("CRC", range(0, 254), slice(254, 256)),),
}


@dataclass(frozen=True)
class FlitGeometry:
    """Where the pieces of one layout live, as byte offsets."""

    header: slice
    credit: slice
    header_slot: slice | None
    g_slots: tuple[slice, ...]
    format_map: slice | None

    @property
    def slot_count(self) -> int:
        return len(self.g_slots)


GEOMETRY: dict[Layout, FlitGeometry] = {
    Layout.CXL_UNOPT: FlitGeometry(
        header=slice(0, 2),
        credit=slice(250, 252),
        header_slot=slice(2, 16),
        g_slots=tuple(slice(16 + SLOT_BYTES * i, 32 + SLOT_BYTES * i) for i in range(14)),
        format_map=slice(240, 242),
    ),
    Layout.CXL_OPT: FlitGeometry(
        header=slice(250, 252),
        credit=slice(252, 254),
        header_slot=slice(240, 250),
        g_slots=tuple(slice(SLOT_BYTES * i, SLOT_BYTES * (i + 1)) for i in range(15)),
        format_map=None,
    ),
}


@cache
def chi_granule_offsets() -> tuple[tuple[int, ...], ...]:
    """Byte offsets of the twelve granules, threaded around the header bytes."""
    taken = set(CHI_LINK_HEADER + CHI_CREDIT + CHI_CRC + CHI_PROTOCOL_HEADERS)
    free = [b for b in range(FLIT_BYTES) if b not in taken]
    return tuple(tuple(free[g * GRANULE_BYTES : (g + 1) * GRANULE_BYTES]) for g in range(12))


@cache
def byte_roles(layout: Layout | str) -> tuple[ByteRole, ...]:
    """Role of every byte 0-255 of ``layout``."""
    layout = Layout(layout)
    roles = [ByteRole.RESERVED] * FLIT_BYTES

    def mark(span, role):
        for b in span:
            roles[b] = role

    if layout is Layout.CHI:
        mark(CHI_LINK_HEADER, ByteRole.FLIT_HEADER)
        mark(CHI_CREDIT, ByteRole.CREDIT)
        mark(CHI_CRC, ByteRole.CRC)
        mark(CHI_PROTOCOL_HEADERS, ByteRole.PROTOCOL_HEADER)
        for granule in chi_granule_offsets():
            mark(granule, ByteRole.GRANULE)
        return tuple(roles)

    geometry = GEOMETRY[layout]
    mark(range(FLIT_BYTES)[geometry.header], ByteRole.FLIT_HEADER)
    mark(range(FLIT_BYTES)[geometry.credit], ByteRole.CREDIT)
    mark(range(FLIT_BYTES)[geometry.header_slot], ByteRole.HEADER_SLOT)
    for g in geometry.g_slots:
        mark(range(FLIT_BYTES)[g], ByteRole.G_SLOT)
    for region in CRC_REGIONS[layout]:
        mark(range(FLIT_BYTES)[region.field], ByteRole.CRC)
    return tuple(roles)


def role_totals(layout: Layout | str) -> dict[ByteRole, int]:
    """Bytes per role in one flit of ``layout``."""
    return dict(Counter(byte_roles(layout)))


def crc_region_of(layout: Layout | str, byte: int) -> str:
    """Name of the CRC region protecting ``byte``."""
    for region in CRC_REGIONS[Layout(layout)]:
        if byte in region.covered:
            return region.name
    raise ValueError(f"byte {byte} is not covered by a CRC region")
