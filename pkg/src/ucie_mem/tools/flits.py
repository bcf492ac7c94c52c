"""Flit codec tools working on the text listing and hex formats."""

from typing import Any

from ucie_mem.core import Direction
from ucie_mem.errors import CorruptFlitError, UcieMemError
from ucie_mem.flit import pack_flits, unpack_flits
from ucie_mem.flit.listing import format_transaction, parse_flits, parse_transactions
from ucie_mem.mcp import mcp

from .analysis import error_dict


def pack_listing(transactions: list[str], layout: str = "cxl-unopt", dual_request_g_slot: bool = False) -> dict[str, Any]:
    """Pack listing lines into hex flits."""
    try:
        flits = pack_flits(parse_transactions("\n".join(transactions)), layout, dual_request_g_slot=dual_request_g_slot)
    except (UcieMemError, ValueError) as e:
        return error_dict(e, layout=layout)
    return {"layout": layout, "count": len(flits), "flits": [raw.hex() for raw in flits]}


def unpack_listing(flits: list[str], layout: str = "cxl-unopt", direction: str = "s2m") -> dict[str, Any]:
    """Decode hex flits into listing lines."""
    try:
        transactions = unpack_flits(parse_flits("\n".join(flits)), layout, Direction(direction))
    except CorruptFlitError as e:
        return error_dict(e, layout=layout, regions=list(e.regions), sequence=e.sequence)
    except (UcieMemError, ValueError) as e:
        return error_dict(e, layout=layout, direction=direction)
    return {"layout": layout, "count": len(transactions), "transactions": [format_transaction(t) for t in transactions]}


@mcp.tool
def pack_flits_tool(transactions: list[str], layout: str = "cxl-unopt", dual_request_g_slot: bool = False) -> dict[str, Any]:
    """
    Pack a transaction listing into 256-byte flits.

    Args:
        transactions: One transaction per entry, e.g. "RD tag=1 addr=0x40" or "WR tag=2 addr=0x80 data=<128 hex>"
        layout: "cxl-unopt", "cxl-opt" or "chi-x"
        dual_request_g_slot: Two requests per G-slot (cxl-opt only)

    Returns:
        Dict with the flits as 512-character hex strings, or an error
    """
    return pack_listing(transactions, layout, dual_request_g_slot)


@mcp.tool
def unpack_flits_tool(flits: list[str], layout: str = "cxl-unopt", direction: str = "s2m") -> dict[str, Any]:
    """
    Verify and decode hex flits back into a transaction listing.

    Args:
        flits: 512-character hex strings, one per flit
        layout: "cxl-unopt", "cxl-opt" or "chi-x"
        direction: "s2m" for requests or "m2s" for responses

    Returns:
        Dict with the transaction lines, or an error naming the failed CRC regions
    """
    return unpack_listing(flits, layout, direction)
