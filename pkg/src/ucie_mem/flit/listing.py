"""Text forms of flits and transactions used by the CLI and the MCP tools.

A flit is one line of 512 hex characters. A transaction is one line such as::

    RD tag=1 addr=0x40
    WR tag=2 addr=0x80 data=00112233...
    DATA tag=1 data=...
    CMP tag=2

with optional ``meta=``, ``devload=`` and ``poison=`` fields.
"""

import re
from collections.abc import Iterable

from ucie_mem.errors import FlitParseError
from ucie_mem.flit.codec import LINE_BYTES, Transaction
from ucie_mem.flit.headers import RequestHeader, ReqCmd, ResponseHeader, RespCmd
from ucie_mem.flit.layout import FLIT_BYTES

_HEX_LINE = re.compile(r"[0-9a-fA-F]*")
_REQUEST_NAMES = {"RD": ReqCmd.MEM_RD, "WR": ReqCmd.MEM_WR}
_RESPONSE_NAMES = {"DATA": RespCmd.MEM_DATA, "CMP": RespCmd.CMP}
_FIELD = re.compile(r"^(tag|addr|meta|devload|poison|data)=(\S+)$")


def format_flits(flits: Iterable[bytes]) -> str:
    """One hex line per flit."""
    return "".join(raw.hex() + "\n" for raw in flits)


def parse_flits(text: str) -> list[bytes]:
    """Parse hex lines (blank lines ignored) into flits.

    Raises
    ------
    FlitParseError
        With the character offset of the first malformed line.
    """
    flits = []
    offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped:
            if not _HEX_LINE.fullmatch(stripped):
                bad = next(i for i, c in enumerate(stripped) if c not in "0123456789abcdefABCDEF")
                raise FlitParseError(f"invalid hex character {stripped[bad]!r}", offset=offset + line.index(stripped) + bad)
            if len(stripped) != 2 * FLIT_BYTES:
                raise FlitParseError(f"flit line has {len(stripped)} hex characters, expected {2 * FLIT_BYTES}", offset=offset)
            flits.append(bytes.fromhex(stripped))
        offset += len(line)
    return flits


def format_transaction(transaction: Transaction) -> str:
    """Inverse of :func:`parse_transaction`."""
    header = transaction.header
    if isinstance(header, RequestHeader):
        name = {v: k for k, v in _REQUEST_NAMES.items()}.get(header.cmd, f"REQ{header.cmd}")
        parts = [name, f"tag={header.tag}", f"addr=0x{header.address:x}"]
    else:
        name = {v: k for k, v in _RESPONSE_NAMES.items()}.get(header.cmd, f"RSP{header.cmd}")
        parts = [name, f"tag={header.tag}"]
        if header.devload:
            parts.append(f"devload={header.devload}")
    if header.meta_data:
        parts.append(f"meta={header.meta_data}")
    if header.poison:
        parts.append("poison=1")
    if transaction.data is not None:
        parts.append(f"data={transaction.data.hex()}")
    return " ".join(parts)


def parse_transaction(line: str) -> Transaction:
    """Parse one listing line; see the module docstring for the format."""
    tokens = line.split()
    if not tokens:
        raise FlitParseError("empty transaction line")
    kind = tokens[0].upper()
    values: dict[str, str] = {}
    for token in tokens[1:]:
        match = _FIELD.match(token)
        if match is None:
            raise FlitParseError(f"cannot parse field {token!r} in {line.strip()!r}")
        values[match.group(1)] = match.group(2)
    try:
        numbers = {k: int(v, 0) for k, v in values.items() if k != "data"}
        data = bytes.fromhex(values["data"]) if "data" in values else None
    except ValueError as e:
        raise FlitParseError(f"bad field value in {line.strip()!r}: {e}") from e
    if data is not None and len(data) != LINE_BYTES:
        raise FlitParseError(f"data must be {LINE_BYTES} bytes, got {len(data)}")
    common = {"tag": numbers.get("tag", 0), "meta_data": numbers.get("meta", 0), "poison": numbers.get("poison", 0)}
    if kind in _REQUEST_NAMES:
        header = RequestHeader(cmd=_REQUEST_NAMES[kind], address=numbers.get("addr", 0), **common)
    elif kind in _RESPONSE_NAMES:
        header = ResponseHeader(cmd=_RESPONSE_NAMES[kind], devload=numbers.get("devload", 0), **common)
    else:
        raise FlitParseError(f"unknown transaction kind {tokens[0]!r}")
    return Transaction(header, data)


def parse_transactions(text: str) -> list[Transaction]:
    """Parse a listing, skipping blank lines and ``#`` comments."""
    return [parse_transaction(line) for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]


def format_transactions(transactions: Iterable[Transaction]) -> str:
    """One listing line per transaction."""
    return "".join(format_transaction(t) + "\n" for t in transactions)
