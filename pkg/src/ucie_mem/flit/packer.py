"""Greedy slot packing of transaction streams into flits.

Headers go into the H/HS-slot first. G-slots (or CHI granules) take data
chunks first, but only chunks whose header has already been placed; a G-slot
with no eligible data takes as many headers as it can hold, and a slot with
nothing to carry becomes a header slot of NOPs.
"""

import logging
from collections import deque
from collections.abc import Iterable, Sequence

from ucie_mem.core import Direction
from ucie_mem.errors import FlitParseError
from ucie_mem.flit.codec import (
    CHUNKS_PER_LINE,
    SEQUENCE_MODULUS,
    DataSlot,
    FlitDecoder,
    FlitHeader,
    HeaderSlot,
    ProtocolId,
    Slot,
    Transaction,
    encode_flit,
    slot_capacity,
)
from ucie_mem.flit.headers import Layout
from ucie_mem.flit.layout import GEOMETRY, chi_granule_offsets

logger = logging.getLogger(__name__)

_DATA = -1


class FlitPacker:
    """Packs one direction's transactions into flits.

    Parameters
    ----------
    layout : Layout or str
        Flit layout.
    direction : Direction
        ``S2M`` for requests, ``M2S`` for responses.
    dual_request_g_slot : bool
        On the optimised layout, let a G-slot hold two requests.
    """

    def __init__(self, layout: Layout | str, direction: Direction, *, dual_request_g_slot: bool = False):
        self.layout = Layout(layout)
        self.direction = direction
        self.sequence = 0
        self.credit = 0
        self._headers: deque[Transaction] = deque()
        self._chunks: deque[tuple[Transaction, int]] = deque()
        if self.layout is Layout.CHI:
            self._header_slot_cap = 0
            self._positions = len(chi_granule_offsets())
        else:
            self._header_slot_cap = slot_capacity(self.layout, direction, header_slot=True)
            self._positions = GEOMETRY[self.layout].slot_count
        self._g_cap = slot_capacity(self.layout, direction, header_slot=False, dual_request_g_slot=dual_request_g_slot)
        #: Share of the last flit's slot positions that carried payload; a header slot counts in proportion to its fill.
        self.last_occupancy = 0.0

    def push(self, transaction: Transaction) -> None:
        if transaction.direction is not self.direction:
            raise FlitParseError(f"{transaction.direction.value} transaction pushed to a {self.direction.value} packer")
        self._headers.append(transaction)

    def extend(self, transactions: Iterable[Transaction]) -> None:
        for transaction in transactions:
            self.push(transaction)

    @property
    def idle(self) -> bool:
        return not self._headers and not self._chunks

    @property
    def backlog(self) -> int:
        """Headers not yet placed plus data chunks not yet sent."""
        return len(self._headers) + len(self._chunks)

    def _plan(self) -> tuple[list[int], bool]:
        """Slot plan as header counts per slot (``_DATA`` for a data chunk) and whether every G-slot is full."""
        headers_left = len(self._headers)
        next_header = 0
        chunks_ready = len(self._chunks)
        full = True
        plan = []

        def take(cap: int) -> int:
            nonlocal next_header, chunks_ready, headers_left
            k = min(cap, headers_left)
            for j in range(next_header, next_header + k):
                if self._headers[j].header.carries_data:
                    chunks_ready += CHUNKS_PER_LINE
            next_header += k
            headers_left -= k
            return k

        if self._header_slot_cap:
            plan.append(take(self._header_slot_cap))
        for _ in range(self._positions):
            if chunks_ready:
                chunks_ready -= 1
                plan.append(_DATA)
            else:
                k = take(self._g_cap)
                plan.append(k)
                full &= k == self._g_cap
        return plan, full

    def ready(self) -> bool:
        """Whether every G-slot of the next flit would carry data or a full load of headers."""
        return not self.idle and self._plan()[1]

    def _commit(self, plan: list[int]) -> tuple[Slot, ...]:
        slots: list[Slot] = []
        used = 0.0
        for position, entry in enumerate(plan):
            if entry == _DATA:
                owner, index = self._chunks.popleft()
                slots.append(DataSlot(owner.chunk(index), index))
                used += 1
                continue
            cap = self._header_slot_cap if position == 0 and self._header_slot_cap else self._g_cap
            used += entry / cap
            placed = [self._headers.popleft() for _ in range(entry)]
            for transaction in placed:
                if transaction.header.carries_data:
                    self._chunks.extend((transaction, i) for i in range(CHUNKS_PER_LINE))
            if entry == 0 and self.layout is Layout.CHI:
                slots.append(None)
            else:
                slots.append(HeaderSlot(tuple(t.header for t in placed)))
        self.last_occupancy = used / len(plan)
        return tuple(slots)

    def _emit(self, slots: tuple[Slot, ...], protocol: ProtocolId) -> bytes:
        header = FlitHeader(protocol=protocol, sequence=self.sequence)
        self.sequence = (self.sequence + 1) % SEQUENCE_MODULUS
        return encode_flit(self.layout, self.direction, header, slots, credit=self.credit)

    def next_flit(self, *, force: bool = True) -> bytes | None:
        """Encode the next flit.

        Returns ``None`` when there is nothing to send, or when ``force`` is
        false and the flit would not be completely filled.
        """
        if self.idle:
            return None
        plan, full = self._plan()
        if not full and not force:
            return None
        return self._emit(self._commit(plan), ProtocolId.CXL_MEM)

    def nop_flit(self) -> bytes:
        """An empty flit; on the optimised layout it announces CXL.Mem for the following flit."""
        empty = [0] * ((1 if self._header_slot_cap else 0) + self._positions)
        slots = tuple(None if self.layout is Layout.CHI else HeaderSlot() for _ in empty)
        protocol = ProtocolId.CXL_MEM if self.layout is Layout.CXL_OPT else ProtocolId.NOP
        self.last_occupancy = 0.0
        return self._emit(slots, protocol)

    def drain(self) -> list[bytes]:
        flits = []
        while (raw := self.next_flit()) is not None:
            flits.append(raw)
        return flits


def _direction_of(transactions: Sequence[Transaction]) -> Direction:
    directions = {t.direction for t in transactions}
    if len(directions) > 1:
        raise FlitParseError("a flit stream carries one direction; split requests and responses")
    return directions.pop() if directions else Direction.S2M


def pack_flits(
    transactions: Sequence[Transaction],
    layout: Layout | str,
    *,
    direction: Direction | None = None,
    dual_request_g_slot: bool = False,
) -> list[bytes]:
    """Pack a single-direction transaction queue into 256-byte flits.

    Parameters
    ----------
    transactions : sequence of Transaction
        All requests (SoC to memory) or all responses (memory to SoC).
    layout : Layout or str
        ``cxl-unopt``, ``cxl-opt`` or ``chi-x``.
    direction : Direction, optional
        Inferred from the transactions when omitted.
    dual_request_g_slot : bool
        Two requests per G-slot on the optimised layout.

    Returns
    -------
    list of bytes
        Encoded flits with CRC and credit fields filled in.
    """
    direction = direction or _direction_of(transactions)
    packer = FlitPacker(layout, direction, dual_request_g_slot=dual_request_g_slot)
    packer.extend(transactions)
    flits = packer.drain()
    logger.debug("Packed %d transactions into %d %s flits", len(transactions), len(flits), packer.layout.value)
    return flits


def unpack_flits(flits: Iterable[bytes], layout: Layout | str, direction: Direction) -> list[Transaction]:
    """Decode a flit stream back into its transaction queue.

    ``direction`` selects the header format; request and response flits share
    their layout, so it cannot be told from the bytes.

    Raises
    ------
    CorruptFlitError
        If a flit fails a CRC check; the error names the failed regions.
    FlitParseError
        If the stream is malformed or ends mid-transaction.
    """
    decoder = FlitDecoder(layout, direction, synced=True)
    transactions = []
    for raw in flits:
        transactions.extend(d.transaction for d in decoder.feed(raw))
    decoder.finish()
    return transactions
