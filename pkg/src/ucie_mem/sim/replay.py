"""Go-back-N link-level retry.

The transmitter keeps every flit until it is acknowledged. The receiver checks
CRC and sequence number, accepts flits strictly in order, acknowledges every
``ack_every`` accepted flits and naks the sequence number it still expects
whenever a corrupted flit arrives; flits after a gap are dropped until the
replay brings the expected one.

Indices here are absolute flit counts; only ``index % 4096`` goes on the wire.
"""

import logging
from collections import deque
from typing import NamedTuple

from ucie_mem.errors import CorruptFlitError, FlitParseError
from ucie_mem.flit.codec import SEQUENCE_MODULUS, flit_sequence, verify_flit
from ucie_mem.flit.headers import Layout

logger = logging.getLogger(__name__)


class StoredFlit(NamedTuple):
    """A sent flit kept until it is acknowledged."""

    index: int
    raw: bytes
    occupancy: float


class ReplayBuffer:
    """Transmit side: the ring of unacknowledged flits and the replay cursor."""

    def __init__(self, window: int = 64):
        if window >= SEQUENCE_MODULUS // 2:
            raise ValueError(f"replay window {window} is too large for 12-bit sequence numbers")
        self.window = window
        self.next_index = 0
        self._unacked: deque[StoredFlit] = deque()
        self._replay: deque[StoredFlit] = deque()
        self.retransmitted: list[int] = []

    def __len__(self) -> int:
        return len(self._unacked)

    @property
    def full(self) -> bool:
        return len(self._unacked) >= self.window

    @property
    def replaying(self) -> bool:
        return bool(self._replay)

    def record(self, raw: bytes, occupancy: float = 1.0) -> StoredFlit:
        """Keep a newly sent flit until it is acknowledged."""
        stored = StoredFlit(self.next_index, raw, occupancy)
        self.next_index += 1
        self._unacked.append(stored)
        return stored

    def ack(self, index: int) -> None:
        """Release every flit up to and including ``index``."""
        while self._unacked and self._unacked[0].index <= index:
            self._unacked.popleft()
        while self._replay and self._replay[0].index <= index:
            self._replay.popleft()

    def nak(self, index: int) -> None:
        """Everything before ``index`` arrived; resend from ``index`` on.

        A nak for a flit that is already queued for replay but not yet resent
        is a duplicate and changes nothing.
        """
        self.ack(index - 1)
        if self._replay and self._replay[0].index == index:
            return
        self._replay = deque(self._unacked)
        logger.debug("Replay from flit %d (%d flits)", index, len(self._replay))

    def next_replay(self) -> StoredFlit:
        stored = self._replay.popleft()
        self.retransmitted.append(stored.index)
        return stored


class Feedback(NamedTuple):
    """An ``ack`` or ``nak`` for flit ``index``."""

    kind: str
    index: int


class ReplayReceiver:
    """Receive side of the retry protocol."""

    def __init__(self, layout: Layout | str, *, ack_every: int = 4):
        self.layout = Layout(layout)
        self.ack_every = ack_every
        self.expected = 0
        self.corrupted = 0
        self.dropped = 0

    def receive(self, raw: bytes) -> tuple[bool, Feedback | None]:
        """Check one arriving flit; returns whether it was accepted and the feedback to send back."""
        try:
            verify_flit(raw, self.layout)
        except CorruptFlitError as e:
            self.corrupted += 1
            logger.debug("Dropping corrupted flit while expecting %d: %s", self.expected, e)
            return False, Feedback("nak", self.expected)
        except FlitParseError:
            self.corrupted += 1
            return False, Feedback("nak", self.expected)
        if flit_sequence(raw, self.layout) != self.expected % SEQUENCE_MODULUS:
            self.dropped += 1
            return False, None
        self.expected += 1
        if self.expected % self.ack_every == 0:
            return True, Feedback("ack", self.expected - 1)
        return True, None
