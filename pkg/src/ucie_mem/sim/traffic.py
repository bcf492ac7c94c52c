"""Open-loop traffic generation."""

import enum
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ucie_mem.core import TrafficMix
from ucie_mem.flit.codec import LINE_BYTES


class OpKind(str, enum.Enum):
    """Read or write."""

    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class MemoryOp:
    """One cache-line access."""

    index: int
    kind: OpKind
    address: int
    data: bytes | None = None

    @property
    def is_read(self) -> bool:
        return self.kind is OpKind.READ


def interleave(mix: TrafficMix) -> Iterator[OpKind]:
    """Reads and writes spread as evenly as the reduced ``x:y`` ratio allows.

    Any window of ``x + y`` consecutive operations holds exactly ``x`` reads.
    """
    x, y = mix.reduced()
    n = x + y
    k = 0
    while True:
        yield OpKind.READ if (k + 1) * x // n - k * x // n else OpKind.WRITE
        k = (k + 1) % n


def fill_line(address: int) -> bytes:
    """Content of a line that was never written."""
    return (address & (1 << 64) - 1).to_bytes(8, "little") * (LINE_BYTES // 8)


class TrafficSource:
    """Endless stream of :class:`MemoryOp` in the mix ratio.

    The kind sequence is fixed by the mix; ``rng`` only draws write payloads.
    Addresses are consecutive line indices.
    """

    def __init__(self, mix: TrafficMix, rng: np.random.Generator, *, address_bits: int = 46):
        self._kinds = interleave(mix)
        self._rng = rng
        self._mask = (1 << address_bits) - 1
        self.generated = 0
        self.reads = 0
        self.writes = 0

    def next(self) -> MemoryOp:
        kind = next(self._kinds)
        index = self.generated
        self.generated += 1
        if kind is OpKind.READ:
            self.reads += 1
            return MemoryOp(index, kind, index & self._mask)
        self.writes += 1
        return MemoryOp(index, kind, index & self._mask, self._rng.bytes(LINE_BYTES))


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for payloads and for error injection."""
    payload, errors = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(payload), np.random.default_rng(errors)
