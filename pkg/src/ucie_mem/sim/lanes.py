"""Per-lane-group activity records and power accounting.

An active lane-UI costs 1 and a gated one costs ``p``. When gating is off every
lane-UI of the run is active. Gaps shorter than the gate entry/exit latency
cannot be gated and are charged as active.
"""

import heapq
from bisect import insort
from collections.abc import Iterable

from ucie_mem.sim.model import LaneUsage

Interval = tuple[float, float]


def _merge(intervals: Iterable[Interval]) -> list[Interval]:
    """Collapse start-sorted intervals that overlap or touch."""
    merged: list[Interval] = []
    for start, end in intervals:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


class LaneActivity:
    """Busy intervals of a lane group, in UI, kept sorted and disjoint."""

    def __init__(self, name: str, lanes: int):
        self.name = name
        self.lanes = lanes
        self._intervals: list[Interval] = []

    @property
    def intervals(self) -> tuple[Interval, ...]:
        return tuple(self._intervals)

    def mark(self, start: float, end: float) -> None:
        if end <= start:
            return
        intervals = self._intervals
        if intervals and start < intervals[-1][0]:
            insort(intervals, (start, end))
            self._intervals = _merge(intervals)
        elif intervals and start <= intervals[-1][1]:
            intervals[-1] = (intervals[-1][0], max(intervals[-1][1], end))
        else:
            intervals.append((start, end))

    def busy_ui(self, elapsed: float) -> float:
        """Union of the busy intervals inside ``[0, elapsed)``."""
        return sum(end - start for start, end in self._clipped(elapsed))

    def _clipped(self, elapsed: float) -> list[Interval]:
        clipped = ((max(start, 0.0), min(end, elapsed)) for start, end in self._intervals)
        return [(start, end) for start, end in clipped if end > start]

    def usage(self, elapsed: float, *, gating: bool = True, gate_latency: float = 0.0) -> LaneUsage:
        if elapsed <= 0:
            return LaneUsage(self.lanes, 0.0, 0.0)
        if not gating:
            return LaneUsage(self.lanes, self.lanes * elapsed, 0.0)
        merged = self._clipped(elapsed)
        active = sum(end - start for start, end in merged)
        if gate_latency > 0:
            active += sum(
                nxt[0] - cur[1] for cur, nxt in zip(merged, merged[1:]) if nxt[0] - cur[1] < gate_latency
            )
        return LaneUsage(self.lanes, self.lanes * active, self.lanes * (elapsed - active))


def union(name: str, lanes: int, *groups: LaneActivity) -> LaneActivity:
    """A group busy whenever any of ``groups`` is busy."""
    combined = LaneActivity(name, lanes)
    combined._intervals = _merge(heapq.merge(*(group._intervals for group in groups)))
    return combined


def data_power_ratio(data_bits: float, usages: dict[str, LaneUsage], idle_fraction: float) -> float:
    """Useful bits over weighted lane-UI; 0 when nothing was delivered."""
    total = sum(u.weighted(idle_fraction) for u in usages.values())
    if total <= 0 or data_bits <= 0:
        return 0.0
    return data_bits / total
