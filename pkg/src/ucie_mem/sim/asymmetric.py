"""Lane-group simulation of the asymmetric approaches.

No flits here: commands, write data and read data occupy their own lane groups
for ``bits / lanes`` UI each. A command engine issues operations in mix order
against read and write credits; a read engine and a write engine move the data.
A corrupted read is dropped and its command reissued; reads that arrive while
an earlier one is being retried wait in a reorder buffer so lines leave in
index order. A corrupted write or command is resent in place.
"""

import logging
from collections import deque
from fractions import Fraction
from math import lcm

import simpy

from ucie_mem.core import LINE_DATA_BITS, ApproachSpec, Direction, LaneRole, LinkVariant, TrafficMix
from ucie_mem.sim.lanes import LaneActivity, data_power_ratio, union
from ucie_mem.sim.model import MIN_CONVERGED_LINES, DeliveryCheck, SimConfig, SimMetrics
from ucie_mem.sim.traffic import MemoryOp, TrafficSource, rng_streams

logger = logging.getLogger(__name__)


def transfer_ui(approach: ApproachSpec) -> tuple[Fraction, Fraction, Fraction]:
    """UI per read line, per write line and per command."""
    return (
        Fraction(approach.line_bits, approach.lanes(Direction.M2S, LaneRole.DATA)),
        Fraction(approach.line_bits, approach.lanes(Direction.S2M, LaneRole.DATA)),
        Fraction(approach.command_bits, approach.lanes(Direction.S2M, LaneRole.COMMAND)),
    )


def _sources(group, cmd: LaneActivity, write: LaneActivity, read: LaneActivity) -> tuple[LaneActivity, ...]:
    if group.direction is Direction.M2S:
        return (read,)
    if group.role is LaneRole.COMMAND:
        return (cmd,)
    if group.role is LaneRole.CRC:
        return (cmd, write)
    return (write,)


class AsymmetricLinkSim:
    """Simulates one asymmetric approach; call :meth:`run` once."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.approach = config.approach
        self.env = simpy.Environment()
        read_ui, write_ui, command_ui = transfer_ui(self.approach)
        self.read_ui, self.write_ui, self.command_ui = float(read_ui), float(write_ui), float(command_ui)
        payload_rng, self._error_rng = rng_streams(config.seed)
        self.source = TrafficSource(config.mix, payload_rng)

        self.read_credits = simpy.Container(self.env, capacity=config.read_credits, init=config.read_credits)
        self.write_credits = simpy.Container(self.env, capacity=config.write_credits, init=config.write_credits)
        self.read_queue = simpy.Store(self.env)
        self.write_queue = simpy.Store(self.env)
        self.retry_queue = simpy.Store(self.env)

        self.cmd = LaneActivity("command", 1)
        self.write = LaneActivity("write-data", 1)
        self.read = LaneActivity("read-data", 1)

        self.generated: list[MemoryOp] = []
        self.delivered_reads: list[int] = []
        self.delivered_writes: list[int] = []
        self._pending_reads: deque[int] = deque()
        self._arrived_reads: dict[int, float] = {}
        self.latency_ns: list[float] = []
        self.trace: list[str] = []
        self.retried = 0
        self.source_done = False
        self.done = self.env.event()
        self._snapshot: tuple[int, int] | None = None

    def _corrupted(self) -> bool:
        return bool(self.config.error_rate) and self._error_rng.random() < self.config.error_rate

    def _log(self, direction: Direction, group: str, kind: str, detail: str = "") -> None:
        if self.config.trace:
            self.trace.append(f"{self.env.now:.3f} {direction.value} {group} {kind} {detail}".rstrip())

    def _latency(self, command_start: float) -> float:
        return self.config.latency.adapter_roundtrip + (self.env.now - command_start) / self.config.link.data_rate

    def _commands(self):
        env = self.env
        while True:
            first_start = None
            if self.retry_queue.items:
                op, first_start = yield self.retry_queue.get()
            elif env.now < self.config.duration_ui:
                op = self.source.next()
                self.generated.append(op)
                if op.is_read:
                    self._pending_reads.append(op.index)
            else:
                self.source_done = True
                self._check_done()
                op, first_start = yield self.retry_queue.get()
            credits = self.read_credits if op.is_read else self.write_credits
            yield credits.get(1)
            start = env.now if first_start is None else first_start
            if not op.is_read:
                self.write_queue.put((op, start))
            while True:
                self.cmd.mark(env.now, env.now + self.command_ui)
                self._log(Direction.S2M, "command", "issue", f"op={op.index} {op.kind.value}")
                yield env.timeout(self.command_ui)
                if not self._corrupted():
                    break
                self.retried += 1
                self._log(Direction.S2M, "command", "resend", f"op={op.index}")
            if op.is_read:
                self.read_queue.put((op, start))

    def _reads(self):
        env = self.env
        while True:
            op, command_start = yield self.read_queue.get()
            self.read.mark(env.now, env.now + self.read_ui)
            yield env.timeout(self.read_ui)
            self.read_credits.put(1)
            if self._corrupted():
                self.retried += 1
                self._log(Direction.M2S, "read-data", "drop", f"op={op.index}")
                self.retry_queue.put((op, command_start))
                continue
            self._arrived_reads[op.index] = command_start
            self._release_reads()
            self._check_done()

    def _release_reads(self) -> None:
        """Deliver buffered reads while the oldest outstanding one has arrived."""
        while self._pending_reads and self._pending_reads[0] in self._arrived_reads:
            index = self._pending_reads.popleft()
            self.delivered_reads.append(index)
            self.latency_ns.append(self._latency(self._arrived_reads.pop(index)))

    def _writes(self):
        env = self.env
        while True:
            op, command_start = yield self.write_queue.get()
            while True:
                self.write.mark(env.now, env.now + self.write_ui)
                yield env.timeout(self.write_ui)
                if not self._corrupted():
                    break
                self.retried += 1
                self._log(Direction.S2M, "write-data", "resend", f"op={op.index}")
            self.write_credits.put(1)
            self.delivered_writes.append(op.index)
            self.latency_ns.append(self._latency(command_start))
            self._check_done()

    def _check_done(self) -> None:
        delivered = len(self.delivered_reads) + len(self.delivered_writes)
        if self.source_done and delivered >= len(self.generated) and not self.done.triggered:
            self.done.succeed()

    def _take_snapshot(self):
        yield self.env.timeout(self.config.duration_ui)
        self._snapshot = (len(self.delivered_reads), len(self.delivered_writes))

    def run(self) -> SimMetrics:
        config = self.config
        env = self.env
        env.process(self._take_snapshot())
        env.process(self._commands())
        env.process(self._reads())
        env.process(self._writes())
        if config.drain:
            limit = env.timeout(20 * config.duration_ui + 100_000)
            env.run(until=simpy.AnyOf(env, [self.done, limit]))
            if not self.done.triggered:
                logger.warning("%s did not drain by %.0f UI", self.approach.name, env.now)
        else:
            env.run(until=config.duration_ui)
        if self._snapshot is None:
            self._snapshot = (len(self.delivered_reads), len(self.delivered_writes))
        return self._metrics()

    def _check(self) -> DeliveryCheck | None:
        if not self.config.drain:
            return None
        delivered = self.delivered_reads + self.delivered_writes
        unique = set(delivered)
        in_order = self.delivered_reads == sorted(self.delivered_reads) and self.delivered_writes == sorted(self.delivered_writes)
        return DeliveryCheck(
            generated=len(self.generated),
            delivered=len(delivered),
            lost=len({op.index for op in self.generated} - unique),
            duplicated=len(delivered) - len(unique),
            in_order=in_order,
        )

    def _metrics(self) -> SimMetrics:
        config = self.config
        link = config.link
        elapsed = float(config.duration_ui)
        reads, writes = self._snapshot
        gating = config.gating and self.approach.dynamic_gating
        usages = {
            group.name: union(group.name, group.lane_count, *_sources(group, self.cmd, self.write, self.read)).usage(
                elapsed, gating=gating, gate_latency=config.gate_latency_ui
            )
            for group in self.approach.lane_groups
            if group.role.powered
        }
        data_bits = LINE_DATA_BITS * (reads + writes)
        bw = data_bits / (self.approach.powered_lanes * elapsed) if elapsed else 0.0
        p_data = data_power_ratio(data_bits, usages, link.idle_fraction)
        return SimMetrics(
            approach=self.approach.name,
            link=link.name,
            mix=config.mix,
            elapsed_ui=elapsed,
            delivered_reads=reads,
            delivered_writes=writes,
            generated_reads=self.source.reads,
            generated_writes=self.source.writes,
            bw_eff=bw,
            p_data=p_data,
            power_eff=link.peak_power_eff / p_data if p_data else 0.0,
            lane_groups=usages,
            retried_flits=self.retried,
            latency_ns=tuple(self.latency_ns),
            check=self._check(),
            converged=reads + writes >= MIN_CONVERGED_LINES,
            trace=tuple(self.trace),
        )


def simulate_asymmetric(config: SimConfig) -> SimMetrics:
    """Run a lane-group approach."""
    return AsymmetricLinkSim(config).run()


def per_ui_power_oracle(approach: ApproachSpec, mix: TrafficMix, link: LinkVariant | float) -> float:
    """Data power ratio of one mix period, accounted tick by tick.

    Every lane group starts its transfers at the beginning of the period, the
    period is cut into ticks fine enough that every transfer ends on a tick
    boundary, and each tick charges ``lanes`` for a busy group and
    ``p * lanes`` for an idle one.
    """
    p = Fraction(str(link.idle_fraction if isinstance(link, LinkVariant) else link))
    x, y = mix.reduced()
    read_ui, write_ui, command_ui = transfer_ui(approach)
    busy = {"read": x * read_ui, "write": y * write_ui, "cmd": (x + y) * command_ui}
    period = max(busy.values())
    scale = lcm(*(v.denominator for v in (*busy.values(), period)))
    ends = {name: v * scale for name, v in busy.items()}

    def group_end(group) -> Fraction:
        if group.direction is Direction.M2S:
            return ends["read"]
        if group.role is LaneRole.COMMAND:
            return ends["cmd"]
        if group.role is LaneRole.CRC:
            return max(ends["cmd"], ends["write"])
        return ends["write"]

    groups = [(g.lane_count, group_end(g)) for g in approach.lane_groups if g.role.powered]
    total = Fraction(0)
    for tick in range(int(period * scale)):
        for lanes, end in groups:
            total += lanes if tick < end else lanes * p
    return float(LINE_DATA_BITS * (x + y) * scale / total)
