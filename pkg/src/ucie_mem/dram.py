"""Logic-die to DRAM backend.

The logic die behind an asymmetric LPDDR6 link drives four x24 LPDDR6 devices
(each two x12 sub-channels). On the link side the command, read-data and
write-data lanes are time-division multiplexed among the devices one byte at
a time: byte ``b`` of a lane group belongs to device ``b % 4``. Every device
therefore owns a fixed quarter of each lane group, and a stream spread over
all four devices can keep the lanes full while a stream aimed at one device
can use at most a quarter of them.

Time is counted in clocks of the link's forwarded clock, two link UI per clock.
"""

import logging
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

from ucie_mem.core import (
    APPROACHES,
    LINE_DATA_BITS,
    LINE_WIRE_BITS,
    ApproachId,
    Direction,
    LaneRole,
    LinkVariant,
    MetricsResult,
    TrafficMix,
)
from ucie_mem.errors import ClockRatioError, ConfigError, ScheduleConflictError
from ucie_mem.sim.asymmetric import per_ui_power_oracle
from ucie_mem.sim.traffic import MemoryOp, OpKind, interleave

logger = logging.getLogger(__name__)

UI_PER_CLOCK = 2
SUPPORTED_RATIOS = (1, 2, 4)
LINE_BYTES_ON_WIRE = LINE_WIRE_BITS // 8
#: ACT and RD/WR each take 48 bits on the command lanes.
COMMAND_BYTES = 6

_LPDDR6 = APPROACHES[ApproachId.LPDDR6_ASYM]
_HBM = APPROACHES[ApproachId.HBM_ASYM]


@dataclass(frozen=True)
class SignalGroup:
    """DRAM pins of one kind and their signalling rate relative to the DQ rate."""

    name: str
    count: int
    rate: Fraction
    bidirectional: bool = False


@dataclass(frozen=True)
class Lpddr6DeviceModel:
    """A two sub-channel x24 LPDDR6 device.

    ``trcd_dui`` is the activate-to-column-command spacing in device UI.
    """

    subchannel_width: int = 12
    subchannels: int = 2
    burst_length: int = 24
    metadata_bits: int = 32
    trcd_dui: int = 8
    signals: tuple[SignalGroup, ...] = (
        SignalGroup("CA", 8, Fraction(1, 2)),
        SignalGroup("CS", 2, Fraction(1, 2)),
        SignalGroup("WCK", 4, Fraction(1, 2)),
        SignalGroup("RDQS", 4, Fraction(1, 2)),
        SignalGroup("CK", 4, Fraction(1, 4)),
        SignalGroup("DQ", 24, Fraction(1), bidirectional=True),
    )

    @property
    def burst_bits(self) -> int:
        """Bits one sub-channel moves per burst (data plus metadata)."""
        return self.subchannel_width * self.burst_length

    @property
    def line_bits(self) -> int:
        return self.burst_bits * self.subchannels

    @property
    def signal_count(self) -> int:
        return sum(s.count for s in self.signals)


@dataclass(frozen=True)
class ClockRatioConfig:
    """DRAM and link data rates in GT/s."""

    dram_rate: float = 16.0
    link_rate: float = 32.0

    @property
    def ratio(self) -> Fraction:
        return Fraction(str(self.link_rate)) / Fraction(str(self.dram_rate))


def validate_ratio(config: ClockRatioConfig) -> int:
    """Return ``k`` when the link runs at ``k`` times the DRAM rate for a supported ``k``.

    Raises
    ------
    ClockRatioError
        If the rates are not positive or their ratio is not 1, 2 or 4.
    """
    if config.dram_rate <= 0 or config.link_rate <= 0:
        raise ClockRatioError(f"rates must be positive, got dram {config.dram_rate} and link {config.link_rate}")
    ratio = config.ratio
    if ratio.denominator != 1 or ratio.numerator not in SUPPORTED_RATIOS:
        raise ClockRatioError(
            f"link/dram ratio {ratio} ({config.link_rate:g}/{config.dram_rate:g} GT/s) is not one of {SUPPORTED_RATIOS}"
        )
    return ratio.numerator


class _ByteLanes:
    """A lane group carrying ``lanes / 4`` bytes per clock, byte-multiplexed among devices."""

    def __init__(self, lanes: int, devices: int):
        self.bytes_per_clock = Fraction(lanes * UI_PER_CLOCK, 8)
        self.devices = devices

    def clock_of(self, byte: int) -> int:
        return int(byte // self.bytes_per_clock)

    def first_byte(self, clock: int) -> int:
        return ceil(clock * self.bytes_per_clock)

    def first_local(self, clock: int, device: int) -> int:
        """First device-local byte index whose global byte falls in ``clock`` or later."""
        return max(0, ceil((self.first_byte(clock) - device) / self.devices))

    def global_bytes(self, device: int, start: int, count: int) -> tuple[int, ...]:
        return tuple(self.devices * j + device for j in range(start, start + count))

    def end_clock(self, byte: int) -> int:
        """Clock at which a transfer whose last byte is ``byte`` has arrived."""
        return self.clock_of(byte) + 1


CMD_LANES = _ByteLanes(_LPDDR6.lanes(Direction.S2M, LaneRole.COMMAND), 4)
READ_LANES = _ByteLanes(_LPDDR6.lanes(Direction.M2S, LaneRole.DATA), 4)
WRITE_LANES = _ByteLanes(_LPDDR6.lanes(Direction.S2M, LaneRole.DATA), 4)


@dataclass(frozen=True)
class ScheduledOp:
    """Placement of one access; byte tuples hold global lane-group byte indices."""

    index: int
    device: int
    kind: OpKind
    act_bytes: tuple[int, ...]
    cas_bytes: tuple[int, ...]
    data_bytes: tuple[int, ...]
    burst_start: int
    burst_end: int

    @property
    def act_end(self) -> int:
        return CMD_LANES.end_clock(self.act_bytes[-1])

    @property
    def cas_end(self) -> int:
        return CMD_LANES.end_clock(self.cas_bytes[-1])

    @property
    def data_lanes(self) -> _ByteLanes:
        return READ_LANES if self.kind is OpKind.READ else WRITE_LANES

    @property
    def data_start(self) -> int:
        return self.data_lanes.clock_of(self.data_bytes[0])

    @property
    def data_end(self) -> int:
        return self.data_lanes.end_clock(self.data_bytes[-1])

    @property
    def done(self) -> int:
        """Clock at which the access is complete on the link side."""
        return self.data_end if self.kind is OpKind.READ else self.burst_end


@dataclass(frozen=True)
class PipelineSchedule:
    """Placement of a request stream on the link lanes and the device bursts."""

    ops: tuple[ScheduledOp, ...]
    ratio: int = 2
    devices: int = 4
    device: Lpddr6DeviceModel = field(default_factory=Lpddr6DeviceModel)

    @property
    def burst_clocks(self) -> int:
        return self.device.burst_length * self.ratio // UI_PER_CLOCK

    @property
    def trcd_clocks(self) -> int:
        return ceil(self.device.trcd_dui * self.ratio / UI_PER_CLOCK)

    @property
    def reads(self) -> int:
        return sum(1 for op in self.ops if op.kind is OpKind.READ)

    @property
    def writes(self) -> int:
        return len(self.ops) - self.reads

    @property
    def end(self) -> int:
        return max((op.done for op in self.ops), default=0)

    def occupancy(self, lanes: str, start: int, clocks: int) -> float:
        """Share of the byte slots of ``lanes`` (``"cmd"``, ``"read"`` or ``"write"``) used in ``[start, start + clocks)``."""
        group = {"cmd": CMD_LANES, "read": READ_LANES, "write": WRITE_LANES}[lanes]
        lo, hi = group.first_byte(start), group.first_byte(start + clocks)
        used = sum(1 for b in self._bytes(lanes) if lo <= b < hi)
        return used / (hi - lo) if hi > lo else 0.0

    def _bytes(self, lanes: str) -> list[int]:
        if lanes == "cmd":
            return [b for op in self.ops for b in (*op.act_bytes, *op.cas_bytes)]
        kind = OpKind.READ if lanes == "read" else OpKind.WRITE
        return [b for op in self.ops if op.kind is kind for b in op.data_bytes]

    def verify(self) -> None:
        """Check resource exclusivity and device timing.

        Raises
        ------
        ScheduleConflictError
            On the first violation found.
        """
        for lanes in ("cmd", "read", "write"):
            seen: set[int] = set()
            for b in self._bytes(lanes):
                if b in seen:
                    raise ScheduleConflictError(f"{lanes} byte {b} is driven twice")
                seen.add(b)
        last_burst: dict[int, int] = {}
        for op in self.ops:
            for b in (*op.act_bytes, *op.cas_bytes, *op.data_bytes):
                if b % self.devices != op.device:
                    raise ScheduleConflictError(f"op {op.index} uses byte {b}, owned by device {b % self.devices}")
            if op.cas_bytes[0] <= op.act_bytes[-1]:
                raise ScheduleConflictError(f"op {op.index}: column command overlaps its activate")
            if op.cas_end < op.act_end + self.trcd_clocks:
                raise ScheduleConflictError(
                    f"op {op.index} on device {op.device}: column command {op.cas_end - op.act_end} clocks after activate,"
                    f" needs {self.trcd_clocks}"
                )
            if op.burst_end - op.burst_start != self.burst_clocks:
                raise ScheduleConflictError(f"op {op.index}: burst of {op.burst_end - op.burst_start} clocks, expected {self.burst_clocks}")
            if op.burst_start < op.cas_end:
                raise ScheduleConflictError(f"op {op.index}: burst starts before its column command arrives")
            if op.burst_start < last_burst.get(op.device, 0):
                raise ScheduleConflictError(f"op {op.index}: bursts overlap on device {op.device}")
            last_burst[op.device] = op.burst_end
            if op.kind is OpKind.WRITE and op.data_end > op.burst_start:
                raise ScheduleConflictError(f"op {op.index}: write burst starts before its data has arrived")
            if op.kind is OpKind.READ and op.data_start < op.burst_end:
                raise ScheduleConflictError(f"op {op.index}: read data leaves before the burst completes")


def interleaved_stream(mix: TrafficMix, count: int, *, devices: int = 4, device: int | None = None) -> list[MemoryOp]:
    """``count`` accesses in ``mix`` order; addresses rotate over the devices unless ``device`` pins them."""
    if device is not None and not 0 <= device < devices:
        raise ConfigError(f"device must lie in 0..{devices - 1}, got {device}")
    kinds = interleave(mix)
    ops = []
    for i in range(count):
        address = i * devices + device if device is not None else i
        ops.append(MemoryOp(i, next(kinds), address))
    return ops


def schedule_stream(
    ops: Iterable[MemoryOp],
    ratio: ClockRatioConfig = ClockRatioConfig(),
    *,
    device: Lpddr6DeviceModel = Lpddr6DeviceModel(),
    devices: int = 4,
    queue_depth: int = 8,
    read_buffer: int = 4,
) -> PipelineSchedule:
    """Place a request stream on the link lanes and the devices.

    Each device takes its accesses in order: activate, column command no
    earlier than ``trcd`` later, then a BL24 burst once the device is free (and,
    for a write, once its data has crossed the link; write data starts moving
    with the activate). Read data leaves through the device's byte slots of the
    read lanes after the burst. A device holds at most ``queue_depth`` accesses
    that have been activated but not yet burst, and at most ``read_buffer``
    lines waiting for the read lanes.

    Parameters
    ----------
    ops : iterable of MemoryOp
        Accesses; ``address % devices`` selects the device.
    ratio : ClockRatioConfig
        Must pass :func:`validate_ratio`.

    Returns
    -------
    PipelineSchedule
        The verified schedule.
    """
    k = validate_ratio(ratio)
    empty = PipelineSchedule((), ratio=k, devices=devices, device=device)
    burst, trcd = empty.burst_clocks, empty.trcd_clocks
    cmd_cursor = [0] * devices
    read_cursor = [0] * devices
    write_cursor = [0] * devices
    device_free = [0] * devices
    bursts: list[deque[int]] = [deque(maxlen=queue_depth) for _ in range(devices)]
    buffered: list[deque[int]] = [deque(maxlen=read_buffer) for _ in range(devices)]
    placed = []

    for op in ops:
        d = op.address % devices
        act_from = cmd_cursor[d]
        if len(bursts[d]) == queue_depth:
            act_from = max(act_from, CMD_LANES.first_local(bursts[d][0], d))
        act = CMD_LANES.global_bytes(d, act_from, COMMAND_BYTES)
        act_end = CMD_LANES.end_clock(act[-1])

        cas_from = act_from + COMMAND_BYTES
        while CMD_LANES.end_clock(CMD_LANES.global_bytes(d, cas_from + COMMAND_BYTES - 1, 1)[0]) < act_end + trcd:
            cas_from += 1
        cas = CMD_LANES.global_bytes(d, cas_from, COMMAND_BYTES)
        cmd_cursor[d] = cas_from + COMMAND_BYTES
        start = max(CMD_LANES.end_clock(cas[-1]), device_free[d])

        if op.kind is OpKind.WRITE:
            first = max(write_cursor[d], WRITE_LANES.first_local(CMD_LANES.clock_of(act[0]), d))
            data = WRITE_LANES.global_bytes(d, first, LINE_BYTES_ON_WIRE)
            write_cursor[d] = first + LINE_BYTES_ON_WIRE
            start = max(start, WRITE_LANES.end_clock(data[-1]))
        elif len(buffered[d]) == read_buffer:
            start = max(start, buffered[d][0])

        end = start + burst
        if op.kind is OpKind.READ:
            first = max(read_cursor[d], READ_LANES.first_local(end, d))
            data = READ_LANES.global_bytes(d, first, LINE_BYTES_ON_WIRE)
            read_cursor[d] = first + LINE_BYTES_ON_WIRE
            buffered[d].append(READ_LANES.end_clock(data[-1]))
        device_free[d] = end
        bursts[d].append(start)
        placed.append(ScheduledOp(op.index, d, op.kind, act, cas, data, start, end))

    schedule = PipelineSchedule(tuple(placed), ratio=k, devices=devices, device=device)
    schedule.verify()
    logger.debug("Scheduled %d accesses over %d clocks", len(placed), schedule.end)
    return schedule


def render(schedule: PipelineSchedule, start: int = 0, clocks: int = 64) -> str:
    """Text grid of ``clocks`` link clocks from ``start``.

    Link rows show how many byte slots are busy in each clock (``.`` for none).
    Device rows show ``a`` while an activate waits for its column command and
    ``R``/``W`` during bursts.
    """
    window = range(start, start + clocks)
    rows = []
    for name, lanes, key in (("CMD", CMD_LANES, "cmd"), ("RD-DQ", READ_LANES, "read"), ("WR-DQ", WRITE_LANES, "write")):
        busy = [0] * clocks
        for b in schedule._bytes(key):
            c = lanes.clock_of(b) - start
            if 0 <= c < clocks:
                busy[c] += 1
        rows.append(f"{name:<6}" + "".join(str(n) if n else "." for n in busy))
    for d in range(schedule.devices):
        cells = ["."] * clocks
        for op in (o for o in schedule.ops if o.device == d):
            for c in range(op.act_end, op.cas_end):
                if c in window and cells[c - start] == ".":
                    cells[c - start] = "a"
            for c in range(op.burst_start, op.burst_end):
                if c in window:
                    cells[c - start] = "R" if op.kind is OpKind.READ else "W"
        rows.append(f"DEV{d:<3}" + "".join(cells))
    return "\n".join(rows) + "\n"


def _mix_of(schedule: PipelineSchedule) -> TrafficMix:
    if not schedule.ops:
        return TrafficMix(1, 0)
    return TrafficMix(schedule.reads, schedule.writes)


def bridge_metrics(schedule: PipelineSchedule, link: LinkVariant) -> MetricsResult:
    """Link-side efficiency of a schedule on the 74-lane LPDDR6 module.

    Throughput is taken between the first and the last completed access so
    the pipeline fill is not counted. Lane groups are charged as active for
    the share of their byte slots in use and ``p`` for the rest. An empty
    schedule gives a degenerate zero result (its mix is a placeholder).
    """
    mix = _mix_of(schedule)
    if not schedule.ops:
        return MetricsResult(
            approach=ApproachId.LPDDR6_ASYM.value,
            link=link.name,
            mix=mix,
            bw_eff=0.0,
            bw_density_linear=0.0,
            bw_density_areal=0.0,
            p_data=0.0,
            power_eff=0.0,
            degenerate=True,
        )
    done = sorted(op.done for op in schedule.ops)
    if len(done) > 1 and done[-1] > done[0]:
        lines, first, last = len(done) - 1, done[0], done[-1]
    else:
        lines, first, last = len(done), 0, done[-1]
    elapsed_ui = UI_PER_CLOCK * (last - first)
    bw = LINE_DATA_BITS * lines / (_LPDDR6.powered_lanes * elapsed_ui)

    clocks = last - first
    cmd = schedule.occupancy("cmd", first, clocks)
    read = schedule.occupancy("read", first, clocks)
    write = schedule.occupancy("write", first, clocks)
    p = link.idle_fraction

    def charge(lanes: int, active: float) -> float:
        return lanes * (active + (1 - active) * p) * elapsed_ui

    total = (
        charge(_LPDDR6.lanes(Direction.S2M, LaneRole.DATA, LaneRole.WRITE_MASK), write)
        + charge(_LPDDR6.lanes(Direction.S2M, LaneRole.COMMAND), cmd)
        + charge(_LPDDR6.lanes(Direction.S2M, LaneRole.CRC), max(cmd, write))
        + charge(_LPDDR6.lanes(Direction.M2S, LaneRole.DATA, LaneRole.CRC), read)
    )
    p_data = LINE_DATA_BITS * lines / total
    return MetricsResult(
        approach=ApproachId.LPDDR6_ASYM.value,
        link=link.name,
        mix=mix,
        bw_eff=bw,
        bw_density_linear=bw * link.shoreline_density,
        bw_density_areal=bw * link.areal_density,
        p_data=p_data,
        power_eff=link.peak_power_eff / p_data,
        breakdown={"cmd_occupancy": cmd, "read_occupancy": read, "write_occupancy": write, "elapsed_ui": float(elapsed_ui)},
    )


# HBM


HBM_STACK_RATES = (1.0, 2.0)


def validate_hbm_clock(stack_rate: float, link_rate: float) -> int:
    """HBM stacks run at 1-2 GT/s; the link must run at an integer multiple of the stack rate.

    Raises
    ------
    ClockRatioError
        If the stack rate is out of range or the ratio is fractional.
    """
    lo, hi = HBM_STACK_RATES
    if not lo <= stack_rate <= hi:
        raise ClockRatioError(f"HBM stack rate {stack_rate:g} GT/s is outside {lo:g}-{hi:g} GT/s")
    ratio = Fraction(str(link_rate)) / Fraction(str(stack_rate))
    if ratio.denominator != 1 or ratio < 1:
        raise ClockRatioError(f"link rate {link_rate:g} GT/s is not an integer multiple of the {stack_rate:g} GT/s stack")
    return ratio.numerator


def hbm_pass_through(ops: Iterable[MemoryOp], link: LinkVariant, *, stack_rate: float = 2.0) -> MetricsResult:
    """Forward accesses to an HBM stack without reordering.

    The stack is not modelled beyond its clock domain: read lines, write lines
    and commands simply occupy their lane groups of the 138-lane module back to
    back, and the busiest group sets the elapsed time.
    """
    validate_hbm_clock(stack_rate, link.data_rate)
    ops = list(ops)
    reads = sum(1 for op in ops if op.is_read)
    writes = len(ops) - reads
    if not ops:
        return MetricsResult(ApproachId.HBM_ASYM.value, link.name, TrafficMix(1, 0), 0.0, 0.0, 0.0, 0.0, 0.0, degenerate=True)
    read_ui = Fraction(_HBM.line_bits, _HBM.lanes(Direction.M2S, LaneRole.DATA))
    write_ui = Fraction(_HBM.line_bits, _HBM.lanes(Direction.S2M, LaneRole.DATA))
    command_ui = Fraction(_HBM.command_bits, _HBM.lanes(Direction.S2M, LaneRole.COMMAND))
    elapsed = max(reads * read_ui, writes * write_ui, len(ops) * command_ui)
    bw = float(Fraction(LINE_DATA_BITS * len(ops)) / (_HBM.powered_lanes * elapsed))
    p_data = per_ui_power_oracle(_HBM, TrafficMix(reads, writes), link)
    return MetricsResult(
        approach=ApproachId.HBM_ASYM.value,
        link=link.name,
        mix=TrafficMix(reads, writes),
        bw_eff=bw,
        bw_density_linear=bw * link.shoreline_density,
        bw_density_areal=bw * link.areal_density,
        p_data=p_data,
        power_eff=link.peak_power_eff / p_data,
        breakdown={"elapsed_ui": float(elapsed)},
    )
