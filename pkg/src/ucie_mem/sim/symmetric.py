"""Flit-level simulation of the symmetric approaches.

Requests travel SoC to memory and responses memory to SoC, each direction as a
stream of real 256-byte flits built by :class:`~ucie_mem.flit.packer.FlitPacker`,
checked by CRC and recovered by go-back-N retry. The memory answers every
request as soon as it is decoded.
"""

import logging

import simpy

from ucie_mem.core import LINE_DATA_BITS, ApproachId, Direction
from ucie_mem.flit.codec import FLIT_BYTES, DecodedTransaction, FlitDecoder, Transaction
from ucie_mem.flit.headers import REQUEST_FIELDS, Layout, ReqCmd, RequestHeader, RespCmd, ResponseHeader
from ucie_mem.flit.packer import FlitPacker
from ucie_mem.sim.lanes import LaneActivity, data_power_ratio
from ucie_mem.sim.model import MIN_CONVERGED_LINES, DeliveryCheck, SimConfig, SimMetrics
from ucie_mem.sim.replay import Feedback, ReplayBuffer, ReplayReceiver, StoredFlit
from ucie_mem.sim.traffic import MemoryOp, TrafficSource, fill_line, rng_streams

logger = logging.getLogger(__name__)

LAYOUTS = {
    ApproachId.CXL_UNOPT: Layout.CXL_UNOPT,
    ApproachId.CXL_OPT: Layout.CXL_OPT,
    ApproachId.CHI_SYM: Layout.CHI,
}

FLIT_BITS = 8 * FLIT_BYTES
#: Byte whose bit 0 is flipped to force a nak.
FORCED_ERROR_BYTE = 100


def _tag_bits(layout: Layout) -> int:
    return dict(REQUEST_FIELDS[layout.header_widths])["tag"]


class _Channel:
    """Transmitter, lanes and receiver of one direction."""

    def __init__(self, sim: "SymmetricLinkSim", direction: Direction, on_release):
        config = sim.config
        self.sim = sim
        self.direction = direction
        self.packer = FlitPacker(sim.layout, direction, dual_request_g_slot=config.dual_request_g_slot)
        self.buffer = ReplayBuffer(config.replay_window)
        self.receiver = ReplayReceiver(sim.layout, ack_every=config.ack_every)
        self.decoder = FlitDecoder(sim.layout, direction, synced=sim.layout is not Layout.CXL_OPT)
        self.activity = LaneActivity(f"{direction.value}-flit", config.link.lanes_per_direction)
        self.flits_sent = 0
        self._accepted_starts: list[float] = []
        self._on_release = on_release

    def run(self):
        env = self.sim.env
        flit_ui = self.sim.flit_ui
        waited = 0
        if self.sim.layout is Layout.CXL_OPT:
            yield from self._send(self.buffer.record(self.packer.nop_flit(), 0.0), retransmission=False)
        while True:
            if self.buffer.replaying:
                yield from self._send(self.buffer.next_replay(), retransmission=True)
                continue
            if not self.packer.idle and not self.buffer.full:
                flush = waited >= self.sim.config.flush_timeout_flits or self.sim.source_done
                if flush or self.packer.ready():
                    raw = self.packer.next_flit()
                    waited = 0
                    yield from self._send(self.buffer.record(raw, self.packer.last_occupancy), retransmission=False)
                    continue
                waited += 1
            yield env.timeout(flit_ui)

    def _send(self, stored: StoredFlit, *, retransmission: bool):
        env = self.sim.env
        start = env.now
        self.flits_sent += 1
        self.activity.mark(start, start + stored.occupancy * self.sim.flit_ui)
        raw = self.sim.maybe_corrupt(stored, self.direction, retransmission=retransmission)
        self.sim.log_event(self.direction, "replay" if retransmission else "send", f"seq={stored.index}")
        yield env.timeout(self.sim.flit_ui)

        accepted, feedback = self.receiver.receive(raw)
        if feedback is not None:
            env.process(self._feedback(feedback))
        if not accepted:
            return
        self._accepted_starts.append(start)
        for decoded in self.decoder.feed(raw, verify=False):
            self._on_release(decoded, self._accepted_starts[decoded.first_flit])

    def _feedback(self, feedback: Feedback):
        yield self.sim.env.timeout(self.sim.feedback_ui)
        self.sim.log_event(self.direction, feedback.kind, f"seq={feedback.index}")
        if feedback.kind == "ack":
            self.buffer.ack(feedback.index)
        else:
            self.buffer.nak(feedback.index)


class SymmetricLinkSim:
    """Simulates one symmetric approach; call :meth:`run` once."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.layout = LAYOUTS[config.approach.id]
        self.env = simpy.Environment()
        self.flit_ui = FLIT_BITS / config.link.lanes_per_direction
        self.feedback_ui = config.latency.adapter_roundtrip * config.link.data_rate
        payload_rng, self._error_rng = rng_streams(config.seed)
        self.source = TrafficSource(config.mix, payload_rng)
        self.tag_space = 1 << _tag_bits(self.layout)
        window = min(config.max_outstanding, self.tag_space)
        self.window = simpy.Container(self.env, capacity=window, init=window)
        self._forced = set(config.forced_naks)

        self.memory: dict[int, bytes] = {}
        self.generated: list[Transaction] = []
        self.expected_responses: list[Transaction] = []
        self.delivered_requests: list[Transaction] = []
        self.delivered_responses: list[Transaction] = []
        self.reads_delivered = 0
        self.writes_delivered = 0
        self.latency_ns: list[float] = []
        self.trace: list[str] = []
        self.source_done = False
        self.done = self.env.event()
        self._snapshot: tuple[int, int] | None = None

        self.s2m = _Channel(self, Direction.S2M, self._on_request)
        self.m2s = _Channel(self, Direction.M2S, self._on_response)

    # traffic

    def _request(self, op: MemoryOp) -> Transaction:
        tag = op.index % self.tag_space
        if op.is_read:
            return Transaction(RequestHeader(cmd=ReqCmd.MEM_RD, tag=tag, address=op.address))
        return Transaction(RequestHeader(cmd=ReqCmd.MEM_WR, tag=tag, address=op.address), op.data)

    def _response(self, request: Transaction) -> Transaction:
        header = request.header
        if header.cmd == ReqCmd.MEM_RD:
            data = self.memory.get(header.address) or fill_line(header.address)
            return Transaction(ResponseHeader(cmd=RespCmd.MEM_DATA, tag=header.tag), data)
        return Transaction(ResponseHeader(cmd=RespCmd.CMP, tag=header.tag))

    def _generate(self):
        duration = self.config.duration_ui
        shadow: dict[int, bytes] = {}
        while self.env.now < duration:
            yield self.window.get(1)
            if self.env.now >= duration:
                yield self.window.put(1)
                break
            request = self._request(self.source.next())
            self.generated.append(request)
            if request.data is not None:
                shadow[request.header.address] = request.data
                self.expected_responses.append(Transaction(ResponseHeader(cmd=RespCmd.CMP, tag=request.header.tag)))
            else:
                data = shadow.get(request.header.address) or fill_line(request.header.address)
                self.expected_responses.append(Transaction(ResponseHeader(cmd=RespCmd.MEM_DATA, tag=request.header.tag), data))
            self.s2m.packer.push(request)
        self.source_done = True
        self._check_done()

    def _latency(self, first_start: float) -> float:
        return self.config.latency.protocol_roundtrip + (self.env.now - first_start) / self.config.link.data_rate

    def _on_request(self, decoded: DecodedTransaction, first_start: float) -> None:
        request = decoded.transaction
        self.delivered_requests.append(request)
        if request.header.cmd == ReqCmd.MEM_WR:
            self.memory[request.header.address] = request.data
            self.writes_delivered += 1
            self.latency_ns.append(self._latency(first_start))
        self.m2s.packer.push(self._response(request))

    def _on_response(self, decoded: DecodedTransaction, first_start: float) -> None:
        response = decoded.transaction
        self.delivered_responses.append(response)
        if response.header.cmd == RespCmd.MEM_DATA:
            self.reads_delivered += 1
            self.latency_ns.append(self._latency(first_start))
        self.window.put(1)
        self._check_done()

    def _check_done(self) -> None:
        if self.source_done and len(self.delivered_responses) >= len(self.generated) and not self.done.triggered:
            self.done.succeed()

    # wire

    def maybe_corrupt(self, stored: StoredFlit, direction: Direction, *, retransmission: bool) -> bytes:
        if not retransmission and stored.index in self._forced:
            bit = 8 * FORCED_ERROR_BYTE
        elif self.config.error_rate and self._error_rng.random() < self.config.error_rate:
            bit = int(self._error_rng.integers(0, FLIT_BITS))
        else:
            return stored.raw
        raw = bytearray(stored.raw)
        raw[bit // 8] ^= 1 << (bit % 8)
        self.log_event(direction, "corrupt", f"seq={stored.index} bit={bit}")
        return bytes(raw)

    def log_event(self, direction: Direction, kind: str, detail: str = "") -> None:
        if self.config.trace:
            self.trace.append(f"{self.env.now:.3f} {direction.value} {direction.value}-flit {kind} {detail}".rstrip())

    # run

    def _take_snapshot(self):
        yield self.env.timeout(self.config.duration_ui)
        self._snapshot = (self.reads_delivered, self.writes_delivered)

    def run(self) -> SimMetrics:
        config = self.config
        env = self.env
        env.process(self._generate())
        env.process(self._take_snapshot())
        env.process(self.s2m.run())
        env.process(self.m2s.run())
        if config.drain:
            limit = env.timeout(20 * config.duration_ui + 100_000)
            env.run(until=simpy.AnyOf(env, [self.done, limit]))
            if not self.done.triggered:
                logger.warning("%s did not drain by %.0f UI", config.approach.name, env.now)
        else:
            env.run(until=config.duration_ui)
        if self._snapshot is None:
            self._snapshot = (self.reads_delivered, self.writes_delivered)
        return self._metrics()

    def _check(self) -> DeliveryCheck | None:
        if not self.config.drain:
            return None
        generated = len(self.generated)
        delivered = len(self.delivered_responses)
        in_order = (
            self.delivered_requests == self.generated[: len(self.delivered_requests)]
            and self.delivered_responses == self.expected_responses[:delivered]
        )
        duplicated = max(0, len(self.delivered_requests) - generated) + max(0, delivered - generated)
        return DeliveryCheck(generated, delivered, max(0, generated - delivered), duplicated, in_order)

    def _metrics(self) -> SimMetrics:
        config = self.config
        link = config.link
        elapsed = float(config.duration_ui)
        reads, writes = self._snapshot
        gating = config.gating and config.approach.dynamic_gating
        usages = {
            ch.activity.name: ch.activity.usage(elapsed, gating=gating, gate_latency=config.gate_latency_ui)
            for ch in (self.s2m, self.m2s)
        }
        data_bits = LINE_DATA_BITS * (reads + writes)
        bw = data_bits / (2 * link.lanes_per_direction * elapsed) if elapsed else 0.0
        p_data = data_power_ratio(data_bits, usages, link.idle_fraction)
        retransmitted = tuple(sorted(self.s2m.buffer.retransmitted + self.m2s.buffer.retransmitted))
        return SimMetrics(
            approach=config.approach.name,
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
            retried_flits=len(retransmitted),
            retransmitted=retransmitted,
            latency_ns=tuple(self.latency_ns),
            check=self._check(),
            converged=reads + writes >= MIN_CONVERGED_LINES,
            trace=tuple(self.trace),
        )


def simulate_symmetric(config: SimConfig) -> SimMetrics:
    """Run a flit-based approach."""
    return SymmetricLinkSim(config).run()

