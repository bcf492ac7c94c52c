"""Ideal-bus simulation of the conventional memory baselines.

A baseline moves every line over one data bus with no command, header or CRC
overhead, back to back. Its rates are the bus's own, so a run checks the
peak-bandwidth credit the analytic baseline rows are given.
"""

import simpy

from ucie_mem.core import BASELINES, LINE_DATA_BITS, ApproachId
from ucie_mem.sim.lanes import LaneActivity, data_power_ratio
from ucie_mem.sim.model import MIN_CONVERGED_LINES, DeliveryCheck, SimConfig, SimMetrics
from ucie_mem.sim.traffic import TrafficSource, rng_streams

#: Data lanes of the modelled bus; a line takes ``LINE_DATA_BITS / BUS_LANES`` UI.
BUS_LANES = 64


class IdealBusSim:
    """Simulates one baseline approach; call :meth:`run` once."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.approach = config.approach
        self.base = BASELINES[config.approach.id]
        self.env = simpy.Environment()
        self.line_ui = LINE_DATA_BITS / BUS_LANES
        payload_rng, _ = rng_streams(config.seed)
        self.source = TrafficSource(config.mix, payload_rng)
        self.bus = LaneActivity("dq", BUS_LANES)
        self.generated = 0
        self.delivered_reads: list[int] = []
        self.delivered_writes: list[int] = []
        self.latency_ns: list[float] = []
        self.trace: list[str] = []
        self.in_window = [0, 0]

    @property
    def round_trip_ns(self) -> float:
        latency = self.config.latency
        return latency.baseline_hbm if self.approach.id is ApproachId.BASELINE_HBM4 else latency.baseline_lpddr

    def _transfers(self):
        env = self.env
        while env.now < self.config.duration_ui:
            op = self.source.next()
            self.generated += 1
            self.bus.mark(env.now, env.now + self.line_ui)
            if self.config.trace:
                self.trace.append(f"{env.now:.3f} dq {op.kind.value} op={op.index}")
            yield env.timeout(self.line_ui)
            (self.delivered_reads if op.is_read else self.delivered_writes).append(op.index)
            if env.now <= self.config.duration_ui:
                self.in_window[0 if op.is_read else 1] += 1
            self.latency_ns.append(self.round_trip_ns)

    def run(self) -> SimMetrics:
        # The source stops at the duration, so the bus always drains within one line.
        self.env.run(until=self.env.process(self._transfers()))
        return self._metrics()

    def _check(self) -> DeliveryCheck | None:
        if not self.config.drain:
            return None
        delivered = self.delivered_reads + self.delivered_writes
        unique = set(delivered)
        return DeliveryCheck(
            generated=self.generated,
            delivered=len(delivered),
            lost=self.generated - len(unique),
            duplicated=len(delivered) - len(unique),
            in_order=self.delivered_reads == sorted(self.delivered_reads)
            and self.delivered_writes == sorted(self.delivered_writes),
        )

    def _metrics(self) -> SimMetrics:
        elapsed = float(self.config.duration_ui)
        reads, writes = self.in_window
        data_bits = LINE_DATA_BITS * (reads + writes)
        usages = {"dq": self.bus.usage(elapsed, gating=self.config.gating, gate_latency=self.config.gate_latency_ui)}
        p_data = data_power_ratio(data_bits, usages, 0.0)
        return SimMetrics(
            approach=self.approach.name,
            link=self.base.name,
            mix=self.config.mix,
            elapsed_ui=elapsed,
            delivered_reads=reads,
            delivered_writes=writes,
            generated_reads=self.source.reads,
            generated_writes=self.source.writes,
            bw_eff=data_bits / (BUS_LANES * elapsed),
            p_data=p_data,
            power_eff=self.base.power_eff / p_data if p_data else 0.0,
            lane_groups=usages,
            latency_ns=tuple(self.latency_ns),
            check=self._check(),
            converged=reads + writes >= MIN_CONVERGED_LINES,
            trace=tuple(self.trace),
        )


def simulate_baseline(config: SimConfig) -> SimMetrics:
    """Run a conventional memory interface as an ideal bus."""
    return IdealBusSim(config).run()
