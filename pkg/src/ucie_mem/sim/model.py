"""Configuration and result types of the link simulator."""

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

from ucie_mem.core import (
    DEFAULT_LATENCY,
    ApproachSpec,
    LatencyModel,
    LinkVariant,
    TrafficMix,
    get_approach,
    preset_link,
)
from ucie_mem.errors import ConfigError

#: Cache lines a run must deliver before its rates are reported as converged.
MIN_CONVERGED_LINES = 1000


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``approach``, ``link`` and ``mix`` accept ids, preset names and ``xRyW``
    strings as well as the resolved objects. Time is counted in UI of
    ``link.data_rate``.
    """

    approach: ApproachSpec
    link: LinkVariant
    mix: TrafficMix
    duration_ui: int = 100_000
    seed: int = 0
    error_rate: float = 0.0
    gating: bool = True
    gate_latency_ui: float = 0.0
    replay_window: int = 64
    ack_every: int = 4
    max_outstanding: int = 512
    read_credits: int = 8
    write_credits: int = 8
    flush_timeout_flits: int = 64
    forced_naks: tuple[int, ...] = ()
    dual_request_g_slot: bool = False
    drain: bool = True
    trace: bool = False
    latency: LatencyModel = DEFAULT_LATENCY

    def __post_init__(self):
        object.__setattr__(self, "approach", get_approach(self.approach))
        if isinstance(self.link, str):
            object.__setattr__(self, "link", preset_link(self.link))
        if isinstance(self.mix, str):
            object.__setattr__(self, "mix", TrafficMix.parse(self.mix))
        object.__setattr__(self, "forced_naks", tuple(sorted(self.forced_naks)))
        if self.duration_ui < 0:
            raise ConfigError(f"duration must be non-negative, got {self.duration_ui}")
        if not 0 <= self.error_rate < 1:
            raise ConfigError(f"error rate must lie in [0, 1), got {self.error_rate}")
        if self.gate_latency_ui < 0:
            raise ConfigError("gate latency must be non-negative")
        for name in ("replay_window", "ack_every", "max_outstanding", "read_credits", "write_credits", "flush_timeout_flits"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.ack_every > self.replay_window:
            raise ConfigError("ack_every cannot exceed the replay window")

    def with_(self, **changes: Any) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class LaneUsage:
    """Lane-UI of one lane group split into active and gated time."""

    lanes: int
    active_ui: float
    idle_ui: float

    def weighted(self, idle_fraction: float) -> float:
        return self.active_ui + idle_fraction * self.idle_ui


@dataclass(frozen=True)
class DeliveryCheck:
    """Comparison of delivered transactions against the generated ones."""

    generated: int
    delivered: int
    lost: int
    duplicated: int
    in_order: bool

    @property
    def exactly_once(self) -> bool:
        return self.lost == 0 and self.duplicated == 0


@dataclass(frozen=True)
class SimMetrics:
    """Measured rates of a run, snapshotted at ``elapsed_ui``.

    Delivery counts and lane usage cover ``[0, elapsed_ui)``; ``check`` and
    ``latency_ns`` cover the whole run including the drain.
    """

    approach: str
    link: str
    mix: TrafficMix
    elapsed_ui: float
    delivered_reads: int
    delivered_writes: int
    generated_reads: int
    generated_writes: int
    bw_eff: float
    p_data: float
    power_eff: float
    lane_groups: Mapping[str, LaneUsage] = field(default_factory=dict)
    retried_flits: int = 0
    retransmitted: tuple[int, ...] = ()
    latency_ns: tuple[float, ...] = ()
    check: DeliveryCheck | None = None
    converged: bool = True
    trace: tuple[str, ...] = ()

    @property
    def delivered_lines(self) -> int:
        return self.delivered_reads + self.delivered_writes

    def as_row(self) -> dict[str, Any]:
        return {
            "approach": self.approach,
            "link": self.link,
            "reads": self.mix.reads,
            "writes": self.mix.writes,
            "bw_eff": self.bw_eff,
            "p_data": self.p_data,
            "power_eff": self.power_eff,
        }


@dataclass(frozen=True)
class LatencyReport:
    """Link latency statistics in ns."""

    approach: str
    link: str
    samples: int
    min_ns: float
    mean_ns: float
    max_ns: float
    histogram: tuple[int, ...] = ()
    bin_edges: tuple[float, ...] = ()
    zero_load_ns: float = 0.0
    baseline_ns: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "approach": self.approach,
            "link": self.link,
            "samples": self.samples,
            "min_ns": self.min_ns,
            "mean_ns": self.mean_ns,
            "max_ns": self.max_ns,
            "histogram": list(self.histogram),
            "bin_edges": list(self.bin_edges),
            "zero_load_ns": self.zero_load_ns,
            "baseline_ns": dict(self.baseline_ns),
        }
