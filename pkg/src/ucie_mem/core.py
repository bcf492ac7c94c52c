"""Domain types shared by every model: traffic mixes, link presets, lane topologies and results.

All types are immutable once built, so presets and results can be shared freely
between threads of a sweep.
"""

import enum
import logging
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from math import gcd
from typing import Any

import yaml
from jsonschema import ValidationError, validate

from ucie_mem.errors import ConfigError, InvalidMixError, PresetNotFoundError, TopologyError

logger = logging.getLogger(__name__)

#: Useful payload of one cache line in bits.
LINE_DATA_BITS = 512
#: Cache line plus 64 bits of metadata/ECC as carried on asymmetric links (two 288-bit LPDDR6 granules).
LINE_WIRE_BITS = 576
#: ACT (48 bits) plus RD/WR (48 bits) per cache-line access.
COMMAND_BITS_PER_OP = 96
#: Fraction of peak lane power drawn by a gated lane group.
DEFAULT_IDLE_FRACTION = 0.15

_MIX_PATTERN = re.compile(r"^\s*(\d+(?:/\d+)?)\s*[Rr]\s*(\d+(?:/\d+)?)\s*[Ww]\s*$")


def _fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class TrafficMix:
    """A steady-state ratio of ``reads`` cache-line reads to ``writes`` cache-line writes (``xRyW``)."""

    reads: Fraction
    writes: Fraction

    def __post_init__(self):
        try:
            reads, writes = _fraction(self.reads), _fraction(self.writes)
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise InvalidMixError(f"mix counts must be numbers, got {self.reads!r}R{self.writes!r}W") from e
        if reads < 0 or writes < 0:
            raise InvalidMixError(f"mix counts must be non-negative, got {reads}R{writes}W")
        if reads == 0 and writes == 0:
            raise InvalidMixError("reads and writes cannot both be zero")
        object.__setattr__(self, "reads", reads)
        object.__setattr__(self, "writes", writes)

    @classmethod
    def parse(cls, text: str) -> "TrafficMix":
        """Parse the ``<x>R<y>W`` notation, e.g. ``"3R2W"`` or ``"1/2R1W"``."""
        match = _MIX_PATTERN.match(text)
        if match is None:
            raise InvalidMixError(f"'{text}' is not a mix of the form <x>R<y>W")
        return cls(Fraction(match.group(1)), Fraction(match.group(2)))

    @property
    def total(self) -> Fraction:
        return self.reads + self.writes

    @property
    def data_bits(self) -> Fraction:
        """Useful payload bits moved by one mix period."""
        return LINE_DATA_BITS * self.total

    @property
    def read_share(self) -> Fraction:
        return self.reads / self.total

    def scaled(self, k: int | Fraction) -> "TrafficMix":
        return TrafficMix(self.reads * k, self.writes * k)

    def reduced(self) -> tuple[int, int]:
        """Smallest integer pair with the same ratio."""
        scale = self.reads.denominator * self.writes.denominator
        x, y = int(self.reads * scale), int(self.writes * scale)
        g = gcd(x, y)
        return x // g, y // g

    @property
    def label(self) -> str:
        def fmt(v: Fraction) -> str:
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

        return f"{fmt(self.reads)}R{fmt(self.writes)}W"

    def __str__(self) -> str:
        return self.label


class LinkKind(str, enum.Enum):
    """Package class of a UCIe link."""

    STANDARD_2D = "standard-2D"
    ADVANCED_2_5D = "advanced-2.5D"
    ASYMMETRIC_CUSTOM = "asymmetric-custom"


def table_power_efficiency(kind: LinkKind, data_rate: float) -> float:
    """Peak pJ/b of a UCIe link by package class and data rate."""
    if kind is LinkKind.STANDARD_2D:
        return 0.5 if data_rate <= 16 else 0.6
    if kind is LinkKind.ADVANCED_2_5D:
        return 0.25 if data_rate <= 16 else 0.3
    raise ConfigError("asymmetric-custom links must state their peak_power_eff explicitly")


@dataclass(frozen=True)
class LinkVariant:
    """A UCIe physical preset.

    Densities are the deliverable bandwidth per mm of die edge and per mm² of
    bump field at ``data_rate``. ``edge_mm`` and ``depth_mm`` describe the bump
    field the densities were derived from, so ``areal_density * edge_mm *
    depth_mm`` recovers :attr:`footprint_gbps`.
    """

    name: str
    kind: LinkKind
    data_rate: float
    bump_pitch: float
    shoreline_density: float
    areal_density: float
    peak_power_eff: float
    idle_fraction: float = DEFAULT_IDLE_FRACTION
    lanes_per_direction: int = 64
    edge_mm: float = 0.3888
    depth_mm: float = 1.585
    interpolated: bool = False
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if not 0 < self.idle_fraction < 1:
            raise ConfigError(f"{self.name}: idle_fraction must lie in (0, 1), got {self.idle_fraction}")
        for attr in ("data_rate", "bump_pitch", "shoreline_density", "areal_density", "peak_power_eff", "edge_mm", "depth_mm"):
            if getattr(self, attr) <= 0:
                raise ConfigError(f"{self.name}: {attr} must be positive")
        if self.lanes_per_direction <= 0:
            raise ConfigError(f"{self.name}: lanes_per_direction must be positive")

    @property
    def aggregate_gbps(self) -> float:
        """Raw bandwidth of both directions in GB/s."""
        return 2 * self.lanes_per_direction * self.data_rate / 8

    @property
    def footprint_gbps(self) -> float:
        """Bandwidth the density figures are quoted against."""
        return self.shoreline_density * self.edge_mm

    @property
    def ui_ns(self) -> float:
        return 1.0 / self.data_rate

    def at_rate(self, data_rate: float, name: str | None = None) -> "LinkVariant":
        """Scale densities linearly to another data rate and re-derive pJ/b for the package class."""
        scale = data_rate / self.data_rate
        power = self.peak_power_eff
        if self.kind is not LinkKind.ASYMMETRIC_CUSTOM:
            power = table_power_efficiency(self.kind, data_rate)
        return replace(
            self,
            name=name or f"{self.name}@{data_rate:g}g",
            data_rate=data_rate,
            shoreline_density=self.shoreline_density * scale,
            areal_density=self.areal_density * scale,
            peak_power_eff=power,
        )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data


PRESET_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "properties": {
            "kind": {"enum": [k.value for k in LinkKind]},
            "data_rate": {"type": "number", "exclusiveMinimum": 0},
            "bump_pitch": {"type": "number", "exclusiveMinimum": 0},
            "shoreline_density": {"type": "number", "exclusiveMinimum": 0},
            "areal_density": {"type": "number", "exclusiveMinimum": 0},
            "peak_power_eff": {"type": "number", "exclusiveMinimum": 0},
            "idle_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "lanes_per_direction": {"type": "integer", "minimum": 1},
            "edge_mm": {"type": "number", "exclusiveMinimum": 0},
            "depth_mm": {"type": "number", "exclusiveMinimum": 0},
            "interpolated": {"type": "boolean"},
            "note": {"type": "string"},
        },
        "required": ["kind", "data_rate", "bump_pitch", "shoreline_density", "areal_density"],
        "additionalProperties": False,
    },
}

# UCIe-A die edge is fixed; bump-field depth grows with pitch.
_A_EDGE = 0.3888
_S_EDGE = 1.143
_S_DEPTH = 1.54


def _default_presets() -> list[LinkVariant]:
    s110 = LinkVariant(
        name="ucie-s-110",
        kind=LinkKind.STANDARD_2D,
        data_rate=32,
        bump_pitch=110,
        shoreline_density=224.0,
        areal_density=145.44,
        peak_power_eff=0.6,
        lanes_per_direction=32,
        edge_mm=_S_EDGE,
        depth_mm=_S_DEPTH,
        note="doubly-stacked x32 standard package",
    )
    a55 = LinkVariant(
        name="ucie-a-55",
        kind=LinkKind.ADVANCED_2_5D,
        data_rate=32,
        bump_pitch=55,
        shoreline_density=658.44,
        areal_density=416.27,
        peak_power_eff=0.3,
        lanes_per_direction=64,
        edge_mm=_A_EDGE,
        depth_mm=1.585,
        note="x64 advanced package",
    )
    a25_areal = 1350.0
    a25_shore = 1317.0
    presets = [
        s110,
        replace(s110, name="ucie-s-110-x16", shoreline_density=112.0, lanes_per_direction=16, depth_mm=_S_DEPTH / 2, note="single x16 module"),
        s110.at_rate(16, name="ucie-s-110-16g"),
        replace(
            s110,
            name="ucie-s-100",
            bump_pitch=100,
            depth_mm=_S_DEPTH * 100 / 110,
            areal_density=256 / (_S_EDGE * _S_DEPTH * 100 / 110),
            interpolated=True,
            note="bump field depth scaled with pitch",
        ),
        replace(
            s110,
            name="ucie-s-130",
            bump_pitch=130,
            depth_mm=_S_DEPTH * 130 / 110,
            areal_density=256 / (_S_EDGE * _S_DEPTH * 130 / 110),
            interpolated=True,
            note="bump field depth scaled with pitch",
        ),
        a55,
        a55.at_rate(16, name="ucie-a-55-16g"),
        replace(
            a55,
            name="ucie-a-45",
            bump_pitch=45,
            depth_mm=1.043,
            areal_density=256 / (_A_EDGE * 1.043),
            interpolated=True,
            note="areal density from the 1043 um bump field depth",
        ),
        replace(
            a55,
            name="ucie-a-25",
            bump_pitch=25,
            shoreline_density=a25_shore,
            areal_density=a25_areal,
            depth_mm=a25_shore / a25_areal,
            note="upper end of the advanced-package density range; depth is the one implied by the quoted densities",
        ),
    ]
    return presets


class PresetRegistry(Mapping[str, LinkVariant]):
    """Named link presets, loadable from and dumpable to YAML."""

    def __init__(self, presets: Iterable[LinkVariant] = ()):
        self._presets: dict[str, LinkVariant] = {}
        for preset in presets:
            self.register(preset)

    def __getitem__(self, name: str) -> LinkVariant:
        try:
            return self._presets[name]
        except KeyError:
            raise PresetNotFoundError(name, self._presets) from None

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._presets))

    def __len__(self) -> int:
        return len(self._presets)

    def register(self, preset: LinkVariant, *, overwrite: bool = False) -> None:
        if preset.name in self._presets and not overwrite:
            raise ConfigError(f"preset '{preset.name}' is already registered")
        self._presets[preset.name] = preset

    def copy(self) -> "PresetRegistry":
        return PresetRegistry(self._presets.values())

    def to_yaml(self) -> str:
        document = {}
        for name in self:
            data = self[name].to_dict()
            data.pop("name")
            document[name] = data
        return yaml.safe_dump(document, sort_keys=True)

    def load_document(self, document: Mapping[str, Any], *, overwrite: bool = True) -> list[str]:
        """Register presets from a parsed YAML mapping; returns the names added."""
        try:
            validate(instance=dict(document), schema=PRESET_SCHEMA)
        except ValidationError as e:
            path = " -> ".join(str(p) for p in e.absolute_path)
            raise ConfigError(f"invalid preset document: {e.message}" + (f" at path: {path}" if path else "")) from e
        added = []
        for name, values in document.items():
            values = dict(values)
            values.setdefault("peak_power_eff", table_power_efficiency(LinkKind(values["kind"]), values["data_rate"]))
            self.register(LinkVariant(name=name, **values), overwrite=overwrite)
            added.append(name)
        logger.debug("Registered presets %s", added)
        return added

    @classmethod
    def from_yaml(cls, text: str) -> "PresetRegistry":
        registry = cls()
        registry.load_document(yaml.safe_load(text) or {})
        return registry


DEFAULT_PRESETS = PresetRegistry(_default_presets())
DEFAULT_LINK = "ucie-a-55"


def preset_link(name: str, registry: PresetRegistry | None = None) -> LinkVariant:
    """Look up a link preset by name.

    Parameters
    ----------
    name : str
        Preset identifier such as ``"ucie-a-55"``.
    registry : PresetRegistry, optional
        Registry to search; the built-in presets by default.

    Returns
    -------
    LinkVariant
        The preset.

    Raises
    ------
    PresetNotFoundError
        If no preset has that name.
    """
    return (registry or DEFAULT_PRESETS)[name]


class Direction(str, enum.Enum):
    """Link direction; S2M carries requests and write data."""

    S2M = "s2m"
    M2S = "m2s"


class LaneRole(str, enum.Enum):
    """What a lane group carries."""

    DATA = "data"
    WRITE_MASK = "write-mask"
    COMMAND = "command"
    CRC = "crc"
    CLOCK_TRACK_VALID = "clock-track-valid"

    @property
    def powered(self) -> bool:
        """Whether lanes of this role count in power accounting."""
        return self is not LaneRole.CLOCK_TRACK_VALID


@dataclass(frozen=True)
class LaneGroup:
    """A set of lanes in one direction with one role."""

    name: str
    direction: Direction
    lane_count: int
    role: LaneRole


class ApproachId(str, enum.Enum):
    """Memory attach approaches."""

    LPDDR6_ASYM = "lpddr6-asym"
    HBM_ASYM = "hbm-asym"
    CHI_SYM = "chi-sym"
    CXL_UNOPT = "cxl-unopt"
    CXL_OPT = "cxl-opt"
    BASELINE_LPDDR6 = "baseline-lpddr6"
    BASELINE_HBM4 = "baseline-hbm4"
    BASELINE_LPDDR5 = "baseline-lpddr5"
    LPDDR6_NATIVE = "lpddr6-native"

    @property
    def is_baseline(self) -> bool:
        return self.value.startswith("baseline-")


#: The approaches compared on the figure grid, in presentation order.
FIGURE_APPROACHES: tuple[ApproachId, ...] = (
    ApproachId.LPDDR6_ASYM,
    ApproachId.HBM_ASYM,
    ApproachId.CHI_SYM,
    ApproachId.CXL_UNOPT,
    ApproachId.CXL_OPT,
    ApproachId.BASELINE_LPDDR6,
    ApproachId.BASELINE_HBM4,
)


@dataclass(frozen=True)
class SlotGeometry:
    """Flit slot structure of a symmetric approach."""

    usable_slots: int
    slot_bytes: int
    requests_per_slot: int
    responses_per_slot: int
    header_slot_requests: int
    header_slot_responses: int

    @property
    def usable_fraction(self) -> Fraction:
        return Fraction(self.usable_slots * self.slot_bytes, 256)


@dataclass(frozen=True)
class ApproachSpec:
    """One memory attach approach.

    Asymmetric approaches carry ``lane_groups``; their powered lanes must add up
    to ``module_lanes``. Symmetric approaches carry a ``slot_geometry`` instead.
    """

    id: ApproachId
    lane_groups: tuple[LaneGroup, ...] = ()
    slot_geometry: SlotGeometry | None = None
    read_write_lane_ratio: Fraction = Fraction(1)
    module_lanes: int | None = None
    dynamic_gating: bool = False
    command_bits: int = COMMAND_BITS_PER_OP
    line_bits: int = LINE_WIRE_BITS

    def __post_init__(self):
        names = [g.name for g in self.lane_groups]
        if len(names) != len(set(names)):
            raise TopologyError(f"{self.id.value}: lane group names must be unique, got {names}")
        if self.module_lanes is not None and self.powered_lanes != self.module_lanes:
            raise TopologyError(
                f"{self.id.value}: powered lanes add up to {self.powered_lanes}, module has {self.module_lanes}"
            )
        if self.lane_groups:
            for role, direction in ((LaneRole.DATA, Direction.S2M), (LaneRole.DATA, Direction.M2S), (LaneRole.COMMAND, Direction.S2M)):
                if self.lanes(direction, role) == 0:
                    raise TopologyError(f"{self.id.value}: no {role.value} lanes in {direction.value}")

    @property
    def name(self) -> str:
        return self.id.value

    @property
    def is_asymmetric(self) -> bool:
        return bool(self.lane_groups)

    @property
    def is_baseline(self) -> bool:
        return self.id.is_baseline

    @property
    def powered_lanes(self) -> int:
        return sum(g.lane_count for g in self.lane_groups if g.role.powered)

    def lanes(self, direction: Direction, *roles: LaneRole) -> int:
        return sum(g.lane_count for g in self.lane_groups if g.direction is direction and g.role in roles)

    def group(self, name: str) -> LaneGroup:
        for g in self.lane_groups:
            if g.name == name:
                return g
        raise KeyError(name)


def _asym_groups(prefix_counts: Mapping[tuple[Direction, LaneRole], int]) -> tuple[LaneGroup, ...]:
    groups = []
    for (direction, role), count in prefix_counts.items():
        groups.append(LaneGroup(f"{direction.value}-{role.value}", direction, count, role))
    return tuple(groups)


_S, _M = Direction.S2M, Direction.M2S
_R = LaneRole

CXL_UNOPT_GEOMETRY = SlotGeometry(usable_slots=15, slot_bytes=16, requests_per_slot=1, responses_per_slot=2, header_slot_requests=1, header_slot_responses=2)
CXL_OPT_GEOMETRY = SlotGeometry(usable_slots=16, slot_bytes=16, requests_per_slot=1, responses_per_slot=4, header_slot_requests=1, header_slot_responses=4)
CHI_GEOMETRY = SlotGeometry(usable_slots=12, slot_bytes=20, requests_per_slot=1, responses_per_slot=2, header_slot_requests=0, header_slot_responses=0)

APPROACHES: dict[ApproachId, ApproachSpec] = {
    ApproachId.LPDDR6_ASYM: ApproachSpec(
        id=ApproachId.LPDDR6_ASYM,
        lane_groups=_asym_groups(
            {
                (_S, _R.DATA): 24,
                (_S, _R.WRITE_MASK): 2,
                (_S, _R.COMMAND): 10,
                (_S, _R.CRC): 1,
                (_S, _R.CLOCK_TRACK_VALID): 4,
                (_M, _R.DATA): 36,
                (_M, _R.CRC): 1,
                (_M, _R.CLOCK_TRACK_VALID): 4,
            }
        ),
        read_write_lane_ratio=Fraction(3, 2),
        module_lanes=74,
        dynamic_gating=True,
    ),
    ApproachId.HBM_ASYM: ApproachSpec(
        id=ApproachId.HBM_ASYM,
        lane_groups=_asym_groups(
            {
                (_S, _R.DATA): 36,
                (_S, _R.WRITE_MASK): 4,
                (_S, _R.COMMAND): 24,
                (_S, _R.CRC): 1,
                (_S, _R.CLOCK_TRACK_VALID): 4,
                (_M, _R.DATA): 72,
                (_M, _R.CRC): 1,
                (_M, _R.CLOCK_TRACK_VALID): 4,
            }
        ),
        read_write_lane_ratio=Fraction(2),
        module_lanes=138,
        dynamic_gating=True,
    ),
    ApproachId.LPDDR6_NATIVE: ApproachSpec(
        id=ApproachId.LPDDR6_NATIVE,
        lane_groups=_asym_groups(
            {
                (_S, _R.DATA): 12,
                (_S, _R.WRITE_MASK): 1,
                (_S, _R.COMMAND): 4,
                (_S, _R.CRC): 1,
                (_S, _R.CLOCK_TRACK_VALID): 4,
                (_M, _R.DATA): 24,
                (_M, _R.CRC): 1,
                (_M, _R.CLOCK_TRACK_VALID): 4,
            }
        ),
        read_write_lane_ratio=Fraction(2),
        module_lanes=43,
        dynamic_gating=True,
    ),
    ApproachId.CHI_SYM: ApproachSpec(id=ApproachId.CHI_SYM, slot_geometry=CHI_GEOMETRY),
    ApproachId.CXL_UNOPT: ApproachSpec(id=ApproachId.CXL_UNOPT, slot_geometry=CXL_UNOPT_GEOMETRY),
    ApproachId.CXL_OPT: ApproachSpec(id=ApproachId.CXL_OPT, slot_geometry=CXL_OPT_GEOMETRY, dynamic_gating=True),
    ApproachId.BASELINE_LPDDR6: ApproachSpec(id=ApproachId.BASELINE_LPDDR6),
    ApproachId.BASELINE_HBM4: ApproachSpec(id=ApproachId.BASELINE_HBM4),
    ApproachId.BASELINE_LPDDR5: ApproachSpec(id=ApproachId.BASELINE_LPDDR5),
}


def get_approach(approach: "ApproachSpec | ApproachId | str") -> ApproachSpec:
    """Resolve an approach id (or pass through a spec)."""
    if isinstance(approach, ApproachSpec):
        return approach
    try:
        return APPROACHES[ApproachId(approach)]
    except ValueError:
        raise PresetNotFoundError(str(approach), (a.value for a in ApproachId)) from None


@dataclass(frozen=True)
class BaselineMemory:
    """Density and energy figures of a conventional on-package memory interface."""

    name: str
    shoreline_density: float
    areal_density: float
    power_eff: float
    derivation: str = ""


def lpddr_shoreline(dq: int, rate: float, edge_mm: float) -> float:
    """GB/s per mm of a parallel DRAM interface."""
    return dq * rate / edge_mm / 8


def lpddr_areal(dq: int, rate: float, edge_mm: float, depth_mm: float) -> float:
    """Areal bandwidth density in GB/s/mm² of a DQ bus over a PHY footprint."""
    return dq * rate / (edge_mm * depth_mm) / 8


BASELINES: dict[ApproachId, BaselineMemory] = {
    ApproachId.BASELINE_LPDDR5: BaselineMemory(
        "baseline-lpddr5", 26.5, 15.1, 2.8, "128 DQ at 9.6 GT/s over a 5.8 mm x 1.75 mm PHY"
    ),
    ApproachId.BASELINE_LPDDR6: BaselineMemory(
        "baseline-lpddr6", 35.3, 20.2, 2.8, "LPDDR5 PHY footprint scaled to 12.8 GT/s"
    ),
    ApproachId.BASELINE_HBM4: BaselineMemory(
        "baseline-hbm4", 204.8, 81.9, 0.9, "2048 DQ at 6.4 GT/s over an 8 mm x 2.5 mm PHY"
    ),
}


@dataclass(frozen=True)
class MetricsResult:
    """Bandwidth and power figures of one approach on one link for one mix."""

    approach: str
    link: str
    mix: TrafficMix
    bw_eff: float
    bw_density_linear: float
    bw_density_areal: float
    p_data: float
    power_eff: float
    breakdown: Mapping[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def as_row(self) -> dict[str, Any]:
        return {
            "approach": self.approach,
            "link": self.link,
            "reads": self.mix.reads,
            "writes": self.mix.writes,
            "bw_eff": self.bw_eff,
            "bw_linear": self.bw_density_linear,
            "bw_areal": self.bw_density_areal,
            "p_data": self.p_data,
            "power_eff": self.power_eff,
        }


@dataclass(frozen=True)
class LatencyModel:
    """Round-trip latency constants in ns."""

    phy_roundtrip: float = 1.0
    adapter_roundtrip: float = 2.0
    protocol_roundtrip: float = 3.0
    baseline_lpddr: float = 7.5
    baseline_hbm: float = 6.0


DEFAULT_LATENCY = LatencyModel()


def baseline_metrics(which: ApproachId | str, mix: TrafficMix) -> MetricsResult:
    """Metrics of a conventional memory interface.

    These buses are credited with peak bandwidth for every mix, so the result
    only depends on ``which``.
    """
    if not isinstance(mix, TrafficMix):
        raise InvalidMixError(f"expected a TrafficMix, got {mix!r}")
    approach = get_approach(which)
    if approach.id not in BASELINES:
        raise PresetNotFoundError(approach.id.value, (b.value for b in BASELINES))
    base = BASELINES[approach.id]
    return MetricsResult(
        approach=approach.id.value,
        link=base.name,
        mix=mix,
        bw_eff=1.0,
        bw_density_linear=base.shoreline_density,
        bw_density_areal=base.areal_density,
        p_data=1.0,
        power_eff=base.power_eff,
    )
