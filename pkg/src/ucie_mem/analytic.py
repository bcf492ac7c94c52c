"""Closed-form bandwidth and power models.

Asymmetric approaches are modelled per lane group: every cache line occupies its
data lanes for ``576 / lanes`` UI, commands occupy the command lanes for
``96 / lanes`` UI, and a mix period lasts as long as the busiest lane group
(``t``). Symmetric approaches are modelled by counting 16-byte slots (or CHI
granules) per direction.

``p_data`` is always useful bits over weighted lane activity, so it never
exceeds 1 and ``power_eff = peak_power_eff / p_data`` never drops below the
link's peak figure.
"""

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ucie_mem.core import (
    APPROACHES,
    DEFAULT_LINK,
    LINE_DATA_BITS,
    ApproachId,
    ApproachSpec,
    Direction,
    LaneRole,
    LinkVariant,
    MetricsResult,
    TrafficMix,
    baseline_metrics,
    get_approach,
    preset_link,
)
from ucie_mem.errors import InvalidMixError, ParameterIdentityError

logger = logging.getLogger(__name__)

FLIT_BYTES = 256
SLOT_BYTES = 16
CHUNKS_PER_LINE = 4

#: Lane-group power terms of an asymmetric link, in the order they are reported.
ASYM_TERMS = ("P_S2M_DQ_WMask", "P_S2M_CMD", "P_S2M_CRC", "P_M2S_Data_CRC")


def _check_mix(mix: TrafficMix) -> TrafficMix:
    if not isinstance(mix, TrafficMix):
        raise InvalidMixError(f"expected a TrafficMix, got {mix!r}")
    return mix


def _p(link: LinkVariant | float) -> Fraction:
    value = link.idle_fraction if isinstance(link, LinkVariant) else link
    return Fraction(str(value))


@dataclass(frozen=True)
class AsymBreakdown:
    """Transfer time and lane-group power terms of one mix period on an asymmetric link.

    Times are in UI; power terms are in lane-UI, where an idle lane-UI costs ``p``.
    """

    t_ui: Fraction
    read_ui: Fraction
    write_ui: Fraction
    command_ui: Fraction
    terms: dict[str, Fraction] = field(default_factory=dict)
    group_lanes: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0))


@dataclass(frozen=True)
class SlotBreakdown:
    """Slot (or granule) positions consumed per direction by one mix period."""

    slots_s2m: Fraction
    slots_m2s: Fraction

    @property
    def slots_max(self) -> Fraction:
        return max(self.slots_s2m, self.slots_m2s)

    def as_dict(self) -> dict[str, float]:
        return {"slots_s2m": float(self.slots_s2m), "slots_m2s": float(self.slots_m2s), "slots_max": float(self.slots_max)}


@dataclass(frozen=True)
class ChiModelParams:
    """Granule accounting parameters of the CHI container format.

    ``header_slot_positions`` adds dedicated header positions per flit that can
    only carry headers; it is 0 for the CHI container and 1 when the model is
    degenerated to the optimised CXL flit.
    """

    granules_per_flit: int = 12
    granule_bytes: int = 20
    header_bytes_per_flit: int = 16
    granules_per_cacheline: int = 4
    requests_per_granule: int = 1
    responses_per_granule: int = 2
    header_slot_positions: int = 0

    def __post_init__(self):
        total = self.granules_per_flit * self.granule_bytes + self.header_bytes_per_flit
        if total != FLIT_BYTES:
            raise ParameterIdentityError(
                f"{self.granules_per_flit} granules x {self.granule_bytes}B + {self.header_bytes_per_flit}B headers"
                f" = {total}B, expected {FLIT_BYTES}B"
            )
        if min(self.granules_per_cacheline, self.requests_per_granule, self.responses_per_granule) <= 0:
            raise ParameterIdentityError("granule capacities must be positive")
        if self.header_slot_positions < 0:
            raise ParameterIdentityError("header_slot_positions must be non-negative")

    @property
    def positions_per_flit(self) -> int:
        return self.granules_per_flit + self.header_slot_positions


DEFAULT_CHI_PARAMS = ChiModelParams()


# Asymmetric links


def asym_breakdown(approach: ApproachSpec, mix: TrafficMix, idle_fraction: LinkVariant | float = 0.15) -> AsymBreakdown:
    """Lane-group activity of one mix period on an asymmetric approach."""
    mix = _check_mix(mix)
    x, y = mix.reads, mix.writes
    p = _p(idle_fraction)
    s2m_data = approach.lanes(Direction.S2M, LaneRole.DATA)
    s2m_dq = approach.lanes(Direction.S2M, LaneRole.DATA, LaneRole.WRITE_MASK)
    cmd_lanes = approach.lanes(Direction.S2M, LaneRole.COMMAND)
    s2m_crc = approach.lanes(Direction.S2M, LaneRole.CRC)
    m2s_lanes = approach.lanes(Direction.M2S, LaneRole.DATA, LaneRole.CRC)
    m2s_data = approach.lanes(Direction.M2S, LaneRole.DATA)

    read_ui = Fraction(approach.line_bits, m2s_data)
    write_ui = Fraction(approach.line_bits, s2m_data)
    command_ui = Fraction(approach.command_bits, cmd_lanes)
    t = max(x * read_ui, y * write_ui, (x + y) * command_ui)

    w_active = y * write_ui
    c_active = (x + y) * command_ui
    r_active = x * read_ui
    terms = {
        "P_S2M_DQ_WMask": s2m_dq * (w_active + (t - w_active) * p),
        "P_S2M_CMD": cmd_lanes * (c_active + (t - c_active) * p),
        "P_S2M_CRC": s2m_crc * (max(w_active, c_active) + (t - max(w_active, c_active)) * p),
        "P_M2S_Data_CRC": m2s_lanes * (r_active + (t - r_active) * p),
    }
    lanes = {"P_S2M_DQ_WMask": s2m_dq, "P_S2M_CMD": cmd_lanes, "P_S2M_CRC": s2m_crc, "P_M2S_Data_CRC": m2s_lanes}
    return AsymBreakdown(t_ui=t, read_ui=read_ui, write_ui=write_ui, command_ui=command_ui, terms=terms, group_lanes=lanes)


def asym_time_ui(approach: ApproachSpec, mix: TrafficMix) -> Fraction:
    """Time of one mix period on the busiest lane group."""
    return asym_breakdown(approach, mix).t_ui


def asym_bw_eff(approach: ApproachSpec, mix: TrafficMix) -> Fraction:
    """Useful bits over the lane-UI capacity of the whole module during ``t``."""
    t = asym_time_ui(approach, mix)
    return mix.data_bits / (approach.powered_lanes * t)


def asym_power(approach: ApproachSpec, mix: TrafficMix, link: LinkVariant | float) -> tuple[float, float]:
    """Return ``(p_data, power_eff)`` for an asymmetric approach on ``link``.

    ``link`` may also be a bare idle fraction, as for :func:`asym_breakdown`;
    ``power_eff`` is then in units of the peak pJ/b.
    """
    breakdown = asym_breakdown(approach, mix, link)
    p_data = float(mix.data_bits / breakdown.total)
    peak = link.peak_power_eff if isinstance(link, LinkVariant) else 1.0
    return p_data, peak / p_data


def _hbm(command_bits: int) -> ApproachSpec:
    spec = APPROACHES[ApproachId.HBM_ASYM]
    if command_bits == spec.command_bits:
        return spec
    return replace(spec, command_bits=command_bits)


def lpddr6_time_ui(mix: TrafficMix) -> Fraction:
    """UI per mix period on the 74-lane LPDDR6 module: ``8 * max(2x, 3y)``."""
    return asym_time_ui(APPROACHES[ApproachId.LPDDR6_ASYM], _check_mix(mix))


def lpddr6_bw_eff(mix: TrafficMix) -> Fraction:
    """Bandwidth efficiency of LPDDR6 over the asymmetric link."""
    return asym_bw_eff(APPROACHES[ApproachId.LPDDR6_ASYM], _check_mix(mix))


def lpddr6_power(mix: TrafficMix, link: LinkVariant | float) -> tuple[float, float]:
    """Total and data power of LPDDR6 over the asymmetric link."""
    return asym_power(APPROACHES[ApproachId.LPDDR6_ASYM], _check_mix(mix), link)


def hbm_asym_time_ui(mix: TrafficMix) -> Fraction:
    """UI per mix period on the 138-lane HBM module: ``8 * max(x, 2y)``."""
    return asym_time_ui(APPROACHES[ApproachId.HBM_ASYM], _check_mix(mix))


def hbm_asym_bw_eff(mix: TrafficMix) -> Fraction:
    """Bandwidth efficiency of HBM over the asymmetric link."""
    return asym_bw_eff(APPROACHES[ApproachId.HBM_ASYM], _check_mix(mix))


def hbm_asym_power(mix: TrafficMix, link: LinkVariant | float, *, command_bits: int = 96) -> tuple[float, float]:
    """HBM counterpart of :func:`lpddr6_power`; ``command_bits`` is the per-access command load."""
    return asym_power(_hbm(command_bits), _check_mix(mix), link)


# Symmetric links


def cxl_unopt_slots(mix: TrafficMix) -> SlotBreakdown:
    """One request per slot, two responses per slot, four slots per cache line."""
    mix = _check_mix(mix)
    x, y = mix.reads, mix.writes
    return SlotBreakdown(slots_s2m=x + 5 * y, slots_m2s=(9 * x + y) / 2)


def cxl_opt_slots(mix: TrafficMix, *, dual_request_g_slot: bool = False) -> SlotBreakdown:
    """Slot positions of the optimised flit.

    Data occupies 16/15 of its four G-slots per line because every fifteen
    G-slots bring a free HS-slot along, which absorbs one request or four
    responses. Headers that do not fit the HS-slots spill into G-slots; with
    ``dual_request_g_slot`` a G-slot takes two requests instead of one.
    """
    mix = _check_mix(mix)
    x, y = mix.reads, mix.writes
    spill = max((x + y) - Fraction(4, 15) * y, Fraction(0))
    if dual_request_g_slot:
        spill /= 2
    s2m = Fraction(16, 15) * 4 * y + spill
    m2s = Fraction(16, 15) * 4 * x + max((x + y) / 4 - Fraction(4, 15) * x, Fraction(0))
    return SlotBreakdown(slots_s2m=s2m, slots_m2s=m2s)


def chi_slots(mix: TrafficMix, params: ChiModelParams = DEFAULT_CHI_PARAMS) -> SlotBreakdown:
    """Granule positions per direction for the CHI container."""
    mix = _check_mix(mix)
    x, y = mix.reads, mix.writes
    gpf, h = params.granules_per_flit, params.header_slot_positions

    def positions(lines: Fraction, headers: Fraction, per_granule: int) -> Fraction:
        data = params.granules_per_cacheline * lines
        hdr = headers / per_granule
        if h == 0:
            return data + hdr
        free_header_positions = data * h / gpf
        return data * (gpf + h) / gpf + max(hdr - free_header_positions, Fraction(0))

    return SlotBreakdown(
        slots_s2m=positions(y, x + y, params.requests_per_granule),
        slots_m2s=positions(x, x + y, params.responses_per_granule),
    )


def _densities(link: LinkVariant, bw_eff: float) -> tuple[float, float]:
    return bw_eff * link.shoreline_density, bw_eff * link.areal_density


def _result(approach: str, link: LinkVariant, mix: TrafficMix, bw_eff: Fraction, p_data: Fraction, breakdown: dict[str, float]) -> MetricsResult:
    linear, areal = _densities(link, float(bw_eff))
    return MetricsResult(
        approach=approach,
        link=link.name,
        mix=mix,
        bw_eff=float(bw_eff),
        bw_density_linear=linear,
        bw_density_areal=areal,
        p_data=float(p_data),
        power_eff=link.peak_power_eff / float(p_data),
        breakdown=breakdown,
    )


def cxl_unopt_metrics(mix: TrafficMix, link: LinkVariant) -> MetricsResult:
    """Unoptimised CXL.Mem flit: 15 of 16 slot positions carry payload, all lanes stay powered."""
    slots = cxl_unopt_slots(mix)
    bw = Fraction(15, 16) * 4 * mix.total / (2 * slots.slots_max)
    return _result(ApproachId.CXL_UNOPT.value, link, mix, bw, bw, slots.as_dict())


def cxl_opt_metrics(mix: TrafficMix, link: LinkVariant, *, dual_request_g_slot: bool = False) -> MetricsResult:
    """Optimised CXL.Mem flit; slack slot positions of the lighter direction are gated."""
    slots = cxl_opt_slots(mix, dual_request_g_slot=dual_request_g_slot)
    p = _p(link)
    s2m, m2s, top = slots.slots_s2m, slots.slots_m2s, slots.slots_max
    bw = 4 * mix.total / (2 * top)
    p_data = 4 * mix.total / (s2m + m2s + (2 * top - s2m - m2s) * p)
    return _result(ApproachId.CXL_OPT.value, link, mix, bw, p_data, slots.as_dict())


def chi_metrics(mix: TrafficMix, link: LinkVariant, params: ChiModelParams = DEFAULT_CHI_PARAMS) -> MetricsResult:
    """CHI container: 16 payload bytes of every granule count as useful data."""
    slots = chi_slots(mix, params)
    flits = slots.slots_max / params.positions_per_flit
    bw = LINE_DATA_BITS * mix.total / (2 * FLIT_BYTES * 8 * flits)
    breakdown = slots.as_dict() | {"flits_per_direction": float(flits)}
    return _result(ApproachId.CHI_SYM.value, link, mix, bw, bw, breakdown)


def _asym_metrics(approach: ApproachSpec, mix: TrafficMix, link: LinkVariant) -> MetricsResult:
    breakdown = asym_breakdown(approach, mix, link)
    bw = mix.data_bits / (approach.powered_lanes * breakdown.t_ui)
    p_data = mix.data_bits / breakdown.total
    report = {name: float(v) for name, v in breakdown.terms.items()} | {"t_ui": float(breakdown.t_ui)}
    return _result(approach.name, link, mix, bw, p_data, report)


def evaluate(
    approach: ApproachSpec | ApproachId | str,
    mix: TrafficMix,
    link: LinkVariant | str | None = None,
    *,
    chi_params: ChiModelParams = DEFAULT_CHI_PARAMS,
    dual_request_g_slot: bool = False,
    hbm_command_bits: int = 96,
) -> MetricsResult:
    """Evaluate any approach for ``mix`` on ``link``.

    Parameters
    ----------
    approach : ApproachSpec or str
        Approach spec or id such as ``"cxl-opt"``.
    mix : TrafficMix
        Read/write mix.
    link : LinkVariant or str, optional
        Link preset or its name; ``ucie-a-55`` when omitted. Ignored for baselines.
    chi_params : ChiModelParams
        Granule accounting used for ``chi-sym``.
    dual_request_g_slot : bool
        Let a G-slot of the optimised flit carry two requests.
    hbm_command_bits : int
        Command bits per access on the HBM module.

    Returns
    -------
    MetricsResult
        Bandwidth efficiency, densities, data power ratio and pJ/b.
    """
    spec = get_approach(approach)
    mix = _check_mix(mix)
    if spec.is_baseline:
        return baseline_metrics(spec.id, mix)
    if link is None:
        link = DEFAULT_LINK
    if isinstance(link, str):
        link = preset_link(link)
    match spec.id:
        case ApproachId.CXL_UNOPT:
            return cxl_unopt_metrics(mix, link)
        case ApproachId.CXL_OPT:
            return cxl_opt_metrics(mix, link, dual_request_g_slot=dual_request_g_slot)
        case ApproachId.CHI_SYM:
            return chi_metrics(mix, link, chi_params)
        case ApproachId.HBM_ASYM:
            return _asym_metrics(_hbm(hbm_command_bits), mix, link)
        case _:
            return _asym_metrics(spec, mix, link)


def slot_breakdown(approach: ApproachSpec | ApproachId | str, mix: TrafficMix, **kwargs) -> dict[str, float]:
    """Per-direction slot counts (symmetric) or lane-group terms (asymmetric) of ``approach``."""
    return dict(evaluate(approach, mix, **kwargs).breakdown)
