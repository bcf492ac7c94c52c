"""Link simulator and DRAM scheduler tools."""

from typing import Any

from ucie_mem.analytic import evaluate
from ucie_mem.core import DEFAULT_LINK, TrafficMix, preset_link
from ucie_mem.dram import ClockRatioConfig, bridge_metrics, interleaved_stream, render, schedule_stream
from ucie_mem.errors import UcieMemError
from ucie_mem.mcp import mcp
from ucie_mem.sim import SimConfig, SimMetrics, latency_report, run

from .analysis import error_dict, metrics_dict

#: Upper bound on simulated time per tool call, in UI.
MAX_TOOL_DURATION_UI = 2_000_000


def sim_dict(metrics: SimMetrics) -> dict[str, Any]:
    """JSON-friendly view of a simulated run."""
    check = metrics.check
    return {
        "approach": metrics.approach,
        "link": metrics.link,
        "mix": metrics.mix.label,
        "elapsed_ui": metrics.elapsed_ui,
        "delivered_reads": metrics.delivered_reads,
        "delivered_writes": metrics.delivered_writes,
        "bw_eff": metrics.bw_eff,
        "p_data": metrics.p_data,
        "power_eff": metrics.power_eff,
        "retried_flits": metrics.retried_flits,
        "converged": metrics.converged,
        "exactly_once": None if check is None else check.exactly_once,
    }


def simulate_mix(approach: str, mix: str, link: str = DEFAULT_LINK, duration_ui: int = 100_000, seed: int = 0, error_rate: float = 0.0) -> dict[str, Any]:
    """Simulated and analytic metrics of one point, with their difference."""
    if duration_ui > MAX_TOOL_DURATION_UI:
        return {"error": f"duration_ui is capped at {MAX_TOOL_DURATION_UI} for tool calls", "duration_ui": duration_ui}
    try:
        config = SimConfig(approach, link, mix, duration_ui=duration_ui, seed=seed, error_rate=error_rate)
        metrics = run(config)
        analytic = evaluate(config.approach, config.mix, config.link)
    except UcieMemError as e:
        return error_dict(e, approach=approach, mix=mix, link=link)
    return sim_dict(metrics) | {
        "analytic": metrics_dict(analytic),
        "delta_bw_eff": metrics.bw_eff - analytic.bw_eff,
        "delta_p_data": metrics.p_data - analytic.p_data,
    }


def latency_summary(approach: str, mix: str, link: str = DEFAULT_LINK, duration_ui: int = 100_000, seed: int = 0) -> dict[str, Any]:
    """Latency report of one simulated point."""
    if duration_ui > MAX_TOOL_DURATION_UI:
        return {"error": f"duration_ui is capped at {MAX_TOOL_DURATION_UI} for tool calls", "duration_ui": duration_ui}
    try:
        report = latency_report(SimConfig(approach, link, mix, duration_ui=duration_ui, seed=seed))
    except UcieMemError as e:
        return error_dict(e, approach=approach, mix=mix, link=link)
    return report.to_dict()


def schedule_reads(
    mix: str = "1R0W", count: int = 64, device: int | None = None, dram_rate: float = 16.0, link_rate: float = 32.0, clocks: int = 64
) -> dict[str, Any]:
    """Schedule an access stream and summarise the grid and link efficiency."""
    try:
        schedule = schedule_stream(interleaved_stream(TrafficMix.parse(mix), count, device=device), ClockRatioConfig(dram_rate, link_rate))
    except UcieMemError as e:
        return error_dict(e, mix=mix, dram_rate=dram_rate, link_rate=link_rate)
    metrics = bridge_metrics(schedule, preset_link(DEFAULT_LINK))
    return {
        "grid": render(schedule, 0, clocks),
        "clocks": schedule.end,
        "reads": schedule.reads,
        "writes": schedule.writes,
        "bw_eff": metrics.bw_eff,
        "p_data": metrics.p_data,
        "read_occupancy": schedule.occupancy("read", 0, max(schedule.end, 1)),
    }


@mcp.tool
def simulate_tool(approach: str, mix: str, link: str = DEFAULT_LINK, duration_ui: int = 100_000, seed: int = 0, error_rate: float = 0.0) -> dict[str, Any]:
    """
    Run the discrete-event link simulator and compare it with the analytic model.

    Args:
        approach: Approach id such as "cxl-opt" or "lpddr6-asym"
        mix: Read/write mix in xRyW form
        link: Link preset name
        duration_ui: Measured time in unit intervals
        seed: Seed of the payload and error streams
        error_rate: Probability that a transfer is corrupted and retried

    Returns:
        Dict with measured rates, retry counts, the analytic result and the deltas
    """
    return simulate_mix(approach, mix, link, duration_ui, seed, error_rate)


@mcp.tool
def latency_report_tool(approach: str, mix: str = "1R1W", link: str = DEFAULT_LINK, duration_ui: int = 100_000, seed: int = 0) -> dict[str, Any]:
    """
    Latency statistics of a simulated run with the zero-load and baseline figures.

    Returns:
        Dict with min/mean/max latency in ns, a histogram and the reference latencies
    """
    return latency_summary(approach, mix, link, duration_ui, seed)


@mcp.tool
def schedule_reads_tool(
    mix: str = "1R0W", count: int = 64, device: int | None = None, dram_rate: float = 16.0, link_rate: float = 32.0, clocks: int = 64
) -> dict[str, Any]:
    """
    Schedule an LPDDR6 access stream behind the logic die and render the lane grid.

    Args:
        mix: Read/write mix in xRyW form
        count: Number of accesses
        device: Pin every access to one device (0-3); interleave when omitted
        dram_rate: DRAM data rate in GT/s
        link_rate: Link data rate in GT/s; must be 1, 2 or 4 times the DRAM rate
        clocks: Width of the rendered grid

    Returns:
        Dict with the grid text, the link efficiency and the read-lane occupancy
    """
    return schedule_reads(mix, count, device, dram_rate, link_rate, clocks)
