"""
Analytic model tools.

Each tool wraps a plain function of the same name without the ``_tool``
suffix so the functions can be tested without an MCP client. Errors raised by
the models come back as ``{"error": ...}`` payloads.
"""

import logging
from typing import Any

from ucie_mem.analytic import evaluate, slot_breakdown
from ucie_mem.core import DEFAULT_LINK, DEFAULT_PRESETS, FIGURE_APPROACHES, ApproachId, MetricsResult, TrafficMix
from ucie_mem.errors import PresetNotFoundError, UcieMemError
from ucie_mem.mcp import mcp
from ucie_mem.report import figure_tables, verdicts

logger = logging.getLogger(__name__)


def metrics_dict(result: MetricsResult) -> dict[str, Any]:
    """JSON-friendly view of a metrics result (mix as its ``xRyW`` label)."""
    return {
        "approach": result.approach,
        "link": result.link,
        "mix": result.mix.label,
        "bw_eff": result.bw_eff,
        "bw_density_linear": result.bw_density_linear,
        "bw_density_areal": result.bw_density_areal,
        "p_data": result.p_data,
        "power_eff": result.power_eff,
        "breakdown": dict(result.breakdown),
        "degenerate": result.degenerate,
    }


def error_dict(e: Exception, **context: Any) -> dict[str, Any]:
    """Error payload of a tool call, with the known names for unknown presets."""
    payload: dict[str, Any] = {"error": str(e), "error_type": type(e).__name__}
    if isinstance(e, PresetNotFoundError):
        payload["available"] = e.candidates
    return payload | context


def list_presets() -> dict[str, Any]:
    """Link presets and approach ids known to the models."""
    return {
        "presets": {name: DEFAULT_PRESETS[name].to_dict() for name in DEFAULT_PRESETS},
        "default_link": DEFAULT_LINK,
        "approaches": [a.value for a in ApproachId],
        "figure_approaches": [a.value for a in FIGURE_APPROACHES],
    }


def evaluate_mix(approach: str, mix: str, link: str = DEFAULT_LINK, dual_request_g_slot: bool = False) -> dict[str, Any]:
    """Metrics of ``approach`` for ``mix`` on ``link``."""
    try:
        return metrics_dict(evaluate(approach, TrafficMix.parse(mix), link, dual_request_g_slot=dual_request_g_slot))
    except UcieMemError as e:
        logger.debug("evaluate %s %s %s failed: %s", approach, mix, link, e)
        return error_dict(e, approach=approach, mix=mix, link=link)


def breakdown(approach: str, mix: str, dual_request_g_slot: bool = False) -> dict[str, Any]:
    """Slot counts or lane-group terms behind a result."""
    try:
        terms = slot_breakdown(approach, TrafficMix.parse(mix), dual_request_g_slot=dual_request_g_slot)
    except UcieMemError as e:
        return error_dict(e, approach=approach, mix=mix)
    return {"approach": approach, "mix": mix, "breakdown": terms}


def write_figure_tables(output_dir: str) -> dict[str, Any]:
    """Write the figure CSVs and the verdict table into ``output_dir``."""
    try:
        written = figure_tables(output_dir)
    except OSError as e:
        return {"error": f"cannot write to {output_dir}: {e.strerror}", "output_dir": output_dir}
    return {
        "files": {name: str(path) for name, path in written.items()},
        "verdicts": [v.as_dict() for v in verdicts()],
    }


@mcp.tool
def list_presets_tool() -> dict[str, Any]:
    """
    List the UCIe link presets and the memory attach approaches.

    Returns:
        Dict with every preset's parameters, the default link and the approach ids
    """
    return list_presets()


@mcp.tool
def evaluate_tool(approach: str, mix: str, link: str = DEFAULT_LINK, dual_request_g_slot: bool = False) -> dict[str, Any]:
    """
    Evaluate the analytic bandwidth and power model of one approach.

    Args:
        approach: Approach id such as "cxl-opt", "lpddr6-asym" or "baseline-hbm4"
        mix: Read/write mix in xRyW form, e.g. "3R2W"
        link: Link preset name (ignored for baselines)
        dual_request_g_slot: Let a G-slot of the optimised flit carry two requests

    Returns:
        Dict with bw_eff, both bandwidth densities, p_data and pJ/b, or an error
    """
    return evaluate_mix(approach, mix, link, dual_request_g_slot)


@mcp.tool
def slot_breakdown_tool(approach: str, mix: str, dual_request_g_slot: bool = False) -> dict[str, Any]:
    """
    Show the slot or lane-group accounting behind an analytic result.

    Args:
        approach: Approach id
        mix: Read/write mix in xRyW form

    Returns:
        Dict with the breakdown terms, or an error
    """
    return breakdown(approach, mix, dual_request_g_slot)


@mcp.tool
def figure_tables_tool(output_dir: str = "figures") -> dict[str, Any]:
    """
    Regenerate the comparison tables and evaluate the comparison claims.

    Args:
        output_dir: Directory that receives fig10.csv, fig11.csv, fig12.csv and verdicts.csv

    Returns:
        Dict with the written paths and the verdict of every claim
    """
    return write_figure_tables(output_dir)
