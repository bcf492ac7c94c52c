from .analysis import evaluate_tool, figure_tables_tool, list_presets_tool, slot_breakdown_tool
from .flits import pack_flits_tool, unpack_flits_tool
from .simulation import latency_report_tool, schedule_reads_tool, simulate_tool

__all__ = [
    "evaluate_tool",
    "figure_tables_tool",
    "latency_report_tool",
    "list_presets_tool",
    "pack_flits_tool",
    "schedule_reads_tool",
    "simulate_tool",
    "slot_breakdown_tool",
    "unpack_flits_tool",
]
