"""Discrete-event link simulator used as an independent check of the analytic models."""

from ucie_mem.sim.asymmetric import AsymmetricLinkSim, per_ui_power_oracle
from ucie_mem.sim.baseline import IdealBusSim
from ucie_mem.sim.engine import inject_and_recover, latency_report, run, zero_load_latency
from ucie_mem.sim.model import DeliveryCheck, LaneUsage, LatencyReport, SimConfig, SimMetrics
from ucie_mem.sim.replay import ReplayBuffer, ReplayReceiver
from ucie_mem.sim.symmetric import SymmetricLinkSim
from ucie_mem.sim.traffic import interleave

__all__ = [
    "AsymmetricLinkSim",
    "DeliveryCheck",
    "IdealBusSim",
    "LaneUsage",
    "LatencyReport",
    "ReplayBuffer",
    "ReplayReceiver",
    "SimConfig",
    "SimMetrics",
    "SymmetricLinkSim",
    "inject_and_recover",
    "interleave",
    "latency_report",
    "per_ui_power_oracle",
    "run",
    "zero_load_latency",
]
