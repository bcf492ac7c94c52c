"""Entry points of the link simulator."""

import logging

import numpy as np

from ucie_mem.core import (
    DEFAULT_LATENCY,
    ApproachId,
    ApproachSpec,
    LatencyModel,
    LinkVariant,
    get_approach,
    preset_link,
)
from ucie_mem.errors import ConfigError
from ucie_mem.sim.asymmetric import simulate_asymmetric, transfer_ui
from ucie_mem.sim.baseline import simulate_baseline
from ucie_mem.sim.model import LatencyReport, SimConfig, SimMetrics
from ucie_mem.sim.symmetric import FLIT_BITS, simulate_symmetric

logger = logging.getLogger(__name__)

#: Upper bound on the error rate :func:`inject_and_recover` accepts.
MAX_RECOVERABLE_ERROR_RATE = 0.1


def _baseline_latency(approach: ApproachSpec, latency: LatencyModel) -> float:
    return latency.baseline_hbm if approach.id is ApproachId.BASELINE_HBM4 else latency.baseline_lpddr


def _degenerate(config: SimConfig) -> SimMetrics:
    return SimMetrics(
        approach=config.approach.name,
        link=config.link.name,
        mix=config.mix,
        elapsed_ui=0.0,
        delivered_reads=0,
        delivered_writes=0,
        generated_reads=0,
        generated_writes=0,
        bw_eff=0.0,
        p_data=0.0,
        power_eff=0.0,
        converged=False,
    )


def run(config: SimConfig) -> SimMetrics:
    """Simulate ``config`` and return the rates measured over its duration.

    Symmetric approaches move real flits; asymmetric approaches move lane-group
    occupancy. Baselines move their lines over an ideal bus. A zero duration returns empty,
    non-converged metrics. Runs are deterministic in ``config.seed``.
    """
    approach = config.approach
    if config.duration_ui == 0:
        metrics = _degenerate(config)
    elif approach.is_baseline:
        metrics = simulate_baseline(config)
    elif approach.is_asymmetric:
        metrics = simulate_asymmetric(config)
    else:
        metrics = simulate_symmetric(config)

    logger.info(
        "Simulated %s %s on %s for %d UI: bw_eff=%.4f p_data=%.4f",
        approach.name,
        config.mix,
        config.link.name,
        config.duration_ui,
        metrics.bw_eff,
        metrics.p_data,
    )
    if not metrics.converged:
        logger.warning("%s %s delivered %d lines only; rates are not converged", approach.name, config.mix, metrics.delivered_lines)
    if metrics.retried_flits:
        logger.warning("%s retried %d transfers", approach.name, metrics.retried_flits)
    return metrics


def inject_and_recover(config: SimConfig) -> SimMetrics:
    """Run with error injection and drain until every transaction is delivered.

    Raises
    ------
    ConfigError
        If the error rate is not in ``[0, 0.1)``.
    """
    if not 0 <= config.error_rate < MAX_RECOVERABLE_ERROR_RATE:
        raise ConfigError(f"error rate must lie in [0, {MAX_RECOVERABLE_ERROR_RATE}), got {config.error_rate}")
    return run(config.with_(drain=True))


def zero_load_latency(
    approach: ApproachSpec | str, link: LinkVariant | str, latency: LatencyModel = DEFAULT_LATENCY
) -> float:
    """Round trip of a lone read in ns.

    Symmetric links pay the protocol-layer round trip plus one flit; asymmetric
    links pay the adapter round trip plus a command and a line; baselines pay
    their measured constant.
    """
    approach = get_approach(approach)
    if isinstance(link, str):
        link = preset_link(link)
    if approach.is_baseline:
        return _baseline_latency(approach, latency)
    if approach.is_asymmetric:
        read_ui, _, command_ui = transfer_ui(approach)
        return latency.adapter_roundtrip + float(command_ui + read_ui) / link.data_rate
    return latency.protocol_roundtrip + FLIT_BITS / link.lanes_per_direction / link.data_rate


def latency_report(config: SimConfig, *, bins: int = 20) -> LatencyReport:
    """Latency statistics of a run, with the zero-load figure and the baseline constants."""
    metrics = run(config)
    samples = np.asarray(metrics.latency_ns, dtype=float)
    if samples.size:
        counts, edges = np.histogram(samples, bins=bins)
        stats = float(samples.min()), float(samples.mean()), float(samples.max())
    else:
        counts, edges = np.zeros(0, dtype=int), np.zeros(0)
        stats = (0.0, 0.0, 0.0)
    return LatencyReport(
        approach=config.approach.name,
        link=metrics.link,
        samples=int(samples.size),
        min_ns=stats[0],
        mean_ns=stats[1],
        max_ns=stats[2],
        histogram=tuple(int(c) for c in counts),
        bin_edges=tuple(float(e) for e in edges),
        zero_load_ns=zero_load_latency(config.approach, config.link, config.latency),
        baseline_ns={"lpddr5": config.latency.baseline_lpddr, "hbm3": config.latency.baseline_hbm},
    )
