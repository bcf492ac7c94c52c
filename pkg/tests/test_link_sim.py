"""
Tests for the discrete-event link simulator.
"""

import pytest

from ucie_mem.analytic import evaluate
from ucie_mem.core import APPROACHES, FIGURE_APPROACHES, ApproachId, TrafficMix, preset_link
from ucie_mem.errors import ConfigError, InvalidMixError, PresetNotFoundError
from ucie_mem.sim import SimConfig, interleave, latency_report, per_ui_power_oracle, run, zero_load_latency
from ucie_mem.sim.lanes import LaneActivity, union
from ucie_mem.sim.traffic import OpKind

GRID_MIXES = ("1R0W", "3R1W", "2R1W", "3R2W", "1R1W", "2R3W", "1R2W", "1R3W", "0R1W")


class TestSimConfig:
    """Test run configuration."""

    def test_resolves_names(self):
        """Test that names and mix strings are resolved."""
        config = SimConfig("cxl-opt", "ucie-a-55", "3R1W", forced_naks=(9, 3))
        assert config.approach is APPROACHES[ApproachId.CXL_OPT]
        assert config.link == preset_link("ucie-a-55")
        assert config.mix == TrafficMix(3, 1)
        assert config.forced_naks == (3, 9)

    @pytest.mark.parametrize(
        ("changes", "match"),
        [
            ({"duration_ui": -1}, "non-negative"),
            ({"error_rate": 1.0}, "error rate"),
            ({"replay_window": 0}, "replay_window"),
            ({"ack_every": 128}, "ack_every"),
        ],
    )
    def test_invalid(self, changes, match):
        """Test rejected settings."""
        with pytest.raises(ConfigError, match=match):
            SimConfig("cxl-opt", "ucie-a-55", "1R1W", **changes)

    def test_unknown_names(self):
        """Test that bad names raise the model errors."""
        with pytest.raises(PresetNotFoundError):
            SimConfig("cxl-opt", "ucie-x", "1R1W")
        with pytest.raises(InvalidMixError):
            SimConfig("cxl-opt", "ucie-a-55", "0R0W")


class TestTraffic:
    """Test the operation sequence."""

    @pytest.mark.parametrize(("reads", "writes"), [(1, 1), (3, 2), (2, 0), (1, 4)])
    def test_window_holds_mix(self, reads, writes):
        """Test that every window of one period holds exactly the mix."""
        kinds = interleave(TrafficMix(reads, writes))
        sequence = [next(kinds) for _ in range(10 * (reads + writes))]
        n = reads + writes
        for start in range(len(sequence) - n):
            assert sequence[start : start + n].count(OpKind.READ) == reads


class TestAgainstAnalytic:
    """Test that simulated rates reproduce the closed-form models."""

    def test_lpddr6(self):
        """Test LPDDR6 1R1W on the standard package."""
        metrics = run(SimConfig("lpddr6-asym", "ucie-s-110", "1R1W", duration_ui=100_000))
        assert metrics.converged
        assert metrics.bw_eff == pytest.approx(64 / 111, rel=0.01)
        assert metrics.check.exactly_once
        assert metrics.check.in_order

    def test_hbm(self):
        """Test HBM 2R1W on the advanced package."""
        metrics = run(SimConfig("hbm-asym", "ucie-a-55", "2R1W", duration_ui=100_000))
        analytic = evaluate("hbm-asym", TrafficMix(2, 1), "ucie-a-55")
        assert metrics.bw_eff == pytest.approx(analytic.bw_eff, rel=0.01)
        assert metrics.p_data == pytest.approx(analytic.p_data, rel=0.01)

    @pytest.mark.slow
    @pytest.mark.parametrize("approach", ["cxl-unopt", "cxl-opt"])
    def test_symmetric_1r1w(self, approach):
        """Test flit-level bandwidth and power of the CXL layouts."""
        metrics = run(SimConfig(approach, "ucie-a-55", "1R1W", duration_ui=1_000_000))
        analytic = evaluate(approach, TrafficMix(1, 1), "ucie-a-55")
        assert metrics.bw_eff == pytest.approx(analytic.bw_eff, rel=0.01)
        assert metrics.p_data == pytest.approx(analytic.p_data, rel=0.01)
        assert metrics.check.exactly_once

    @pytest.mark.slow
    def test_opt_p_data(self):
        """Test the gated data power ratio of the optimised flit."""
        metrics = run(SimConfig("cxl-opt", "ucie-a-55", "1R1W", duration_ui=1_000_000))
        assert metrics.p_data == pytest.approx(8 / 10.725, rel=0.01)

    def test_short_symmetric_run(self):
        """Test that a short flit-level run delivers every transaction in order."""
        metrics = run(SimConfig("chi-sym", "ucie-a-55", "3R1W", duration_ui=20_000))
        assert metrics.delivered_lines > 0
        assert metrics.check.exactly_once
        assert metrics.check.in_order

    @pytest.mark.slow
    @pytest.mark.parametrize("text", GRID_MIXES)
    @pytest.mark.parametrize("approach", FIGURE_APPROACHES, ids=lambda a: a.value)
    def test_figure_grid(self, approach, text):
        """Test every figure approach and mix against its closed-form row."""
        spec = APPROACHES[approach]
        duration = 100_000 if spec.is_asymmetric or spec.is_baseline else 300_000
        metrics = run(SimConfig(approach, "ucie-a-55", text, duration_ui=duration))
        analytic = evaluate(approach, TrafficMix.parse(text), "ucie-a-55")
        assert metrics.converged
        assert metrics.bw_eff == pytest.approx(analytic.bw_eff, rel=0.01)
        assert metrics.p_data == pytest.approx(analytic.p_data, rel=0.01)

    @pytest.mark.parametrize("approach", [ApproachId.LPDDR6_ASYM, ApproachId.HBM_ASYM])
    @pytest.mark.parametrize("text", ["1R0W", "1R1W", "3R2W", "0R1W"])
    def test_power_oracle(self, approach, text):
        """Test the tick-by-tick power account against the lane-group terms."""
        mix = TrafficMix.parse(text)
        link = preset_link("ucie-a-55")
        oracle = per_ui_power_oracle(APPROACHES[approach], mix, link)
        assert oracle == pytest.approx(evaluate(approach, mix, link).p_data, abs=1e-9)


class TestLaneActivity:
    """Test busy-interval bookkeeping."""

    def test_merges_on_mark(self):
        """Test that touching and overlapping transfers collapse into one interval."""
        activity = LaneActivity("data", 4)
        for start, end in [(0, 4), (4, 8), (2, 3), (10, 12), (11, 14)]:
            activity.mark(start, end)
        assert activity.intervals == ((0, 8), (10, 14))

    def test_late_mark(self):
        """Test that a transfer marked out of order is merged into place."""
        activity = LaneActivity("data", 4)
        activity.mark(0, 4)
        activity.mark(10, 12)
        activity.mark(3, 10)
        activity.mark(20, 22)
        assert activity.intervals == ((0, 12), (20, 22))
        assert activity.busy_ui(21) == 13

    def test_empty_mark(self):
        """Test that zero-length transfers are ignored."""
        activity = LaneActivity("data", 1)
        activity.mark(5, 5)
        assert activity.intervals == ()

    def test_union(self):
        """Test that a union is busy whenever any member is."""
        command, write = LaneActivity("command", 1), LaneActivity("write", 1)
        command.mark(0, 2)
        command.mark(8, 10)
        write.mark(1, 6)
        combined = union("crc", 1, command, write)
        assert combined.intervals == ((0, 6), (8, 10))
        usage = combined.usage(12, gate_latency=3)
        assert (usage.active_ui, usage.idle_ui) == (10, 2)


class TestRuns:
    """Test run bookkeeping."""

    def test_deterministic(self):
        """Test that equal seeds give equal results."""
        config = SimConfig("cxl-opt", "ucie-a-55", "3R1W", duration_ui=10_000, seed=7)
        assert run(config) == run(config)

    def test_zero_duration(self):
        """Test that an empty run reports nothing."""
        metrics = run(SimConfig("cxl-opt", "ucie-a-55", "1R1W", duration_ui=0))
        assert not metrics.converged
        assert metrics.bw_eff == metrics.p_data == 0.0
        assert metrics.delivered_lines == 0

    def test_short_run_not_converged(self):
        """Test that runs below a thousand lines are flagged."""
        assert not run(SimConfig("lpddr6-asym", "ucie-a-55", "1R1W", duration_ui=2_000)).converged

    def test_no_gating(self):
        """Test that ungated lanes cost full power."""
        metrics = run(SimConfig("lpddr6-asym", "ucie-a-55", "1R0W", duration_ui=50_000, gating=False))
        assert metrics.p_data == pytest.approx(metrics.bw_eff)

    def test_gate_latency(self):
        """Test that slow gates can only raise power."""
        fast = run(SimConfig("cxl-opt", "ucie-a-55", "1R0W", duration_ui=20_000))
        slow = run(SimConfig("cxl-opt", "ucie-a-55", "1R0W", duration_ui=20_000, gate_latency_ui=64))
        assert slow.p_data <= fast.p_data

    def test_trace(self):
        """Test the event trace."""
        metrics = run(SimConfig("cxl-unopt", "ucie-a-55", "1R1W", duration_ui=2_000, trace=True))
        assert any(" send " in line for line in metrics.trace)
        assert not run(SimConfig("cxl-unopt", "ucie-a-55", "1R1W", duration_ui=2_000)).trace

    def test_baseline(self):
        """Test that baselines move every generated line over a fully used bus."""
        metrics = run(SimConfig("baseline-hbm4", "ucie-a-55", "1R1W", duration_ui=16_000))
        assert metrics.delivered_lines == metrics.generated_reads + metrics.generated_writes == 2_000
        assert metrics.delivered_reads == metrics.delivered_writes
        assert metrics.converged
        assert (metrics.link, metrics.bw_eff, metrics.p_data) == ("baseline-hbm4", 1.0, 1.0)
        assert metrics.power_eff == pytest.approx(0.9)
        assert set(metrics.latency_ns) == {6.0}
        assert metrics.check.exactly_once
        assert metrics.check.in_order

    @pytest.mark.parametrize("text", ["1R0W", "3R2W", "0R1W"])
    def test_baseline_matches_analytic(self, text):
        """Test that the ideal bus reproduces the peak credit of the baseline rows."""
        metrics = run(SimConfig("baseline-lpddr6", "ucie-a-55", text, duration_ui=8_000))
        analytic = evaluate("baseline-lpddr6", TrafficMix.parse(text))
        assert metrics.delivered_lines == 1_000
        assert (metrics.bw_eff, metrics.p_data) == (analytic.bw_eff, analytic.p_data)
        assert metrics.power_eff == pytest.approx(analytic.power_eff)


class TestLatency:
    """Test latency figures."""

    def test_zero_load(self):
        """Test lone-read round trips."""
        assert zero_load_latency("cxl-opt", "ucie-a-55") == pytest.approx(4.0)
        assert zero_load_latency("lpddr6-asym", "ucie-a-55") == pytest.approx(2.8)
        assert zero_load_latency("baseline-lpddr5", "ucie-a-55") == 7.5

    def test_ucie_beats_baselines(self):
        """Test that every UCIe approach undercuts the LPDDR5 round trip."""
        for approach in ("cxl-unopt", "cxl-opt", "chi-sym", "lpddr6-asym", "hbm-asym"):
            assert zero_load_latency(approach, "ucie-s-110") < 7.5

    def test_report(self):
        """Test the latency report of a short run."""
        report = latency_report(SimConfig("cxl-opt", "ucie-a-55", "1R1W", duration_ui=20_000))
        assert report.samples > 0
        assert report.min_ns >= report.zero_load_ns - 1e-9
        assert report.min_ns <= report.mean_ns <= report.max_ns
        assert sum(report.histogram) == report.samples
        assert report.baseline_ns == {"lpddr5": 7.5, "hbm3": 6.0}

    def test_empty_report(self):
        """Test the report of an empty run."""
        report = latency_report(SimConfig("cxl-opt", "ucie-a-55", "1R1W", duration_ui=0))
        assert report.samples == 0
        assert report.histogram == ()
