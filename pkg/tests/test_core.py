"""
Tests for mixes, link presets, topologies and baselines.
"""

from fractions import Fraction

import pytest
import yaml

from ucie_mem.core import (
    APPROACHES,
    DEFAULT_PRESETS,
    ApproachId,
    ApproachSpec,
    Direction,
    LaneGroup,
    LaneRole,
    LinkKind,
    LinkVariant,
    PresetRegistry,
    TrafficMix,
    baseline_metrics,
    get_approach,
    preset_link,
)
from ucie_mem.errors import ConfigError, InvalidMixError, PresetNotFoundError, TopologyError


class TestTrafficMix:
    """Test the xRyW notation."""

    @pytest.mark.parametrize(
        ("text", "reads", "writes"),
        [("1R1W", 1, 1), ("3R2W", 3, 2), ("0R1W", 0, 1), ("1/2r1w", Fraction(1, 2), 1), (" 2 R 0 W ", 2, 0)],
    )
    def test_parse(self, text, reads, writes):
        """Test parsing of valid mixes."""
        mix = TrafficMix.parse(text)
        assert (mix.reads, mix.writes) == (reads, writes)

    @pytest.mark.parametrize("text", ["0R0W", "R1W", "1R", "-1R1W", "abc", ""])
    def test_parse_invalid(self, text):
        """Test that malformed or empty mixes are rejected."""
        with pytest.raises(InvalidMixError):
            TrafficMix.parse(text)

    def test_reduced_and_label(self):
        """Test reduction to the smallest integer pair."""
        mix = TrafficMix(Fraction(3, 2), 1)
        assert mix.reduced() == (3, 2)
        assert mix.label == "3/2R1W"
        assert TrafficMix(6, 4).reduced() == (3, 2)

    def test_read_share(self):
        """Test the read share of a mix."""
        assert TrafficMix.parse("3R1W").read_share == Fraction(3, 4)
        assert TrafficMix(0, 5).read_share == 0


class TestPresets:
    """Test the link preset registry."""

    def test_ucie_a_55(self):
        """Test the advanced-package preset at 55 um."""
        link = preset_link("ucie-a-55")
        assert link.shoreline_density == 658.44
        assert link.areal_density == 416.27
        assert link.peak_power_eff == 0.3
        assert link.aggregate_gbps == 512

    def test_ucie_s_110(self):
        """Test the doubly-stacked standard-package preset."""
        link = preset_link("ucie-s-110")
        assert (link.shoreline_density, link.areal_density) == (224.0, 145.44)
        assert link.aggregate_gbps == 256

    def test_ucie_a_25(self):
        """Test the upper end of the advanced-package range."""
        link = preset_link("ucie-a-25")
        assert (link.shoreline_density, link.areal_density) == (1317.0, 1350.0)

    @pytest.mark.parametrize("name", list(DEFAULT_PRESETS))
    def test_footprint_consistency(self, name):
        """Test that areal density times bump field recovers the shoreline bandwidth."""
        link = DEFAULT_PRESETS[name]
        assert link.areal_density * link.edge_mm * link.depth_mm == pytest.approx(link.footprint_gbps, rel=0.01)

    def test_low_rate_variants(self):
        """Test that 16 GT/s variants halve densities and take the lower energy figure."""
        assert preset_link("ucie-a-55-16g").peak_power_eff == 0.25
        assert preset_link("ucie-s-110-16g").peak_power_eff == 0.5
        assert preset_link("ucie-s-110-16g").shoreline_density == pytest.approx(112.0)

    def test_interpolated_flag(self):
        """Test that range endpoints are flagged as interpolated."""
        assert preset_link("ucie-a-45").interpolated
        assert not preset_link("ucie-a-55").interpolated

    def test_unknown_preset(self):
        """Test that unknown names list the candidates."""
        with pytest.raises(PresetNotFoundError) as info:
            preset_link("ucie-z-1")
        assert "ucie-a-55" in info.value.candidates
        assert "ucie-a-55" in str(info.value)

    def test_invalid_idle_fraction(self):
        """Test that the idle fraction must lie strictly between 0 and 1."""
        with pytest.raises(ConfigError):
            LinkVariant("bad", LinkKind.ADVANCED_2_5D, 32, 55, 600, 400, 0.3, idle_fraction=1.0)

    def test_yaml_round_trip(self):
        """Test dumping the registry and loading it back."""
        loaded = PresetRegistry.from_yaml(DEFAULT_PRESETS.to_yaml())
        assert list(loaded) == list(DEFAULT_PRESETS)
        assert loaded["ucie-a-55"] == DEFAULT_PRESETS["ucie-a-55"]

    def test_load_document_fills_power(self):
        """Test that a missing pJ/b is taken from the package-class table."""
        registry = DEFAULT_PRESETS.copy()
        added = registry.load_document(
            yaml.safe_load("x: {kind: advanced-2.5D, data_rate: 16, bump_pitch: 45, shoreline_density: 300, areal_density: 280}")
        )
        assert added == ["x"]
        assert registry["x"].peak_power_eff == 0.25
        assert "x" not in DEFAULT_PRESETS

    def test_load_document_schema_error(self):
        """Test that schema violations name the failing path."""
        with pytest.raises(ConfigError, match="at path: x"):
            PresetRegistry().load_document({"x": {"kind": "advanced-2.5D"}})

    def test_asymmetric_custom_needs_power(self):
        """Test that custom links must state their energy figure."""
        with pytest.raises(ConfigError):
            PresetRegistry().load_document(
                {"c": {"kind": "asymmetric-custom", "data_rate": 32, "bump_pitch": 55, "shoreline_density": 600, "areal_density": 400}}
            )


class TestTopology:
    """Test the lane topologies of the asymmetric approaches."""

    def test_lpddr6_lanes(self):
        """Test the 74-lane LPDDR6 module."""
        spec = APPROACHES[ApproachId.LPDDR6_ASYM]
        assert spec.powered_lanes == 74
        assert spec.lanes(Direction.S2M, LaneRole.DATA, LaneRole.WRITE_MASK, LaneRole.COMMAND, LaneRole.CRC) == 37
        assert spec.lanes(Direction.M2S, LaneRole.DATA, LaneRole.CRC) == 37

    def test_hbm_lanes(self):
        """Test the 138-lane HBM module."""
        spec = APPROACHES[ApproachId.HBM_ASYM]
        assert spec.powered_lanes == 138
        assert spec.lanes(Direction.S2M, LaneRole.DATA, LaneRole.WRITE_MASK, LaneRole.COMMAND, LaneRole.CRC) == 65
        assert spec.lanes(Direction.M2S, LaneRole.DATA, LaneRole.CRC) == 73

    def test_native_lpddr6_lanes(self):
        """Test the 43-lane native LPDDR6 option."""
        assert APPROACHES[ApproachId.LPDDR6_NATIVE].powered_lanes == 43

    def test_lane_count_mismatch(self):
        """Test that a topology not covering the module is rejected."""
        groups = (
            LaneGroup("d", Direction.S2M, 24, LaneRole.DATA),
            LaneGroup("c", Direction.S2M, 10, LaneRole.COMMAND),
            LaneGroup("r", Direction.M2S, 36, LaneRole.DATA),
        )
        with pytest.raises(TopologyError, match="70"):
            ApproachSpec(ApproachId.LPDDR6_ASYM, lane_groups=groups, module_lanes=74)

    def test_unknown_approach(self):
        """Test that unknown approach ids list the candidates."""
        with pytest.raises(PresetNotFoundError) as info:
            get_approach("ddr9")
        assert "cxl-opt" in info.value.candidates


class TestBaselines:
    """Test the conventional memory baselines."""

    def test_hbm4(self):
        """Test the HBM4 figures."""
        result = baseline_metrics("baseline-hbm4", TrafficMix(1, 1))
        assert (result.bw_density_linear, result.bw_density_areal, result.power_eff) == (204.8, 81.9, 0.9)

    def test_lpddr6(self):
        """Test the LPDDR6 figures."""
        result = baseline_metrics(ApproachId.BASELINE_LPDDR6, TrafficMix(1, 0))
        assert (result.bw_density_linear, result.bw_density_areal, result.power_eff) == (35.3, 20.2, 2.8)

    def test_mix_independent(self):
        """Test that baselines do not depend on the mix."""
        a = baseline_metrics("baseline-lpddr6", TrafficMix(0, 1))
        b = baseline_metrics("baseline-lpddr6", TrafficMix(1, 0))
        assert a.as_row() | {"reads": 0, "writes": 0} == b.as_row() | {"reads": 0, "writes": 0}

    def test_not_a_baseline(self):
        """Test that non-baseline approaches are rejected."""
        with pytest.raises(PresetNotFoundError):
            baseline_metrics("cxl-opt", TrafficMix(1, 1))
