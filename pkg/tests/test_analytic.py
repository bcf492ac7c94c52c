"""
Tests for the closed-form bandwidth and power models.
"""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucie_mem.analytic import (
    ASYM_TERMS,
    ChiModelParams,
    asym_breakdown,
    asym_power,
    chi_metrics,
    chi_slots,
    cxl_opt_metrics,
    cxl_opt_slots,
    cxl_unopt_metrics,
    cxl_unopt_slots,
    evaluate,
    hbm_asym_bw_eff,
    lpddr6_bw_eff,
    lpddr6_time_ui,
    slot_breakdown,
)
from ucie_mem.core import APPROACHES, FIGURE_APPROACHES, ApproachId, TrafficMix, preset_link
from ucie_mem.errors import InvalidMixError, ParameterIdentityError

A55 = preset_link("ucie-a-55")
S110 = preset_link("ucie-s-110")

mixes = st.tuples(st.integers(0, 10), st.integers(0, 10)).filter(any).map(lambda rw: TrafficMix(*rw))


def mix(text: str) -> TrafficMix:
    return TrafficMix.parse(text)


class TestLpddr6Asym:
    """Test the LPDDR6 module on the asymmetric link."""

    @pytest.mark.parametrize(("text", "ui"), [("1R0W", 16), ("0R1W", 24), ("1R1W", 24)])
    def test_time(self, text, ui):
        """Test the mix period."""
        assert lpddr6_time_ui(mix(text)) == ui

    @pytest.mark.parametrize(("text", "bw"), [("1R0W", Fraction(32, 74)), ("1R1W", Fraction(64, 111)), ("3R2W", Fraction(160, 222))])
    def test_bw_eff(self, text, bw):
        """Test bandwidth efficiency against hand-evaluated values."""
        assert lpddr6_bw_eff(mix(text)) == bw

    def test_best_integer_mix(self):
        """Test that 3R2W is the best mix with at most ten reads and writes."""
        best = max((TrafficMix(x, y) for x in range(11) for y in range(11) if x + y), key=lpddr6_bw_eff)
        assert best.reduced() == (3, 2)

    def test_p_data_without_idle_power(self):
        """Test the data power ratio of 1R0W with perfectly gated lanes."""
        breakdown = asym_breakdown(APPROACHES[ApproachId.LPDDR6_ASYM], mix("1R0W"), 0.0)
        assert breakdown.terms["P_S2M_CMD"] == 96
        assert breakdown.terms["P_S2M_CRC"] == Fraction(96, 10)
        assert breakdown.terms["P_M2S_Data_CRC"] == 37 * 16
        assert float(512 / breakdown.total) == pytest.approx(0.734, abs=1e-3)

    def test_power_takes_idle_fraction(self):
        """Test that the power terms accept a bare idle fraction like the breakdown does."""
        spec = APPROACHES[ApproachId.LPDDR6_ASYM]
        p_data, relative = asym_power(spec, mix("1R0W"), 0.0)
        assert p_data == pytest.approx(0.734, abs=1e-3)
        assert relative == pytest.approx(1 / p_data)
        on_link = asym_power(spec, mix("3R2W"), S110)
        bare = asym_power(spec, mix("3R2W"), S110.idle_fraction)
        assert on_link[0] == pytest.approx(bare[0])
        assert on_link[1] == pytest.approx(S110.peak_power_eff * bare[1])

    @given(mixes)
    def test_p_data_without_gating(self, m):
        """Test that with idle lanes at full power p_data is bits over all lane-UI."""
        spec = APPROACHES[ApproachId.LPDDR6_ASYM]
        breakdown = asym_breakdown(spec, m, 1.0)
        assert m.data_bits / breakdown.total == m.data_bits / (74 * breakdown.t_ui)

    def test_terms_reported(self):
        """Test that the breakdown lists every lane-group term."""
        result = evaluate("lpddr6-asym", mix("1R1W"), A55)
        assert set(ASYM_TERMS) <= set(result.breakdown)
        assert result.breakdown["t_ui"] == 24

    def test_linear_density(self):
        """Test the 3R2W density on the standard package."""
        result = evaluate("lpddr6-asym", mix("3R2W"), S110)
        assert result.bw_density_linear == pytest.approx(161.4, abs=0.1)


class TestHbmAsym:
    """Test the HBM module on the asymmetric link."""

    @pytest.mark.parametrize(("text", "bw"), [("1R0W", Fraction(512, 1104)), ("1R1W", Fraction(1024, 2208)), ("2R1W", Fraction(1536, 2208))])
    def test_bw_eff(self, text, bw):
        """Test bandwidth efficiency against hand-evaluated values."""
        assert hbm_asym_bw_eff(mix(text)) == bw

    def test_command_bits(self):
        """Test that a heavier command load can only lower efficiency."""
        light = evaluate("hbm-asym", mix("1R1W"), A55)
        heavy = evaluate("hbm-asym", mix("1R1W"), A55, hbm_command_bits=192)
        assert heavy.bw_eff <= light.bw_eff


class TestCxlUnopt:
    """Test the unoptimised CXL.Mem flit model."""

    @pytest.mark.parametrize(
        ("text", "s2m", "m2s"), [("1R0W", 1, Fraction(9, 2)), ("0R1W", 5, Fraction(1, 2)), ("1R1W", 6, 5)]
    )
    def test_slots(self, text, s2m, m2s):
        """Test slot counts per direction."""
        slots = cxl_unopt_slots(mix(text))
        assert (slots.slots_s2m, slots.slots_m2s, slots.slots_max) == (s2m, m2s, max(s2m, m2s))

    def test_bw_eff(self):
        """Test bandwidth efficiency against hand-evaluated values."""
        assert cxl_unopt_metrics(mix("1R1W"), A55).bw_eff == pytest.approx(0.625)
        assert cxl_unopt_metrics(mix("1R0W"), A55).bw_eff == pytest.approx(5 / 12)

    def test_linear_density(self):
        """Test the 1R1W density on the advanced package."""
        assert cxl_unopt_metrics(mix("1R1W"), A55).bw_density_linear == pytest.approx(411.5, abs=0.1)

    def test_no_gating(self):
        """Test that all lanes stay powered."""
        result = cxl_unopt_metrics(mix("3R1W"), A55)
        assert result.p_data == pytest.approx(result.bw_eff)


class TestCxlOpt:
    """Test the optimised CXL.Mem flit model."""

    @pytest.mark.parametrize(
        ("text", "s2m", "m2s"),
        [("1R1W", 6, Fraction(9, 2)), ("1R0W", 1, Fraction(64, 15)), ("0R1W", 5, Fraction(1, 4))],
    )
    def test_slots(self, text, s2m, m2s):
        """Test slot counts per direction."""
        slots = cxl_opt_slots(mix(text))
        assert (slots.slots_s2m, slots.slots_m2s) == (s2m, m2s)

    @pytest.mark.parametrize(("text", "bw"), [("1R1W", 2 / 3), ("1R0W", 0.46875), ("0R1W", 0.4)])
    def test_bw_eff(self, text, bw):
        """Test bandwidth efficiency against hand-evaluated values."""
        assert cxl_opt_metrics(mix(text), A55).bw_eff == pytest.approx(bw)

    def test_gain_over_unopt(self):
        """Test the 1R1W improvement over the unoptimised flit."""
        gain = cxl_opt_metrics(mix("1R1W"), A55).bw_eff / cxl_unopt_metrics(mix("1R1W"), A55).bw_eff - 1
        assert gain == pytest.approx(1 / 15)
        assert 0.06 <= gain <= 0.10

    def test_power(self):
        """Test p_data and pJ/b with gated slack slots."""
        result = cxl_opt_metrics(mix("1R1W"), A55)
        assert result.p_data == pytest.approx(8 / 10.725)
        assert result.power_eff == pytest.approx(0.3 / (8 / 10.725))

    def test_linear_density(self):
        """Test the 1R1W density on the advanced package."""
        assert cxl_opt_metrics(mix("1R1W"), A55).bw_density_linear == pytest.approx(438.96, abs=0.01)

    def test_dual_request_g_slot(self):
        """Test that two requests per G-slot never hurt."""
        for text in ("1R0W", "3R1W", "1R1W", "1R3W"):
            single = cxl_opt_metrics(mix(text), A55)
            dual = cxl_opt_metrics(mix(text), A55, dual_request_g_slot=True)
            assert dual.bw_eff >= single.bw_eff

    @given(mixes)
    def test_never_worse_than_unopt(self, m):
        """Test that the optimised flit is at least as efficient for any mix."""
        assert cxl_opt_metrics(m, A55).bw_eff >= cxl_unopt_metrics(m, A55).bw_eff - 1e-12


class TestChi:
    """Test the CHI container model."""

    def test_below_unopt(self):
        """Test that CHI trails the unoptimised CXL flit at 1R1W."""
        assert chi_metrics(mix("1R1W"), A55).bw_eff < cxl_unopt_metrics(mix("1R1W"), A55).bw_eff

    def test_degenerates_to_cxl_opt(self):
        """Test that 16-byte granules with a header slot reproduce the optimised flit."""
        params = ChiModelParams(
            granules_per_flit=15, granule_bytes=16, header_bytes_per_flit=16, responses_per_granule=4, header_slot_positions=1
        )
        for text in ("1R0W", "3R1W", "1R1W", "0R1W"):
            chi, opt = chi_slots(mix(text), params), cxl_opt_slots(mix(text))
            assert (chi.slots_s2m, chi.slots_m2s) == (opt.slots_s2m, opt.slots_m2s)

    def test_parameter_identity(self):
        """Test that parameters must fill a 256-byte flit."""
        with pytest.raises(ParameterIdentityError, match="256"):
            ChiModelParams(granule_bytes=21)


class TestEvaluate:
    """Test the dispatching entry point."""

    @pytest.mark.parametrize("approach", [a.value for a in FIGURE_APPROACHES])
    @given(m=mixes)
    def test_ranges(self, approach, m):
        """Test that efficiencies lie in (0, 1] and pJ/b never beats the peak figure."""
        result = evaluate(approach, m, A55)
        assert 0 < result.bw_eff <= 1
        assert 0 < result.p_data <= 1 + 1e-12
        if not approach.startswith("baseline-"):
            assert result.power_eff >= A55.peak_power_eff - 1e-12

    def test_default_link(self):
        """Test that the advanced package at 55 um is the default link."""
        assert evaluate("cxl-opt", mix("1R1W")).link == "ucie-a-55"

    def test_baseline_ignores_link(self):
        """Test that baselines report their own figures on any link."""
        assert evaluate("baseline-hbm4", mix("1R1W"), S110).bw_density_linear == 204.8

    def test_rejects_strings(self):
        """Test that mixes must be parsed first."""
        with pytest.raises(InvalidMixError):
            evaluate("cxl-opt", "1R1W", A55)

    def test_slot_breakdown(self):
        """Test the breakdown helper."""
        assert slot_breakdown("cxl-unopt", mix("1R1W")) == {"slots_s2m": 6.0, "slots_m2s": 5.0, "slots_max": 6.0}
