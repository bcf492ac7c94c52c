"""
Tests for MCP tool integration.
"""

import pytest
from fastmcp import Client

import ucie_mem

LINE = "ff" * 64


class TestMCPTools:
    """Test MCP tool integration."""

    @pytest.mark.asyncio
    async def test_tool_names(self):
        """Test that every tool is registered once."""
        async with Client(ucie_mem.mcp) as client:
            names = sorted(tool.name for tool in await client.list_tools())
        assert names == sorted(ucie_mem.tools.__all__)

    @pytest.mark.asyncio
    async def test_list_presets_tool(self):
        """Test list_presets_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("list_presets_tool", {})
        assert result.data["default_link"] == "ucie-a-55"
        assert result.data["presets"]["ucie-s-110"]["lanes_per_direction"] == 32
        assert "lpddr6-asym" in result.data["figure_approaches"]

    @pytest.mark.asyncio
    async def test_evaluate_tool(self):
        """Test evaluate_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("evaluate_tool", {"approach": "lpddr6-asym", "mix": "3R2W", "link": "ucie-s-110"})
        assert result.data["mix"] == "3R2W"
        assert 0 < result.data["bw_eff"] <= 1
        assert result.data["bw_density_linear"] == pytest.approx(result.data["bw_eff"] * 224.0)

    @pytest.mark.asyncio
    async def test_evaluate_tool_unknown_link(self):
        """Test that an unknown link lists the presets."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("evaluate_tool", {"approach": "cxl-opt", "mix": "1R1W", "link": "ucie-q"})
        assert result.data["error_type"] == "PresetNotFoundError"
        assert "ucie-a-55" in result.data["available"]
        assert result.data["link"] == "ucie-q"

    @pytest.mark.asyncio
    async def test_evaluate_tool_bad_mix(self):
        """Test that a malformed mix comes back as an error payload."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("evaluate_tool", {"approach": "cxl-opt", "mix": "0R0W"})
        assert result.data["error_type"] == "InvalidMixError"

    @pytest.mark.asyncio
    async def test_slot_breakdown_tool(self):
        """Test slot_breakdown_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("slot_breakdown_tool", {"approach": "cxl-unopt", "mix": "1R1W"})
        assert result.data["approach"] == "cxl-unopt"
        assert result.data["breakdown"]

    @pytest.mark.asyncio
    async def test_figure_tables_tool(self, tmp_path):
        """Test figure_tables_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("figure_tables_tool", {"output_dir": str(tmp_path)})
        assert sorted(result.data["files"]) == ["fig10", "fig11", "fig12", "verdicts"]
        assert all(v["holds"] == "true" for v in result.data["verdicts"])
        assert (tmp_path / "fig12.csv").exists()

    @pytest.mark.asyncio
    async def test_pack_and_unpack_tools(self):
        """Test that packed flits unpack to the same listing."""
        listing = ["RD tag=3 addr=0x1c0", f"WR tag=4 addr=0x200 data={LINE}"]
        async with Client(ucie_mem.mcp) as client:
            packed = await client.call_tool("pack_flits_tool", {"transactions": listing, "layout": "cxl-opt"})
            unpacked = await client.call_tool("unpack_flits_tool", {"flits": packed.data["flits"], "layout": "cxl-opt"})
        assert packed.data["count"] == len(packed.data["flits"]) >= 1
        assert unpacked.data["transactions"] == listing

    @pytest.mark.asyncio
    async def test_unpack_flits_tool_crc(self):
        """Test that a corrupted flit reports the failed region."""
        async with Client(ucie_mem.mcp) as client:
            packed = await client.call_tool("pack_flits_tool", {"transactions": ["RD tag=1 addr=0x40"]})
            flit = packed.data["flits"][0]
            flit = flit[:200] + ("0" if flit[200] != "0" else "1") + flit[201:]
            result = await client.call_tool("unpack_flits_tool", {"flits": [flit]})
        assert result.data["error_type"] == "CorruptFlitError"
        assert result.data["regions"] == ["CRC0"]
        assert result.data["sequence"] == 0

    @pytest.mark.asyncio
    async def test_pack_flits_tool_bad_listing(self):
        """Test that a malformed listing comes back as an error payload."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("pack_flits_tool", {"transactions": ["NOP"]})
        assert result.data["error_type"] == "FlitParseError"

    @pytest.mark.asyncio
    async def test_simulate_tool(self):
        """Test simulate_tool via MCP."""
        args = {"approach": "lpddr6-asym", "mix": "1R1W", "link": "ucie-s-110", "duration_ui": 20_000}
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("simulate_tool", args)
        assert result.data["exactly_once"] is True
        assert result.data["retried_flits"] == 0
        assert result.data["delta_bw_eff"] == pytest.approx(0.0, abs=0.05)

    @pytest.mark.asyncio
    async def test_simulate_tool_duration_cap(self):
        """Test that tool calls cannot request unbounded runs."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("simulate_tool", {"approach": "cxl-opt", "mix": "1R1W", "duration_ui": 10**9})
        assert "capped" in result.data["error"]

    @pytest.mark.asyncio
    async def test_latency_report_tool(self):
        """Test latency_report_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("latency_report_tool", {"approach": "cxl-opt", "duration_ui": 20_000})
        assert result.data["zero_load_ns"] == pytest.approx(4.0)
        assert result.data["min_ns"] >= result.data["zero_load_ns"] - 1e-9

    @pytest.mark.asyncio
    async def test_schedule_reads_tool(self):
        """Test schedule_reads_tool via MCP."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("schedule_reads_tool", {"count": 400})
        assert result.data["reads"] == 400
        assert result.data["bw_eff"] == pytest.approx(32 / 74, rel=0.02)
        assert result.data["grid"].startswith("CMD")

    @pytest.mark.asyncio
    async def test_schedule_reads_tool_bad_ratio(self):
        """Test that an unsupported clock ratio comes back as an error payload."""
        async with Client(ucie_mem.mcp) as client:
            result = await client.call_tool("schedule_reads_tool", {"dram_rate": 12.0})
        assert result.data["error_type"] == "ClockRatioError"
