"""
Tests for the ucie_mem command line.
"""

import pytest
import yaml
from click.testing import CliRunner

import ucie_mem
from ucie_mem.config import CONFIG_ENV, OUTPUT_DIR_ENV
from ucie_mem.main import cli

LINE = "00112233445566778899aabbccddeeff" * 4
LISTING = f"RD tag=1 addr=0x40\nWR tag=2 addr=0x80 data={LINE}\n"


@pytest.fixture
def runner():
    return CliRunner()


def rows(text: str) -> list[list[str]]:
    return [line.split(",") for line in text.splitlines() if "," in line and not line.startswith("approach")]


class TestAnalyze:
    """Test the analyze command."""

    def test_single_row(self, runner):
        """Test the optimised flit at an even mix."""
        result = runner.invoke(cli, ["analyze", "-a", "cxl-opt", "-m", "1R1W"])
        assert result.exit_code == 0, result.output
        assert result.output.splitlines()[0].startswith("approach,link,reads,writes,bw_eff")
        (row,) = rows(result.output)
        assert row[:5] == ["cxl-opt", "ucie-a-55", "1", "1", "0.666667"]

    def test_baseline(self, runner):
        """Test that baselines report their own densities."""
        result = runner.invoke(cli, ["analyze", "-a", "baseline-hbm4"])
        (row,) = rows(result.output)
        assert row[1] == "baseline-hbm4"
        assert row[5] == "204.800000"
        assert row[8] == "0.900000"

    def test_default_grid(self, runner):
        """Test that every figure approach is evaluated by default."""
        result = runner.invoke(cli, ["analyze", "-l", "ucie-s-110"])
        assert result.exit_code == 0, result.output
        assert {"cxl-unopt", "cxl-opt", "chi-sym", "lpddr6-asym", "hbm-asym"} <= {r[0] for r in rows(result.output)}

    def test_out_file(self, runner, tmp_path):
        """Test writing CSV to a file."""
        out = tmp_path / "rows.csv"
        result = runner.invoke(cli, ["analyze", "-a", "cxl-unopt", "-m", "3R2W", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert rows(out.read_text())[0][:4] == ["cxl-unopt", "ucie-a-55", "3", "2"]

    def test_zero_mix(self, runner):
        """Test that a mix without traffic is a usage error."""
        result = runner.invoke(cli, ["analyze", "-m", "0R0W"])
        assert result.exit_code == 2

    def test_unknown_approach(self, runner):
        """Test that unknown approaches list the known ones."""
        result = runner.invoke(cli, ["analyze", "-a", "cxl-fast"])
        assert result.exit_code == 2
        assert "known:" in result.output
        assert "cxl-opt" in result.output

    def test_unknown_link(self, runner):
        """Test that unknown links list the presets."""
        result = runner.invoke(cli, ["analyze", "-l", "ucie-x"])
        assert result.exit_code == 2
        assert "ucie-a-55" in result.output


class TestConfig:
    """Test config files as command defaults."""

    def test_defaults_from_file(self, runner, tmp_path):
        """Test that a config supplies analyze options and flags still win."""
        path = tmp_path / "ucie.yaml"
        path.write_text("analyze:\n  approach: [lpddr6-asym]\n  mix: [3R2W]\n")
        (row,) = rows(runner.invoke(cli, ["-c", str(path), "analyze"]).output)
        assert row[:4] == ["lpddr6-asym", "ucie-a-55", "3", "2"]
        (row,) = rows(runner.invoke(cli, ["-c", str(path), "analyze", "-m", "1R1W"]).output)
        assert row[:4] == ["lpddr6-asym", "ucie-a-55", "1", "1"]

    def test_environment(self, runner, tmp_path):
        """Test that the config can be named by environment variable."""
        path = tmp_path / "env.yaml"
        path.write_text("analyze:\n  approach: [hbm-asym]\n")
        result = runner.invoke(cli, ["analyze"], env={CONFIG_ENV: str(path)})
        assert [r[0] for r in rows(result.output)] == ["hbm-asym"]

    def test_presets_from_file(self, runner, tmp_path):
        """Test that config presets are usable by name."""
        path = tmp_path / "presets.yaml"
        path.write_text(
            "presets:\n  cli-test-link:\n    kind: advanced-2.5D\n    data_rate: 24\n    bump_pitch: 45\n"
            "    shoreline_density: 480\n    areal_density: 460\n"
        )
        result = runner.invoke(cli, ["-c", str(path), "analyze", "-a", "cxl-opt", "-l", "cli-test-link"])
        assert result.exit_code == 0, result.output
        (row,) = rows(result.output)
        assert row[1] == "cli-test-link"
        assert row[5] == "320.000000"

    def test_invalid_file(self, runner, tmp_path):
        """Test that a broken config is a usage error naming the option."""
        path = tmp_path / "bad.yaml"
        path.write_text("analyze:\n  mix: 3R2W\n")
        result = runner.invoke(cli, ["-c", str(path), "analyze"])
        assert result.exit_code == 2
        assert "--config" in result.output


class TestFigures:
    """Test the figures command."""

    def test_output_dir(self, runner, tmp_path):
        """Test that the tables land in the given directory."""
        result = runner.invoke(cli, ["figures", "-d", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["fig10.csv", "fig11.csv", "fig12.csv", "verdicts.csv"]
        assert "FAIL" not in result.output

    def test_environment(self, runner, tmp_path):
        """Test the output directory environment variable."""
        result = runner.invoke(cli, ["figures"], env={OUTPUT_DIR_ENV: str(tmp_path / "env")})
        assert result.exit_code == 0, result.output
        assert (tmp_path / "env" / "verdicts.csv").exists()


class TestSimulate:
    """Test the simulate and latency commands."""

    def test_rows(self, runner, tmp_path):
        """Test that a short run writes analytic and sim rows."""
        out = tmp_path / "sim.csv"
        result = runner.invoke(
            cli, ["simulate", "-a", "lpddr6-asym", "-l", "ucie-s-110", "--duration", "20000", "-o", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0].endswith("source,delta_bw_eff,delta_p_data")
        assert [r[9] for r in rows(out.read_text())] == ["analytic", "sim"]
        assert "delivered" in result.output

    def test_trace(self, runner, tmp_path):
        """Test the event trace file."""
        trace = tmp_path / "trace.txt"
        result = runner.invoke(cli, ["simulate", "--duration", "2000", "--trace", str(trace), "-o", str(tmp_path / "s.csv")])
        assert result.exit_code == 0, result.output
        assert trace.read_text().startswith("# cxl-opt ucie-a-55 1R1W")

    def test_latency(self, runner):
        """Test the latency summary."""
        result = runner.invoke(cli, ["latency", "-a", "lpddr6-asym", "--duration", "20000"])
        assert result.exit_code == 0, result.output
        data = yaml.safe_load(result.output)
        assert data["zero_load_ns"] == pytest.approx(2.8)
        assert data["baseline_ratio"]["lpddr5"] == pytest.approx(7.5 / 2.8)
        assert data["samples"] > 0


class TestSchedule:
    """Test the schedule command."""

    def test_render(self, runner):
        """Test the schedule grid and summary."""
        result = runner.invoke(cli, ["schedule", "-m", "3R2W", "-n", "40", "--clocks", "48"])
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0].startswith("CMD")
        assert lines[-1].startswith("bw_eff=")
        assert all(len(line) == 54 for line in lines[:-1])

    def test_unsupported_ratio(self, runner):
        """Test that an unsupported clock ratio fails cleanly."""
        result = runner.invoke(cli, ["schedule", "--dram-rate", "12"])
        assert result.exit_code == 1
        assert "Error" in result.output


class TestFlit:
    """Test flit pack and unpack."""

    def test_round_trip(self, runner):
        """Test that packed flits decode to the listing."""
        packed = runner.invoke(cli, ["flit", "pack"], input=LISTING)
        assert packed.exit_code == 0, packed.output
        hex_lines = packed.output.splitlines()
        assert all(len(line) == 512 for line in hex_lines)
        unpacked = runner.invoke(cli, ["flit", "unpack"], input=packed.output)
        assert unpacked.exit_code == 0, unpacked.output
        assert unpacked.output == LISTING

    def test_files(self, runner, tmp_path):
        """Test file input and output."""
        listing = tmp_path / "in.txt"
        listing.write_text(LISTING)
        flits = tmp_path / "flits.hex"
        result = runner.invoke(cli, ["flit", "pack", "-L", "cxl-opt", "-o", str(flits), str(listing)])
        assert result.exit_code == 0, result.output
        result = runner.invoke(cli, ["flit", "unpack", "-L", "cxl-opt", str(flits)])
        assert result.output == LISTING

    def test_corrupt(self, runner):
        """Test that a corrupted flit names the failing CRC region."""
        packed = runner.invoke(cli, ["flit", "pack"], input=LISTING).output
        flipped = "f" if packed[200] != "f" else "0"
        result = runner.invoke(cli, ["flit", "unpack"], input=packed[:200] + flipped + packed[201:])
        assert result.exit_code == 1
        assert "CRC0 mismatch in flit seq 0" in result.output

    def test_bad_listing(self, runner):
        """Test that malformed listings fail cleanly."""
        result = runner.invoke(cli, ["flit", "pack"], input="RD tag=x\n")
        assert result.exit_code == 1
        assert "bad field value" in result.output


class TestPresets:
    """Test the presets commands."""

    def test_list(self, runner):
        """Test the preset table."""
        result = runner.invoke(cli, ["presets", "list"])
        assert result.exit_code == 0
        assert "ucie-a-55" in result.output
        assert "658.44" in result.output

    def test_dump(self, runner, tmp_path):
        """Test that the dump can be loaded back as a config."""
        dumped = runner.invoke(cli, ["presets", "dump"]).output
        path = tmp_path / "dump.yaml"
        path.write_text("presets:\n" + "".join(f"  {line}\n" for line in dumped.splitlines()))
        result = runner.invoke(cli, ["-c", str(path), "presets", "list"])
        assert result.exit_code == 0, result.output


def test_version(runner):
    """Test the version flag."""
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert result.output.strip() == ucie_mem.__version__
