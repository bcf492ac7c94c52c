import logging
import sys
from pathlib import Path

import click
import yaml

from ucie_mem.config import CONFIG_ENV, OUTPUT_DIR_ENV, load_config
from ucie_mem.core import DEFAULT_LINK, DEFAULT_PRESETS, FIGURE_APPROACHES, TrafficMix, get_approach, preset_link
from ucie_mem.errors import CorruptFlitError, PresetNotFoundError, UcieMemError

from .tools import *  # noqa: F403 import all tools to register them

logger = logging.getLogger(__name__)

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


class MixType(click.ParamType):
    """A traffic mix in ``<x>R<y>W`` form."""

    name = "mix"

    def convert(self, value, param, ctx):
        if isinstance(value, TrafficMix):
            return value
        try:
            return TrafficMix.parse(str(value))
        except UcieMemError as e:
            self.fail(str(e), param, ctx)


class _NamedType(click.ParamType):
    """A name that must resolve through ``lookup``; unknown names list the candidates."""

    def __init__(self, name: str, lookup):
        self.name = name
        self._lookup = lookup

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            self._lookup(value)
        except PresetNotFoundError as e:
            self.fail(str(e), param, ctx)
        return value


MIX = MixType()
APPROACH = _NamedType("approach", get_approach)
LINK = _NamedType("link", preset_link)


def _fail(e: Exception) -> click.ClickException:
    return click.ClickException(str(e))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise click.ClickException(f"cannot write {out}: {e.strerror}") from e
    click.echo(f"Wrote {out}", err=True)


@click.group(name="ucie_mem", invoke_without_command=True)
@click.option(
    "-c",
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    envvar=CONFIG_ENV,
    help=f"YAML config with per-command defaults. Defaults to ${CONFIG_ENV}.",
)
@click.option("-v", "--verbose", count=True, help="Log INFO (-v) or DEBUG (-vv) to stderr.")
@click.option("--version", "version", is_flag=True, help="Get version of package.")
@click.pass_context
def cli(ctx: click.Context, config_path: Path | None, verbose: int, version: bool):
    """Bandwidth, power and latency models of on-package memory over UCIe."""
    if version:
        from ucie_mem import __version__

        click.echo(__version__)
        ctx.exit(0)

    logging.basicConfig(level=_LEVELS[min(verbose, 2)], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = load_config(config_path)
        added = config.register_presets()
    except UcieMemError as e:
        raise click.BadParameter(str(e), param_hint="--config") from e
    if added:
        logger.info("Registered presets from config: %s", ", ".join(added))
    ctx.default_map = config.default_map()
    ctx.obj = config
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command()
@click.option("-a", "--approach", "approaches", type=APPROACH, multiple=True, help="Approach id; repeatable. Defaults to every figure approach.")
@click.option("-l", "--link", "links", type=LINK, multiple=True, help=f"Link preset; repeatable. Defaults to {DEFAULT_LINK}.")
@click.option("-m", "--mix", "mixes", type=MIX, multiple=True, help="Traffic mix such as 3R2W; repeatable. Defaults to 1R1W.")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), help="CSV file to write instead of stdout.")
@click.option("--dual-request-g-slot", is_flag=True, help="Let an optimised-flit G-slot carry two requests.")
@click.option("-w", "--workers", type=click.IntRange(min=1), help="Sweep threads.")
def analyze(approaches, links, mixes, out, dual_request_g_slot, workers):
    """Evaluate the analytic models and print CSV rows."""
    from ucie_mem.report import SweepSpec, format_csv, sweep

    try:
        spec = SweepSpec(
            approaches=approaches or tuple(a.value for a in FIGURE_APPROACHES),
            links=links or (DEFAULT_LINK,),
            mixes=tuple(m.label for m in mixes) or ("1R1W",),
            dual_request_g_slot=dual_request_g_slot,
            workers=workers,
        )
        text = format_csv(sweep(spec))
    except UcieMemError as e:
        raise _fail(e) from e
    _emit(text, out)


@cli.command()
@click.option(
    "-d",
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default="figures",
    show_default=True,
    envvar=OUTPUT_DIR_ENV,
    help=f"Directory for the figure tables. Defaults to ${OUTPUT_DIR_ENV} when set.",
)
@click.option("-w", "--workers", type=click.IntRange(min=1), help="Sweep threads.")
def figures(output_dir, workers):
    """Write the figure tables and the claim verdicts."""
    from ucie_mem.report import figure_tables, verdicts

    try:
        written = figure_tables(output_dir, workers=workers)
    except OSError as e:
        raise click.ClickException(f"cannot write to {output_dir}: {e.strerror}") from e
    for name, path in written.items():
        click.echo(f"{name}: {path}")
    for verdict in verdicts():
        click.echo(f"  [{'ok' if verdict.holds else 'FAIL'}] {verdict.claim}: {verdict.value:.4f}")


@cli.command()
@click.option("-a", "--approach", "approaches", type=APPROACH, multiple=True, help="Approach id; repeatable. Defaults to cxl-opt.")
@click.option("-l", "--link", "links", type=LINK, multiple=True, help=f"Link preset; repeatable. Defaults to {DEFAULT_LINK}.")
@click.option("-m", "--mix", "mixes", type=MIX, multiple=True, help="Traffic mix; repeatable. Defaults to 1R1W.")
@click.option("--duration", type=click.IntRange(min=0), default=100_000, show_default=True, help="Measured time in UI.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Seed of the payload and error streams.")
@click.option("--error-rate", type=click.FloatRange(0, 1, max_open=True), default=0.0, help="Probability that a transfer is corrupted.")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), help="CSV file to write instead of stdout.")
@click.option("--trace", type=click.Path(dir_okay=False, path_type=Path), help="Write the event trace of every run to this file.")
@click.option("-w", "--workers", type=click.IntRange(min=1), help="Sweep threads.")
def simulate(approaches, links, mixes, duration, seed, error_rate, out, trace, workers):
    """Run the link simulator next to the analytic model; sim rows carry the delta."""
    from ucie_mem.report import SweepMode, SweepSpec, format_csv, run_sweep

    try:
        spec = SweepSpec(
            approaches=approaches or ("cxl-opt",),
            links=links or (DEFAULT_LINK,),
            mixes=tuple(m.label for m in mixes) or ("1R1W",),
            mode=SweepMode.BOTH,
            duration_ui=duration,
            seed=seed,
            error_rate=error_rate,
            trace=trace is not None,
            workers=workers,
        )
        result = run_sweep(spec)
    except UcieMemError as e:
        raise _fail(e) from e
    for run in result.runs:
        check = run.check
        delivered = f"{check.delivered}/{check.generated} delivered" if check else f"{run.delivered_lines} delivered"
        click.echo(f"{run.approach} {run.link} {run.mix}: {delivered}, {run.retried_flits} retried", err=True)
    if trace is not None:
        lines = []
        for run in result.runs:
            lines.append(f"# {run.approach} {run.link} {run.mix}")
            lines.extend(run.trace)
        _emit("\n".join(lines) + "\n", trace)
    _emit(format_csv(result.rows, deltas=True), out)


@cli.command()
@click.option("-a", "--approach", type=APPROACH, default="cxl-opt", show_default=True)
@click.option("-l", "--link", type=LINK, default=DEFAULT_LINK, show_default=True)
@click.option("-m", "--mix", type=MIX, default="1R1W", show_default=True)
@click.option("--duration", type=click.IntRange(min=0), default=100_000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--bins", type=click.IntRange(min=1), default=20, show_default=True)
def latency(approach, link, mix, duration, seed, bins):
    """Latency statistics of a run against the zero-load and baseline figures."""
    from ucie_mem.sim import SimConfig, latency_report

    report = latency_report(SimConfig(approach, link, mix, duration_ui=duration, seed=seed), bins=bins)
    data = report.to_dict()
    if report.zero_load_ns:
        data["baseline_ratio"] = {name: ns / report.zero_load_ns for name, ns in report.baseline_ns.items()}
    click.echo(yaml.safe_dump(data, sort_keys=False), nl=False)


@cli.command()
@click.option("-m", "--mix", type=MIX, default="1R0W", show_default=True)
@click.option("-n", "--count", type=click.IntRange(min=0), default=64, show_default=True, help="Number of accesses.")
@click.option("--device", type=click.IntRange(0, 3), help="Send every access to this device.")
@click.option("--dram-rate", type=float, default=16.0, show_default=True, help="DRAM data rate in GT/s.")
@click.option("--link-rate", type=float, default=32.0, show_default=True, help="Link data rate in GT/s.")
@click.option("--clocks", type=click.IntRange(min=1), default=64, show_default=True, help="Width of the rendered grid.")
@click.option("--start", type=click.IntRange(min=0), default=0, show_default=True, help="First rendered clock.")
def schedule(mix, count, device, dram_rate, link_rate, clocks, start):
    """Schedule an LPDDR6 access stream behind the logic die and render it."""
    from ucie_mem.dram import ClockRatioConfig, bridge_metrics, interleaved_stream, render, schedule_stream

    try:
        result = schedule_stream(interleaved_stream(mix, count, device=device), ClockRatioConfig(dram_rate, link_rate))
    except UcieMemError as e:
        raise _fail(e) from e
    click.echo(render(result, start, clocks), nl=False)
    metrics = bridge_metrics(result, preset_link(DEFAULT_LINK))
    click.echo(f"bw_eff={metrics.bw_eff:.4f} p_data={metrics.p_data:.4f} clocks={result.end}")


@cli.group()
def flit():
    """Pack transaction listings into flits and back."""


_LAYOUT = click.Choice(["cxl-unopt", "cxl-opt", "chi-x"])


@flit.command()
@click.option("-L", "--layout", type=_LAYOUT, default="cxl-unopt", show_default=True)
@click.option("--dual-request-g-slot", is_flag=True, help="Two requests per G-slot (cxl-opt).")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), help="Write hex lines here instead of stdout.")
@click.argument("listing", type=click.File("r"), default="-")
def pack(layout, dual_request_g_slot, out, listing):
    """Pack a transaction listing (one per line) into hex flits."""
    from ucie_mem.flit import pack_flits
    from ucie_mem.flit.listing import format_flits, parse_transactions

    try:
        flits = pack_flits(parse_transactions(listing.read()), layout, dual_request_g_slot=dual_request_g_slot)
    except UcieMemError as e:
        raise _fail(e) from e
    _emit(format_flits(flits), out)


@flit.command()
@click.option("-L", "--layout", type=_LAYOUT, default="cxl-unopt", show_default=True)
@click.option("--direction", type=click.Choice(["s2m", "m2s"]), default="s2m", show_default=True, help="Requests (s2m) or responses (m2s).")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), help="Write the listing here instead of stdout.")
@click.argument("hexfile", type=click.File("r"), default="-")
def unpack(layout, direction, out, hexfile):
    """Decode hex flits (512 characters per line) into a transaction listing."""
    from ucie_mem.core import Direction
    from ucie_mem.flit import unpack_flits
    from ucie_mem.flit.listing import format_transactions, parse_flits

    try:
        transactions = unpack_flits(parse_flits(hexfile.read()), layout, Direction(direction))
    except CorruptFlitError as e:
        where = f" in flit seq {e.sequence}" if e.sequence is not None else ""
        raise click.ClickException(f"{', '.join(e.regions)} mismatch{where}") from e
    except UcieMemError as e:
        raise _fail(e) from e
    _emit(format_transactions(transactions), out)


@cli.group()
def presets():
    """Inspect the link presets."""


@presets.command(name="list")
def list_presets():
    """Print every preset with its densities and energy."""
    click.echo(f"{'name':<16} {'kind':<18} {'GT/s':>5} {'pitch':>6} {'GB/s/mm':>9} {'GB/s/mm2':>9} {'pJ/b':>5}")
    for name in DEFAULT_PRESETS:
        p = DEFAULT_PRESETS[name]
        mark = " *" if p.interpolated else ""
        click.echo(
            f"{name:<16} {p.kind.value:<18} {p.data_rate:>5g} {p.bump_pitch:>6g} {p.shoreline_density:>9.2f}"
            f" {p.areal_density:>9.2f} {p.peak_power_eff:>5.2f}{mark}"
        )


@presets.command()
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), help="Write YAML here instead of stdout.")
def dump(out):
    """Dump the preset registry as YAML (the format of a config's presets section)."""
    _emit(DEFAULT_PRESETS.to_yaml(), out)


@cli.command()
def serve():
    """Run the MCP server "ucie-mem" over stdio."""
    from ucie_mem.mcp import mcp

    logger.info("Starting MCP server over stdio")
    mcp.run(transport="stdio")


if __name__ == "__main__":
    cli()
