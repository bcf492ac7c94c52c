"""Exception hierarchy shared by the models, the codec, the simulators and the CLI.

Every error raised on purpose derives from :class:`UcieMemError`. The MCP tools
turn these into ``{"error": ...}`` payloads and the CLI into exit codes.
"""

from collections.abc import Iterable


class UcieMemError(Exception):
    """Base class for all errors raised by ucie_mem."""


class PresetNotFoundError(UcieMemError, KeyError):
    """An unknown link preset, approach or baseline name was requested."""

    def __init__(self, name: str, candidates: Iterable[str] = ()):
        self.name = name
        self.candidates = sorted(candidates)
        super().__init__(name)

    def __str__(self) -> str:
        hint = f" (known: {', '.join(self.candidates)})" if self.candidates else ""
        return f"unknown preset '{self.name}'{hint}"


class InvalidMixError(UcieMemError, ValueError):
    """A traffic mix is negative, empty or unparsable."""


class ParameterIdentityError(UcieMemError, ValueError):
    """CHI model parameters do not add up to a 256-byte flit."""


class TopologyError(UcieMemError, ValueError):
    """Lane groups of an asymmetric approach do not cover the module exactly."""


class FieldOverflowError(UcieMemError, ValueError):
    """A header field value does not fit in its bit width."""

    def __init__(self, field: str, value: int, width: int):
        self.field = field
        self.value = value
        self.width = width
        super().__init__(f"field '{field}' value {value} does not fit in {width} bits")


class CorruptFlitError(UcieMemError):
    """One or more CRC regions of a received flit failed verification."""

    def __init__(self, regions: Iterable[str], sequence: int | None = None):
        self.regions = tuple(regions)
        self.sequence = sequence
        where = f" (seq {sequence})" if sequence is not None else ""
        super().__init__(f"CRC mismatch in {', '.join(self.regions)}{where}")


class FlitParseError(UcieMemError, ValueError):
    """A flit byte stream could not be decoded."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        suffix = f" at byte offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{suffix}")


class ClockRatioError(UcieMemError, ValueError):
    """Link and device clocks are not related by a supported integer ratio."""


class ScheduleConflictError(UcieMemError):
    """A DRAM pipeline schedule double-books a resource or violates spacing."""


class ConfigError(UcieMemError, ValueError):
    """A configuration document or sweep description is invalid."""


class ReportSchemaError(UcieMemError, ValueError):
    """A result row or CSV file does not match the report schema."""
