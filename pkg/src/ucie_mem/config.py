"""YAML configuration for the command line.

A config document has one section per subcommand whose keys mirror that
subcommand's options (with ``-`` spelled ``_``), plus an optional ``presets``
section in the same format as ``ucie_mem presets dump``::

    analyze:
      approach: [cxl-opt, lpddr6-asym]
      link: [ucie-a-55]
      mix: [1R1W, 3R2W]
    simulate:
      duration: 100000
      seed: 7
    presets:
      my-link:
        kind: advanced-2.5D
        data_rate: 24
        bump_pitch: 45
        shoreline_density: 480
        areal_density: 460

Values from the file become click defaults, so command-line flags and
environment variables still win.
"""

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml
from jsonschema import ValidationError, validate

from ucie_mem.core import DEFAULT_PRESETS, PRESET_SCHEMA, PresetRegistry
from ucie_mem.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV = "UCIE_MEM_CONFIG"
OUTPUT_DIR_ENV = "UCIE_MEM_OUTPUT_DIR"

_NAMES = {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 1}
_PATH = {"type": "string", "minLength": 1}
#: Config keys whose click parameter is plural because the option repeats.
_PARAM_NAMES = {"approach": "approaches", "link": "links", "mix": "mixes"}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "analyze": {
            "type": "object",
            "properties": {
                "approach": _NAMES,
                "link": _NAMES,
                "mix": _NAMES,
                "out": _PATH,
                "dual_request_g_slot": {"type": "boolean"},
                "workers": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "figures": {
            "type": "object",
            "properties": {"output_dir": _PATH, "workers": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "simulate": {
            "type": "object",
            "properties": {
                "approach": _NAMES,
                "link": _NAMES,
                "mix": _NAMES,
                "duration": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "error_rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "out": _PATH,
                "trace": _PATH,
                "workers": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "flit": {
            "type": "object",
            "properties": {"layout": {"enum": ["cxl-unopt", "cxl-opt", "chi-x"]}, "dual_request_g_slot": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "presets": PRESET_SCHEMA,
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Config:
    """A validated configuration document."""

    sections: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    presets: Mapping[str, Any] = field(default_factory=dict)
    path: Path | None = None

    def default_map(self) -> dict[str, Any]:
        """Click ``default_map`` for the root group."""
        defaults: dict[str, Any] = {
            name: {_PARAM_NAMES.get(k, k): v for k, v in values.items()} for name, values in self.sections.items() if name != "flit"
        }
        if "flit" in self.sections:
            flit = dict(self.sections["flit"])
            defaults["flit"] = {"pack": dict(flit), "unpack": {k: v for k, v in flit.items() if k == "layout"}}
        return defaults

    def register_presets(self, registry: PresetRegistry = DEFAULT_PRESETS) -> list[str]:
        """Add the document's presets to ``registry`` (replacing same-named ones)."""
        if not self.presets:
            return []
        return registry.load_document(self.presets, overwrite=True)


def parse_config(text: str, *, path: Path | None = None) -> Config:
    """Parse and validate a config document.

    Raises
    ------
    ConfigError
        On YAML syntax errors or schema violations, naming the failing path.
    """
    where = f"{path}: " if path else ""
    try:
        document = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{where}YAML parsing error: {e}") from e
    try:
        validate(instance=document, schema=CONFIG_SCHEMA)
    except ValidationError as e:
        at = " -> ".join(str(p) for p in e.absolute_path)
        raise ConfigError(f"{where}{e.message}" + (f" at path: {at}" if at else "")) from e
    presets = document.pop("presets", {}) or {}
    logger.debug("Loaded config sections %s", sorted(document))
    return Config(sections=document, presets=presets, path=path)


def load_config(path: Path | str | None = None) -> Config:
    """Load ``path``, or the file named by ``UCIE_MEM_CONFIG``; an empty config when neither is set."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return Config()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
    return parse_config(text, path=path)
