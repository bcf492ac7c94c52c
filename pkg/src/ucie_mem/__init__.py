from importlib.metadata import PackageNotFoundError, version

from ucie_mem.main import cli
from ucie_mem.mcp import mcp

try:
    __version__ = version("ucie-mem")
except PackageNotFoundError:
    __version__ = "0.0.0+unknown"

__all__ = [
    "cli",
    "mcp",
    "__version__",
]


if __name__ == "__main__":
    cli()
