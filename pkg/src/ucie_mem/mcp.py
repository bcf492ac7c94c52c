from fastmcp import FastMCP

mcp: FastMCP = FastMCP(
    name="ucie-mem",
    instructions="Bandwidth, power and latency models of on-package memory attached over UCIe",
    on_duplicate_tools="error",
)
