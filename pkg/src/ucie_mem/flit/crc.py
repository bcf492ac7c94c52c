"""CRC-16 used to protect flit regions.

The default is the CCITT polynomial 0x1021 with an all-ones seed and no
reflection (check value ``0x29B1`` for ``b"123456789"``). Checksums are stored
little-endian in the flit.
"""

from functools import lru_cache

from crc import Calculator, Configuration

CCITT = Configuration(
    width=16,
    polynomial=0x1021,
    init_value=0xFFFF,
    final_xor_value=0x0000,
    reverse_input=False,
    reverse_output=False,
)


@lru_cache(maxsize=8)
def _calculator(polynomial: int, init_value: int, final_xor_value: int, reflected: bool) -> Calculator:
    config = Configuration(
        width=16,
        polynomial=polynomial,
        init_value=init_value,
        final_xor_value=final_xor_value,
        reverse_input=reflected,
        reverse_output=reflected,
    )
    return Calculator(config, optimized=True)


def crc16(data: bytes | bytearray | memoryview, config: Configuration = CCITT) -> int:
    """CRC-16 of ``data``.

    Parameters
    ----------
    data : bytes
        Region to protect; must not be empty.
    config : crc.Configuration
        A 16-bit CRC configuration; CCITT by default.

    Returns
    -------
    int
        The 16-bit checksum.
    """
    if len(data) == 0:
        raise ValueError("CRC region must not be empty")
    calc = _calculator(config.polynomial, config.init_value, config.final_xor_value, config.reverse_input)
    return calc.checksum(bytes(data))


def crc16_bytes(data: bytes | bytearray | memoryview, config: Configuration = CCITT) -> bytes:
    """The CRC as it is stored in a flit, low byte first."""
    return crc16(data, config).to_bytes(2, "little")
