from ucie_mem.flit.codec import (
    DecodedTransaction,
    Flit,
    FlitDecoder,
    FlitHeader,
    ProtocolId,
    Transaction,
    decode_flit,
    encode_flit,
    flit_sequence,
    verify_flit,
)
from ucie_mem.flit.crc import crc16
from ucie_mem.flit.headers import (
    Layout,
    ReqCmd,
    RequestHeader,
    RespCmd,
    ResponseHeader,
    decode_request,
    decode_response,
    encode_request,
    encode_response,
)
from ucie_mem.flit.layout import byte_roles, role_totals
from ucie_mem.flit.packer import FlitPacker, pack_flits, unpack_flits

__all__ = [
    "DecodedTransaction",
    "Flit",
    "FlitDecoder",
    "FlitHeader",
    "FlitPacker",
    "Layout",
    "ProtocolId",
    "ReqCmd",
    "RequestHeader",
    "RespCmd",
    "ResponseHeader",
    "Transaction",
    "byte_roles",
    "crc16",
    "decode_flit",
    "decode_request",
    "decode_response",
    "encode_flit",
    "encode_request",
    "encode_response",
    "flit_sequence",
    "pack_flits",
    "role_totals",
    "unpack_flits",
    "verify_flit",
]
