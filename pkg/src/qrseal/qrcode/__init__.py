"""QR symbol codec: versions 1-10, byte mode, EC levels L/M/Q/H."""

from .decode import DecodeError, DecodeFailure, FormatInfoError, decode_symbol, read_format_info
from .encode import PayloadTooLarge, QrSymbol, choose_version, encode_symbol, select_mask
from .gf256 import Uncorrectable, rs_correct, rs_encode
from .matrix import penalty_score
from .symfile import SymbolFileError, dump_pbm, dump_symbol, parse_symbol
from .tables import EcLevel, MAX_VERSION, MIN_VERSION, byte_capacity

__all__ = [
    "DecodeError",
    "DecodeFailure",
    "EcLevel",
    "FormatInfoError",
    "MAX_VERSION",
    "MIN_VERSION",
    "PayloadTooLarge",
    "QrSymbol",
    "SymbolFileError",
    "Uncorrectable",
    "byte_capacity",
    "choose_version",
    "decode_symbol",
    "dump_pbm",
    "dump_symbol",
    "encode_symbol",
    "parse_symbol",
    "penalty_score",
    "read_format_info",
    "rs_correct",
    "rs_encode",
    "select_mask",
]
