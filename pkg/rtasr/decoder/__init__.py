from .component import WfstDecoder
from .token_passing import Decoder, Token
from .wfst import Arc, Wfst, dump_wfst, load_wfst, parse_wfst, validate_wfst
from .words import EPSILON, WordTable, format_hypothesis

__all__ = [
    "Arc", "Decoder", "EPSILON", "Token", "Wfst", "WfstDecoder", "WordTable", "dump_wfst",
    "format_hypothesis", "load_wfst", "parse_wfst", "validate_wfst",
]
