"""
Streaming speech recognition: a chain of concurrent components from audio
capture to N-best decoding, optionally split between a client and a server.
"""

from .config import ChainConfig
from .errors import RtAsrError
from .models import (
    EMPTY,
    AudioChunk,
    FeatureMatrix,
    FrameBlock,
    Hypothesis,
    HypothesisSet,
    LoglikBlock,
    Packet,
    PayloadKind,
)
from .pipeline import Chain, Component

__version__ = "0.1.0"

__all__ = [
    "EMPTY", "AudioChunk", "Chain", "ChainConfig", "Component", "FeatureMatrix", "FrameBlock",
    "Hypothesis", "HypothesisSet", "LoglikBlock", "Packet", "PayloadKind", "RtAsrError",
]
