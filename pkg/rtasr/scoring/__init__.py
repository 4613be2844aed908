from .components import AcousticEstimator, CallableScorer, Scorer
from .external import ExternalScorer, external_score, parse_handshake
from .gmm import DiagGmmModel, format_gmm, gmm_score, parse_gmm, read_gmm, write_gmm
from .replay import ReplayTable, replay_score

__all__ = [
    "AcousticEstimator", "CallableScorer", "DiagGmmModel", "ExternalScorer", "ReplayTable", "Scorer",
    "external_score", "format_gmm", "gmm_score", "parse_gmm", "parse_handshake", "read_gmm",
    "replay_score", "write_gmm",
]
