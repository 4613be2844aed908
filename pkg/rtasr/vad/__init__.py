from .components import VoiceActivityDetector
from .detector import EnergyDetector, Predictor, VadLabel, classify_frame, log_energy
from .silence import SilenceFilter, VadDecision, VadOutput, filter_silence

__all__ = [
    "EnergyDetector", "Predictor", "SilenceFilter", "VadDecision", "VadLabel", "VadOutput",
    "VoiceActivityDetector", "classify_frame", "filter_silence", "log_energy",
]
