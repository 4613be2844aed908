"""
Frame-level speech/silence classification.

The default detector thresholds log-energy of the raw samples. Any callable
with the `Predictor` signature can replace it, optionally fed with acoustic
features of the same frames (e.g. a neural VAD).
"""

from enum import IntEnum
from typing import Optional, Protocol

import numpy as np

ENERGY_EPS = 1e-12


class VadLabel(IntEnum):
    SILENCE = 0
    SPEECH = 1


class Predictor(Protocol):
    def __call__(self, frames: np.ndarray, features: Optional[np.ndarray] = None) -> np.ndarray:
        '''
        Returns one boolean per frame, True for speech
        '''
        ...


def log_energy(frames: np.ndarray) -> np.ndarray:
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    return np.log(ENERGY_EPS + np.mean(frames ** 2, axis=1))


class EnergyDetector:
    def __init__(self, threshold: float = -9.0):
        self.threshold = threshold

    def __call__(self, frames: np.ndarray, features: Optional[np.ndarray] = None) -> np.ndarray:
        return log_energy(frames) > self.threshold


def classify_frame(frame: np.ndarray, threshold: float = -9.0, predictor: Optional[Predictor] = None,
                   features: Optional[np.ndarray] = None) -> VadLabel:
    predictor = predictor or EnergyDetector(threshold)
    frame = np.asarray(frame, dtype=np.float64).reshape(1, -1)
    feats = None if features is None else np.asarray(features).reshape(1, -1)
    return VadLabel.SPEECH if bool(predictor(frame, feats)[0]) else VadLabel.SILENCE
