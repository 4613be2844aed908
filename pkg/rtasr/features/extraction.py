from enum import Enum
from typing import Optional

import numpy as np

from ..config import FrameConfig, MelConfig
from ..models import FeatureMatrix, FrameBlock
from .framing import condition_frames
from .spectral import SpectralHook, log_spectrogram, mel_fbank, mfcc, power_spectrum, spectral_hook


class FeatureKind(str, Enum):
    SPECTROGRAM = "spectrogram"
    FBANK = "fbank"
    MFCC = "mfcc"


def feature_dims(kind: FeatureKind, mel_cfg: MelConfig) -> int:
    if kind is FeatureKind.SPECTROGRAM:
        return mel_cfg.n_fft // 2 + 1
    if kind is FeatureKind.FBANK:
        return mel_cfg.n_mels
    return mel_cfg.n_ceps


def compute_features(frames: FrameBlock, kind: FeatureKind, frame_cfg: FrameConfig, mel_cfg: MelConfig,
                     hook: Optional[SpectralHook] = None) -> FeatureMatrix:
    '''
    Per-frame features of a block of raw frames; the spectral hook sees the
    magnitude spectrum before any mel filtering
    '''
    conditioned = condition_frames(frames.data, frame_cfg)
    power = power_spectrum(conditioned, mel_cfg.n_fft)
    if hook is not None:
        power = spectral_hook(np.sqrt(power), hook) ** 2
    if kind is FeatureKind.SPECTROGRAM:
        data = log_spectrogram(power)
    else:
        data = mel_fbank(power, mel_cfg, log=True, sample_rate=frame_cfg.sample_rate)
        if kind is FeatureKind.MFCC:
            data = mfcc(data, mel_cfg.n_ceps)
    return FeatureMatrix(data, frames.first_frame_index)
