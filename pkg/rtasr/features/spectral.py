"""
Spectral analysis: power spectrum, mel filter bank, log fBank and MFCC.

Mel scale follows the HTK formula 2595*log10(1 + f/700). Filters are
triangles on the mel axis with centers equally spaced between fmin and fmax.
"""

from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.fft import dct

from ..config import MelConfig
from ..errors import FeatureError

LOG_FLOOR = 1e-10

SpectralHook = Callable[[np.ndarray], np.ndarray]


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def _check_fft_size(n_fft: int) -> None:
    if n_fft <= 0 or n_fft & (n_fft - 1):
        raise FeatureError(f"n_fft must be a power of two, got {n_fft}")


def power_spectrum(frames: np.ndarray, n_fft: int) -> np.ndarray:
    '''
    |DFT_k|^2 for k = 0..n_fft/2 of each frame, zero-padded to n_fft
    '''
    _check_fft_size(n_fft)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] > n_fft:
        raise FeatureError(f"frame of {frames.shape[-1]} samples does not fit n_fft {n_fft}")
    spectrum = np.fft.rfft(frames, n_fft, axis=-1)
    return spectrum.real ** 2 + spectrum.imag ** 2


@lru_cache(maxsize=16)
def mel_filterbank(mel_cfg: MelConfig, sample_rate: int) -> np.ndarray:
    '''
    (n_mels, n_fft/2 + 1) matrix of triangular filter weights
    '''
    fmax = mel_cfg.upper_edge(sample_rate)
    edges = np.linspace(hz_to_mel(mel_cfg.fmin), hz_to_mel(fmax), mel_cfg.n_mels + 2)
    bin_mels = hz_to_mel(np.arange(mel_cfg.n_fft // 2 + 1) * sample_rate / mel_cfg.n_fft)
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_mels - left) / (center - left)
    falling = (right - bin_mels) / (right - center)
    weights = np.clip(np.minimum(rising, falling), 0.0, None)
    weights.setflags(write=False)
    return weights


def mel_fbank(power: np.ndarray, mel_cfg: MelConfig, log: bool = True, sample_rate: int = 16000) -> np.ndarray:
    power = np.asarray(power, dtype=np.float64)
    if power.shape[-1] != mel_cfg.n_fft // 2 + 1:
        raise FeatureError(f"spectrum has {power.shape[-1]} bins, expected {mel_cfg.n_fft // 2 + 1}")
    energies = power @ mel_filterbank(mel_cfg, sample_rate).T
    if log:
        return np.log(np.maximum(energies, LOG_FLOOR))
    return energies


def mfcc(log_fbank: np.ndarray, n_ceps: int) -> np.ndarray:
    '''
    Orthonormal DCT-II of log fBank energies, first n_ceps coefficients
    '''
    log_fbank = np.asarray(log_fbank, dtype=np.float64)
    if n_ceps > log_fbank.shape[-1]:
        raise FeatureError(f"n_ceps {n_ceps} exceeds {log_fbank.shape[-1]} mel filters")
    return dct(log_fbank, type=2, norm="ortho", axis=-1)[..., :n_ceps]


def log_spectrogram(power: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(np.asarray(power, dtype=np.float64), LOG_FLOOR))


def spectral_hook(magnitude: np.ndarray, hook: Optional[SpectralHook]) -> np.ndarray:
    '''
    Run a user transform over a (frames x bins) magnitude block; the hook
    must keep the block's shape
    '''
    if hook is None:
        return magnitude
    result = np.asarray(hook(magnitude), dtype=np.float64)
    if result.shape != magnitude.shape:
        raise FeatureError(f"spectral hook changed block shape {magnitude.shape} -> {result.shape}")
    return result
