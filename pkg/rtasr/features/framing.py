"""
Frame cutting and per-frame conditioning (DC removal, pre-emphasis, window)
"""

from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..config import FrameConfig, Window
from ..errors import FeatureError
from ..models import FrameBlock

PCM_SCALE = 32768.0


def pcm_to_float(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.dtype == np.int16:
        return samples.astype(np.float64) / PCM_SCALE
    return samples.astype(np.float64)


def frame_count(n_samples: int, cfg: FrameConfig) -> int:
    if n_samples < cfg.frame_length:
        return 0
    return (n_samples - cfg.frame_length) // cfg.frame_shift + 1


class FrameCutterStage:
    '''
    Streaming framer: buffers samples and emits every frame whose samples are
    all available. Frame indices are absolute over the whole stream.
    '''

    def __init__(self, cfg: FrameConfig):
        self.cfg = cfg
        self._buffer = np.zeros(0, dtype=np.float64)
        self._next_index = 0
        self._cut_in_segment = 0

    @property
    def next_index(self) -> int:
        return self._next_index

    def accept(self, samples: np.ndarray) -> Optional[FrameBlock]:
        self._buffer = np.concatenate([self._buffer, pcm_to_float(samples)])
        n = frame_count(len(self._buffer), self.cfg)
        if n == 0:
            return None
        frames = sliding_window_view(self._buffer, self.cfg.frame_length)[::self.cfg.frame_shift][:n]
        block = FrameBlock(np.array(frames), self._next_index)
        self._buffer = self._buffer[n * self.cfg.frame_shift:]
        self._next_index += n
        self._cut_in_segment += n
        return block

    def flush(self) -> Optional[FrameBlock]:
        '''
        End of segment: a segment too short for a single frame is zero-padded
        into one frame, otherwise the leftover tail is dropped
        '''
        block = None
        if self._cut_in_segment == 0 and len(self._buffer) > 0:
            frame = np.zeros(self.cfg.frame_length)
            frame[:len(self._buffer)] = self._buffer
            block = FrameBlock(frame.reshape(1, -1), self._next_index)
            self._next_index += 1
        self._buffer = np.zeros(0, dtype=np.float64)
        self._cut_in_segment = 0
        return block


def cut_frames(samples: np.ndarray, cfg: FrameConfig, eos: bool = True) -> FrameBlock:
    '''
    Cut a whole signal into frames at frame_shift hops
    '''
    stage = FrameCutterStage(cfg)
    parts = [stage.accept(samples)]
    if eos:
        parts.append(stage.flush())
    parts = [p for p in parts if p is not None]
    if not parts:
        return FrameBlock(np.zeros((0, cfg.frame_length)), 0)
    return FrameBlock.concat_rows(parts)


@lru_cache(maxsize=32)
def window_function(kind: Window, length: int) -> np.ndarray:
    if kind is Window.HAMMING:
        return np.hamming(length)
    if kind is Window.HANN:
        return np.hanning(length)
    return np.ones(length)


def condition_frames(frames: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    '''
    Remove the DC mean, pre-emphasize and window every row of `frames`
    '''
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[1] != cfg.frame_length:
        raise FeatureError(f"frame length {frames.shape[1]} does not match config {cfg.frame_length}")
    x = frames - frames.mean(axis=1, keepdims=True)
    previous = np.concatenate([x[:, :1], x[:, :-1]], axis=1)
    y = x - cfg.preemphasis * previous
    return y * window_function(cfg.window, cfg.frame_length)


def condition_frame(frame: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    return condition_frames(np.asarray(frame).reshape(1, -1), cfg)[0]
