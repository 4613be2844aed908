"""
Audio sources: WAV file replay (optionally paced to real time) and live
microphone capture. Only 16-bit PCM mono is accepted.
"""

import logging
import time
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np
import soundfile as sf

from .errors import AudioFormatError, ConfigError
from .models import AudioChunk, PayloadKind
from .pipeline import Component

logger = logging.getLogger(__name__)


def read_wav(path: Union[str, Path]) -> tuple[np.ndarray, int]:
    try:
        info = sf.info(str(path))
    except (RuntimeError, OSError) as e:
        raise AudioFormatError(f"cannot read {path}: {e}") from e
    if info.format != "WAV" or info.subtype != "PCM_16":
        raise AudioFormatError(f"{path}: only 16-bit PCM WAV is supported, got {info.format}/{info.subtype}")
    if info.channels != 1:
        raise AudioFormatError(f"{path}: only mono audio is supported, got {info.channels} channels")
    samples, rate = sf.read(str(path), dtype="int16", always_2d=False)
    return samples, rate


def write_wav(path: Union[str, Path], samples: np.ndarray, sample_rate: int) -> None:
    sf.write(str(path), np.asarray(samples, dtype=np.int16), sample_rate, format="WAV", subtype="PCM_16")


def chunk_samples(sample_rate: int, chunk_ms: float) -> int:
    n = int(round(sample_rate * chunk_ms / 1000.0))
    if n < 1:
        raise ConfigError(f"chunk of {chunk_ms} ms holds no sample at {sample_rate} Hz")
    return n


def iter_chunks(samples: np.ndarray, sample_rate: int, chunk_ms: float) -> Iterator[AudioChunk]:
    n = chunk_samples(sample_rate, chunk_ms)
    for start in range(0, len(samples), n):
        yield AudioChunk(samples[start:start + n], sample_rate)


class WavReplay(Component):
    '''
    Streams a WAV file as AudioChunk packets of `chunk_ms`. With `realtime`
    a chunk is released only once its audio would have been recorded.
    '''

    output_kind = PayloadKind.AUDIO

    def __init__(self, wav: Union[str, Path], chunk_ms: float = 100.0, realtime: bool = False,
                 name: Optional[str] = None):
        super().__init__(name or "recorder")
        self.wav = Path(wav)
        self.chunk_ms = chunk_ms
        self.realtime = realtime
        self.samples: Optional[np.ndarray] = None
        self.sample_rate = 0
        self.chunks_sent = 0

    def setup(self) -> None:
        self.samples, self.sample_rate = read_wav(self.wav)
        chunk_samples(self.sample_rate, self.chunk_ms)
        logger.info(f"Replaying {self.wav} ({self.duration:.2f}s, realtime={self.realtime})")

    @property
    def duration(self) -> float:
        if self.samples is None:
            return 0.0
        return len(self.samples) / self.sample_rate

    def generate(self) -> None:
        started = time.monotonic()
        recorded = 0.0
        for chunk in iter_chunks(self.samples, self.sample_rate, self.chunk_ms):
            recorded += chunk.duration
            if self.realtime:
                if self.wait_stop(max(0.0, started + recorded - time.monotonic())):
                    break
            elif self.stopping:
                break
            self.emit(chunk)
            self.chunks_sent += 1


def replay_stream(wav: Union[str, Path], realtime: bool = False, chunk_ms: float = 100.0) -> WavReplay:
    return WavReplay(wav, chunk_ms, realtime)


class MicrophoneRecorder(Component):
    '''
    Live capture through PyAudio; runs until the chain is stopped
    '''

    output_kind = PayloadKind.AUDIO

    def __init__(self, sample_rate: int = 16000, chunk_ms: float = 100.0, name: Optional[str] = None):
        super().__init__(name or "recorder")
        self.sample_rate = sample_rate
        self.frames_per_buffer = chunk_samples(sample_rate, chunk_ms)
        self._audio = None
        self._stream = None

    def setup(self) -> None:
        try:
            import pyaudio
        except ImportError as e:
            raise ConfigError("[recorder] source = microphone needs the pyaudio package") from e
        self._audio = pyaudio.PyAudio()
        self._stream = self._audio.open(format=pyaudio.paInt16, channels=1, rate=self.sample_rate,
                                        input=True, frames_per_buffer=self.frames_per_buffer)
        logger.info(f"Recording from the default microphone at {self.sample_rate} Hz")

    def generate(self) -> None:
        while not self.stopping:
            data = self._stream.read(self.frames_per_buffer, exception_on_overflow=False)
            self.emit(AudioChunk(np.frombuffer(data, dtype=np.int16), self.sample_rate))

    def teardown(self) -> None:
        if self._stream is not None:
            self._stream.stop_stream()
            self._stream.close()
        if self._audio is not None:
            self._audio.terminate()
