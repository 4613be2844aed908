from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import ClassVar, Sequence, TypeVar, Union

import numpy as np

from .errors import FeatureError, PipelineError


class PayloadKind(IntEnum):
    '''
    Payload kinds, numbered like the wire `ptype` codes
    '''

    EMPTY = 0
    AUDIO = 1
    FRAMES = 2
    FEATURES = 3
    LOGLIK = 4
    HYPOTHESES = 5


@dataclass(frozen=True)
class Empty:
    kind: ClassVar[PayloadKind] = PayloadKind.EMPTY


@dataclass(eq=False)
class AudioChunk:
    '''
    Raw 16-bit PCM samples of one mono stream
    '''

    samples: np.ndarray
    sample_rate: int
    kind: ClassVar[PayloadKind] = PayloadKind.AUDIO

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AudioChunk):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)


M = TypeVar("M", bound="MatrixPayload")


@dataclass(eq=False)
class MatrixPayload:
    '''
    frames x dims block with the absolute index of its first row
    '''

    data: np.ndarray
    first_frame_index: int = 0
    kind: ClassVar[PayloadKind]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        if data.ndim != 2:
            raise FeatureError(f"{type(self).__name__} needs a 2-D matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise FeatureError(f"{type(self).__name__} holds non-finite values")
        if self.first_frame_index < 0:
            raise FeatureError(f"negative frame index {self.first_frame_index}")
        self.data = data

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]

    @property
    def end_frame_index(self) -> int:
        return self.first_frame_index + self.num_frames

    def __len__(self) -> int:
        return self.num_frames

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (self.first_frame_index == other.first_frame_index
                and np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return (f"<{type(self).__name__} frames={self.num_frames} dims={self.dims} "
                f"first={self.first_frame_index}>")

    @classmethod
    def concat_rows(cls: type[M], blocks: Sequence[M]) -> M:
        '''
        Join consecutive blocks along time; indices must be contiguous
        '''
        blocks = [b for b in blocks if b is not None]
        if not blocks:
            raise FeatureError("nothing to concatenate")
        for prev, nxt in zip(blocks, blocks[1:]):
            if nxt.first_frame_index != prev.end_frame_index:
                raise FeatureError(
                    f"frame index gap: block ends at {prev.end_frame_index}, next starts at {nxt.first_frame_index}"
                )
        if len(blocks) == 1:
            return blocks[0]
        return cls(np.concatenate([b.data for b in blocks], axis=0), blocks[0].first_frame_index)


@dataclass(eq=False, repr=False)
class FrameBlock(MatrixPayload):
    kind: ClassVar[PayloadKind] = PayloadKind.FRAMES


@dataclass(eq=False, repr=False)
class FeatureMatrix(MatrixPayload):
    kind: ClassVar[PayloadKind] = PayloadKind.FEATURES


FeatureBlock = FeatureMatrix


@dataclass(eq=False, repr=False)
class LoglikBlock(MatrixPayload):
    kind: ClassVar[PayloadKind] = PayloadKind.LOGLIK


@dataclass(frozen=True)
class Hypothesis:
    words: tuple[int, ...]
    cost: float
    is_final: bool = True

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(int(w) for w in self.words))
        if any(w < 1 for w in self.words):
            raise ValueError(f"word ids must be >= 1, got {self.words}")
        if not np.isfinite(self.cost):
            raise ValueError(f"hypothesis cost must be finite, got {self.cost}")


@dataclass(frozen=True)
class HypothesisSet:
    hypotheses: tuple[Hypothesis, ...] = ()
    segment: int = 0
    partial: bool = False
    kind: ClassVar[PayloadKind] = PayloadKind.HYPOTHESES

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))

    @property
    def best(self) -> Hypothesis | None:
        return self.hypotheses[0] if self.hypotheses else None


Payload = Union[Empty, AudioChunk, FrameBlock, FeatureMatrix, LoglikBlock, HypothesisSet]

EMPTY = Empty()


@dataclass(frozen=True)
class Packet:
    '''
    Unit of flow between components: one payload plus in-band flags
    '''

    seq: int
    payload: Payload = field(default=EMPTY)
    endpoint: bool = False
    eos: bool = False

    def __post_init__(self):
        if self.seq < 0:
            raise PipelineError(f"negative packet seq {self.seq}")
        if isinstance(self.payload, Empty) and not (self.endpoint or self.eos):
            raise PipelineError("an Empty packet must carry an endpoint or eos flag")

    @property
    def kind(self) -> PayloadKind:
        return self.payload.kind

    @property
    def is_empty(self) -> bool:
        return isinstance(self.payload, Empty)
