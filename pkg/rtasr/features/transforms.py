"""
Feature post-processing: deltas, splicing, sliding CMVN, affine transforms
and stream concatenation.

Each transform has a whole-matrix function and a streaming stage. Stages take
FeatureMatrix blocks through `accept`, hold back frames that still need
look-ahead, and release them on `flush` (endpoint or eos) with the boundary
frame replicated.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import FeatureError
from ..matrix_io import read_matrix
from ..models import FeatureMatrix

STD_FLOOR = 1e-8


class Stage:
    def accept(self, block: FeatureMatrix) -> Optional[FeatureMatrix]:
        raise NotImplementedError

    def flush(self) -> Optional[FeatureMatrix]:
        return None

    def reset(self) -> None:
        pass

    def output_dims(self, in_dims: int) -> int:
        return in_dims


def join_blocks(parts: Sequence[Optional[FeatureMatrix]]) -> Optional[FeatureMatrix]:
    parts = [p for p in parts if p is not None and p.num_frames > 0]
    if not parts:
        return None
    return FeatureMatrix.concat_rows(parts)


def context_windows(data: np.ndarray, rows: np.ndarray, left: int, right: int, last: int) -> np.ndarray:
    '''
    (len(rows), left+right+1, dims) windows around `rows`, indices clamped to
    0..last (edge replication)
    '''
    index = rows[:, None] + np.arange(-left, right + 1)[None, :]
    return data[np.clip(index, 0, last)]


class ContextStage(Stage):
    '''
    Base for transforms whose output frame t reads input frames t-left..t+right
    '''

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        self.reset()

    def reset(self) -> None:
        self._buf: Optional[np.ndarray] = None
        self._buf_start = 0      # segment-relative index of self._buf[0]
        self._received = 0
        self._next = 0
        self._origin: Optional[int] = None  # absolute index of the segment's first frame

    def compute(self, windows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def accept(self, block: FeatureMatrix) -> Optional[FeatureMatrix]:
        if block.num_frames == 0:
            return None
        if self._origin is None:
            self._origin = block.first_frame_index
        elif block.first_frame_index != self._origin + self._received:
            raise FeatureError(
                f"{type(self).__name__} expected frame {self._origin + self._received}, got {block.first_frame_index}"
            )
        self._buf = block.data if self._buf is None else np.concatenate([self._buf, block.data])
        self._received += block.num_frames
        return self._release(self._received - self.right)

    def flush(self) -> Optional[FeatureMatrix]:
        out = self._release(self._received)
        self.reset()
        return out

    def _release(self, end: int) -> Optional[FeatureMatrix]:
        if end <= self._next:
            return None
        # left clamping only happens while frame 0 is still buffered (_buf_start == 0)
        rows = np.arange(self._next, end) - self._buf_start
        windows = context_windows(self._buf, rows, self.left, self.right, self._received - 1 - self._buf_start)
        out = FeatureMatrix(self.compute(windows), self._origin + self._next)
        self._next = end
        keep_from = max(0, self._next - self.left)
        if keep_from > self._buf_start:
            self._buf = self._buf[keep_from - self._buf_start:]
            self._buf_start = keep_from
        return out


def delta_kernels(order: int, half_window: int) -> np.ndarray:
    '''
    (order+1, 2*order*half_window+1) filters; row i computes the i-th order
    regression coefficients
    '''
    offsets = np.arange(-half_window, half_window + 1, dtype=np.float64)
    base = offsets / (2.0 * np.sum(np.arange(1, half_window + 1) ** 2))
    width = 2 * order * half_window + 1
    kernels = np.zeros((order + 1, width))
    current = np.array([1.0])
    for i in range(order + 1):
        pad = (width - len(current)) // 2
        kernels[i, pad:pad + len(current)] = current
        current = np.convolve(current, base)
    return kernels


class DeltaStage(ContextStage):
    def __init__(self, order: int = 2, half_window: int = 2):
        if order not in (1, 2):
            raise FeatureError(f"delta order must be 1 or 2, got {order}")
        if half_window < 1:
            raise FeatureError(f"delta half window must be >= 1, got {half_window}")
        self.order = order
        self.half_window = half_window
        self.kernels = delta_kernels(order, half_window)
        context = order * half_window
        super().__init__(context, context)

    def compute(self, windows: np.ndarray) -> np.ndarray:
        return np.concatenate([np.einsum("j,njd->nd", k, windows) for k in self.kernels], axis=1)

    def output_dims(self, in_dims: int) -> int:
        return in_dims * (self.order + 1)


class SpliceStage(ContextStage):
    def compute(self, windows: np.ndarray) -> np.ndarray:
        return windows.reshape(windows.shape[0], -1)

    def output_dims(self, in_dims: int) -> int:
        return in_dims * (self.left + self.right + 1)


class CmvnStage(Stage):
    '''
    Causal sliding CMVN: frame t is normalized with the statistics of the
    trailing window ending at t. History survives endpoints.
    '''

    def __init__(self, window: int = 600, normalize_variance: bool = False):
        if window < 1:
            raise FeatureError(f"CMVN window must be >= 1, got {window}")
        self.window = window
        self.normalize_variance = normalize_variance
        self.reset()

    def reset(self) -> None:
        self._history: Optional[np.ndarray] = None

    def accept(self, block: FeatureMatrix) -> Optional[FeatureMatrix]:
        if block.num_frames == 0:
            return None
        history = self._history if self._history is not None else block.data[:0]
        data = np.concatenate([history, block.data])
        offset = len(history)
        out = np.empty_like(block.data)
        for i in range(block.num_frames):
            end = offset + i + 1
            win = data[max(0, end - self.window):end]
            mean = win.mean(axis=0)
            out[i] = data[end - 1] - mean
            if self.normalize_variance:
                out[i] /= np.maximum(win.std(axis=0), STD_FLOOR)
        keep = self.window - 1
        self._history = data[max(0, len(data) - keep):] if keep else data[:0]
        return FeatureMatrix(out, block.first_frame_index)


@dataclass
class AffineTransform:
    matrix: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
            if len(self.bias) != self.out_dims:
                raise FeatureError(f"bias has {len(self.bias)} values for {self.out_dims} outputs")

    @property
    def in_dims(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dims(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def load(cls, path: Union[str, Path], in_dims: Optional[int] = None) -> "AffineTransform":
        '''
        Read a text matrix; one extra trailing column is taken as the bias
        '''
        m = read_matrix(path)
        if in_dims is not None and m.shape[1] == in_dims + 1:
            return cls(m[:, :-1], m[:, -1])
        return cls(m)


def apply_affine(feats: FeatureMatrix, t: AffineTransform) -> FeatureMatrix:
    if feats.dims != t.in_dims:
        raise FeatureError(f"affine transform expects {t.in_dims} dims, features have {feats.dims}")
    out = feats.data @ t.matrix.T
    if t.bias is not None:
        out = out + t.bias
    return FeatureMatrix(out, feats.first_frame_index)


class AffineStage(Stage):
    def __init__(self, transform: AffineTransform):
        self.transform = transform

    def accept(self, block: FeatureMatrix) -> Optional[FeatureMatrix]:
        return apply_affine(block, self.transform)

    def output_dims(self, in_dims: int) -> int:
        if in_dims != self.transform.in_dims:
            raise FeatureError(f"affine transform expects {self.transform.in_dims} dims, stream has {in_dims}")
        return self.transform.out_dims


class StageStack(Stage):
    '''
    Several stages run back to back, flushed in order
    '''

    def __init__(self, stages: Sequence[Stage]):
        self.stages = list(stages)

    def accept(self, block: FeatureMatrix) -> Optional[FeatureMatrix]:
        for stage in self.stages:
            if block is None:
                return None
            block = stage.accept(block)
        return block

    def flush(self) -> Optional[FeatureMatrix]:
        carry = None
        for stage in self.stages:
            parts = [stage.accept(carry) if carry is not None else None, stage.flush()]
            carry = join_blocks(parts)
        return carry

    def reset(self) -> None:
        for stage in self.stages:
            stage.reset()

    def output_dims(self, in_dims: int) -> int:
        for stage in self.stages:
            in_dims = stage.output_dims(in_dims)
        return in_dims


def _offline(stage: Stage, feats: FeatureMatrix) -> FeatureMatrix:
    out = join_blocks([stage.accept(feats), stage.flush()])
    if out is None:
        return FeatureMatrix(np.zeros((0, stage.output_dims(feats.dims))), feats.first_frame_index)
    return out


def add_deltas(feats: FeatureMatrix, order: int = 2, half_window: int = 2) -> FeatureMatrix:
    return _offline(DeltaStage(order, half_window), feats)


def splice(feats: FeatureMatrix, left: int, right: int) -> FeatureMatrix:
    if left == 0 and right == 0:
        return feats
    return _offline(SpliceStage(left, right), feats)


def sliding_cmvn(feats: FeatureMatrix, window: int = 600, normalize_variance: bool = False) -> FeatureMatrix:
    return _offline(CmvnStage(window, normalize_variance), feats)


def concat_streams(blocks: Sequence[FeatureMatrix]) -> FeatureMatrix:
    '''
    Row-wise concatenation of streams covering the same frames
    '''
    if not blocks:
        raise FeatureError("no streams to concatenate")
    first = blocks[0]
    for b in blocks[1:]:
        if b.first_frame_index != first.first_frame_index or b.num_frames != first.num_frames:
            raise FeatureError(
                f"stream frames {b.first_frame_index}..{b.end_frame_index} do not align with "
                f"{first.first_frame_index}..{first.end_frame_index}"
            )
    if len(blocks) == 1:
        return first
    return FeatureMatrix(np.concatenate([b.data for b in blocks], axis=1), first.first_frame_index)
