"""
Silence filtering with endpoint marking:

  1. track the current run of silence frames,
  2. forward a run while it is not longer than `keep_silence` and drop the rest,
  3. mark one endpoint when the run reaches `endpoint_silence`.

`hangover` is bounded by `keep_silence`, so the first `hangover` silence frames
after speech are always forwarded. The endpoint counter always counts raw
silence. When the run's forwarded frames already left in an earlier block,
the endpoint comes out on its own with no frames.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..config import VadConfig
from ..models import FrameBlock


@dataclass
class VadDecision:
    labels: np.ndarray            # True for speech, aligned with the input frames
    silence_run: int = 0          # silence frames in the run still open after the block
    kept: Optional[np.ndarray] = None  # True for frames forwarded downstream


@dataclass
class VadOutput:
    frames: Optional[FrameBlock]
    endpoint: bool = False


@dataclass
class SilenceFilter:
    cfg: VadConfig
    silence_run: int = 0
    endpoint_marked: bool = False
    forwarded: int = 0            # next output frame index; output indices are contiguous
    dropped: int = field(default=0)

    def _keep(self) -> bool:
        return self.silence_run <= self.cfg.keep_silence

    def push(self, frames: FrameBlock, labels: Sequence[bool]) -> tuple[list[VadOutput], VadDecision]:
        labels = np.asarray(labels, dtype=bool)
        if len(labels) != frames.num_frames:
            raise ValueError(f"{len(labels)} labels for {frames.num_frames} frames")
        outputs: list[VadOutput] = []
        group: list[np.ndarray] = []
        kept = np.zeros(len(labels), dtype=bool)

        def close(endpoint: bool):
            block = None
            if group:
                block = FrameBlock(np.stack(group), self.forwarded)
                self.forwarded += len(group)
                group.clear()
            if block is not None or endpoint:
                outputs.append(VadOutput(block, endpoint))

        for i, (row, speech) in enumerate(zip(frames.data, labels)):
            if speech:
                self.silence_run = 0
                self.endpoint_marked = False
                group.append(row)
                kept[i] = True
                continue
            self.silence_run += 1
            if self._keep():
                group.append(row)
                kept[i] = True
            else:
                self.dropped += 1
            if self.silence_run >= self.cfg.endpoint_silence and not self.endpoint_marked:
                self.endpoint_marked = True
                close(endpoint=True)
        close(endpoint=False)
        return outputs, VadDecision(labels, self.silence_run, kept)


def filter_silence(frames: FrameBlock, labels: Sequence[bool], cfg: VadConfig) -> list[VadOutput]:
    outputs, _ = SilenceFilter(cfg).push(frames, labels)
    return outputs
