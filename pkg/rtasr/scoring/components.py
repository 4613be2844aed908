import logging
from typing import Callable, Optional

import numpy as np

from ..errors import ScorerError
from ..features.transforms import SpliceStage
from ..models import FeatureMatrix, LoglikBlock, PayloadKind
from ..pipeline import BlockComponent

logger = logging.getLogger(__name__)

Scorer = Callable[[FeatureMatrix], LoglikBlock]


class CallableScorer:
    '''
    Adapts a plain `frames -> logliks` array function, e.g. a network's
    forward pass, to the scorer interface
    '''

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], n_pdfs: Optional[int] = None):
        self.fn = fn
        self.n_pdfs = n_pdfs

    def __call__(self, block: FeatureMatrix) -> LoglikBlock:
        out = np.atleast_2d(np.asarray(self.fn(block.data), dtype=np.float64))
        if out.shape[0] != block.num_frames:
            raise ScorerError(f"acoustic function returned {out.shape[0]} rows for {block.num_frames} frames")
        return LoglikBlock(out, block.first_frame_index)


class AcousticEstimator(BlockComponent):
    '''
    Turns feature blocks into log-likelihood blocks with a pluggable scorer.

    With context, frame t is scored on frames t-left..t+right spliced
    together, so output lags the input by `right_context` frames until the
    next endpoint. Blocks are scored `batch_size` frames at a time.
    '''

    input_kind = PayloadKind.FEATURES
    output_kind = PayloadKind.LOGLIK

    def __init__(self, scorer: Scorer, left_context: int = 0, right_context: int = 0,
                 batch_size: int = 16, name: Optional[str] = None):
        super().__init__(name or "scorer")
        if batch_size < 1:
            raise ScorerError(f"batch_size must be >= 1, got {batch_size}")
        self.scorer = scorer
        self.context = SpliceStage(left_context, right_context) if (left_context or right_context) else None
        self.batch_size = batch_size
        self.n_pdfs: Optional[int] = getattr(scorer, "n_pdfs", None)
        self.scored = 0

    def setup(self) -> None:
        start = getattr(self.scorer, "start", None)
        if callable(start):
            start()
            self.n_pdfs = getattr(self.scorer, "n_pdfs", self.n_pdfs)

    def teardown(self) -> None:
        close = getattr(self.scorer, "close", None)
        if callable(close):
            close()

    def score(self, block: FeatureMatrix) -> LoglikBlock:
        parts = []
        for start in range(0, block.num_frames, self.batch_size):
            batch = FeatureMatrix(block.data[start:start + self.batch_size], block.first_frame_index + start)
            out = self.scorer(batch)
            if out.num_frames != batch.num_frames or out.first_frame_index != batch.first_frame_index:
                raise ScorerError(f"{self.name}: scorer answered frames {out.first_frame_index}.."
                                  f"{out.end_frame_index} for {batch.first_frame_index}..{batch.end_frame_index}")
            if self.n_pdfs is None:
                self.n_pdfs = out.dims
            elif out.dims != self.n_pdfs:
                raise ScorerError(f"{self.name}: scorer returned {out.dims} pdfs, session uses {self.n_pdfs}")
            parts.append(out)
        self.scored += block.num_frames
        return LoglikBlock.concat_rows(parts)

    def _score_some(self, block: Optional[FeatureMatrix]) -> Optional[LoglikBlock]:
        if block is None or block.num_frames == 0:
            return None
        return self.score(block)

    def transform(self, payload: FeatureMatrix) -> Optional[LoglikBlock]:
        if self.context is not None:
            return self._score_some(self.context.accept(payload))
        return self._score_some(payload)

    def flush(self) -> Optional[LoglikBlock]:
        if self.context is None:
            return None
        return self._score_some(self.context.flush())
