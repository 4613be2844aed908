from pathlib import Path
from typing import Union

import numpy as np

from ..errors import ScorerError
from ..matrix_io import read_matrix
from ..models import FeatureMatrix, LoglikBlock


class ReplayTable:
    '''
    Precomputed log-likelihood rows served by frame index, for tests and
    for scores produced offline
    '''

    def __init__(self, table: Union[np.ndarray, LoglikBlock]):
        data = table.data if isinstance(table, LoglikBlock) else np.asarray(table, dtype=np.float64)
        self.table = LoglikBlock(data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ReplayTable":
        return cls(read_matrix(path))

    @property
    def n_pdfs(self) -> int:
        return self.table.dims

    def __len__(self) -> int:
        return self.table.num_frames

    def rows(self, first: int, count: int) -> np.ndarray:
        last = first + count - 1
        if count and last >= len(self):
            raise ScorerError(f"replay table has {len(self)} rows, frame {max(first, len(self))} is missing")
        return self.table.data[first:first + count]

    def __call__(self, block: FeatureMatrix) -> LoglikBlock:
        return replay_score(block, self)


def replay_score(block: FeatureMatrix, table: ReplayTable) -> LoglikBlock:
    return LoglikBlock(table.rows(block.first_frame_index, block.num_frames), block.first_frame_index)
