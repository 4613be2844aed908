"""
Text matrix format: first line `rows cols`, then one line of `cols`
whitespace separated floats per row.
"""

from pathlib import Path
from typing import TextIO, Union

import numpy as np

from .errors import FeatureError


def parse_matrix(text: str) -> np.ndarray:
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise FeatureError("matrix text must start with a `rows cols` line")
    try:
        rows, cols = int(lines[0][0]), int(lines[0][1])
        body = [[float(v) for v in fields] for fields in lines[1:]]
    except ValueError as e:
        raise FeatureError(f"malformed matrix text: {e}") from e
    if len(body) != rows:
        raise FeatureError(f"matrix header says {rows} rows, found {len(body)}")
    for i, row in enumerate(body):
        if len(row) != cols:
            raise FeatureError(f"matrix row {i} has {len(row)} values, expected {cols}")
    return np.array(body, dtype=np.float64).reshape(rows, cols)


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def format_matrix(matrix: np.ndarray) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in matrix)
    return "\n".join(lines) + "\n"


def write_matrix(matrix: np.ndarray, dest: Union[str, Path, TextIO]) -> None:
    text = format_matrix(matrix)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
