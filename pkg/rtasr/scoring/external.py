"""
Scoring in a child process over a line protocol.

The child prints `EKRT-SCORER 1 <n_pdfs>` on start-up. Afterwards it reads
one line of space-separated floats per frame on stdin and answers with one
line of n_pdfs log-likelihoods on stdout, in order.
"""

import logging
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ScorerError
from ..models import FeatureMatrix, LoglikBlock

logger = logging.getLogger(__name__)

HANDSHAKE = "EKRT-SCORER"
PROTOCOL_VERSION = "1"

_EOF = object()


def format_row(row: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in row)


def parse_handshake(line: str) -> int:
    parts = line.split()
    if len(parts) != 3 or parts[0] != HANDSHAKE or parts[1] != PROTOCOL_VERSION:
        raise ScorerError(f"bad scorer handshake {line.strip()!r}, expected '{HANDSHAKE} {PROTOCOL_VERSION} <n_pdfs>'")
    try:
        n_pdfs = int(parts[2])
    except ValueError:
        raise ScorerError(f"bad pdf count in scorer handshake {line.strip()!r}")
    if n_pdfs < 1:
        raise ScorerError(f"scorer announced {n_pdfs} pdfs")
    return n_pdfs


class ExternalScorer:
    '''
    Owns one scorer process; `start` launches it and reads the handshake,
    calling the instance scores a feature block frame by frame
    '''

    def __init__(self, command: Union[str, Sequence[str]], timeout: float = 5.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ScorerError("empty scorer command")
        self.timeout = timeout
        self.n_pdfs: Optional[int] = None
        self._proc: Optional[subprocess.Popen] = None
        self._lines: queue.Queue = queue.Queue()

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _readline(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ScorerError(f"scorer {self.command[0]} gave no answer within {self.timeout}s")
        if line is _EOF:
            code = self._proc.wait(timeout=self.timeout)
            raise ScorerError(f"scorer {self.command[0]} exited with code {code}")
        return line

    def start(self) -> "ExternalScorer":
        try:
            self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                          text=True, bufsize=1)
        except OSError as e:
            raise ScorerError(f"cannot start scorer {self.command}: {e}") from e
        threading.Thread(target=self._pump, name="scorer-reader", daemon=True).start()
        self.n_pdfs = parse_handshake(self._readline())
        logger.info(f"Scorer {' '.join(self.command)} ready with {self.n_pdfs} pdfs")
        return self

    def score_rows(self, x: np.ndarray) -> np.ndarray:
        if self._proc is None:
            raise ScorerError("scorer process not started")
        out = np.empty((x.shape[0], self.n_pdfs))
        for t, row in enumerate(x):
            try:
                self._proc.stdin.write(format_row(row) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as e:
                raise ScorerError(f"scorer {self.command[0]} is gone: {e}") from e
            line = self._readline()
            try:
                values = np.array([float(v) for v in line.split()])
            except ValueError:
                raise ScorerError(f"malformed scorer line {line.strip()[:80]!r}")
            if values.shape != (self.n_pdfs,):
                raise ScorerError(f"scorer returned {values.size} values, expected {self.n_pdfs}")
            out[t] = values
        return out

    def __call__(self, block: FeatureMatrix) -> LoglikBlock:
        return external_score(block, self)

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            logger.warning(f"Scorer {self.command[0]} did not exit, killing it")
            self._proc.kill()
            self._proc.wait()
        self._proc = None


def external_score(block: FeatureMatrix, scorer: ExternalScorer) -> LoglikBlock:
    return LoglikBlock(scorer.score_rows(block.data), block.first_frame_index)
