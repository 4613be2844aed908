"""
Diagonal-covariance Gaussian mixtures, one mixture per pdf.

Text format: line 1 `n_pdfs dims`, then per pdf a line `n_components`
followed by one line per component: `weight mean[0..D) var[0..D)`.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO, Union

import numpy as np
from scipy.special import logsumexp

from ..errors import ScorerError
from ..models import FeatureMatrix, LoglikBlock

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(eq=False)
class DiagGmmModel:
    weights: list[np.ndarray]    # per pdf: (M,)
    means: list[np.ndarray]      # per pdf: (M, D)
    variances: list[np.ndarray]  # per pdf: (M, D)

    def __post_init__(self):
        if not self.weights:
            raise ScorerError("a GMM model needs at least one pdf")
        if not (len(self.weights) == len(self.means) == len(self.variances)):
            raise ScorerError("weights, means and variances disagree on the number of pdfs")
        dims = None
        for p, (w, mu, var) in enumerate(zip(self.weights, self.means, self.variances)):
            w, mu, var = np.asarray(w, float), np.atleast_2d(np.asarray(mu, float)), np.atleast_2d(np.asarray(var, float))
            if mu.shape != var.shape or mu.shape[0] != len(w):
                raise ScorerError(f"pdf {p}: shapes {w.shape}, {mu.shape}, {var.shape} do not match")
            dims = mu.shape[1] if dims is None else dims
            if mu.shape[1] != dims:
                raise ScorerError(f"pdf {p} has dims {mu.shape[1]}, expected {dims}")
            if abs(w.sum() - 1.0) > 1e-6:
                raise ScorerError(f"pdf {p}: weights sum to {w.sum():.8f}, not 1")
            if np.any(w <= 0):
                raise ScorerError(f"pdf {p}: weights must be positive")
            if np.any(var <= 0):
                raise ScorerError(f"pdf {p}: variances must be positive")
            self.weights[p], self.means[p], self.variances[p] = w, mu, var
        self._pack()

    def _pack(self) -> None:
        # flatten all components so scoring is a single vectorised pass
        self._owner = np.concatenate([np.full(len(w), p) for p, w in enumerate(self.weights)])
        means = np.concatenate(self.means)
        variances = np.concatenate(self.variances)
        self._inv_var = 1.0 / variances
        self._mean_scaled = means * self._inv_var
        self._const = (np.log(np.concatenate(self.weights))
                       - 0.5 * (self.dims * LOG_2PI + np.sum(np.log(variances), axis=1)
                                + np.sum(means * means * self._inv_var, axis=1)))

    @property
    def n_pdfs(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> int:
        return self.means[0].shape[1]

    def component_logliks(self, x: np.ndarray) -> np.ndarray:
        '''
        (T, D) -> (T, total components) weighted log densities
        '''
        return (self._const
                - 0.5 * (x * x) @ self._inv_var.T
                + x @ self._mean_scaled.T)

    def loglik(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dims:
            raise ScorerError(f"features have {x.shape[1]} dims, the GMM expects {self.dims}")
        comp = self.component_logliks(x)
        out = np.empty((x.shape[0], self.n_pdfs))
        for p in range(self.n_pdfs):
            out[:, p] = logsumexp(comp[:, self._owner == p], axis=1)
        return out

    def __call__(self, block: FeatureMatrix) -> LoglikBlock:
        return gmm_score(block, self)


def gmm_score(block: FeatureMatrix, model: DiagGmmModel) -> LoglikBlock:
    return LoglikBlock(model.loglik(block.data), block.first_frame_index)


def parse_gmm(text: str) -> DiagGmmModel:
    lines = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    pos = 0

    def take() -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise ScorerError("GMM text ends early")
        pos += 1
        return lines[pos - 1]

    try:
        head = take()
        n_pdfs, dims = int(head[0]), int(head[1])
        weights, means, variances = [], [], []
        for p in range(n_pdfs):
            n_comp = int(take()[0])
            rows = np.array([[float(v) for v in take()] for _ in range(n_comp)])
            if rows.ndim != 2 or rows.shape[1] != 1 + 2 * dims:
                raise ScorerError(f"pdf {p}: component lines need {1 + 2 * dims} values")
            weights.append(rows[:, 0])
            means.append(rows[:, 1:1 + dims])
            variances.append(rows[:, 1 + dims:])
    except (ValueError, IndexError) as e:
        raise ScorerError(f"malformed GMM text: {e}") from e
    if pos != len(lines):
        raise ScorerError(f"GMM text has {len(lines) - pos} trailing lines")
    return DiagGmmModel(weights, means, variances)


def read_gmm(path: Union[str, Path]) -> DiagGmmModel:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScorerError(f"cannot read GMM model {path}: {e}") from e
    model = parse_gmm(text)
    logger.info(f"Loaded GMM {path}: {model.n_pdfs} pdfs, {model.dims} dims")
    return model


def format_gmm(model: DiagGmmModel) -> str:
    lines = [f"{model.n_pdfs} {model.dims}"]
    for w, mu, var in zip(model.weights, model.means, model.variances):
        lines.append(str(len(w)))
        for m in range(len(w)):
            values = [w[m], *mu[m], *var[m]]
            lines.append(" ".join(repr(float(v)) for v in values))
    return "\n".join(lines) + "\n"


def write_gmm(model: DiagGmmModel, dest: Union[str, Path, TextIO]) -> None:
    text = format_gmm(model)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
