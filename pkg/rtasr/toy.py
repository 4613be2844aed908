"""
Self-contained toy recognizer: a word-loop graph, a diagonal GMM, a word
table and a synthetic recording of a known transcript.

Every pdf is a pure tone (pdf 0 is silence) and every word a sequence of
2-3 distinct tones starting on a tone of its own. The GMM is fitted on the
features the default chain computes from the generated audio, so decoding
the WAV with that chain recovers the transcript. Output is deterministic in the seed.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .audio import write_wav
from .config import CmvnConfig, FrameConfig, MelConfig, VadSection
from .decoder import Arc, Wfst, WordTable, dump_wfst
from .features import FeatureKind, compute_features, cut_frames, sliding_cmvn
from .models import FeatureMatrix, FrameBlock
from .scoring import DiagGmmModel, write_gmm
from .vad import EnergyDetector, SilenceFilter

logger = logging.getLogger(__name__)

NAMES = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet",
    "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
    "uniform", "victor", "whiskey", "xray", "yankee", "zulu",
]

AMPLITUDE = 0.3
BASE_HZ = 300.0
STEP_HZ = 350.0
EDGE_MS = 100       # silence before the first and after the last word
WORD_GAP_MS = 100   # silence between words
PDF_MS = (120, 200)
VARIANCE_FLOOR = 0.1
LOOP_COST = -math.log(0.5)
WORD_PENALTY = 5.0  # added to every word entry

CHAIN_TEMPLATE = """\
[chain]
components = recorder -> cutter -> vad -> mfcc -> cmvn -> gmm -> decoder

[recorder]
wav = {wav}
chunk_ms = 100

[scorer]
model = {gmm}

[decoder]
graph = {graph}
words = {words}
nbest = 5
"""


@dataclass
class ToyModel:
    graph: Wfst
    gmm: DiagGmmModel
    words: WordTable
    pronunciations: list[tuple[int, ...]]  # pdf sequence per word id - 1
    transcript: list[str]
    samples: np.ndarray
    sample_rate: int
    segments: list[tuple[int, int]] = field(default_factory=list)  # (pdf, samples)
    paths: dict[str, Path] = field(default_factory=dict)

    @property
    def reference(self) -> str:
        return " ".join(self.transcript)


def tone_hz(pdf: int) -> float:
    return BASE_HZ + pdf * STEP_HZ


def word_names(n_words: int) -> list[str]:
    if n_words <= len(NAMES):
        return NAMES[:n_words]
    return [f"word{i}" for i in range(1, n_words + 1)]


def make_pronunciations(rng: np.random.Generator, n_pdfs: int, n_words: int) -> list[tuple[int, ...]]:
    '''
    Words of 2-3 distinct speech pdfs. While there are enough pdfs every word
    starts on an onset pdf no other word uses anywhere, so one word can never
    borrow the start of the next one in the loop
    '''
    speech = list(range(1, n_pdfs))
    if len(speech) == 1:
        if n_words > 1:
            raise ValueError("one speech pdf only supports a single word")
        return [(1, 1)]
    if n_words < len(speech):
        onsets = [int(p) for p in rng.choice(speech, size=n_words, replace=False)]
        rest = [p for p in speech if p not in onsets]
        words = []
        for onset in onsets:
            length = min(int(rng.integers(2, 4)), len(rest) + 1)
            tail = rng.choice(rest, size=length - 1, replace=False)
            words.append((onset, *(int(p) for p in tail)))
        return words
    s = len(speech)
    available = s * (s - 1) + s * (s - 1) * (s - 2)
    if n_words > available:
        raise ValueError(f"{n_pdfs} pdfs cannot give {n_words} distinct words")
    logger.warning(f"{n_words} words over {s} speech pdfs: onset pdfs are shared between words")
    chosen: list[tuple[int, ...]] = []
    while len(chosen) < n_words:
        length = int(rng.integers(2, 4))
        seq = [int(rng.choice(speech))]
        while len(seq) < length:
            nxt = int(rng.choice(speech))
            if nxt not in seq:
                seq.append(nxt)
            elif len(speech) < length:
                break
        seq = tuple(seq)
        if len(seq) >= 2 and seq not in chosen:
            chosen.append(seq)
    return chosen


def word_loop(pronunciations: list[tuple[int, ...]]) -> Wfst:
    '''
    State 0 is start and final with a silence self-loop; word w enters its
    first pdf state from 0 emitting the word, and returns to 0 by epsilon.
    Entering a word costs ln(n_words) plus WORD_PENALTY
    '''
    n_words = len(pronunciations)
    enter = math.log(n_words) + WORD_PENALTY
    arcs: list[Arc] = [Arc(0, 0, 1, 0, 0.0)]
    n_states = 1
    for w, seq in enumerate(pronunciations, start=1):
        states = list(range(n_states, n_states + len(seq)))
        n_states += len(seq)
        arcs.append(Arc(0, states[0], seq[0] + 1, w, enter))
        for k, (state, pdf) in enumerate(zip(states, seq)):
            arcs.append(Arc(state, state, pdf + 1, 0, LOOP_COST))
            if k + 1 < len(seq):
                arcs.append(Arc(state, states[k + 1], seq[k + 1] + 1, 0, LOOP_COST))
        arcs.append(Arc(states[-1], 0, 0, 0, 0.0))
    per_state: list[list[Arc]] = [[] for _ in range(n_states)]
    for arc in arcs:
        per_state[arc.src].append(arc)
    return Wfst(n_states, 0, per_state, {0: 0.0})


def synthesize(segments: list[tuple[int, int]], sample_rate: int) -> np.ndarray:
    parts = []
    for pdf, n in segments:
        if pdf == 0:
            parts.append(np.zeros(n))
        else:
            t = np.arange(n) / sample_rate
            parts.append(AMPLITUDE * np.sin(2.0 * np.pi * tone_hz(pdf) * t))
    signal = np.concatenate(parts) if parts else np.zeros(0)
    return np.round(signal * 32767.0).astype(np.int16)


def chain_features(samples: np.ndarray, frame_cfg: FrameConfig, mel_cfg: MelConfig,
                   vad_section: VadSection, cmvn_cfg: CmvnConfig) -> tuple[FeatureMatrix, np.ndarray]:
    '''
    Offline twin of cutter -> vad -> mfcc -> cmvn; also returns the original
    index of every kept frame
    '''
    frames = cut_frames(samples, frame_cfg)
    vad_cfg = vad_section.to_frames(frame_cfg)
    labels = EnergyDetector(vad_cfg.energy_threshold)(frames.data)
    _, decision = SilenceFilter(vad_cfg).push(frames, labels)
    kept = np.flatnonzero(decision.kept)
    mfcc = compute_features(FrameBlock(frames.data[kept]), FeatureKind.MFCC, frame_cfg, mel_cfg)
    return sliding_cmvn(mfcc, cmvn_cfg.window, cmvn_cfg.normalize_variance), kept


def frame_pdfs(segments: list[tuple[int, int]], frame_cfg: FrameConfig, n_frames: int) -> np.ndarray:
    '''
    pdf of every frame lying inside a single segment, -1 for frames that
    straddle two segments
    '''
    owner = np.concatenate([np.full(n, k) for k, (_, n) in enumerate(segments)])
    pdf_of = np.array([pdf for pdf, _ in segments])
    out = np.full(n_frames, -1)
    for i in range(n_frames):
        start = i * frame_cfg.frame_shift
        end = start + frame_cfg.frame_length - 1
        if end < len(owner) and owner[start] == owner[end]:
            out[i] = pdf_of[owner[start]]
    return out


def fit_gmm(feats: np.ndarray, pdfs: np.ndarray, n_pdfs: int) -> DiagGmmModel:
    global_mean = feats.mean(axis=0)
    floor = VARIANCE_FLOOR * np.maximum(feats.var(axis=0), 1e-12)
    means, variances = [], []
    for p in range(n_pdfs):
        rows = feats[pdfs == p]
        if len(rows) == 0:
            means.append(global_mean[None, :])
            variances.append(feats.var(axis=0)[None, :] + floor)
            continue
        means.append(rows.mean(axis=0)[None, :])
        variances.append(np.maximum(rows.var(axis=0), floor)[None, :])
    return DiagGmmModel([np.ones(1) for _ in range(n_pdfs)], means, variances)


def make_toy_model(seed: int = 1, n_pdfs: int = 8, n_words: int = 3, gap_ms: float = 0.0,
                   min_seconds: float = 0.0, out_dir: Optional[Union[str, Path]] = None,
                   frame_cfg: FrameConfig = FrameConfig(), mel_cfg: MelConfig = MelConfig()) -> ToyModel:
    '''
    `gap_ms` > 0 puts one long silence in the middle of the transcript;
    `min_seconds` keeps adding words until the audio is at least that long
    '''
    if n_pdfs < 2 or n_words < 1:
        raise ValueError(f"need n_pdfs >= 2 and n_words >= 1, got {n_pdfs} and {n_words}")
    if tone_hz(n_pdfs - 1) >= 0.475 * frame_cfg.sample_rate:
        raise ValueError(f"{n_pdfs} pdfs need tones above the usable band of {frame_cfg.sample_rate} Hz audio")
    rng = np.random.default_rng(seed)
    sr = frame_cfg.sample_rate
    pronunciations = make_pronunciations(rng, n_pdfs, n_words)
    words = WordTable.from_words(word_names(n_words))

    order = [int(w) for w in rng.permutation(n_words)]
    order += [int(w) for w in rng.integers(0, n_words, size=int(rng.integers(1, 3)))]

    def ms(n: float) -> int:
        return int(round(n * sr / 1000.0))

    transcript: list[int] = []
    segments: list[tuple[int, int]] = []

    def add_word(w: int) -> None:
        if transcript:
            segments.append((0, ms(WORD_GAP_MS)))
        for pdf in pronunciations[w]:
            segments.append((pdf, ms(int(rng.integers(PDF_MS[0], PDF_MS[1] + 1)))))
        transcript.append(w)

    segments.append((0, ms(EDGE_MS)))
    for k, w in enumerate(order):
        if gap_ms > 0 and k == len(order) // 2:
            segments.append((0, ms(gap_ms)))
        add_word(w)
    while sum(n for _, n in segments) < min_seconds * sr:
        add_word(int(rng.integers(0, n_words)))
    segments.append((0, ms(EDGE_MS)))
    samples = synthesize(segments, sr)

    feats, kept = chain_features(samples, frame_cfg, mel_cfg, VadSection(), CmvnConfig())
    all_pdfs = frame_pdfs(segments, frame_cfg, len(cut_frames(samples, frame_cfg)))
    gmm = fit_gmm(feats.data, all_pdfs[kept], n_pdfs)

    toy = ToyModel(word_loop(pronunciations), gmm, words, pronunciations,
                   [words.word(w + 1) for w in transcript], samples, sr, segments)
    logger.info(f"Toy model seed={seed}: {n_pdfs} pdfs, {n_words} words, "
                f"{len(samples) / sr:.2f}s of audio for '{toy.reference}'")
    if out_dir is not None:
        write_toy_model(toy, out_dir)
    return toy


def write_toy_model(toy: ToyModel, out_dir: Union[str, Path]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "graph": out / "graph.fst",
        "gmm": out / "gmm.txt",
        "words": out / "words.txt",
        "wav": out / "toy.wav",
        "reference": out / "toy.txt",
        "config": out / "chain.conf",
    }
    dump_wfst(toy.graph, paths["graph"])
    write_gmm(toy.gmm, paths["gmm"])
    toy.words.write(paths["words"])
    write_wav(paths["wav"], toy.samples, toy.sample_rate)
    paths["reference"].write_text(toy.reference + "\n")
    paths["config"].write_text(CHAIN_TEMPLATE.format(
        wav=paths["wav"].name, gmm=paths["gmm"].name, graph=paths["graph"].name, words=paths["words"].name))
    toy.paths = paths
    return paths
