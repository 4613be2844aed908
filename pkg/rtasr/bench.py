"""
Real-time factor and word error rate over a set of WAV files.

RTF is processing wall time divided by audio duration, per file and over
the whole set. A `<wav stem>.txt` next to a WAV is taken as its reference
transcript.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import jiwer

from .audio import WavReplay
from .builder import BuildOptions, build_chain
from .config import ChainConfig
from .decoder import WfstDecoder, WordTable
from .models import HypothesisSet
from .pipeline import Chain

logger = logging.getLogger(__name__)


@dataclass
class Transcription:
    results: list[HypothesisSet]
    words: Optional[WordTable]
    duration: float
    elapsed: float
    endpoints: int = 0

    def segment_text(self, result: HypothesisSet) -> str:
        best = result.best
        if best is None:
            return ""
        return self.words.transcript(best) if self.words else " ".join(str(w) for w in best.words)

    @property
    def text(self) -> str:
        return " ".join(t for t in (self.segment_text(r) for r in self.results) if t)


def collect(chain: Chain) -> tuple[list[HypothesisSet], int]:
    '''
    Run a started chain to eos; returns the final results and the number of
    endpoints seen at the output
    '''
    results, endpoints = [], 0
    for packet in chain.packets():
        if packet.endpoint:
            endpoints += 1
        if isinstance(packet.payload, HypothesisSet) and not packet.payload.partial:
            results.append(packet.payload)
    chain.wait(chain.stop_timeout)
    return results, endpoints


def decode_file(config: ChainConfig, wav: Union[str, Path, None] = None,
                options: Optional[BuildOptions] = None) -> Transcription:
    options = replace(options or BuildOptions(), wav=str(wav) if wav is not None else None)
    chain = build_chain(config, options)
    replays = [c for c in chain.components if isinstance(c, WavReplay)]
    decoders = [c for c in chain.components if isinstance(c, WfstDecoder)]
    started = time.perf_counter()
    chain.start()
    try:
        results, endpoints = collect(chain)
    finally:
        chain.stop()
    elapsed = time.perf_counter() - started
    duration = replays[0].duration if replays else 0.0
    return Transcription(results, decoders[0].words if decoders else None, duration, elapsed, endpoints)


def word_errors(reference: str, hypothesis: str) -> tuple[int, int]:
    '''
    (edit operations, reference words)
    '''
    ref, hyp = reference.split(), hypothesis.split()
    if not ref:
        return len(hyp), 0
    if not hyp:
        return len(ref), len(ref)
    out = jiwer.process_words(" ".join(ref), " ".join(hyp))
    return out.substitutions + out.deletions + out.insertions, len(ref)


@dataclass
class FileResult:
    wav: str
    duration: float
    processing: float
    transcript: str
    reference: Optional[str] = None
    errors: int = 0
    ref_words: int = 0

    @property
    def rtf(self) -> Optional[float]:
        return self.processing / self.duration if self.duration > 0 else None

    @property
    def wer(self) -> Optional[float]:
        if self.reference is None or self.ref_words == 0:
            return None
        return self.errors / self.ref_words


@dataclass
class BenchReport:
    files: list[FileResult] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return sum(f.duration for f in self.files)

    @property
    def processing(self) -> float:
        return sum(f.processing for f in self.files)

    @property
    def rtf(self) -> Optional[float]:
        return self.processing / self.duration if self.duration > 0 else None

    @property
    def wer(self) -> Optional[float]:
        scored = [f for f in self.files if f.reference is not None]
        words = sum(f.ref_words for f in scored)
        return sum(f.errors for f in scored) / words if words else None

    def format(self) -> str:
        def num(v: Optional[float], pct: bool = False) -> str:
            if v is None:
                return "-"
            return f"{100 * v:.2f}%" if pct else f"{v:.3f}"

        rows = [("file", "audio_s", "proc_s", "rtf", "wer")]
        for f in self.files:
            rows.append((Path(f.wav).name, f"{f.duration:.2f}", f"{f.processing:.2f}", num(f.rtf), num(f.wer, True)))
        rows.append(("TOTAL", f"{self.duration:.2f}", f"{self.processing:.2f}", num(self.rtf), num(self.wer, True)))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def reference_for(wav: Path) -> Optional[str]:
    ref = wav.with_suffix(".txt")
    return ref.read_text().strip() if ref.exists() else None


def bench_rtf(config: ChainConfig, wavs: Iterable[Union[str, Path]],
              options: Optional[BuildOptions] = None) -> BenchReport:
    options = replace(options or BuildOptions(), realtime=False)
    report = BenchReport()
    for wav in map(Path, wavs):
        result = decode_file(config, wav, options)
        entry = FileResult(str(wav), result.duration, result.elapsed, result.text, reference_for(wav))
        if entry.reference is not None:
            entry.errors, entry.ref_words = word_errors(entry.reference, entry.transcript)
        logger.info(f"{wav.name}: {result.duration:.2f}s audio in {result.elapsed:.2f}s")
        report.files.append(entry)
    return report


def expand_wavs(paths: Sequence[Union[str, Path]]) -> list[Path]:
    '''
    Directories expand to the WAV files they hold, sorted
    '''
    out = []
    for p in map(Path, paths):
        out.extend(sorted(p.glob("*.wav")) if p.is_dir() else [p])
    return out
