import configparser
import math
import os
from enum import Enum
from pathlib import Path
from typing import Literal, Optional, TypeVar

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

load_dotenv()

LOG_LEVEL = os.getenv("RTASR_LOG_LEVEL", "INFO")
PIPE_CAPACITY = int(os.getenv("RTASR_PIPE_CAPACITY", "32"))  # packets buffered between two components
STOP_TIMEOUT = float(os.getenv("RTASR_STOP_TIMEOUT", "5.0"))  # seconds to join every component on stop
LISTEN_ADDR = os.getenv("RTASR_LISTEN", "0.0.0.0:5050")
HTTP_PORT = os.getenv("RTASR_HTTP_PORT")  # status API is off unless set

ENV_PREFIX = "RTASR_"


class Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Window(str, Enum):
    HAMMING = "hamming"
    HANN = "hann"
    RECTANGULAR = "rectangular"


class FrameConfig(Section):
    sample_rate: int = Field(16000, gt=0)
    frame_length: int = Field(400, gt=0)
    frame_shift: int = Field(160, gt=0)
    preemphasis: float = Field(0.97, ge=0.0, lt=1.0)
    window: Window = Window.HAMMING

    @model_validator(mode="after")
    def _shift_within_length(self):
        if self.frame_shift > self.frame_length:
            raise ValueError(f"frame_shift {self.frame_shift} exceeds frame_length {self.frame_length}")
        return self

    def ms_to_frames(self, ms: float) -> int:
        return int(round(ms * self.sample_rate / 1000.0 / self.frame_shift))


class MelConfig(Section):
    n_fft: int = Field(512, gt=0)
    n_mels: int = Field(24, gt=0)
    fmin: float = Field(20.0, ge=0.0)
    fmax: Optional[float] = None  # None means sample_rate / 2
    n_ceps: int = Field(13, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if self.n_ceps > self.n_mels:
            raise ValueError(f"n_ceps {self.n_ceps} exceeds n_mels {self.n_mels}")
        if self.fmax is not None and self.fmax <= self.fmin:
            raise ValueError(f"fmax {self.fmax} must exceed fmin {self.fmin}")
        return self

    def upper_edge(self, sample_rate: int) -> float:
        nyquist = sample_rate / 2.0
        fmax = nyquist if self.fmax is None else self.fmax
        if fmax > nyquist or self.fmin >= fmax:
            raise ConfigError(f"[mel] band {self.fmin}..{fmax} Hz does not fit a {sample_rate} Hz stream")
        return fmax

    def check_frames(self, frame: FrameConfig) -> None:
        if frame.frame_length > self.n_fft:
            raise ConfigError(f"[mel] n_fft {self.n_fft} is shorter than frame_length {frame.frame_length}")
        self.upper_edge(frame.sample_rate)


class VadConfig(Section):
    energy_threshold: float = -9.0
    keep_silence: int = Field(30, ge=0)
    endpoint_silence: int = Field(50, gt=0)
    hangover: int = Field(10, ge=0)

    @model_validator(mode="after")
    def _check(self):
        if self.endpoint_silence <= self.keep_silence:
            raise ValueError(
                f"endpoint_silence {self.endpoint_silence} must exceed keep_silence {self.keep_silence}"
            )
        if self.hangover > self.keep_silence:
            raise ValueError(f"hangover {self.hangover} exceeds keep_silence {self.keep_silence}")
        return self


class VadSection(Section):
    '''
    The `[vad]` section as written in a chain file, in milliseconds
    '''

    energy_threshold: float = -9.0
    keep_silence_ms: float = Field(300.0, ge=0)
    endpoint_silence_ms: float = Field(500.0, gt=0)
    hangover_ms: float = Field(100.0, ge=0)

    def to_frames(self, frame: FrameConfig) -> VadConfig:
        return VadConfig(
            energy_threshold=self.energy_threshold,
            keep_silence=frame.ms_to_frames(self.keep_silence_ms),
            endpoint_silence=frame.ms_to_frames(self.endpoint_silence_ms),
            hangover=frame.ms_to_frames(self.hangover_ms),
        )


class CmvnConfig(Section):
    window: int = Field(600, ge=1)
    normalize_variance: bool = False


class DeltaConfig(Section):
    order: Literal[1, 2] = 2
    half_window: int = Field(2, ge=1)


class SpliceConfig(Section):
    left: int = Field(0, ge=0)
    right: int = Field(0, ge=0)


class AffineConfig(Section):
    matrix: str


class MixtureConfig(Section):
    streams: str = "mfcc_delta,fbank,lda"
    splice_left: int = Field(3, ge=0)
    splice_right: int = Field(3, ge=0)
    lda_splice: int = Field(4, ge=0)

    @property
    def stream_names(self) -> list[str]:
        return [s.strip() for s in self.streams.split(",") if s.strip()]


class RecorderConfig(Section):
    source: Literal["file", "microphone"] = "file"
    wav: Optional[str] = None
    chunk_ms: float = Field(100.0, gt=0)
    realtime: bool = False


class TransportConfig(Section):
    connect: Optional[str] = None
    listen: str = LISTEN_ADDR
    max_retries: int = Field(3, ge=0)
    ack_timeout: float = Field(5.0, gt=0)
    payload: Literal["audio", "frames", "features", "loglik", "hypotheses"] = "frames"  # kind the receiver emits


class ScorerConfig(Section):
    backend: Literal["gmm", "replay", "external"] = "gmm"
    model: Optional[str] = None
    table: Optional[str] = None
    command: Optional[str] = None
    timeout: float = Field(5.0, gt=0)
    left_context: int = Field(0, ge=0)
    right_context: int = Field(0, ge=0)
    batch_size: int = Field(16, ge=1)


class DecoderConfig(Section):
    beam: float = Field(16.0, gt=0)
    max_active: int = Field(7000, ge=1)
    acoustic_scale: float = 0.1
    nbest: int = Field(10, ge=1)
    nonfinal_penalty: float = Field(math.inf, ge=0)
    partial_every: int = Field(0, ge=0)  # frames between partial results, 0 = off


class DecoderSection(DecoderConfig):
    graph: str
    words: Optional[str] = None


class ChainSection(Section):
    components: str
    capacity: int = Field(PIPE_CAPACITY, ge=1)
    stop_timeout: float = Field(STOP_TIMEOUT, gt=0)

    @property
    def component_names(self) -> list[str]:
        names = [c.strip() for c in self.components.replace("->", ",").split(",")]
        return [n for n in names if n]


S = TypeVar("S", bound=Section)


class ChainConfig:
    '''
    A `[section]` / `key = value` chain file; sections are validated lazily
    against their pydantic model, with `RTASR_<SECTION>_<KEY>` overrides
    '''

    def __init__(self, sections: dict[str, dict[str, str]], path: Optional[Path] = None):
        self.sections = sections
        self.path = path

    @classmethod
    def parse(cls, text: str, path: Optional[Path] = None) -> "ChainConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"unreadable chain config: {e}") from e
        sections = {name: dict(parser.items(name)) for name in parser.sections()}
        return cls(sections, path)

    @classmethod
    def load(cls, path: str | Path) -> "ChainConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read chain config {path}: {e}") from e
        return cls.parse(text, path)

    def has(self, name: str) -> bool:
        return name in self.sections

    def raw(self, name: str) -> dict[str, str]:
        values = dict(self.sections.get(name, {}))
        prefix = f"{ENV_PREFIX}{name.upper()}_"
        for key, value in os.environ.items():
            if key.startswith(prefix):
                values[key[len(prefix):].lower()] = value
        return values

    def section(self, name: str, model: type[S]) -> S:
        values = self.raw(name)
        try:
            return model(**values)
        except ValidationError as e:
            err = e.errors()[0]
            key = ".".join(str(p) for p in err["loc"]) or "<section>"
            raise ConfigError(f"[{name}] {key}: {err['msg']}") from e

    def resolve_path(self, value: str) -> Path:
        '''
        Paths in the file are relative to the file itself
        '''
        p = Path(value)
        if not p.is_absolute() and self.path is not None:
            p = self.path.parent / p
        return p

    def require_file(self, section: str, key: str, value: Optional[str]) -> Path:
        if not value:
            raise ConfigError(f"[{section}] {key}: missing")
        p = self.resolve_path(value)
        if not p.exists():
            raise ConfigError(f"[{section}] {key}: file {p} does not exist")
        return p
