"""
Chain assembly from a chain config file.

    [chain]
    components = recorder -> cutter -> vad -> mfcc -> cmvn -> gmm -> decoder

Every name in `components` maps to a factory reading its own section.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

from .audio import MicrophoneRecorder, WavReplay
from .config import (
    AffineConfig,
    ChainConfig,
    ChainSection,
    CmvnConfig,
    DecoderConfig,
    DecoderSection,
    DeltaConfig,
    FrameConfig,
    MelConfig,
    MixtureConfig,
    RecorderConfig,
    ScorerConfig,
    SpliceConfig,
    TransportConfig,
    VadSection,
)
from .decoder import WfstDecoder, WordTable, load_wfst
from .errors import ConfigError
from .features import (
    AffineStage,
    AffineTransform,
    Branch,
    CmvnStage,
    DeltaStage,
    FeatureExtractor,
    FeatureKind,
    FeatureProcessor,
    FrameCutter,
    MixtureExtractor,
    SpliceStage,
)
from .models import PayloadKind
from .pipeline import Chain, Component
from .scoring import AcousticEstimator, ExternalScorer, ReplayTable, read_gmm
from .transport import PacketReceiver, PacketSender
from .vad import VoiceActivityDetector

logger = logging.getLogger(__name__)


@dataclass
class BuildOptions:
    '''
    Command-line values that win over the config file
    '''

    wav: Optional[str] = None
    realtime: Optional[bool] = None
    connect: Optional[str] = None
    listen: Optional[str] = None
    nbest: Optional[int] = None


class ChainBuilder:
    def __init__(self, config: ChainConfig, options: Optional[BuildOptions] = None):
        self.config = config
        self.options = options or BuildOptions()
        self.frame = config.section("frame", FrameConfig)
        self.mel = config.section("mel", MelConfig)
        self.factories: dict[str, Callable[[], Component]] = {
            "recorder": self.recorder,
            "replay": self.replay,
            "microphone": self.microphone,
            "cutter": self.cutter,
            "vad": self.vad,
            "spectrogram": lambda: self.extractor(FeatureKind.SPECTROGRAM),
            "fbank": lambda: self.extractor(FeatureKind.FBANK),
            "mfcc": lambda: self.extractor(FeatureKind.MFCC),
            "delta": self.delta,
            "splice": self.splice,
            "cmvn": self.cmvn,
            "lda": self.affine,
            "affine": self.affine,
            "mixture": self.mixture,
            "scorer": self.scorer,
            "gmm": lambda: self.scorer("gmm"),
            "replay_scorer": lambda: self.scorer("replay"),
            "external_scorer": lambda: self.scorer("external"),
            "decoder": self.decoder,
            "sender": self.sender,
            "receiver": self.receiver,
        }

    # sources

    def recorder(self) -> Component:
        cfg = self.config.section("recorder", RecorderConfig)
        if cfg.source == "microphone" and self.options.wav is None:
            return MicrophoneRecorder(self.frame.sample_rate, cfg.chunk_ms)
        return self._wav_replay(cfg)

    def replay(self) -> Component:
        return self._wav_replay(self.config.section("recorder", RecorderConfig))

    def microphone(self) -> Component:
        cfg = self.config.section("recorder", RecorderConfig)
        return MicrophoneRecorder(self.frame.sample_rate, cfg.chunk_ms)

    def _wav_replay(self, cfg: RecorderConfig) -> WavReplay:
        if self.options.wav is not None:
            wav = self.options.wav
        else:
            wav = self.config.require_file("recorder", "wav", cfg.wav)
        realtime = cfg.realtime if self.options.realtime is None else self.options.realtime
        return WavReplay(wav, cfg.chunk_ms, realtime)

    def receiver(self) -> Component:
        cfg = self.config.section("transport", TransportConfig)
        listen = self.options.listen or cfg.listen
        return PacketReceiver(PayloadKind[cfg.payload.upper()], listen=listen)

    # features

    def cutter(self) -> Component:
        return FrameCutter(self.frame)

    def vad(self) -> Component:
        section = self.config.section("vad", VadSection)
        try:
            cfg = section.to_frames(self.frame)
        except ValueError as e:
            raise ConfigError(f"[vad] {e}") from e
        return VoiceActivityDetector(cfg)

    def extractor(self, kind: FeatureKind) -> Component:
        return FeatureExtractor(kind, self.frame, self.mel)

    def delta(self) -> Component:
        cfg = self.config.section("delta", DeltaConfig)
        return FeatureProcessor(DeltaStage(cfg.order, cfg.half_window), name="delta")

    def splice(self) -> Component:
        cfg = self.config.section("splice", SpliceConfig)
        return FeatureProcessor(SpliceStage(cfg.left, cfg.right), name="splice")

    def cmvn(self) -> Component:
        cfg = self.config.section("cmvn", CmvnConfig)
        return FeatureProcessor(CmvnStage(cfg.window, cfg.normalize_variance), name="cmvn")

    def _affine_transform(self, in_dims: Optional[int] = None) -> AffineTransform:
        if not self.config.has("affine"):
            raise ConfigError("[affine] matrix: missing")
        cfg = self.config.section("affine", AffineConfig)
        path = self.config.require_file("affine", "matrix", cfg.matrix)
        return AffineTransform.load(path, in_dims)

    def affine(self) -> Component:
        return FeatureProcessor(AffineStage(self._affine_transform()), name="lda")

    def mixture(self) -> Component:
        cfg = self.config.section("mixture", MixtureConfig)
        branches = []
        for stream in cfg.stream_names:
            if stream in ("mfcc", "fbank", "spectrogram"):
                branches.append(Branch(FeatureKind(stream)))
            elif stream == "mfcc_delta":
                branches.append(Branch(FeatureKind.MFCC, [DeltaStage(2, 2)], name="mfcc_delta"))
            elif stream == "lda":
                spliced = self.mel.n_ceps * (2 * cfg.lda_splice + 1)
                transform = self._affine_transform(spliced)
                branches.append(Branch(FeatureKind.MFCC, [SpliceStage(cfg.lda_splice, cfg.lda_splice),
                                                          AffineStage(transform)], name="lda"))
            else:
                raise ConfigError(f"[mixture] streams: unknown stream {stream!r}")
        if not branches:
            raise ConfigError("[mixture] streams: empty")
        post = [SpliceStage(cfg.splice_left, cfg.splice_right)] if (cfg.splice_left or cfg.splice_right) else []
        return MixtureExtractor(branches, self.frame, self.mel, post)

    # scoring and decoding

    def scorer(self, backend: Optional[str] = None) -> Component:
        cfg = self.config.section("scorer", ScorerConfig)
        backend = backend or cfg.backend
        if backend == "gmm":
            model = read_gmm(self.config.require_file("scorer", "model", cfg.model))
        elif backend == "replay":
            model = ReplayTable.load(self.config.require_file("scorer", "table", cfg.table))
        else:
            if not cfg.command:
                raise ConfigError("[scorer] command: missing")
            model = ExternalScorer(cfg.command, cfg.timeout)
        return AcousticEstimator(model, cfg.left_context, cfg.right_context, cfg.batch_size,
                                 name=f"{backend}-scorer")

    def decoder(self) -> Component:
        section = self.config.section("decoder", DecoderSection)
        values = section.model_dump(exclude={"graph", "words"})
        if self.options.nbest is not None:
            values["nbest"] = self.options.nbest
        cfg = DecoderConfig(**values)
        graph = load_wfst(self.config.require_file("decoder", "graph", section.graph))
        words = None
        if section.words:
            words = WordTable.load(self.config.require_file("decoder", "words", section.words))
        return WfstDecoder(graph, cfg, words)

    def sender(self) -> Component:
        cfg = self.config.section("transport", TransportConfig)
        address = self.options.connect or cfg.connect
        if not address:
            raise ConfigError("[transport] connect: missing")
        return PacketSender(address, max_retries=cfg.max_retries, ack_timeout=cfg.ack_timeout)

    # assembly

    def component(self, name: str) -> Component:
        factory = self.factories.get(name)
        if factory is None:
            raise ConfigError(f"[chain] components: unknown component {name!r}")
        return factory()

    def build(self, names: Optional[list[str]] = None) -> Chain:
        if not self.config.has("chain"):
            raise ConfigError("[chain] components: missing")
        section = self.config.section("chain", ChainSection)
        names = names if names is not None else section.component_names
        if not names:
            raise ConfigError("[chain] components: empty")
        chain = Chain(section.capacity, section.stop_timeout)
        for name in names:
            chain.add(self.component(name))
        chain.link()
        logger.info(f"Built chain: {' -> '.join(names)}")
        return chain


def build_chain(config: ChainConfig, options: Optional[BuildOptions] = None,
                components: Optional[list[str]] = None) -> Chain:
    '''
    Instantiate and link the chain a config describes; `components`
    replaces the `[chain] components` list
    '''
    return ChainBuilder(config, options).build(components)
