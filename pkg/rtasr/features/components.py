import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..config import FrameConfig, MelConfig
from ..errors import AudioFormatError
from ..models import AudioChunk, FeatureMatrix, FrameBlock, PayloadKind
from ..pipeline import BlockComponent
from .extraction import FeatureKind, compute_features, feature_dims
from .framing import FrameCutterStage
from .spectral import SpectralHook
from .transforms import Stage, StageStack, join_blocks, concat_streams

logger = logging.getLogger(__name__)


class FrameCutter(BlockComponent):
    input_kind = PayloadKind.AUDIO
    output_kind = PayloadKind.FRAMES

    def __init__(self, cfg: FrameConfig = FrameConfig(), name: Optional[str] = None):
        super().__init__(name or "cutter")
        self.cfg = cfg
        self.stage = FrameCutterStage(cfg)

    def transform(self, payload: AudioChunk) -> Optional[FrameBlock]:
        if payload.sample_rate != self.cfg.sample_rate:
            raise AudioFormatError(f"{self.name} expects {self.cfg.sample_rate} Hz audio, got {payload.sample_rate} Hz")
        return self.stage.accept(payload.samples)

    def flush(self) -> Optional[FrameBlock]:
        return self.stage.flush()


class FeatureExtractor(BlockComponent):
    '''
    Spectrogram, fBank or MFCC extractor with an optional spectral hook
    (e.g. a separation model working on magnitude spectra)
    '''

    input_kind = PayloadKind.FRAMES
    output_kind = PayloadKind.FEATURES

    def __init__(self, kind: FeatureKind = FeatureKind.MFCC, frame_cfg: FrameConfig = FrameConfig(),
                 mel_cfg: MelConfig = MelConfig(), hook: Optional[SpectralHook] = None,
                 name: Optional[str] = None):
        super().__init__(name or FeatureKind(kind).value)
        mel_cfg.check_frames(frame_cfg)
        self.kind = FeatureKind(kind)
        self.frame_cfg = frame_cfg
        self.mel_cfg = mel_cfg
        self.hook = hook

    @property
    def dims(self) -> int:
        return feature_dims(self.kind, self.mel_cfg)

    def transform(self, payload: FrameBlock) -> FeatureMatrix:
        return compute_features(payload, self.kind, self.frame_cfg, self.mel_cfg, self.hook)


class FeatureProcessor(BlockComponent):
    '''
    Runs streaming stages (delta, splice, CMVN, affine) over feature blocks.
    Look-ahead stages are flushed at every endpoint.
    '''

    input_kind = PayloadKind.FEATURES
    output_kind = PayloadKind.FEATURES

    def __init__(self, *stages: Stage, name: Optional[str] = None):
        super().__init__(name or "processor")
        self.stack = StageStack(stages)

    def transform(self, payload: FeatureMatrix) -> Optional[FeatureMatrix]:
        return self.stack.accept(payload)

    def flush(self) -> Optional[FeatureMatrix]:
        return self.stack.flush()


@dataclass
class Branch:
    kind: FeatureKind
    stages: Sequence[Stage] = ()
    hook: Optional[SpectralHook] = None
    name: str = ""
    stack: StageStack = field(init=False)
    pending: Optional[FeatureMatrix] = field(init=False, default=None)

    def __post_init__(self):
        self.kind = FeatureKind(self.kind)
        self.stack = StageStack(self.stages)
        self.name = self.name or self.kind.value

    def dims(self, mel_cfg: MelConfig) -> int:
        return self.stack.output_dims(feature_dims(self.kind, mel_cfg))


class MixtureExtractor(BlockComponent):
    '''
    Fan-in of several feature streams computed from the same frames. Each
    branch has its own look-ahead, so outputs are buffered per branch and
    concatenated once every branch has covered the same frames.
    '''

    input_kind = PayloadKind.FRAMES
    output_kind = PayloadKind.FEATURES

    def __init__(self, branches: Sequence[Branch], frame_cfg: FrameConfig = FrameConfig(),
                 mel_cfg: MelConfig = MelConfig(), post: Sequence[Stage] = (), name: Optional[str] = None):
        super().__init__(name or "mixture")
        if not branches:
            raise ValueError("a mixture needs at least one branch")
        mel_cfg.check_frames(frame_cfg)
        self.branches = list(branches)
        self.frame_cfg = frame_cfg
        self.mel_cfg = mel_cfg
        self.post = StageStack(post)
        logger.info(f"Mixture {self.name}: " + " + ".join(
            f"{b.name}({b.dims(mel_cfg)})" for b in self.branches) + f" -> {self.dims} dims")

    @property
    def dims(self) -> int:
        return self.post.output_dims(sum(b.dims(self.mel_cfg) for b in self.branches))

    def _collect(self, branch: Branch, block: Optional[FeatureMatrix]) -> None:
        branch.pending = join_blocks([branch.pending, block])

    def _aligned(self) -> Optional[FeatureMatrix]:
        if any(b.pending is None for b in self.branches):
            return None
        start = self.branches[0].pending.first_frame_index
        end = min(b.pending.end_frame_index for b in self.branches)
        parts = []
        for b in self.branches:
            cut = end - b.pending.first_frame_index
            parts.append(FeatureMatrix(b.pending.data[:cut], start))
            rest = b.pending.data[cut:]
            b.pending = FeatureMatrix(rest, end) if len(rest) else None
        return concat_streams(parts)

    def transform(self, payload: FrameBlock) -> Optional[FeatureMatrix]:
        for b in self.branches:
            feats = compute_features(payload, b.kind, self.frame_cfg, self.mel_cfg, b.hook)
            self._collect(b, b.stack.accept(feats))
        mixed = self._aligned()
        return self.post.accept(mixed) if mixed is not None else None

    def flush(self) -> Optional[FeatureMatrix]:
        for b in self.branches:
            self._collect(b, b.stack.flush())
        mixed = self._aligned()
        tail = self.post.accept(mixed) if mixed is not None else None
        return join_blocks([tail, self.post.flush()])
