import logging
from typing import Optional

from ..config import FrameConfig, MelConfig, VadConfig
from ..features.extraction import FeatureKind, compute_features
from ..models import EMPTY, FrameBlock, Packet, PayloadKind
from ..pipeline import Component
from .detector import EnergyDetector, Predictor
from .silence import SilenceFilter

logger = logging.getLogger(__name__)


class VoiceActivityDetector(Component):
    '''
    Drops long silences from the frame stream and marks endpoints in-band.
    Output frames are renumbered contiguously.
    '''

    input_kind = PayloadKind.FRAMES
    output_kind = PayloadKind.FRAMES

    def __init__(self, cfg: VadConfig = VadConfig(), predictor: Optional[Predictor] = None,
                 feature_kind: Optional[FeatureKind] = None, frame_cfg: FrameConfig = FrameConfig(),
                 mel_cfg: MelConfig = MelConfig(), name: Optional[str] = None):
        super().__init__(name or "vad")
        self.cfg = cfg
        self.predictor = predictor or EnergyDetector(cfg.energy_threshold)
        self.feature_kind = FeatureKind(feature_kind) if feature_kind else None
        self.frame_cfg = frame_cfg
        self.mel_cfg = mel_cfg
        self.filter = SilenceFilter(cfg)
        self.endpoints = 0

    def classify(self, frames: FrameBlock):
        feats = None
        if self.feature_kind is not None:
            feats = compute_features(frames, self.feature_kind, self.frame_cfg, self.mel_cfg).data
        return self.predictor(frames.data, feats)

    def process(self, packet: Packet) -> None:
        if not packet.is_empty:
            outputs, _ = self.filter.push(packet.payload, self.classify(packet.payload))
            for out in outputs:
                if out.endpoint:
                    self.endpoints += 1
                    logger.info(f"{self.name}: endpoint after {self.filter.forwarded} forwarded frames")
                self.emit(out.frames if out.frames is not None else EMPTY, endpoint=out.endpoint)
        if packet.endpoint:
            self.emit(EMPTY, endpoint=True)
        if packet.eos:
            logger.info(f"{self.name}: {self.filter.forwarded} frames forwarded, "
                        f"{self.filter.dropped} dropped, {self.endpoints} endpoints")
