import logging
from typing import Optional

from ..config import DecoderConfig
from ..models import EMPTY, HypothesisSet, LoglikBlock, Packet, PayloadKind
from ..pipeline import Component
from .token_passing import Decoder
from .wfst import Wfst
from .words import WordTable, format_hypothesis

logger = logging.getLogger(__name__)


class WfstDecoder(Component):
    '''
    Decodes log-likelihood blocks and emits the N-best list of a segment
    when an endpoint or eos closes it. Segments without frames produce no
    result. With `partial_every` > 0 a partial 1-best is emitted every that
    many frames.
    '''

    input_kind = PayloadKind.LOGLIK
    output_kind = PayloadKind.HYPOTHESES

    def __init__(self, graph: Wfst, cfg: DecoderConfig = DecoderConfig(),
                 words: Optional[WordTable] = None, name: Optional[str] = None):
        super().__init__(name or "decoder")
        self.graph = graph
        self.cfg = cfg
        self.words = words
        self.decoder = Decoder(graph, cfg)
        self.segment = 0
        self.frames_decoded = 0

    def _decode(self, block: LoglikBlock) -> None:
        for row in block.data:
            self.decoder.advance(row)
            self.frames_decoded += 1
            if self.cfg.partial_every and self.decoder.frame % self.cfg.partial_every == 0:
                self.emit(HypothesisSet((self.decoder.partial_best(),), self.segment, partial=True))

    def _finalize(self, packet: Packet) -> None:
        if self.decoder.frame == 0:
            self.decoder.reset()
            self.emit(EMPTY, endpoint=packet.endpoint, eos=packet.eos)
            return
        frames = self.decoder.frame
        hyps = self.decoder.finalize_nbest(self.cfg.nbest)
        result = HypothesisSet(tuple(hyps), self.segment)
        if result.best is not None:
            logger.info(f"{self.name}: segment {self.segment} ({frames} frames): "
                        f"{format_hypothesis(result.best, self.words)}")
        self.emit(result, endpoint=packet.endpoint, eos=packet.eos)
        self.segment += 1

    def process(self, packet: Packet) -> None:
        if not packet.is_empty:
            self._decode(packet.payload)
        if packet.endpoint or packet.eos:
            self._finalize(packet)
