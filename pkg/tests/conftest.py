from pathlib import Path
from typing import Optional, Sequence, Union

import pytest

from rtasr.models import EMPTY, Packet, Payload, PayloadKind
from rtasr.pipeline import ANY, BlockComponent, Component, Pipe
from rtasr.toy import make_toy_model

ROOT = Path(__file__).resolve().parent.parent

Item = Union[Payload, tuple[Payload, bool]]


class ListSource(Component):
    '''
    Emits a fixed list of payloads; `(payload, True)` items carry an endpoint
    '''

    def __init__(self, items: Sequence[Item], output_kind: PayloadKind, name: str = "source"):
        super().__init__(name)
        self.output_kind = output_kind
        self.items = [i if isinstance(i, tuple) else (i, False) for i in items]

    def generate(self) -> None:
        for payload, endpoint in self.items:
            if self.stopping:
                break
            self.emit(payload, endpoint=endpoint)


class Identity(BlockComponent):
    input_kind = ANY

    def __init__(self, kind: PayloadKind, name: Optional[str] = None, fail_at: Optional[int] = None):
        super().__init__(name)
        self.output_kind = kind
        self.fail_at = fail_at
        self.seen = 0

    def transform(self, payload):
        self.seen += 1
        if self.fail_at is not None and self.seen == self.fail_at:
            raise RuntimeError(f"{self.name} broke on packet {self.seen}")
        return payload


def drain(pipe: Pipe) -> list[Packet]:
    out = []
    while True:
        packet = pipe.get(timeout=5)
        out.append(packet)
        if packet.eos:
            return out


def payloads(packets: Sequence[Packet]) -> list:
    return [p.payload for p in packets if p.payload is not EMPTY]


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    return make_toy_model(seed=1, n_pdfs=8, n_words=3, out_dir=tmp_path_factory.mktemp("toy"))


@pytest.fixture(scope="module")
def gap_toy(tmp_path_factory):
    return make_toy_model(seed=2, n_pdfs=8, n_words=3, gap_ms=600, out_dir=tmp_path_factory.mktemp("gap"))
