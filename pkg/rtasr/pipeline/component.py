import logging
import threading
from typing import TYPE_CHECKING, ClassVar, FrozenSet, Optional, Sequence, Union

from ..errors import PipelineError
from ..models import EMPTY, Empty, MatrixPayload, Packet, Payload, PayloadKind
from .pipe import Pipe

if TYPE_CHECKING:
    from .chain import Chain

logger = logging.getLogger(__name__)

ANY: FrozenSet[PayloadKind] = frozenset(PayloadKind)

InputKind = Union[None, PayloadKind, FrozenSet[PayloadKind]]


class Component:
    '''
    One concurrent stage of a chain. It reads packets from its input pipe,
    processes them and appends results to its output pipe, all on its own
    thread. Sources (`input_kind = None`) produce packets in `generate`.
    '''

    input_kind: ClassVar[InputKind] = None
    output_kind: ClassVar[PayloadKind] = PayloadKind.EMPTY

    def __init__(self, name: Optional[str] = None):
        self.name = name or type(self).__name__
        self.input: Optional[Pipe] = None
        self.output: Optional[Pipe] = None
        self.chain: Optional["Chain"] = None
        self._seq = 0
        self._eos_sent = False
        self._ready = False
        self._stop_event = threading.Event()
        self._thread: Optional[threading.Thread] = None

    @property
    def is_source(self) -> bool:
        return self.input_kind is None

    def accepts(self, kind: PayloadKind) -> bool:
        if self.input_kind is None:
            return False
        if isinstance(self.input_kind, frozenset):
            return kind in self.input_kind
        return kind == self.input_kind

    def describe_input(self) -> str:
        if self.input_kind is None:
            return "nothing (source)"
        if isinstance(self.input_kind, frozenset):
            return "any" if self.input_kind == ANY else "/".join(k.name for k in sorted(self.input_kind))
        return self.input_kind.name

    @property
    def stopping(self) -> bool:
        return self._stop_event.is_set()

    def request_stop(self) -> None:
        self._stop_event.set()

    def wait_stop(self, seconds: float) -> bool:
        '''
        Sleep that wakes up early when a stop is requested
        '''
        return self._stop_event.wait(seconds)

    # lifecycle hooks

    def setup(self) -> None:
        pass

    def teardown(self) -> None:
        pass

    def generate(self) -> None:
        raise NotImplementedError(f"{self.name} is not a source")

    def process(self, packet: Packet) -> None:
        raise NotImplementedError

    def emit(self, payload: Payload = EMPTY, endpoint: bool = False, eos: bool = False) -> None:
        if isinstance(payload, Empty) and not (endpoint or eos):
            return
        if self._eos_sent:
            raise PipelineError(f"{self.name} already emitted eos")
        self.output.put(Packet(self._seq, payload, endpoint, eos))
        self._seq += 1
        if eos:
            self._eos_sent = True

    def prepare(self) -> None:
        if not self._ready:
            self.setup()
            self._ready = True

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run, name=self.name, daemon=True)
        self._thread.start()

    def join(self, timeout: Optional[float] = None) -> bool:
        if self._thread is None:
            return True
        self._thread.join(timeout)
        return not self._thread.is_alive()

    @property
    def alive(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def _observe_error(self) -> None:
        for pipe in (self.input, self.output):
            if pipe is not None and pipe.error is not None:
                raise PipelineError(f"{self.name} observed chain error: {pipe.error}")

    def run(self) -> None:
        try:
            self.prepare()
            if self.is_source:
                self.generate()
                if not self._eos_sent:
                    self.emit(eos=True)
            else:
                while True:
                    self._observe_error()
                    packet = self.input.get()
                    self.process(packet)
                    if packet.eos:
                        if not self._eos_sent:
                            self.emit(eos=True)
                        break
        except PipelineError as e:
            logger.debug(f"{self.name} leaving: {e}")
        except Exception as e:
            logger.error(f"Component {self.name} failed: {e}")
            if self.chain is not None:
                self.chain.propagate_error(self, e)
            else:
                for pipe in (self.input, self.output):
                    if pipe is not None:
                        pipe.stall(e)
        finally:
            try:
                self.teardown()
            except Exception as e:
                logger.warning(f"Teardown of {self.name} failed: {e}")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class BlockComponent(Component):
    '''
    Component built from a per-payload `transform` and a `flush` that drains
    look-ahead state at endpoints and eos. Flags stay on the packet that
    closes the segment.
    '''

    def transform(self, payload: Payload) -> Optional[Payload]:
        raise NotImplementedError

    def flush(self) -> Optional[Payload]:
        return None

    def process(self, packet: Packet) -> None:
        parts = []
        if not packet.is_empty:
            parts.append(self.transform(packet.payload))
        if packet.endpoint or packet.eos:
            parts.append(self.flush())
        self.emit(merge_payloads(parts), endpoint=packet.endpoint, eos=packet.eos)


def merge_payloads(parts: Sequence[Optional[Payload]]) -> Payload:
    parts = [p for p in parts if p is not None and not isinstance(p, Empty)]
    parts = [p for p in parts if not (isinstance(p, MatrixPayload) and p.num_frames == 0)]
    if not parts:
        return EMPTY
    if len(parts) == 1:
        return parts[0]
    return type(parts[0]).concat_rows(parts)
