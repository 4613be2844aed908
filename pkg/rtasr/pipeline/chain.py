import logging
import threading
import time
from typing import Iterator, Optional, Union

from .. import config
from ..errors import ChainLinkError, ChainStopTimeout, PipelineError
from ..models import Packet
from .component import Component
from .pipe import Pipe, PipeState

logger = logging.getLogger(__name__)


class Chain:
    '''
    Container that links components with pipes, starts them, supervises
    errors and stops them.

        chain = Chain()
        chain.add(recorder).add(cutter).add(extractor)
        output = chain.start()
    '''

    def __init__(self, capacity: int = config.PIPE_CAPACITY,
                 stop_timeout: float = config.STOP_TIMEOUT, name: str = "chain"):
        self.capacity = capacity
        self.stop_timeout = stop_timeout
        self.name = name
        self.components: list[Component] = []
        self.pipes: list[Pipe] = []
        self.input_pipe: Optional[Pipe] = None
        self._linked = False
        self._state = "new"
        self._error: Optional[BaseException] = None
        self._lock = threading.Lock()

    def add(self, component: Component) -> "Chain":
        if self._linked:
            raise ChainLinkError(f"{self.name} is already linked")
        self.components.append(component)
        return self

    @property
    def error(self) -> Optional[BaseException]:
        return self._error

    @property
    def running(self) -> bool:
        return self._state == "running"

    @property
    def output(self) -> Pipe:
        if not self.pipes:
            raise ChainLinkError(f"{self.name} is not linked")
        return self.pipes[-1]

    @property
    def all_pipes(self) -> list[Pipe]:
        head = [self.input_pipe] if self.input_pipe is not None else []
        return head + self.pipes

    def link(self) -> None:
        if self._linked:
            return
        if not self.components:
            raise ChainLinkError(f"{self.name} has no components")
        for k, comp in enumerate(self.components[1:], start=1):
            prev = self.components[k - 1]
            if comp.is_source:
                raise ChainLinkError(f"source {comp.name} can only head the chain (found at position {k})")
            if not comp.accepts(prev.output_kind):
                raise ChainLinkError(
                    f"{prev.name} emits {prev.output_kind.name} packets but "
                    f"{comp.name} expects {comp.describe_input()}"
                )
        head = self.components[0]
        if not head.is_source:
            self.input_pipe = Pipe(self.capacity, name=f"{self.name}:input->{head.name}")
            head.input = self.input_pipe
        for k, comp in enumerate(self.components):
            nxt = self.components[k + 1].name if k + 1 < len(self.components) else "output"
            pipe = Pipe(self.capacity, name=f"{self.name}:{comp.name}->{nxt}")
            comp.output = pipe
            if k + 1 < len(self.components):
                self.components[k + 1].input = pipe
            comp.chain = self
            self.pipes.append(pipe)
        self._linked = True

    def start(self) -> Pipe:
        '''
        Link, initialize and launch every component; returns the output pipe
        '''
        if self._error is not None:
            raise PipelineError(f"{self.name} refused to start: {self._error}")
        if self._state != "new":
            raise PipelineError(f"{self.name} was already started")
        self.link()
        for comp in reversed(self.components):
            try:
                comp.prepare()
            except Exception as e:
                logger.error(f"Component {comp.name} failed to initialize: {e}")
                self.propagate_error(comp, e)
                for other in self.components:
                    if other._ready:
                        other.teardown()
                raise PipelineError(f"{comp.name} failed to initialize: {e}") from e
        logger.info(f"Starting {self.name}: {' -> '.join(c.name for c in self.components)}")
        # consumers first so producers never write into a pipe nobody reads
        for comp in reversed(self.components):
            comp.start()
        self._state = "running"
        return self.output

    def propagate_error(self, origin: Union[int, Component], error: BaseException) -> None:
        '''
        Stall every pipe in the chain with `error`; later calls are no-ops
        '''
        with self._lock:
            if self._error is not None:
                return
            self._error = error
        name = origin.name if isinstance(origin, Component) else self.components[origin].name
        logger.error(f"{self.name}: error at {name} propagated through the chain: {error}")
        for pipe in self.all_pipes:
            pipe.stall(error)
        for comp in self.components:
            comp.request_stop()

    def wait(self, timeout: Optional[float] = None) -> bool:
        '''
        Wait for every component to finish; True when all did
        '''
        deadline = None if timeout is None else time.monotonic() + timeout
        for comp in self.components:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            if not comp.join(remaining):
                return False
        if self._state == "running":
            self._state = "finished"
        return True

    def stop(self, timeout: Optional[float] = None) -> None:
        if self._state != "running":
            return
        self._state = "stopping"
        timeout = self.stop_timeout if timeout is None else timeout
        head = self.components[0]
        if head.is_source:
            head.request_stop()
        else:
            try:
                self.input_pipe.put_eos(timeout)
            except PipelineError as e:
                logger.debug(f"{self.name}: eos not injected: {e}")
        deadline = time.monotonic() + timeout
        stuck = []
        for comp in self.components:
            if not comp.join(max(0.0, deadline - time.monotonic())):
                stuck.append(comp.name)
        self._state = "stopped"
        if stuck:
            raise ChainStopTimeout(f"{self.name}: components failed to stop within {timeout}s: {', '.join(stuck)}")
        logger.info(f"{self.name} stopped")

    def packets(self, timeout: Optional[float] = None) -> Iterator[Packet]:
        '''
        Drain the output pipe until eos; raises the chain error if one occurs
        '''
        out = self.output
        while True:
            try:
                packet = out.get(timeout)
            except PipelineError:
                if out.state is PipeState.STALLED:
                    raise
                return
            yield packet
            if packet.eos:
                return

    def __enter__(self) -> "Chain":
        self.start()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.stop()
