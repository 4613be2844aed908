import logging
import threading
import time
from collections import deque
from enum import Enum
from typing import Optional

from ..errors import PipelineError, PipeStalledError, PipeTerminatedError, PipeTimeoutError
from ..models import Packet

logger = logging.getLogger(__name__)


class PipeState(str, Enum):
    ACTIVE = "active"
    STALLED = "stalled"
    TERMINATED = "terminated"


class Pipe:
    '''
    Bounded single-producer/single-consumer FIFO between two components.

    Full pipes block the producer; empty pipes block the consumer. An eos
    packet terminates the pipe for writers, buffered packets stay readable.
    '''

    def __init__(self, capacity: int = 32, name: str = "pipe"):
        if capacity < 1:
            raise ValueError(f"pipe capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.name = name
        self._buffer: deque[Packet] = deque()
        self._state = PipeState.ACTIVE
        self._error: Optional[BaseException] = None
        self._last_seq: Optional[int] = None
        self._cond = threading.Condition()

    @property
    def state(self) -> PipeState:
        return self._state

    @property
    def error(self) -> Optional[BaseException]:
        return self._error

    def __len__(self) -> int:
        with self._cond:
            return len(self._buffer)

    def _raise_closed(self):
        if self._state is PipeState.STALLED:
            raise PipeStalledError(self._error)
        raise PipeTerminatedError(f"{self.name} is terminated")

    def put(self, packet: Packet, timeout: Optional[float] = None) -> None:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            if self._state is not PipeState.ACTIVE:
                self._raise_closed()
            if self._last_seq is not None and packet.seq <= self._last_seq:
                raise PipelineError(f"{self.name}: seq {packet.seq} does not follow {self._last_seq}")
            while len(self._buffer) >= self.capacity:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise PipeTimeoutError(f"{self.name}: put timed out")
                self._cond.wait(remaining)
                if self._state is not PipeState.ACTIVE:
                    self._raise_closed()
            self._buffer.append(packet)
            self._last_seq = packet.seq
            if packet.eos:
                self._state = PipeState.TERMINATED
            self._cond.notify_all()

    def get(self, timeout: Optional[float] = None) -> Packet:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._buffer:
                if self._state is not PipeState.ACTIVE:
                    self._raise_closed()
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise PipeTimeoutError(f"{self.name}: get timed out")
                self._cond.wait(remaining)
            packet = self._buffer.popleft()
            self._cond.notify_all()
            return packet

    def put_eos(self, timeout: Optional[float] = None) -> bool:
        '''
        Close the pipe from outside the producer; False when it is already closed
        '''
        with self._cond:
            if self._state is not PipeState.ACTIVE:
                return False
            seq = 0 if self._last_seq is None else self._last_seq + 1
        self.put(Packet(seq, eos=True), timeout)
        return True

    def stall(self, error: BaseException) -> bool:
        '''
        Active -> Stalled. Returns False when the pipe was not Active.
        '''
        with self._cond:
            if self._state is not PipeState.ACTIVE:
                return False
            self._state = PipeState.STALLED
            self._error = error
            self._cond.notify_all()
        logger.debug(f"{self.name} stalled: {error}")
        return True

    def terminate(self) -> None:
        with self._cond:
            if self._state is PipeState.TERMINATED:
                return
            self._state = PipeState.TERMINATED
            self._cond.notify_all()

    def __repr__(self) -> str:
        return f"<Pipe {self.name} state={self._state.value} size={len(self._buffer)}/{self.capacity}>"
