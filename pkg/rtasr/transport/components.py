import asyncio
import logging
from typing import Awaitable, Callable, Optional

from ..errors import TransportError
from ..models import EMPTY, Packet, PayloadKind
from ..pipeline import ANY, Component
from .connection import Connection, StreamConnection, parse_address, receive_loop, send_with_retry
from .protocol import DEFAULT_CODEC, PayloadCodec

logger = logging.getLogger(__name__)

Connector = Callable[[], Awaitable[Connection]]


class PacketSender(Component):
    '''
    Client-side sink: ships every packet to a receiver and keeps the
    endpoint/eos markers flowing locally.

    Either `address` (host:port) or a `connect` coroutine factory is used to
    open the connection.
    '''

    input_kind = ANY
    output_kind = PayloadKind.EMPTY

    def __init__(self, address: Optional[str] = None, connect: Optional[Connector] = None,
                 max_retries: int = 3, ack_timeout: float = 5.0,
                 codec: PayloadCodec = DEFAULT_CODEC, name: Optional[str] = None):
        super().__init__(name or "sender")
        if address is None and connect is None:
            raise TransportError(f"{self.name} needs an address or a connect factory")
        self.address = address
        self.connect = connect or (lambda: StreamConnection.open(address))
        self.max_retries = max_retries
        self.ack_timeout = ack_timeout
        self.codec = codec
        self.sent = 0
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._conn: Optional[Connection] = None

    def setup(self) -> None:
        self._loop = asyncio.new_event_loop()
        self._conn = self._loop.run_until_complete(self.connect())

    def process(self, packet: Packet) -> None:
        self._loop.run_until_complete(
            send_with_retry(self._conn, packet, self.max_retries, seq=self.sent,
                            ack_timeout=self.ack_timeout, codec=self.codec)
        )
        self.sent += 1
        if packet.endpoint:
            self.emit(EMPTY, endpoint=True)

    def teardown(self) -> None:
        if self._loop is None:
            return
        if self._conn is not None:
            self._loop.run_until_complete(self._conn.close())
        self._loop.close()
        logger.info(f"{self.name}: {self.sent} packets delivered")


class PacketReceiver(Component):
    '''
    Server-side source: accepts one connection and re-emits the verified
    packets of that session. The listening socket is bound in `setup`, so
    `port` is known (also for port 0) before the chain starts.
    '''

    input_kind = None

    def __init__(self, output_kind: PayloadKind = PayloadKind.FRAMES, listen: str = "0.0.0.0:5050",
                 accept_timeout: Optional[float] = None, codec: PayloadCodec = DEFAULT_CODEC,
                 name: Optional[str] = None):
        super().__init__(name or "receiver")
        self.output_kind = PayloadKind(output_kind)
        self.listen = listen
        self.accept_timeout = accept_timeout
        self.codec = codec
        self.port: Optional[int] = None
        self.received = 0
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._server: Optional[asyncio.AbstractServer] = None
        self._accepted: Optional[asyncio.Future] = None

    async def _bind(self) -> None:
        host, port = parse_address(self.listen, default_host="0.0.0.0")
        self._accepted = asyncio.get_running_loop().create_future()

        async def on_client(reader, writer):
            if self._accepted.done():
                logger.warning(f"{self.name}: refusing a second client")
                writer.close()
                return
            self._accepted.set_result(StreamConnection(reader, writer))

        self._server = await asyncio.start_server(on_client, host, port)
        self.port = self._server.sockets[0].getsockname()[1]
        logger.info(f"{self.name} listening on {host}:{self.port}")

    def setup(self) -> None:
        self._loop = asyncio.new_event_loop()
        try:
            self._loop.run_until_complete(self._bind())
        except OSError as e:
            raise TransportError(f"cannot listen on {self.listen}: {e}") from e

    async def _accept(self) -> Optional[Connection]:
        waited = 0.0
        while not self.stopping:
            try:
                return await asyncio.wait_for(asyncio.shield(self._accepted), 0.2)
            except asyncio.TimeoutError:
                waited += 0.2
                if self.accept_timeout is not None and waited >= self.accept_timeout:
                    raise TransportError(f"{self.name}: no client within {self.accept_timeout}s")
        return None

    async def _session(self) -> None:
        conn = await self._accept()
        self._server.close()
        if conn is None:
            return
        logger.info(f"{self.name}: client {conn.peer} connected")
        try:
            self.received = await receive_loop(conn, self.output, self.codec)
            self._eos_sent = True
        finally:
            await conn.close()

    def generate(self) -> None:
        self._loop.run_until_complete(self._session())
        logger.info(f"{self.name}: session ended after {self.received} packets")

    def teardown(self) -> None:
        if self._loop is None:
            return
        if self._server is not None:
            self._server.close()
            self._loop.run_until_complete(self._server.wait_closed())
        self._loop.close()
