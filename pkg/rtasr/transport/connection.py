"""
Stop-and-wait delivery of packets over a full-duplex connection.

The sender writes one message and waits for its Ack before the next one.
The receiver verifies every message, acknowledges it and re-emits verified
packets in seq order onto a pipe.
"""

import asyncio
import logging
import random
from typing import Optional, Protocol

from ..errors import PipelineError, RetryExhaustedError, TransportError, VerificationError
from ..models import Packet
from ..pipeline import Pipe
from .protocol import (
    ACK_SIZE,
    DEFAULT_CODEC,
    HEADER,
    HEADER_SIZE,
    Ack,
    AckStatus,
    PayloadCodec,
    decode_and_verify,
    encode_packet,
)

logger = logging.getLogger(__name__)

# refuse to allocate for a header whose length field is garbage
MAX_MESSAGE = 1 << 28


class ConnectionClosed(TransportError):
    pass


class Connection(Protocol):
    async def send(self, data: bytes) -> None: ...

    async def read_message(self) -> bytes: ...

    async def send_ack(self, ack: Ack) -> None: ...

    async def read_ack(self) -> bytes: ...

    async def close(self) -> None: ...


def parse_address(address: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep:
        host, port = default_host, address
    try:
        return host or default_host, int(port)
    except ValueError:
        raise TransportError(f"bad address {address!r}, expected host:port")


class StreamConnection:
    '''
    Connection over an asyncio stream pair (TCP in practice)
    '''

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def open(cls, address: str) -> "StreamConnection":
        host, port = parse_address(address)
        try:
            reader, writer = await asyncio.open_connection(host, port)
        except OSError as e:
            raise TransportError(f"cannot connect to {host}:{port}: {e}") from e
        logger.info(f"Connected to {host}:{port}")
        return cls(reader, writer)

    @property
    def peer(self) -> str:
        info = self.writer.get_extra_info("peername")
        return f"{info[0]}:{info[1]}" if info else "?"

    async def _write(self, data: bytes) -> None:
        try:
            self.writer.write(data)
            await self.writer.drain()
        except (ConnectionError, OSError) as e:
            raise ConnectionClosed(f"connection lost while writing: {e}") from e

    async def _read(self, n: int) -> bytes:
        try:
            return await self.reader.readexactly(n)
        except asyncio.IncompleteReadError as e:
            raise ConnectionClosed(f"connection closed after {len(e.partial)} of {n} bytes") from e
        except (ConnectionError, OSError) as e:
            raise ConnectionClosed(f"connection lost while reading: {e}") from e

    async def send(self, data: bytes) -> None:
        await self._write(data)

    async def read_message(self) -> bytes:
        header = await self._read(HEADER_SIZE)
        length = HEADER.unpack(header)[6]
        if length > MAX_MESSAGE:
            raise TransportError(f"message announces {length} bytes, stream framing lost")
        body = await self._read(length) if length else b""
        return header + body

    async def send_ack(self, ack: Ack) -> None:
        await self._write(ack.pack())

    async def read_ack(self) -> bytes:
        return await self._read(ACK_SIZE)

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


class _ChannelEnd:
    def __init__(self, channel: "LossyChannel", client: bool):
        self.channel = channel
        self.client = client

    async def send(self, data: bytes) -> None:
        await self.channel.messages.put(self.channel.damage_message(data))

    async def read_message(self) -> bytes:
        data = await self.channel.messages.get()
        if data is None:
            raise ConnectionClosed("channel closed")
        return data

    async def send_ack(self, ack: Ack) -> None:
        await self.channel.acks.put(self.channel.damage_ack(ack.pack()))

    async def read_ack(self) -> bytes:
        data = await self.channel.acks.get()
        if data is None:
            raise ConnectionClosed("channel closed")
        return data

    async def close(self) -> None:
        await (self.channel.messages if self.client else self.channel.acks).put(None)


class LossyChannel:
    '''
    In-memory connection pair that flips bits in transit, seeded.

    Messages are damaged inside the crc-protected region (crc field and
    payload) with probability `corrupt_rate`, or exactly on the send numbers
    listed in `corrupt_sends` (0-based). Acks get an invalid status byte with
    probability `ack_corrupt_rate`.

        channel = LossyChannel(corrupt_rate=0.1, seed=7)
        client, server = channel.client, channel.server
    '''

    def __init__(self, corrupt_rate: float = 0.0, ack_corrupt_rate: float = 0.0, seed: int = 0,
                 corrupt_sends: Optional[set[int]] = None):
        if not 0.0 <= corrupt_rate < 1.0 or not 0.0 <= ack_corrupt_rate < 1.0:
            raise ValueError("corruption rates must be in [0, 1)")
        self.corrupt_rate = corrupt_rate
        self.ack_corrupt_rate = ack_corrupt_rate
        self.corrupt_sends = set(corrupt_sends or ())
        self.rng = random.Random(seed)
        self.messages: asyncio.Queue = asyncio.Queue()
        self.acks: asyncio.Queue = asyncio.Queue()
        self.sends = 0
        self.corrupted = 0
        self.client = _ChannelEnd(self, client=True)
        self.server = _ChannelEnd(self, client=False)

    def damage_message(self, data: bytes) -> bytes:
        n = self.sends
        self.sends += 1
        if n not in self.corrupt_sends and self.rng.random() >= self.corrupt_rate:
            return data
        self.corrupted += 1
        damaged = bytearray(data)
        # crc field starts at byte 16, payload follows the header
        pos = self.rng.randrange(16, len(damaged))
        damaged[pos] ^= 1 << self.rng.randrange(8)
        return bytes(damaged)

    def damage_ack(self, data: bytes) -> bytes:
        if self.rng.random() >= self.ack_corrupt_rate:
            return data
        damaged = bytearray(data)
        damaged[0] |= 0x80
        return bytes(damaged)


async def send_with_retry(connection: Connection, packet: Packet, max_retries: int = 3,
                          seq: Optional[int] = None, ack_timeout: Optional[float] = 5.0,
                          codec: PayloadCodec = DEFAULT_CODEC) -> Ack:
    '''
    Send one packet and wait for its Ack, resending the same bytes on every
    rejection. Raises RetryExhaustedError after max_retries + 1 sends.
    '''
    seq = packet.seq if seq is None else seq
    data = encode_packet(packet, codec, seq)
    for attempt in range(1, max_retries + 2):
        await connection.send(data)
        try:
            raw = await asyncio.wait_for(connection.read_ack(), ack_timeout)
        except asyncio.TimeoutError:
            raise TransportError(f"no ack for seq {seq} within {ack_timeout}s")
        try:
            ack = Ack.unpack(raw)
        except TransportError as e:
            logger.warning(f"Unreadable ack for seq {seq} (attempt {attempt}): {e}")
            continue
        if ack.status is AckStatus.OK and ack.seq == seq:
            return ack
        logger.warning(f"Seq {seq} rejected with {ack.status.name} (ack seq {ack.seq}), attempt {attempt}")
    raise RetryExhaustedError(f"seq {seq} not acknowledged after {max_retries + 1} sends")


def _header_seq(data: bytes) -> int:
    if len(data) < HEADER_SIZE:
        return 0
    return HEADER.unpack_from(data)[5]


async def receive_loop(connection: Connection, pipe: Pipe, codec: PayloadCodec = DEFAULT_CODEC) -> int:
    '''
    Verify, acknowledge and deliver messages until eos; returns the number of
    packets put on `pipe`. Losing the connection before eos stalls the pipe.
    '''
    expected = 0
    delivered = 0
    while True:
        try:
            data = await connection.read_message()
        except TransportError as e:
            error = TransportError(f"connection lost before eos after {delivered} packets: {e}")
            logger.error(str(error))
            pipe.stall(error)
            raise error from e
        try:
            packet = decode_and_verify(data, codec=codec)
        except VerificationError as e:
            logger.warning(f"Rejected message: {e}")
            await connection.send_ack(Ack(AckStatus(e.status), _header_seq(data)))
            continue
        if packet.seq == expected - 1:
            logger.debug(f"Duplicate seq {packet.seq} acknowledged")
            await connection.send_ack(Ack(AckStatus.OK, packet.seq))
            continue
        if packet.seq != expected:
            logger.warning(f"Seq {packet.seq} received, expected {expected}")
            await connection.send_ack(Ack(AckStatus.SEQ_GAP, packet.seq))
            continue
        try:
            await asyncio.to_thread(pipe.put, packet)
        except PipelineError as e:
            raise TransportError(f"downstream closed at seq {packet.seq}: {e}") from e
        expected += 1
        delivered += 1
        await connection.send_ack(Ack(AckStatus.OK, packet.seq))
        if packet.eos:
            return delivered
