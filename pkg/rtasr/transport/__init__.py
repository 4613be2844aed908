from .components import PacketReceiver, PacketSender
from .connection import (
    Connection,
    ConnectionClosed,
    LossyChannel,
    StreamConnection,
    parse_address,
    receive_loop,
    send_with_retry,
)
from .protocol import (
    ACK_SIZE,
    HEADER_SIZE,
    Ack,
    AckStatus,
    PayloadCodec,
    WireHeader,
    crc32,
    decode_and_verify,
    encode_packet,
)

__all__ = [
    "ACK_SIZE", "Ack", "AckStatus", "Connection", "ConnectionClosed", "HEADER_SIZE", "LossyChannel",
    "PacketReceiver", "PacketSender", "PayloadCodec", "StreamConnection", "WireHeader", "crc32",
    "decode_and_verify", "encode_packet", "parse_address", "receive_loop", "send_with_retry",
]
