import asyncio
import struct

import numpy as np
import pytest

from conftest import ListSource, drain, payloads
from rtasr.errors import RetryExhaustedError, TransportError, VerificationError
from rtasr.models import (
    EMPTY,
    AudioChunk,
    FeatureMatrix,
    FrameBlock,
    Hypothesis,
    HypothesisSet,
    LoglikBlock,
    Packet,
    PayloadKind,
)
from rtasr.pipeline import Chain, Pipe, PipeState
from rtasr.transport import (
    HEADER_SIZE,
    Ack,
    AckStatus,
    LossyChannel,
    PacketReceiver,
    PacketSender,
    crc32,
    decode_and_verify,
    encode_packet,
    parse_address,
    receive_loop,
    send_with_retry,
)

rng = np.random.default_rng(11)


def f32(shape) -> np.ndarray:
    # values exactly representable in float32 survive the wire unchanged
    return rng.normal(size=shape).astype(np.float32).astype(np.float64)


def sample_packets() -> list[Packet]:
    return [
        Packet(0, AudioChunk(rng.integers(-32768, 32767, 800, dtype=np.int16), 16000)),
        Packet(1, FrameBlock(f32((3, 400)), 12)),
        Packet(2, FeatureMatrix(f32((5, 13)), 40), endpoint=True),
        Packet(3, LoglikBlock(f32((2, 7)), 0)),
        Packet(4, HypothesisSet((Hypothesis((3, 1, 2), 12.5), Hypothesis((), 0.25, False)), segment=2)),
        Packet(5, EMPTY, endpoint=True),
        Packet(6, EMPTY, eos=True),
    ]


def numbered(n: int) -> list[Packet]:
    out = [Packet(i, FeatureMatrix(f32((1 + i % 3, 4)), i)) for i in range(n - 1)]
    return out + [Packet(n - 1, EMPTY, eos=True)]


def test_golden_header_bytes():
    data = encode_packet(Packet(7, EMPTY, endpoint=True))
    assert len(data) == HEADER_SIZE == 20
    assert data == b"EKRT" + bytes([0x01, 0x00, 0x01, 0x00]) + bytes([7, 0, 0, 0]) + bytes(4) + bytes(4)


def test_header_fields_are_little_endian():
    packet = Packet(0x01020304, FeatureMatrix(np.zeros((1, 2))), eos=True)
    data = encode_packet(packet)
    magic, version, ptype, flags, reserved, seq, length, crc = struct.unpack("<4sBBBBIII", data[:20])
    assert (magic, version, ptype, flags, reserved) == (b"EKRT", 1, 3, 0x02, 0)
    assert seq == 0x01020304
    assert data[8:12] == bytes([4, 3, 2, 1])
    assert length == len(data) - 20
    assert crc == crc32(data[20:])


def test_crc_check_value():
    assert crc32(b"123456789") == 0xCBF43926
    assert crc32(b"") == 0


def test_decode_inverts_encode():
    for packet in sample_packets():
        assert decode_and_verify(encode_packet(packet)) == packet


def test_single_bit_flips_in_payload_fail_crc():
    data = encode_packet(Packet(3, FeatureMatrix(f32((4, 6)), 9)))
    for _ in range(200):
        damaged = bytearray(data)
        pos = int(rng.integers(HEADER_SIZE, len(data)))
        damaged[pos] ^= 1 << int(rng.integers(8))
        with pytest.raises(VerificationError) as info:
            decode_and_verify(bytes(damaged))
        assert info.value.status == AckStatus.CRC_FAIL


@pytest.mark.parametrize("offset,value", [(0, ord("X")), (4, 2), (5, 9)])
def test_bad_magic_version_or_type(offset, value):
    damaged = bytearray(encode_packet(Packet(0, EMPTY, eos=True)))
    damaged[offset] = value
    with pytest.raises(VerificationError) as info:
        decode_and_verify(bytes(damaged))
    assert info.value.status == AckStatus.BAD_HEADER


def test_truncated_message_is_bad_header():
    data = encode_packet(Packet(0, FeatureMatrix(np.zeros((2, 2)))))
    with pytest.raises(VerificationError) as info:
        decode_and_verify(data[:-1])
    assert info.value.status == AckStatus.BAD_HEADER


def test_seq_gap_names_expected():
    data = encode_packet(Packet(6, EMPTY, endpoint=True))
    with pytest.raises(VerificationError, match="expected 5") as info:
        decode_and_verify(data, expected_seq=5)
    assert info.value.status == AckStatus.SEQ_GAP


def test_ack_layout():
    assert Ack(AckStatus.CRC_FAIL, 9).pack() == bytes([1, 9, 0, 0, 0])
    assert Ack.unpack(bytes([3, 1, 0, 0, 0])) == Ack(AckStatus.SEQ_GAP, 1)
    with pytest.raises(TransportError):
        Ack.unpack(bytes([0x81, 0, 0, 0, 0]))


def test_parse_address():
    assert parse_address("10.0.0.2:5050") == ("10.0.0.2", 5050)
    assert parse_address("6000") == ("127.0.0.1", 6000)
    with pytest.raises(TransportError):
        parse_address("host:port")


async def deliver(packets, channel: LossyChannel, max_retries: int = 3):
    pipe = Pipe(len(packets) + 1)
    receiver = asyncio.create_task(receive_loop(channel.server, pipe))
    for k, packet in enumerate(packets):
        await send_with_retry(channel.client, packet, max_retries, seq=k, ack_timeout=5)
    delivered = await asyncio.wait_for(receiver, 5)
    return delivered, drain(pipe)


def test_lossless_channel_sends_once():
    sent = numbered(100)

    async def scenario():
        channel = LossyChannel()
        delivered, out = await deliver(sent, channel)
        return channel, delivered, out

    channel, delivered, out = asyncio.run(scenario())
    assert channel.sends == 100
    assert delivered == 100
    assert out == sent


def test_corrupted_first_attempt_is_resent():
    async def scenario():
        channel = LossyChannel(corrupt_sends={0})
        packet = Packet(0, FeatureMatrix(f32((2, 3))), eos=True)
        delivered, out = await deliver([packet], channel)
        return channel, out, packet

    channel, out, packet = asyncio.run(scenario())
    assert channel.sends == 2
    assert out == [packet]


def test_retries_exhausted_after_four_sends():
    async def scenario():
        channel = LossyChannel(corrupt_sends={0, 1, 2, 3, 4})
        pipe = Pipe(4)
        receiver = asyncio.create_task(receive_loop(channel.server, pipe))
        with pytest.raises(RetryExhaustedError):
            await send_with_retry(channel.client, Packet(0, EMPTY, eos=True), max_retries=3, ack_timeout=5)
        receiver.cancel()
        return channel, pipe

    channel, pipe = asyncio.run(scenario())
    assert channel.sends == 4
    assert len(pipe) == 0


def test_duplicate_is_acknowledged_but_not_reemitted():
    async def scenario():
        channel = LossyChannel()
        pipe = Pipe(8)
        receiver = asyncio.create_task(receive_loop(channel.server, pipe))
        acks = []
        messages = [encode_packet(p) for p in numbered(3)]
        for data in (messages[0], messages[1], messages[1], messages[2]):
            await channel.client.send(data)
            acks.append(Ack.unpack(await channel.client.read_ack()))
        await receiver
        return acks, drain(pipe)

    acks, out = asyncio.run(scenario())
    assert [a.status for a in acks] == [AckStatus.OK] * 4
    assert [a.seq for a in acks] == [0, 1, 1, 2]
    assert [p.seq for p in out] == [0, 1, 2]


def test_out_of_order_seq_gets_seq_gap():
    async def scenario():
        channel = LossyChannel()
        pipe = Pipe(8)
        receiver = asyncio.create_task(receive_loop(channel.server, pipe))
        await channel.client.send(encode_packet(Packet(2, EMPTY, endpoint=True)))
        ack = Ack.unpack(await channel.client.read_ack())
        await channel.client.close()
        with pytest.raises(TransportError):
            await receiver
        return ack, pipe

    ack, pipe = asyncio.run(scenario())
    assert ack == Ack(AckStatus.SEQ_GAP, 2)
    assert pipe.state is PipeState.STALLED


def test_connection_loss_stalls_the_pipe():
    async def scenario():
        channel = LossyChannel()
        pipe = Pipe(8)
        receiver = asyncio.create_task(receive_loop(channel.server, pipe))
        await send_with_retry(channel.client, Packet(0, EMPTY, endpoint=True))
        await channel.client.close()
        with pytest.raises(TransportError, match="before eos"):
            await receiver
        return pipe

    pipe = asyncio.run(scenario())
    assert pipe.get().seq == 0
    with pytest.raises(Exception):
        pipe.get()
    assert pipe.state is PipeState.STALLED


def test_lossy_channel_soak():
    sent = numbered(100)

    async def scenario():
        channel = LossyChannel(corrupt_rate=0.1, seed=1)
        return channel, await deliver(sent, channel, max_retries=50)

    channel, (delivered, out) = asyncio.run(scenario())
    assert channel.corrupted > 0
    assert delivered == 100
    assert out == sent


def test_soak_with_damaged_acks_ten_thousand_packets():
    sent = numbered(10_000)

    async def scenario():
        channel = LossyChannel(corrupt_rate=0.1, ack_corrupt_rate=0.05, seed=7)
        return channel, await deliver(sent, channel, max_retries=50)

    channel, (delivered, out) = asyncio.run(scenario())
    assert channel.sends > 10_000
    assert delivered == 10_000
    assert [encode_packet(p) for p in out] == [encode_packet(p) for p in sent]


def test_flags_survive_tcp_between_chains():
    items = [FeatureMatrix(f32((2, 13)), 0), (FeatureMatrix(f32((3, 13)), 2), True),
             (EMPTY, True), FeatureMatrix(f32((1, 13)), 5)]
    receiver = PacketReceiver(PayloadKind.FEATURES, listen="127.0.0.1:0", accept_timeout=10)
    server = Chain()
    server.add(receiver)
    server.start()
    client = Chain()
    sender = PacketSender(f"127.0.0.1:{receiver.port}")
    client.add(ListSource(items, PayloadKind.FEATURES)).add(sender)
    client.start()
    remote = list(server.packets(timeout=10))
    local = list(client.packets(timeout=10))
    assert server.wait(5) and client.wait(5)
    assert payloads(remote) == [items[0], items[1][0], items[3]]
    assert [p.endpoint for p in remote] == [False, True, True, False, False]
    assert remote[-1].eos
    assert sum(p.endpoint for p in local) == 2
    assert sender.sent == 5
    assert receiver.received == 5


def test_sender_without_server_fails_to_start():
    chain = Chain()
    chain.add(ListSource([], PayloadKind.FEATURES)).add(PacketSender("127.0.0.1:1"))
    with pytest.raises(Exception, match="cannot connect"):
        chain.start()
