"""
Wire format of the packet transport.

Every message is a fixed 20-byte header followed by the payload:

  magic    4s  b"EKRT"
  version  B   0x01
  ptype    B   payload kind (0 Empty .. 5 HypothesisSet)
  flags    B   bit0 endpoint, bit1 eos
  reserved B   0x00
  seq      I
  length   I   payload bytes
  crc32    I   IEEE CRC-32 of the payload only

Acks are 5 bytes: status (B) and the echoed seq (I). Everything is
little-endian. Payloads are not compressed; `PayloadCodec` can be swapped
for a custom encoding.
"""

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from ..errors import FeatureError, TransportError, VerificationError
from ..models import (
    EMPTY,
    AudioChunk,
    FeatureMatrix,
    FrameBlock,
    Hypothesis,
    HypothesisSet,
    LoglikBlock,
    Packet,
    Payload,
    PayloadKind,
)

MAGIC = b"EKRT"
VERSION = 0x01
FLAG_ENDPOINT = 0x01
FLAG_EOS = 0x02

HEADER = struct.Struct("<4sBBBBIII")
HEADER_SIZE = HEADER.size  # 20
ACK = struct.Struct("<BI")
ACK_SIZE = ACK.size  # 5
MAX_PAYLOAD = 0xFFFFFFFF

_MATRIX_HEAD = struct.Struct("<III")
_U32 = struct.Struct("<I")
_HYP_HEAD = struct.Struct("<BfI")
_HYPSET_HEAD = struct.Struct("<IBI")


class AckStatus(IntEnum):
    OK = 0
    CRC_FAIL = 1
    BAD_HEADER = 2
    SEQ_GAP = 3


@dataclass(frozen=True)
class WireHeader:
    ptype: int
    flags: int
    seq: int
    length: int
    crc32: int
    magic: bytes = MAGIC
    version: int = VERSION
    reserved: int = 0

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, self.version, self.ptype, self.flags, self.reserved,
                           self.seq, self.length, self.crc32)

    @classmethod
    def unpack(cls, data: bytes) -> "WireHeader":
        if len(data) < HEADER_SIZE:
            raise VerificationError(AckStatus.BAD_HEADER, f"header needs {HEADER_SIZE} bytes, got {len(data)}")
        magic, version, ptype, flags, reserved, seq, length, crc = HEADER.unpack_from(data)
        return cls(ptype, flags, seq, length, crc, magic, version, reserved)


@dataclass(frozen=True)
class Ack:
    status: AckStatus
    seq: int

    def pack(self) -> bytes:
        return ACK.pack(int(self.status), self.seq)

    @classmethod
    def unpack(cls, data: bytes) -> "Ack":
        if len(data) != ACK_SIZE:
            raise TransportError(f"ack must be {ACK_SIZE} bytes, got {len(data)}")
        status, seq = ACK.unpack(data)
        try:
            return cls(AckStatus(status), seq)
        except ValueError:
            raise TransportError(f"unknown ack status {status} for seq {seq}")


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


class PayloadCodec:
    '''
    Default payload encoding: floats as float32, samples as int16 PCM,
    matrices prefixed by first_frame_index, rows and cols
    '''

    def encode(self, payload: Payload) -> bytes:
        kind = payload.kind
        if kind is PayloadKind.EMPTY:
            return b""
        if kind is PayloadKind.AUDIO:
            return _U32.pack(payload.sample_rate) + payload.samples.astype("<i2").tobytes()
        if kind in (PayloadKind.FRAMES, PayloadKind.FEATURES, PayloadKind.LOGLIK):
            rows, cols = payload.data.shape
            return (_MATRIX_HEAD.pack(payload.first_frame_index, rows, cols)
                    + payload.data.astype("<f4").tobytes())
        if kind is PayloadKind.HYPOTHESES:
            parts = [_HYPSET_HEAD.pack(payload.segment, int(payload.partial), len(payload.hypotheses))]
            for hyp in payload.hypotheses:
                parts.append(_HYP_HEAD.pack(int(hyp.is_final), hyp.cost, len(hyp.words)))
                parts.append(np.asarray(hyp.words, dtype="<u4").tobytes())
            return b"".join(parts)
        raise TransportError(f"cannot encode payload kind {kind}")

    def decode(self, kind: PayloadKind, data: bytes) -> Payload:
        try:
            return self._decode(kind, data)
        except (struct.error, ValueError, FeatureError) as e:
            raise VerificationError(AckStatus.BAD_HEADER, f"malformed {kind.name} payload: {e}") from e

    def _decode(self, kind: PayloadKind, data: bytes) -> Payload:
        if kind is PayloadKind.EMPTY:
            if data:
                raise ValueError("Empty payload with data")
            return EMPTY
        if kind is PayloadKind.AUDIO:
            (rate,) = _U32.unpack_from(data)
            return AudioChunk(np.frombuffer(data, dtype="<i2", offset=_U32.size).astype(np.int16), rate)
        if kind in (PayloadKind.FRAMES, PayloadKind.FEATURES, PayloadKind.LOGLIK):
            first, rows, cols = _MATRIX_HEAD.unpack_from(data)
            body = np.frombuffer(data, dtype="<f4", offset=_MATRIX_HEAD.size)
            if body.size != rows * cols:
                raise ValueError(f"{rows}x{cols} matrix with {body.size} values")
            cls = {PayloadKind.FRAMES: FrameBlock, PayloadKind.FEATURES: FeatureMatrix,
                   PayloadKind.LOGLIK: LoglikBlock}[kind]
            return cls(body.astype(np.float64).reshape(rows, cols), first)
        if kind is PayloadKind.HYPOTHESES:
            segment, partial, count = _HYPSET_HEAD.unpack_from(data)
            offset = _HYPSET_HEAD.size
            hyps = []
            for _ in range(count):
                is_final, cost, n = _HYP_HEAD.unpack_from(data, offset)
                offset += _HYP_HEAD.size
                words = np.frombuffer(data, dtype="<u4", count=n, offset=offset)
                offset += 4 * n
                hyps.append(Hypothesis(tuple(int(w) for w in words), float(cost), bool(is_final)))
            if offset != len(data):
                raise ValueError(f"{len(data) - offset} trailing bytes")
            return HypothesisSet(tuple(hyps), segment, bool(partial))
        raise ValueError(f"unknown payload kind {kind}")


DEFAULT_CODEC = PayloadCodec()


def encode_packet(packet: Packet, codec: PayloadCodec = DEFAULT_CODEC, seq: Optional[int] = None) -> bytes:
    body = codec.encode(packet.payload)
    if len(body) > MAX_PAYLOAD:
        raise TransportError(f"payload of {len(body)} bytes exceeds the 32-bit length field")
    flags = (FLAG_ENDPOINT if packet.endpoint else 0) | (FLAG_EOS if packet.eos else 0)
    header = WireHeader(int(packet.kind), flags, packet.seq if seq is None else seq, len(body), crc32(body))
    return header.pack() + body


def verify_header(header: WireHeader) -> None:
    if header.magic != MAGIC:
        raise VerificationError(AckStatus.BAD_HEADER, f"bad magic {header.magic!r}")
    if header.version != VERSION:
        raise VerificationError(AckStatus.BAD_HEADER, f"unsupported version {header.version}")
    if header.ptype not in PayloadKind._value2member_map_:
        raise VerificationError(AckStatus.BAD_HEADER, f"unknown payload type {header.ptype}")


def decode_and_verify(data: bytes, expected_seq: Optional[int] = None,
                      codec: PayloadCodec = DEFAULT_CODEC) -> Packet:
    '''
    Parse one message; raises VerificationError with the Ack status to return
    '''
    header = WireHeader.unpack(data)
    verify_header(header)
    body = data[HEADER_SIZE:]
    if len(body) != header.length:
        raise VerificationError(AckStatus.BAD_HEADER,
                                f"header announces {header.length} payload bytes, got {len(body)}")
    if crc32(body) != header.crc32:
        raise VerificationError(AckStatus.CRC_FAIL, f"crc mismatch on seq {header.seq}")
    if expected_seq is not None and header.seq != expected_seq:
        raise VerificationError(AckStatus.SEQ_GAP, f"seq {header.seq} received, expected {expected_seq}")
    payload = codec.decode(PayloadKind(header.ptype), body)
    try:
        return Packet(header.seq, payload, bool(header.flags & FLAG_ENDPOINT), bool(header.flags & FLAG_EOS))
    except Exception as e:
        raise VerificationError(AckStatus.BAD_HEADER, f"invalid packet: {e}") from e
