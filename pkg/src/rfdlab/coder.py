"""Range coding for frequency models and the ``RFD1`` stream container.

The coder keeps a 56-bit window: ``range`` is renormalised into
``[2**48, 2**56)`` a byte at a time and carries out of ``low`` are resolved
through a one-byte cache plus a run of pending ``0xFF`` bytes.  With model
totals capped at ``2**24`` the integer division ``range // total`` costs at
most ``2**-24`` relative width per symbol, and the flush emits only the bytes
needed to pin down the final interval (the decoder reads zeros past the
end), so a stream stays within a few bits of its ideal code length.  The flush
names an aligned block lying wholly inside the final interval, so the payload
is never shorter than the ideal code length either.

Two routes produce identical bytes:

* :class:`RangeEncoder` / :class:`RangeDecoder` drive any model exposing
  integer frequencies (``encode_symbols``, ``decode_symbols``);
* :func:`encode_stream` / :func:`decode_stream` run RFD and the coder in a
  compiled loop and wrap the payload in the container.

Container layout (little-endian)::

    magic "RFD1" | version u8 | N u32 | d u32 | c_num u32 | c_den u32 | T u32
    | s0_flag u8 (0 all-ones, 1 explicit) | [s0 u32 * N] | original_length u64
    | payload_length u64 | payload | crc32(header + payload) u32
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimator import InvalidParams, RfdModel, RfdParams, validate_params

WINDOW_BITS = 56
TOP = 1 << WINDOW_BITS
BOT = 1 << (WINDOW_BITS - 8)
FREQ_CAP = 1 << 24

MAGIC = b"RFD1"
VERSION = 1
_HEAD = struct.Struct("<4sBIIIIIB")
_LENGTHS = struct.Struct("<QQ")
_CRC = struct.Struct("<I")

DEFAULT_PARAMS = RfdParams(256, 32, 1, 2, 1 << 16)


class StreamError(ValueError):
    """Base class for malformed containers."""


class HeaderError(StreamError):
    pass


class VersionError(StreamError):
    pass


class TruncatedStream(StreamError):
    pass


class ChecksumError(StreamError):
    pass


class FrequencyOverflow(ValueError):
    """Model total above the coder's frequency precision."""


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = TOP - 1
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()
        self._coded = False

    def encode(self, cum: int, freq: int, total: int) -> None:
        if total > FREQ_CAP:
            raise FrequencyOverflow(f"model total {total} exceeds 2^24")
        self._coded = True
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        while self.range < BOT:
            self.range <<= 8
            self._shift_low()

    def _shift_low(self):
        low = self.low
        if low < 0xFF << (WINDOW_BITS - 8) or low >= TOP:
            carry = low >> WINDOW_BITS
            self._out.append((self._cache + carry) & 0xFF)
            self._out.extend(bytes([(0xFF + carry) & 0xFF]) * (self._cache_size - 1))
            self._cache_size = 0
            self._cache = (low >> (WINDOW_BITS - 8)) & 0xFF
        self._cache_size += 1
        self.low = (low & (BOT - 1)) << 8

    def finish(self) -> bytes:
        if not self._coded:
            return b""
        hi = self.low + self.range
        for k in range(WINDOW_BITS - 1, -1, -1):
            v = -(-self.low >> k) << k
            if v + (1 << k) <= hi:
                self.low = v
                break
        for _ in range(WINDOW_BITS // 8 + 1):
            self._shift_low()
        keep = len(self._out) - WINDOW_BITS // 8 + (WINDOW_BITS - 1 - k) // 8 + 1
        return _trim(self._out[:keep])


def _trim(raw) -> bytes:
    # the first byte names the integer part of a value in [0, 1): always zero
    assert raw[0] == 0
    return bytes(raw[1:])


class RangeDecoder:
    def __init__(self, payload: bytes):
        self._data = payload
        self._pos = 0
        self.range = TOP - 1
        self.code = 0
        self._r = 1
        for _ in range(WINDOW_BITS // 8):
            self.code = (self.code << 8) | self._next()

    def _next(self) -> int:
        pos = self._pos
        self._pos += 1
        return self._data[pos] if pos < len(self._data) else 0

    def target(self, total: int) -> int:
        """Cumulative frequency the next symbol's interval must contain."""
        self._r = self.range // total
        return min(self.code // self._r, total - 1)

    def consume(self, cum: int, freq: int) -> None:
        self.code -= self._r * cum
        self.range = self._r * freq
        while self.range < BOT:
            self.code = (self.code << 8) | self._next()
            self.range <<= 8


@dataclass
class CodeLengthMeter:
    """Ideal bits (sum of -log2 p) against bits actually written."""

    ideal_bits: float
    actual_bits: int | None = None

    @property
    def slack(self) -> float:
        if self.actual_bits is None:
            return math.nan
        return self.actual_bits - self.ideal_bits


def _cum(freqs, x):
    return sum(freqs[:x])


def encode_symbols(model, symbols: Sequence[int]) -> bytes:
    """Encode with any model whose ``predict()`` returns integer frequencies."""
    enc = RangeEncoder()
    for x in symbols:
        dist = model.predict()
        enc.encode(_cum(dist.freqs, x), dist.freqs[x], dist.total)
        model.update(x)
    return enc.finish()


def decode_symbols(model, payload: bytes, n: int,
                   on_step: Callable[[int, object], None] | None = None) -> list[int]:
    """Inverse of :func:`encode_symbols` given a fresh copy of the model.

    ``on_step(k, model)`` runs after the Update of step ``k``.
    """
    dec = RangeDecoder(payload)
    out = []
    for k in range(1, n + 1):
        dist = model.predict()
        if dist.total > FREQ_CAP:
            raise FrequencyOverflow(f"model total {dist.total} exceeds 2^24")
        v = dec.target(dist.total)
        cum = 0
        x = 0
        for x, f in enumerate(dist.freqs):
            if cum + f > v:
                break
            cum += f
        dec.consume(cum, dist.freqs[x])
        model.update(x)
        out.append(x)
        if on_step is not None:
            on_step(k, model)
    return out


def measure_code_length(model, symbols: Sequence[int]) -> CodeLengthMeter:
    """Ideal bits from the model's exact probabilities; actual bits from a real
    encode pass when the model predicts integer frequencies."""
    terms = []
    enc = RangeEncoder()
    codable = True
    for x in symbols:
        dist = model.predict()
        terms.append(dist.bits(x))
        if codable and hasattr(dist, "freqs"):
            enc.encode(_cum(dist.freqs, x), dist.freqs[x], dist.total)
        else:
            codable = False
        model.update(x)
    ideal = math.inf if any(math.isinf(v) for v in terms) else math.fsum(terms)
    actual = 8 * len(enc.finish()) if codable else None
    return CodeLengthMeter(ideal, actual)


# ---------------------------------------------------------------- container

@dataclass(frozen=True)
class CodedStream:
    params: RfdParams
    original_length: int
    payload: bytes

    def header_bytes(self) -> bytes:
        p = self.params
        for name, v in (("N", p.alphabet_size), ("d", p.increment), ("c_num", p.discount_num),
                        ("c_den", p.discount_den), ("T", p.threshold)):
            if not 0 <= v < 1 << 32:
                raise ValueError(f"{name}={v} does not fit the u32 header field")
        explicit = p.initial_counts is not None and any(v != 1 for v in p.initial_counts)
        head = _HEAD.pack(MAGIC, VERSION, p.alphabet_size, p.increment, p.discount_num,
                          p.discount_den, p.threshold, int(explicit))
        if explicit:
            head += struct.pack(f"<{p.alphabet_size}I", *p.initial_counts)
        return head + _LENGTHS.pack(self.original_length, len(self.payload))

    def to_bytes(self) -> bytes:
        body = self.header_bytes() + self.payload
        return body + _CRC.pack(zlib.crc32(body))

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CodedStream":
        blob = bytes(blob)
        if len(blob) < 4 or blob[:4] != MAGIC:
            raise HeaderError("bad magic: not an RFD1 stream")
        if len(blob) < 5:
            raise TruncatedStream("stream ends inside the header")
        if blob[4] != VERSION:
            raise VersionError(f"unsupported stream version {blob[4]}")
        if len(blob) < _HEAD.size:
            raise TruncatedStream("stream ends inside the header")
        _, _, N, d, num, den, T, flag = _HEAD.unpack_from(blob)
        off = _HEAD.size
        if flag not in (0, 1):
            raise HeaderError(f"bad s0 flag {flag}")
        s0 = None
        if flag == 1:
            if len(blob) < off + 4 * N:
                raise TruncatedStream("stream ends inside the initial counts")
            s0 = struct.unpack_from(f"<{N}I", blob, off)
            off += 4 * N
        if len(blob) < off + _LENGTHS.size:
            raise TruncatedStream("stream ends inside the header")
        n, plen = _LENGTHS.unpack_from(blob, off)
        off += _LENGTHS.size
        end = off + plen
        if len(blob) < end + _CRC.size:
            raise TruncatedStream(f"payload truncated: need {end + _CRC.size} bytes, "
                                  f"have {len(blob)}")
        if len(blob) > end + _CRC.size:
            raise HeaderError("trailing bytes after checksum")
        (crc,) = _CRC.unpack_from(blob, end)
        if zlib.crc32(blob[:end]) != crc:
            raise ChecksumError("CRC32 mismatch")
        params = RfdParams(N, d, num, den, T, s0)
        bad = validate_params(params)
        if bad:
            raise HeaderError("header parameters invalid: " + "; ".join(bad))
        return cls(params, n, blob[off:end])


# ------------------------------------------------------------- fast routes

def _params_of(model_or_params) -> RfdParams:
    if isinstance(model_or_params, RfdParams):
        return model_or_params
    if isinstance(model_or_params, RfdModel):
        if model_or_params.state.step != 0:
            raise ValueError("encode_stream needs a freshly initialised model")
        return model_or_params.params
    raise TypeError("expected RfdParams or a fresh RfdModel")


def _checked(params: RfdParams) -> RfdParams:
    bad = validate_params(params)
    if bad:
        raise InvalidParams(bad)
    if params.threshold > FREQ_CAP:
        raise FrequencyOverflow(f"T={params.threshold} exceeds the coder's 2^24 frequency cap")
    return params


def _as_symbols(symbols, N) -> np.ndarray:
    if isinstance(symbols, (bytes, bytearray, memoryview)):
        arr = np.frombuffer(symbols, dtype=np.uint8)
    else:
        arr = np.asarray(symbols)
        if arr.size == 0:
            arr = arr.astype(np.int64)
        if arr.dtype != np.uint8:
            arr = arr.astype(np.int64)
    if arr.ndim != 1:
        raise ValueError("symbols must be one-dimensional")
    if arr.size and (int(arr.min()) < 0 or int(arr.max()) >= N):
        raise ValueError(f"symbols outside alphabet 0..{N - 1}")
    return arr


def encode_with_meter(model_or_params, symbols) -> tuple[CodedStream, CodeLengthMeter]:
    from . import _kernel

    params = _checked(_params_of(model_or_params))
    arr = _as_symbols(symbols, params.alphabet_size)
    s0 = np.array(params.s0, dtype=np.int64)
    raw, length, ideal, _, _, _ = _kernel.encode_rfd(
        arr, params.alphabet_size, params.increment, params.discount_num,
        params.discount_den, params.threshold, s0)
    payload = _trim(raw[:length])
    return CodedStream(params, len(arr), payload), CodeLengthMeter(ideal, 8 * len(payload))


def encode_stream(model_or_params, symbols) -> CodedStream:
    """Run Compress over ``symbols`` with RFD and wrap the result."""
    return encode_with_meter(model_or_params, symbols)[0]


def decode_stream(stream: CodedStream | bytes) -> np.ndarray:
    """Run Decompress; accepts a :class:`CodedStream` or its serialised bytes."""
    from . import _kernel

    if not isinstance(stream, CodedStream):
        stream = CodedStream.from_bytes(stream)
    params = _checked(stream.params)
    dtype = np.uint8 if params.alphabet_size <= 256 else np.int64
    out = np.empty(stream.original_length, dtype=dtype)
    _kernel.decode_rfd(np.frombuffer(stream.payload, dtype=np.uint8), out,
                       params.alphabet_size, params.increment, params.discount_num,
                       params.discount_den, params.threshold,
                       np.array(params.s0, dtype=np.int64))
    return out


def compress(data: bytes, params: RfdParams = DEFAULT_PARAMS) -> tuple[bytes, CodeLengthMeter]:
    stream, meter = encode_with_meter(params, data)
    return stream.to_bytes(), meter


def decompress(blob: bytes) -> bytes:
    stream = CodedStream.from_bytes(blob)
    if stream.params.alphabet_size > 256:
        raise HeaderError("byte output needs an alphabet of at most 256 letters")
    return decode_stream(stream).astype(np.uint8).tobytes()
