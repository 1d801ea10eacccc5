"""Arithmetic coding of symbols under per-step distributions.

Distributions are quantized to integer frequencies summing to ``T = 2**16``
and coded with a 32-bit binary arithmetic coder (pending-bit carry
handling). The coder emits the shortest tail that identifies the final
interval, so a stream costs at most about two bits more than the sum of
quantized code lengths.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _jit
from .core import DomainError, as_distribution

T = _jit.FREQ_TOTAL


class DecodeError(ValueError):
    """Corrupt, truncated or inconsistent compressed data."""


@dataclass(frozen=True)
class Bitstream:
    data: bytes
    nbits: int
    crc: int

    @classmethod
    def wrap(cls, data: bytes, nbits: int) -> "Bitstream":
        return cls(bytes(data), int(nbits), zlib.crc32(data))

    def __len__(self) -> int:
        return self.nbits

    def verify(self) -> None:
        if self.nbits > 8 * len(self.data):
            raise DecodeError(f"truncated stream: {len(self.data)} bytes for {self.nbits} bits")
        if zlib.crc32(self.data) != self.crc:
            raise DecodeError("payload checksum mismatch")


def quantize(p) -> np.ndarray:
    """Integer frequencies ``f >= 1`` with ``sum(f) == T`` approximating ``p * T``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise DomainError("expected a distribution vector")
    if p.size > T:
        raise DomainError(f"cannot quantize {p.size} symbols into {T} counts")
    as_distribution(p)
    out = np.empty(p.size, dtype=np.int64)
    _jit.quantize(p, T, out)
    return out


def payload_capacity(n: int) -> int:
    # every symbol has f >= 1, so it costs at most 16 bits plus rounding
    return (17 * n + 64) // 8 + 16


def encode(pairs: Iterable[tuple[Sequence[float], int]]) -> Bitstream:
    """Code each symbol under its paired distribution."""
    pairs = list(pairs)
    n = len(pairs)
    if n == 0:
        return Bitstream.wrap(b"", 0)
    N = len(pairs[0][0])
    cums = np.empty((n, N + 1), dtype=np.int64)
    xs = np.empty(n, dtype=np.int64)
    freq = np.empty(N, dtype=np.int64)
    for k, (p, x) in enumerate(pairs):
        if len(p) != N:
            raise DomainError("all distributions must share one alphabet")
        if not 0 <= x < N:
            raise DomainError(f"symbol {x} outside alphabet 0..{N - 1}")
        freq[:] = quantize(p)
        _jit.cumulative(freq, cums[k])
        xs[k] = x
    buf = np.zeros(payload_capacity(n), dtype=np.uint8)
    nbits = _jit.encode_cums(cums, xs, buf)
    return Bitstream.wrap(buf[: (nbits + 7) // 8].tobytes(), nbits)


def decode(stream: Bitstream, n: int, next_distribution: Callable[[list[int]], Sequence[float]]) -> list[int]:
    """Decode ``n`` symbols; ``next_distribution(history)`` must replay the encoder's model."""
    stream.verify()
    buf = np.frombuffer(stream.data, dtype=np.uint8).copy()
    state = np.empty(4, dtype=np.int64)
    _jit.dec_init(buf, stream.nbits, state)
    out: list[int] = []
    cum = np.empty(0, dtype=np.int64)
    for _ in range(n):
        freq = quantize(next_distribution(out))
        if cum.size != freq.size + 1:
            cum = np.empty(freq.size + 1, dtype=np.int64)
        _jit.cumulative(freq, cum)
        out.append(int(_jit.dec_symbol(buf, stream.nbits, state, cum)))
    return out


def quantized_bits(pairs) -> float:
    """Sum of ``-log2(f(x)/T)``: the code length the quantized model supports."""
    return float(sum(-np.log2(quantize(p)[x] / T) for p, x in pairs))


def encode_adaptive_bytes(data, N: int = 256, refresh: int = 4096, B: int = 12) -> tuple[Bitstream, float]:
    """Code a symbol array with an order-0 count model refreshed every ``refresh`` symbols.

    Returns the stream and the ideal (unquantized) code length in bits.
    Meant for long inputs where per-symbol Python work would dominate.
    """
    if isinstance(data, (bytes, bytearray, memoryview)):
        xs = np.frombuffer(data, dtype=np.uint8)
    else:
        xs = np.ascontiguousarray(data)
        if xs.dtype != np.uint8:
            xs = xs.astype(np.int64)
    if xs.size and (xs.min() < 0 or xs.max() >= N):
        raise DomainError("symbol outside the alphabet")
    buf = np.zeros(payload_capacity(xs.size), dtype=np.uint8)
    nbits, ideal = _jit.adaptive_order0_code(xs, N, refresh, 2.0**-B, buf,
                                             np.empty(0, xs.dtype), False, 0)
    return Bitstream.wrap(buf[: (nbits + 7) // 8].tobytes(), nbits), float(ideal)


def decode_adaptive_bytes(stream: Bitstream, n: int, N: int = 256, refresh: int = 4096, B: int = 12) -> np.ndarray:
    stream.verify()
    buf = np.frombuffer(stream.data, dtype=np.uint8).copy()
    out = np.empty(n, dtype=np.uint8 if N <= 256 else np.int64)
    _jit.adaptive_order0_code(np.empty(0, out.dtype), N, refresh, 2.0**-B, buf, out, True, stream.nbits)
    return out
