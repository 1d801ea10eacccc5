"""Compressed container format and the end-to-end mixing compressor.

Layout (little-endian)::

    "MXC1" | version u8 | N u32 | kind u8 (0 LIN, 1 GEO)
    | domain u8 (0 simplex, 1 box) [+ r f64 when box] | B u8 | alpha f64
    | order count u8 | orders u8 * count | delta f64 | w1 f64 * m
    | n u64 | payload bits u64 | payload bytes | CRC32 u32

The CRC covers every byte before it. The payload holds ``ceil(bits / 8)``
bytes; its bit length is stored so that the measured size is exact.
"""

from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .coder import DecodeError, payload_capacity
from .core import DomainError
from .mixtures import Domain, MixtureKind
from .models import ModelConfig
from .ogd import ConfigError, row_kind, step_size

MAGIC = b"MXC1"
VERSION = 1


@dataclass
class CompressConfig:
    """What the compressor mixes and how it adapts the weights.

    Exactly one of ``alpha`` and ``table_row`` selects the step size; a
    table row is resolved against the input length at compression time.
    """

    kind: MixtureKind = MixtureKind.GEO
    model: ModelConfig = field(default_factory=ModelConfig)
    domain: Domain = field(default_factory=Domain.simplex)
    alpha: float | None = None
    table_row: int | None = 4
    w1: np.ndarray | None = None

    def __post_init__(self):
        self.kind = MixtureKind.parse(self.kind)
        if self.alpha is not None:
            self.table_row = None
            if not self.alpha > 0:
                raise ConfigError(f"step size must be positive, got {self.alpha}")
        elif self.table_row is None:
            raise ConfigError("set either alpha or table_row")
        elif row_kind(self.table_row) is not self.kind:
            raise ConfigError(f"table row {self.table_row} is for {row_kind(self.table_row).name}")
        if self.kind is MixtureKind.LIN and not self.domain.is_simplex:
            raise ConfigError("the linear mixture is only defined on the simplex")
        m = self.model.m
        if self.w1 is not None:
            self.w1 = np.asarray(self.w1, dtype=float)
            if self.w1.size != m or not self.domain.contains(self.w1):
                raise ConfigError(f"w1 must be a point of {self.domain} with {m} entries")

    def resolve_alpha(self, n: int) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        return step_size(self.table_row, max(self.model.m, 2), self.model.B, max(n, 1))

    def initial_weights(self) -> np.ndarray:
        if self.w1 is not None:
            return self.w1.copy()
        return self.domain.uniform_start(self.model.m)


@dataclass
class Header:
    N: int
    kind: MixtureKind
    domain: Domain
    B: int
    alpha: float
    orders: tuple[int, ...]
    delta: float
    w1: np.ndarray
    n: int
    payload_bits: int

    def pack(self) -> bytes:
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(struct.pack("<BIB", VERSION, self.N, int(self.kind)))
        if self.domain.is_simplex:
            out.write(struct.pack("<B", 0))
        else:
            out.write(struct.pack("<Bd", 1, self.domain.r))
        out.write(struct.pack("<Bd", self.B, self.alpha))
        out.write(struct.pack("<B", len(self.orders)))
        out.write(bytes(self.orders))
        out.write(struct.pack("<d", self.delta))
        out.write(np.asarray(self.w1, dtype="<f8").tobytes())
        out.write(struct.pack("<QQ", self.n, self.payload_bits))
        return out.getvalue()

    @property
    def model(self) -> ModelConfig:
        return ModelConfig(self.N, self.B, self.orders, self.delta)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise DecodeError("truncated container header")
        vals = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return vals

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.blob):
            raise DecodeError("truncated container")
        b = self.blob[self.pos:self.pos + size]
        self.pos += size
        return b


def parse_container(blob: bytes) -> tuple[Header, bytes]:
    """Validate framing and checksum; return the header and payload bytes."""
    if len(blob) < len(MAGIC) or blob[:4] != MAGIC:
        raise DecodeError("not a MXC1 container")
    rd = _Reader(blob)
    rd.raw(4)
    version, N, kind = rd.take("<BIB")
    if version != VERSION:
        raise DecodeError(f"unsupported container version {version}")
    (tag,) = rd.take("<B")
    if tag == 0:
        domain = Domain.simplex()
    elif tag == 1:
        (r,) = rd.take("<d")
        domain = Domain("box", r) if r > 0 else None
        if domain is None:
            raise DecodeError(f"invalid box radius {r}")
    else:
        raise DecodeError(f"unknown domain tag {tag}")
    B, alpha = rd.take("<Bd")
    (count,) = rd.take("<B")
    orders = tuple(rd.raw(count))
    (delta,) = rd.take("<d")
    w1 = np.frombuffer(rd.raw(8 * count), dtype="<f8").astype(float)
    n, payload_bits = rd.take("<QQ")
    nbytes = (payload_bits + 7) // 8
    if rd.pos + nbytes + 4 > len(blob):
        raise DecodeError(f"truncated container: payload needs {nbytes} bytes")
    payload = rd.raw(nbytes)
    (crc,) = rd.take("<I")
    if zlib.crc32(blob[: rd.pos - 4]) != crc:
        raise DecodeError("container checksum mismatch")
    if rd.pos != len(blob):
        raise DecodeError("trailing bytes after container")
    if kind not in (0, 1):
        raise DecodeError(f"unknown mixture kind {kind}")
    header = Header(N, MixtureKind(kind), domain, B, alpha, orders, delta, w1, n, payload_bits)
    return header, payload


@dataclass
class CompressStats:
    n: int
    payload_bits: int
    ideal_bits: float
    model_bits: np.ndarray
    final_weights: np.ndarray
    alpha: float
    container_bytes: int = 0

    @property
    def bits_per_symbol(self) -> float:
        return self.payload_bits / self.n if self.n else 0.0

    def as_dict(self) -> dict:
        return {"n": self.n, "payload_bits": self.payload_bits, "ideal_bits": self.ideal_bits,
                "bits_per_symbol": self.bits_per_symbol, "container_bytes": self.container_bytes,
                "alpha": self.alpha, "model_bits": self.model_bits.tolist(),
                "final_weights": self.final_weights.tolist()}


def _codec_args(kind, domain: Domain, model: ModelConfig, alpha, w1):
    orders = np.asarray(model.orders, dtype=np.int64)
    return (model.N, orders, float(model.delta), model.eps, int(kind),
            not domain.is_simplex, float(domain.r), float(alpha), np.asarray(w1, dtype=float))


def run_codec(xs, config: CompressConfig, code: bool = True, record: bool = False):
    """Run the model/mix/code/update loop over ``xs`` (encoder side).

    Returns ``(buf, nbits, ideal_bits, model_bits, final_w, alpha, trace)``
    where ``trace`` is ``(W, bits, grad_norm)`` when ``record`` is set.
    """
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    n = xs.size
    N = config.model.N
    if n and (xs.min() < 0 or xs.max() >= N):
        raise DomainError("symbol outside the alphabet")
    alpha = config.resolve_alpha(n)
    m = config.model.m
    w1 = config.initial_weights()
    buf = np.zeros(payload_capacity(n) if code else 1, dtype=np.uint8)
    rn = n if record else 0
    rec = (np.empty((rn, m)), np.empty(rn), np.empty(rn))
    nbits, ideal, model_bits, w_end = _jit.mix_codec(
        xs, n, *_codec_args(config.kind, config.domain, config.model, alpha, w1),
        buf, 0, False, code, *rec)
    return buf, int(nbits), float(ideal), model_bits, w_end, alpha, (rec if record else None)


def compress_symbols(xs, config: CompressConfig) -> tuple[bytes, CompressStats]:
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    buf, nbits, ideal, model_bits, w_end, alpha, _ = run_codec(xs, config)
    header = Header(config.model.N, config.kind, config.domain, config.model.B, alpha,
                    config.model.orders, config.model.delta, config.initial_weights(),
                    int(xs.size), nbits)
    body = header.pack() + buf[: (nbits + 7) // 8].tobytes()
    blob = body + struct.pack("<I", zlib.crc32(body))
    stats = CompressStats(int(xs.size), nbits, ideal, model_bits, w_end, alpha, len(blob))
    return blob, stats


def decompress_symbols(blob: bytes) -> np.ndarray:
    header, payload = parse_container(blob)
    try:
        model = header.model
        if header.kind is MixtureKind.LIN and not header.domain.is_simplex:
            raise ConfigError("LIN container with a box domain")
        if header.w1.size != model.m or not header.domain.contains(header.w1):
            raise ConfigError("initial weights outside the domain")
        if not header.alpha > 0:
            raise ConfigError("non-positive step size")
    except (DomainError, ConfigError) as exc:
        raise DecodeError(f"inconsistent container header: {exc}") from exc
    n = header.n
    out = np.empty(n, dtype=np.int64)
    buf = np.frombuffer(payload, dtype=np.uint8).copy()
    if buf.size == 0:
        buf = np.zeros(1, dtype=np.uint8)
    _jit.mix_codec(out, n, *_codec_args(header.kind, header.domain, model, header.alpha, header.w1),
                   buf, header.payload_bits, True, True,
                   np.empty((0, model.m)), np.empty(0), np.empty(0))
    return out


def compress(data: bytes, config: CompressConfig | None = None) -> tuple[bytes, CompressStats]:
    """Compress a byte string (alphabet of 256 symbols)."""
    config = config or CompressConfig()
    if config.model.N != 256:
        raise ConfigError("byte compression needs N = 256")
    xs = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)
    return compress_symbols(xs, config)


def decompress(blob: bytes) -> bytes:
    header, _ = parse_container(blob)
    if header.N != 256:
        raise DecodeError(f"container holds symbols over N={header.N}, not bytes")
    return decompress_symbols(blob).astype(np.uint8).tobytes()
