import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixcomp.coder import (T, Bitstream, DecodeError, decode, decode_adaptive_bytes, encode,
                           encode_adaptive_bytes, quantize, quantized_bits)
from mixcomp.core import DomainError


def test_quantize_examples():
    assert quantize([0.5, 0.5]).tolist() == [32768, 32768]
    assert quantize([0.75, 0.25]).tolist() == [49152, 16384]
    q = quantize([1 - 3e-7, 1e-7, 1e-7, 1e-7])
    assert q.tolist() == [T - 3, 1, 1, 1]


def test_quantize_rejects():
    with pytest.raises(DomainError):
        quantize(np.full(T + 1, 1.0 / (T + 1)))
    with pytest.raises(DomainError):
        quantize([0.5, 0.6])


@given(st.integers(0, 2**32 - 1), st.integers(2, 600), st.sampled_from([0.01, 0.3, 1.0, 5.0]))
def test_quantize_properties(seed, N, conc):
    p = np.random.default_rng(seed).dirichlet(np.full(N, conc))
    p = np.maximum(p, 1e-300)
    p /= p.sum()
    q = quantize(p)
    assert q.sum() == T and q.min() >= 1
    assert np.abs(q / T - p).max() <= (1 + N) / T


def test_quantize_tie_break_is_deterministic():
    # six equal remainders of 0.5 ulp-free: 65536/6 is not an integer
    q = quantize(np.full(6, 1 / 6))
    assert q.sum() == T
    assert q.tolist() == sorted(q.tolist(), reverse=True)  # extra units go to the lowest indices


def _pairs(rng, n, N, conc=1.0):
    P = rng.dirichlet(np.full(N, conc), size=n)
    P = 0.999 * P + 0.001 / N
    x = np.array([rng.choice(N, p=p) for p in P])
    return P, x


def test_empty_and_single():
    s = encode([])
    assert s.nbits == 0 and s.data == b""
    assert decode(s, 0, lambda h: [0.5, 0.5]) == []
    s = encode([([0.5, 0.5], 1)])
    assert s.nbits <= 3
    assert decode(s, 1, lambda h: [0.5, 0.5]) == [1]


@given(st.integers(0, 2**32 - 1), st.integers(1, 300), st.integers(2, 40))
def test_round_trip_property(seed, n, N):
    rng = np.random.default_rng(seed)
    P, x = _pairs(rng, n, N, conc=rng.choice([0.05, 1.0]))
    s = encode(zip(P, x))
    assert decode(s, n, lambda h: P[len(h)]) == x.tolist()
    assert s.nbits <= quantized_bits(zip(P, x)) + 2


def test_bits_near_ideal(rng):
    n, N = 10_000, 256
    P, x = _pairs(rng, n, N)
    s = encode(zip(P, x))
    ideal = float(-np.log2(P[np.arange(n), x]).sum())
    assert s.nbits <= quantized_bits(zip(P, x)) + 2
    assert s.nbits <= ideal + 2 + 0.001 * n
    assert decode(s, n, lambda h: P[len(h)]) == x.tolist()


def test_decoder_sees_only_history(rng):
    P, x = _pairs(rng, 50, 5)
    seen = []

    def nxt(h):
        seen.append(list(h))
        return P[len(h)]

    decode(encode(zip(P, x)), 50, nxt)
    assert seen[10] == x[:10].tolist()


def test_corruption_detected(rng):
    P, x = _pairs(rng, 200, 8)
    s = encode(zip(P, x))
    bad = bytearray(s.data)
    bad[5] ^= 0x10
    with pytest.raises(DecodeError):
        decode(Bitstream(bytes(bad), s.nbits, s.crc), 200, lambda h: P[len(h)])
    with pytest.raises(DecodeError):
        decode(Bitstream(s.data[:-3], s.nbits, s.crc), 200, lambda h: P[len(h)])


def test_extreme_distributions():
    n = 2000
    p = np.full(256, 1e-9)
    p[7] = 1 - 255e-9
    pairs = [(p, 7)] * n + [(p, 3)]
    s = encode(pairs)
    assert decode(s, n + 1, lambda h: p) == [7] * n + [3]
    assert s.nbits <= quantized_bits(pairs) + 2


@pytest.mark.parametrize("kind", ["random", "repetitive", "text"])
def test_adaptive_bytes_round_trip(kind, rng):
    n = 200_000
    if kind == "random":
        data = rng.integers(0, 256, n, dtype=np.uint8).tobytes()
    elif kind == "repetitive":
        data = (b"abcabcabd" * (n // 9 + 1))[:n]
    else:
        data = (b"the quick brown fox jumps over the lazy dog. " * 5000)[:n]
    s, ideal = encode_adaptive_bytes(data)
    out = decode_adaptive_bytes(s, n)
    assert out.tobytes() == data
    assert s.nbits <= ideal + 2 + 0.001 * n


def test_adaptive_other_alphabets(rng):
    x = rng.integers(0, 1000, 5000)
    s, ideal = encode_adaptive_bytes(x, N=1000, refresh=97)
    assert np.array_equal(decode_adaptive_bytes(s, x.size, N=1000, refresh=97), x)
    with pytest.raises(DomainError):
        encode_adaptive_bytes(np.array([3, 1000]), N=1000)
