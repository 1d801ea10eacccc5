"""Acceptance criteria 1-10, each at its stated scale and tolerance.

Every test records a one-line verdict that is printed in the terminal
summary ("criterion k: PASS/FAIL ...").
"""

import functools
import time

import numpy as np
import pytest

from mixcomp.analysis import (BestModelCost, StaticObjective, best_segmentation, best_single_model,
                              check_bound, example1_eps_limit, example1_matrix, lemma5_violations,
                              lemma6_violations, optimal_static_weights)
from mixcomp.coder import decode_adaptive_bytes, encode_adaptive_bytes
from mixcomp.container import CompressConfig, compress, decompress, run_codec
from mixcomp.core import floor_to_epsilon
from mixcomp.mixtures import Domain, MixtureKind, geo_mix, loss_grad, mixture_loss, niceness_constant
from mixcomp.models import ModelConfig
from mixcomp.ogd import OgdConfig, run_mix_ogd, step_size, step_size_from_b
from mixcomp.oracles import brute_force_segmentation, finite_difference_grad, grid_static_optimum
from mixcomp.synth import SCENARIOS, make_instance

from _text import english_sample
from conftest import ACCEPTANCE, ACCEPTANCE_RAN

SIMPLEX = Domain.simplex()


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


@pytest.fixture(autouse=True)
def _register(request):
    k = int(request.node.name.split("_")[1])
    ACCEPTANCE_RAN.append(k)


def _alphabet(B: int) -> int:
    # N = 2^B would make the eps floor force uniform rows
    return max(2, min(2 ** (B - 1), 16))


# ---------------------------------------------------------------- criterion 1

def test_01_gradient_fidelity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m = int(rng.choice([2, 4, 8]))
        N = int(rng.choice([2, 16, 256]))
        P = floor_to_epsilon(rng.dirichlet(np.full(N, rng.choice([0.2, 1.0])), size=m), 2.0**-12)
        w = rng.dirichlet(np.ones(m))
        x = int(rng.integers(N))
        for kind in MixtureKind:
            an = loss_grad(kind, w, P, x)
            fd = finite_difference_grad(kind, w, P, x, h=1e-6)
            worst = max(worst, float(np.abs(an - fd).max() / max(np.abs(an).max(), 1e-12)))
    dt = time.perf_counter() - t0
    record(1, worst < 1e-5 and dt < 10,
           f"max relative error {worst:.2e} over 1000 draws x 2 mixtures in {dt:.1f}s")


# ---------------------------------------------------------------- criterion 2

def _extreme_matrix(rng, m, N, eps):
    """Rows at the corners of P_eps: one entry 1-(N-1)eps, the rest eps."""
    P = np.full((m, N), eps)
    P[np.arange(m), rng.integers(0, N, m)] = 1 - (N - 1) * eps
    return P


def test_02_niceness_property():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    bad, worst, draws = 0, 0.0, 0
    for B in (1, 4, 8):
        eps = 2.0**-B
        for kind in MixtureKind:
            for i in range(10_000):
                m = int(rng.integers(2, 9))
                N = int(rng.integers(2, min(2**B, 64) + 1))
                if i % 3 == 0:
                    P = _extreme_matrix(rng, m, N, eps)
                else:
                    P = floor_to_epsilon(rng.dirichlet(np.full(N, rng.choice([0.02, 0.3, 1.0])), size=m), eps)
                w = rng.dirichlet(np.full(m, rng.choice([0.05, 1.0])))
                x = int(rng.integers(N))
                g = loss_grad(kind, w, P, x)
                a = niceness_constant(kind, m, B).a
                ell = mixture_loss(kind, w, P, x)
                lhs = float(g @ g)
                bad += lhs > a * ell * (1 + 1e-9)
                if ell > 0:
                    worst = max(worst, lhs / (a * ell))
                draws += 1
    dt = time.perf_counter() - t0
    record(2, bad == 0 and dt < 30,
           f"{bad} violations in {draws} draws (max |grad|^2/(a l) = {worst:.3f}) in {dt:.1f}s")


# ---------------------------------------------------------------- criterion 3

@functools.cache
def _criterion3():
    """Proposition 1 runs; returns (violations, grid mismatches, worst slack ratio, mix<=best pairs, seconds)."""
    t0 = time.perf_counter()
    B, N = 8, 16
    violations, grid_bad, worst_grid, runs = 0, 0, 0.0, 0
    pairs = []
    for m in (2, 3):
        for n in (100, 1000, 10_000):
            for b in (1.5, 2.0, 4.0):
                for t in range(50):
                    kind = ("lin", "geo")[t % 2]
                    seed = len(pairs)
                    inst = make_instance(SCENARIOS[t % 3], n, m, N, B, seed, segments=4)
                    a = niceness_constant(kind, m, B)
                    tr = run_mix_ogd(OgdConfig(kind, step_size_from_b(a, b)), inst.x, inst.P)
                    rep = check_bound(tr, inst.x, inst.P, "prop1", a=a, b=b)
                    violations += not rep.holds
                    ell = rep.params["l_star"]
                    if m == 2:
                        obj = StaticObjective(kind, inst.x, inst.P)
                        _, f_grid = grid_static_optimum(obj.value, resolution=1e-2)
                        gap = abs(ell - f_grid)
                        worst_grid = max(worst_grid, gap)
                        grid_bad += gap > 1e-6
                    pairs.append((ell, best_single_model(inst.x, inst.P)[1]))
                    runs += 1
    return violations, grid_bad, worst_grid, runs, pairs, time.perf_counter() - t0


def test_03_proposition1():
    violations, grid_bad, worst_grid, runs, _, dt = _criterion3()
    record(3, violations == 0 and grid_bad == 0 and dt < 300,
           f"{violations} violations in {runs} runs; solver vs grid max gap {worst_grid:.1e} bits; {dt:.0f}s")


# ---------------------------------------------------------------- criterion 4

@functools.cache
def _criterion4():
    t0 = time.perf_counter()
    violations, runs, min_ratio = 0, 0, np.inf
    pairs = []
    configs = [(row, B) for row in (1, 2) for B in (2, 8)] + [(row, B) for row in (3, 4) for B in (1, 8)]
    for row, B in configs:
        kind = "lin" if row <= 2 else "geo"
        for n in (1000, 10_000):
            for m in (2, 4):
                for t in range(3):
                    seed = 10_000 + runs
                    inst = make_instance(SCENARIOS[t], n, m, _alphabet(B), B, seed, segments=5)
                    tr = run_mix_ogd(OgdConfig(kind, step_size(row, m, B, n)), inst.x, inst.P)
                    rep = check_bound(tr, inst.x, inst.P, f"row{row}", B=B)
                    violations += not rep.holds
                    min_ratio = min(min_ratio, rep.rhs / rep.lhs)
                    opt = optimal_static_weights(kind, SIMPLEX, inst.x, inst.P)
                    pairs.append((opt.bits, best_single_model(inst.x, inst.P)[1]))
                    runs += 1
    return violations, runs, min_ratio, pairs, time.perf_counter() - t0


def test_04_table1_rows():
    violations, runs, min_ratio, _, dt = _criterion4()
    record(4, violations == 0 and dt < 600,
           f"{violations} violations in {runs} runs over rows 1-4 (min rhs/lhs {min_ratio:.3f}); {dt:.0f}s")


# ---------------------------------------------------------------- criterion 5

def test_05_segmentation_dp():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    mismatches, total = 0, 0
    for n in range(1, 13):
        for t in range(100):
            m = int(rng.integers(2, 5))
            if t % 4 == 0:
                # dyadic probabilities make costs exact integers, so ties occur
                P = np.stack([[rng.permutation([0.5, 0.25, 0.125, 0.125]) for _ in range(m)]
                              for _ in range(n)])
                pen = float(rng.integers(0, 6))
            else:
                P = floor_to_epsilon(rng.dirichlet(np.ones(4), size=(n, m)), 0.01)
                pen = float(rng.uniform(0, 8))
            x = rng.integers(0, 4, n)
            scale = float(rng.choice([1.0, 2.0]))
            seg = best_segmentation(x, P, pen, scale=scale)
            obj, starts = brute_force_segmentation(n, BestModelCost(x, P), pen, scale)
            mismatches += not (seg.objective == obj and seg.starts == starts)
            total += 1
    dt = time.perf_counter() - t0
    record(5, mismatches == 0 and dt < 60,
           f"{mismatches} mismatches against brute force over {total} instances (n = 1..12); {dt:.1f}s")


# ---------------------------------------------------------------- criterion 6

def test_06_static_mix_beats_best_model():
    pairs = _criterion3()[4] + _criterion4()[3]
    bad = sum(mix > best + 1e-9 for mix, best in pairs)
    record(6, bad == 0, f"l*(mix) <= l*(best) on {len(pairs) - bad} of {len(pairs)} instances")


# ---------------------------------------------------------------- criterion 7

def test_07_example1():
    t0 = time.perf_counter()
    v = float(geo_mix([0.5, 0.5], example1_matrix(4, 0.9, 0.2))[0])
    rng = np.random.default_rng(7)
    fails = 0
    for _ in range(1000):
        N = int(rng.integers(3, 1000))
        q = float(rng.uniform(1e-3, 1 - 1e-3))
        eps = float(rng.uniform(0, 1)) * example1_eps_limit(N)
        if eps <= 0:
            eps = example1_eps_limit(N) / 2
        fails += not geo_mix([0.5, 0.5], example1_matrix(N, q, eps))[0] > q
    dt = time.perf_counter() - t0
    record(7, abs(v - 0.931129) <= 1e-6 and v > 0.9 and fails == 0 and dt < 5,
           f"geo(1) = {v:.6f}; {fails} failures of geo(1) > q in 1000 samples; {dt:.2f}s")


# ---------------------------------------------------------------- criterion 8

def test_08_appendix_lemmas():
    t0 = time.perf_counter()
    z = np.linspace(0, 1, 100_002)[1:-1]
    bad5 = lemma5_violations(z)
    a = np.linspace(0, 0.5, 1001)[1:]
    zz = np.linspace(0, 1, 1002)[1:-1]
    bad6 = lemma6_violations(a, zz)
    dt = time.perf_counter() - t0
    record(8, bad5 == 0 and bad6 == 0 and dt < 10,
           f"lemma 5: {bad5} violations on {z.size} points; lemma 6: {bad6} on a "
           f"{a.size}x{zz.size} grid; {dt:.2f}s")


# ---------------------------------------------------------------- criterion 9

def _big_input(kind: str, n: int) -> bytes:
    if kind == "random":
        return np.random.default_rng(9).integers(0, 256, n, dtype=np.uint8).tobytes()
    if kind == "repetitive":
        unit = b"abracadabra " * 7 + b"\x00\xff" * 3
        return (unit * (n // len(unit) + 1))[:n]
    text = english_sample()
    return (text * (n // len(text) + 1))[:n]


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["random", "repetitive", "text"])
def test_09_coder_round_trip(kind):
    n = 100_000_000
    data = _big_input(kind, n)
    t0 = time.perf_counter()
    stream, ideal = encode_adaptive_bytes(data)
    out = decode_adaptive_bytes(stream, n)
    dt = time.perf_counter() - t0
    exact = out.tobytes() == data
    limit = ideal + 2 + 0.001 * n
    prev = ACCEPTANCE.get(9, (True, ""))
    ok = exact and stream.nbits <= limit and dt < 120
    detail = (f"{kind}: exact={exact}, payload - ideal = {stream.nbits - ideal:+.0f} bits "
              f"(limit +{2 + 0.001 * n:.0f}), {dt:.0f}s")
    record(9, prev[0] and ok, (prev[1] + "; " if prev[1] else "") + detail)


# --------------------------------------------------------------- criterion 10

def test_10_compression_sanity():
    text = english_sample(1_000_000)
    blob, stats = compress(text)  # GEO preset, orders {0, 1, 2}
    exact = decompress(blob) == text
    xs = np.frombuffer(text, dtype=np.uint8).astype(np.int64)
    singles = {}
    for k in (0, 1, 2):
        cfg = CompressConfig(model=ModelConfig(orders=(k,)))
        singles[k] = run_codec(xs, cfg)[1]
    best_k = min(singles, key=singles.get)
    beats = stats.payload_bits < singles[best_k]

    same = np.full(1_000_000, ord("e"), dtype=np.int64)
    buf, nbits, ideal, *_, (W, bits, _) = run_codec(same, CompressConfig(), code=True, record=True)
    after_ideal = float(bits[1000:].mean())
    after_coded = (nbits - float(bits[:1000].sum())) / (same.size - 1000)
    record(10, exact and beats and after_ideal < 0.1 and after_coded < 0.1,
           f"text: GEO {stats.bits_per_symbol:.4f} bits/byte vs best single order {best_k} "
           f"{singles[best_k] / xs.size:.4f}; identical bytes after 10^3: {after_ideal:.4f} "
           f"(ideal), {after_coded:.4f} (coded) bits/symbol")
