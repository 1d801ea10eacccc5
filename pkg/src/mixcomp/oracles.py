"""Slow, independent reference implementations used by selftest and the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .mixtures import MixtureKind, geo_mix


def project_simplex_bruteforce(v) -> np.ndarray:
    """Projection onto the simplex by trying every support set (small m only)."""
    v = np.asarray(v, dtype=float)
    m = v.size
    best, best_d = None, np.inf
    for k in range(1, m + 1):
        for S in itertools.combinations(range(m), k):
            idx = list(S)
            w = np.zeros(m)
            w[idx] = v[idx] - (v[idx].sum() - 1.0) / k
            if w.min() < -1e-12:
                continue
            d = float(((w - v) ** 2).sum())
            if d < best_d:
                best, best_d = w, d
    return best


def _loss(kind, w, P, x):
    # direct formulas so that w may step slightly off the simplex
    if kind is MixtureKind.LIN:
        return -math.log2(float(w @ P[:, x]))
    return -math.log2(float(geo_mix(w, P)[x]))


def finite_difference_grad(kind, w, P, x: int, h: float = 1e-6) -> np.ndarray:
    """Central differences of the per-step code length in each weight."""
    kind = MixtureKind.parse(kind)
    w = np.asarray(w, dtype=float)
    P = np.asarray(P, dtype=float)
    g = np.empty(w.size)
    for i in range(w.size):
        e = np.zeros(w.size)
        e[i] = h
        g[i] = (_loss(kind, w + e, P, x) - _loss(kind, w - e, P, x)) / (2 * h)
    return g


def grid_static_optimum(value, resolution: float = 1e-4, refine: bool = True) -> tuple[np.ndarray, float]:
    """Minimise ``value(w)`` over the two-model simplex by a grid scan plus golden-section search."""
    steps = int(round(1.0 / resolution))
    ts = np.linspace(0.0, 1.0, steps + 1)
    vals = np.array([value(np.array([t, 1.0 - t])) for t in ts])
    k = int(np.argmin(vals))
    t_best, f_best = ts[k], vals[k]
    if refine:
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, steps)]
        phi = (math.sqrt(5) - 1) / 2
        a, b = hi - phi * (hi - lo), lo + phi * (hi - lo)
        fa, fb = value(np.array([a, 1 - a])), value(np.array([b, 1 - b]))
        for _ in range(80):
            if fa < fb:
                hi, b, fb = b, a, fa
                a = hi - phi * (hi - lo)
                fa = value(np.array([a, 1 - a]))
            else:
                lo, a, fa = a, b, fb
                b = lo + phi * (hi - lo)
                fb = value(np.array([b, 1 - b]))
        for t, f in ((a, fa), (b, fb)):
            if f < f_best:
                t_best, f_best = t, f
    return np.array([t_best, 1.0 - t_best]), float(f_best)


def brute_force_segmentation(n: int, cost, penalty: float, scale: float = 1.0):
    """Enumerate all 2^(n-1) segmentations.

    Returns ``(objective, starts)``; ties go to the lexicographically
    smallest reversed start list (latest segment starting earliest).
    Objectives are accumulated segment by segment, left to right.
    """
    best_obj, best_key = np.inf, None
    for mask in range(1 << (n - 1)):
        starts = [1] + [j + 2 for j in range(n - 1) if mask >> j & 1]
        ends = starts[1:] + [n + 1]
        total = 0.0
        for a, b in zip(starts, ends):
            total = (total + penalty) + scale * cost(a, b - 1)
        key = tuple(reversed(starts))
        if total < best_obj or (total == best_obj and key < best_key):
            best_obj, best_key = total, key
    return best_obj, list(reversed(best_key))
