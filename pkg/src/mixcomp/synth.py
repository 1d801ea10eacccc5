"""Seeded synthetic (x, P) instances over P_eps for experiments and bound checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, check_alphabet, epsilon_from_bits, floor_to_epsilon

SCENARIOS = ("iid", "switching", "adversarial")


@dataclass
class Instance:
    x: np.ndarray  # (n,) symbols
    P: np.ndarray  # (n, m, N) model distributions
    scenario: str
    seed: int
    boundaries: list[int]  # 1-based starts of the generating segments

    @property
    def n(self) -> int:
        return self.x.size


def random_matrices(rng: np.random.Generator, n: int, m: int, N: int, eps: float,
                    concentration: float = 1.0) -> np.ndarray:
    """``(n, m, N)`` Dirichlet rows floored to ``eps``."""
    raw = rng.dirichlet(np.full(N, concentration), size=(n, m))
    return floor_to_epsilon(raw, eps)


def make_instance(scenario: str, n: int, m: int, N: int, B: float, seed: int,
                  segments: int = 2, concentration: float = 0.5) -> Instance:
    """Build one instance.

    * ``iid``: every step draws fresh model rows; the symbol comes from the
      row of a uniformly chosen model.
    * ``switching``: the sequence is cut into ``segments`` equal parts and
      part j is drawn from model ``j mod m``, so the best model changes.
    * ``adversarial``: random rows, and each symbol is the one the plain
      average of the models finds least likely.
    """
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if n < 1 or m < 1:
        raise DomainError("need n >= 1 and m >= 1")
    check_alphabet(N)
    eps = epsilon_from_bits(B)
    if N * eps > 1.0 + 1e-15:
        raise DomainError(f"N={N} symbols cannot all get probability 2^-{B}")
    rng = np.random.default_rng(seed)
    P = random_matrices(rng, n, m, N, eps, concentration)
    boundaries = [1]
    if scenario == "iid":
        src = rng.integers(0, m, size=n)
    elif scenario == "switching":
        if not 1 <= segments <= n:
            raise DomainError(f"need 1 <= segments <= n, got {segments}")
        cuts = (np.arange(segments) * n) // segments
        boundaries = [int(c) + 1 for c in cuts]
        src = np.repeat(np.arange(segments) % m, np.diff(np.append(cuts, n)))
    else:
        x = P.mean(axis=1).argmin(axis=1).astype(np.int64)
        return Instance(x, P, scenario, seed, boundaries)
    # inverse-CDF draw from the chosen model's row at each step
    rows = P[np.arange(n), src]
    u = rng.random(n)[:, None]
    x = np.minimum((np.cumsum(rows, axis=1) < u).sum(axis=1), N - 1).astype(np.int64)
    return Instance(x, P, scenario, seed, boundaries)
