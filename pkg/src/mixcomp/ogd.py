"""Projected online gradient descent over mixture weights.

``run_mix_ogd`` codes each symbol with the current weights, then takes one
projected gradient step on that symbol's code length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .core import DomainError, as_sequence
from .mixtures import Domain, MixtureKind, NicenessConstant, horizon_factor, niceness_constant


class ConfigError(ValueError):
    """Inconsistent or incomplete run configuration."""


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DomainError(f"expected a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("cannot project a non-finite vector")
    out = np.empty_like(v)
    _jit.project_simplex(v, out)
    return out


def project_box(v, r: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if not r > 0:
        raise DomainError(f"box radius must be positive, got {r}")
    if not np.all(np.isfinite(v)):
        raise DomainError("cannot project a non-finite vector")
    return np.clip(v, -r, r)


def project(v, domain: Domain) -> np.ndarray:
    if domain.is_simplex:
        return project_simplex(v)
    return project_box(v, domain.r)


def ogd_step(w, gradient, alpha: float, domain: Domain) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return project(w - alpha * np.asarray(gradient, dtype=float), domain)


# Table rows: 1 LIN horizon-free, 2 LIN horizon-aware, 3 GEO horizon-free, 4 GEO horizon-aware
TABLE_ROWS = {1: (MixtureKind.LIN, False), 2: (MixtureKind.LIN, True),
              3: (MixtureKind.GEO, False), 4: (MixtureKind.GEO, True)}


def row_kind(row: int) -> MixtureKind:
    if row not in TABLE_ROWS:
        raise ConfigError(f"table row must be 1..4, got {row}")
    return TABLE_ROWS[row][0]


def row_needs_horizon(row: int) -> bool:
    row_kind(row)
    return TABLE_ROWS[row][1]


def step_size(row: int, m: int, B: float, n: int | None = None) -> float:
    """Step size prescribed by the code-length table row for ``(m, B[, n])``."""
    kind = row_kind(row)
    if m < 2 or B < 1:
        raise DomainError(f"need m >= 2 and B >= 1, got m={m}, B={B}")
    if row_needs_horizon(row):
        if n is None or n < 1:
            raise ConfigError(f"table row {row} needs the horizon n >= 1")
        scale = 1.0 / math.sqrt(n)
    else:
        scale = 1.0
    if kind is MixtureKind.LIN:
        return 8.0 * B * scale / (17.0 * m * 4.0**B)
    return 10.0 * scale / (7.0 * m * B * B)


def row_niceness(row: int, m: int, B: float, n: int | None = None) -> NicenessConstant:
    """The constant ``a`` a table row's step size corresponds to."""
    f = horizon_factor(n) if row_needs_horizon(row) else 1.0
    return niceness_constant(row_kind(row), m, B, f)


def step_size_from_b(a, b: float) -> float:
    a = a.a if isinstance(a, NicenessConstant) else float(a)
    if not b > 1:
        raise DomainError(f"b must exceed 1, got {b}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return 2.0 * (1.0 - 1.0 / b) / a


def b_for_horizon(n: int) -> float:
    return 1.0 + 1.0 / math.sqrt(n)


@dataclass
class OgdConfig:
    kind: MixtureKind
    alpha: float
    domain: Domain = field(default_factory=Domain.simplex)
    w1: np.ndarray | None = None
    b: float | None = None
    n: int | None = None

    def __post_init__(self):
        self.kind = MixtureKind.parse(self.kind)
        if not self.alpha > 0:
            raise ConfigError(f"step size must be positive, got {self.alpha}")
        if self.kind is MixtureKind.LIN and not self.domain.is_simplex:
            raise ConfigError("the linear mixture is only defined on the simplex")
        if self.w1 is not None:
            self.w1 = np.asarray(self.w1, dtype=float)
            if not self.domain.contains(self.w1):
                raise ConfigError(f"initial weights {self.w1} outside {self.domain}")

    def initial_weights(self, m: int) -> np.ndarray:
        if self.w1 is None:
            return self.domain.uniform_start(m)
        if self.w1.size != m:
            raise ConfigError(f"w1 has {self.w1.size} entries, expected {m}")
        return self.w1.copy()


@dataclass
class OgdTrace:
    weights: np.ndarray  # (n, m) weights used to code step k
    gradients: np.ndarray  # (n, m)
    bits: np.ndarray  # (n,) per-step code lengths
    final_weights: np.ndarray  # w_{n+1}
    mixtures: np.ndarray | None = None  # (n, N) when requested
    alpha: float = float("nan")
    kind: MixtureKind = MixtureKind.GEO
    domain: Domain = field(default_factory=Domain.simplex)

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def total_bits(self) -> float:
        return float(self.bits.sum())

    def records(self):
        """Per-step dictionaries with the fixed trace field names."""
        gn = np.sqrt((self.gradients**2).sum(axis=1))
        for k in range(self.n):
            yield {"step": k + 1, "w": self.weights[k].tolist(),
                   "bits": float(self.bits[k]), "grad_norm": float(gn[k])}


def run_mix_ogd(config: OgdConfig, x, P, store_mixtures: bool = False) -> OgdTrace:
    """Code ``x`` under the mixture of ``P`` while adapting the weights by OGD."""
    Ps = as_sequence(P)
    xs = np.asarray(x, dtype=np.int64)
    if xs.ndim != 1 or xs.size != Ps.shape[0]:
        raise ConfigError(f"{xs.size} symbols but {Ps.shape[0]} probability matrices")
    if xs.size and (xs.min() < 0 or xs.max() >= Ps.shape[2]):
        raise DomainError("symbol outside the alphabet")
    w1 = config.initial_weights(Ps.shape[1])
    d = config.domain
    W, G, bits, mixes, w_end = _jit.run_ogd(
        Ps, xs, w1, float(config.alpha), int(config.kind), not d.is_simplex,
        float(d.r), bool(store_mixtures))
    return OgdTrace(W, G, bits, w_end, mixes if store_mixtures else None,
                    float(config.alpha), config.kind, d)
