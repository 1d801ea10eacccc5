"""Linear (LIN) and geometric (GEO) mixtures of model distributions.

Both mixtures map a weight vector ``w`` and an ``(m, N)`` probability
matrix ``P`` to a single distribution over the alphabet. All losses and
gradients are in bits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import LOG2E, DomainError, as_matrix, check_symbol

SIMPLEX_TOL = 1e-12


class MixtureKind(enum.IntEnum):
    LIN = 0
    GEO = 1

    @classmethod
    def parse(cls, value) -> "MixtureKind":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise DomainError(f"unknown mixture kind {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class Domain:
    """Feasible weight set: the unit simplex, or the box ``[-r, r]^m``."""

    shape: str = "simplex"
    r: float = 1.0

    def __post_init__(self):
        if self.shape not in ("simplex", "box"):
            raise DomainError(f"unknown domain shape {self.shape!r}")
        if self.shape == "box" and not self.r > 0:
            raise DomainError(f"box radius must be positive, got {self.r}")

    @classmethod
    def simplex(cls) -> "Domain":
        return cls("simplex")

    @classmethod
    def box(cls, r: float) -> "Domain":
        return cls("box", float(r))

    @property
    def is_simplex(self) -> bool:
        return self.shape == "simplex"

    def diameter(self, m: int) -> float:
        if self.is_simplex:
            return math.sqrt(2.0)
        return 2.0 * self.r * math.sqrt(m)

    def contains(self, w, tol: float = SIMPLEX_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)):
            return False
        if self.is_simplex:
            return bool(w.min() >= -tol and abs(w.sum() - 1.0) <= tol)
        return bool(np.all(np.abs(w) <= self.r + tol))

    def uniform_start(self, m: int) -> np.ndarray:
        if self.is_simplex:
            return np.full(m, 1.0 / m)
        return np.full(m, min(1.0 / m, self.r))

    def __str__(self):
        return "simplex" if self.is_simplex else f"box({self.r:g})"


@dataclass(frozen=True)
class NicenessConstant:
    a: float
    provenance: str


def _check_simplex(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if not Domain.simplex().contains(w):
        raise DomainError(f"weight vector not in the unit simplex: {w!r}")
    return w


def log_losses(P) -> np.ndarray:
    """Matrix of per-model code lengths ``-log2 P`` (columns are l(x))."""
    return -np.log2(np.asarray(P, dtype=float))


def lin_mix(w, P) -> np.ndarray:
    P = as_matrix(P)
    w = _check_simplex(w)
    if w.size != P.shape[0]:
        raise DomainError(f"weight length {w.size} != model count {P.shape[0]}")
    return w @ P


def geo_mix(w, P) -> np.ndarray:
    """Normalised weighted geometric mean of the model rows.

    Evaluated as a softmax of the exponents ``-l(x)^T w`` in base 2, with
    the largest exponent subtracted first.
    """
    P = as_matrix(P)
    w = np.asarray(w, dtype=float)
    if w.size != P.shape[0]:
        raise DomainError(f"weight length {w.size} != model count {P.shape[0]}")
    e = -(w @ log_losses(P))
    e -= e.max()
    q = np.exp2(e)
    return q / q.sum()


def mix(kind, w, P) -> np.ndarray:
    kind = MixtureKind.parse(kind)
    return lin_mix(w, P) if kind is MixtureKind.LIN else geo_mix(w, P)


def mixture_loss(kind, w, P, x: int) -> float:
    p = mix(kind, w, P)
    return float(-np.log2(p[check_symbol(x, p.size)]))


def lin_loss_grad(w, P, x: int) -> np.ndarray:
    """Gradient of ``-log2 lin(x; w, P)``: ``-log2(e) p(x) / (w^T p(x))``."""
    P = as_matrix(P)
    w = _check_simplex(w)
    col = P[:, check_symbol(x, P.shape[1])]
    return -LOG2E * col / (w @ col)


def geo_loss_grad(w, P, x: int) -> np.ndarray:
    """Gradient of ``-log2 geo(x; w, P)``.

    Equals ``sum_{y != x} geo(y) (l(x) - l(y))`` where ``l(y)`` is the
    column of per-model code lengths of ``y``.
    """
    P = as_matrix(P)
    x = check_symbol(x, P.shape[1])
    L = log_losses(P)
    g = geo_mix(w, P)
    diff = L[:, [x]] - L  # (m, N); column x is zero
    return diff @ g


def loss_grad(kind, w, P, x: int) -> np.ndarray:
    kind = MixtureKind.parse(kind)
    if kind is MixtureKind.LIN:
        return lin_loss_grad(w, P, x)
    return geo_loss_grad(w, P, x)


def niceness_constant(kind, m: int, B: float, f: float = 1.0) -> NicenessConstant:
    """Closed-form constant ``a`` with ``|grad|^2 <= a * loss`` over P_eps, eps = 2^-B.

    LIN: ``17 m 4^B / (8 B) * f``; GEO: ``7 m B^2 / 10 * f``. ``f`` is 1 for
    horizon-free step sizes and ``2 sqrt(n) / (1 + sqrt(n))`` for the
    horizon-aware ones.
    """
    kind = MixtureKind.parse(kind)
    if B < 1:
        raise DomainError(f"B must be >= 1, got {B}")
    if m < 2:
        raise DomainError(f"need at least two models, got m={m}")
    if not 1.0 <= f <= 2.0:
        raise DomainError(f"horizon factor f must lie in [1, 2], got {f}")
    if kind is MixtureKind.LIN:
        return NicenessConstant(17.0 * m * 4.0**B / (8.0 * B) * f, "LIN: 17 m 4^B / (8 B)")
    return NicenessConstant(7.0 * m * B * B / 10.0 * f, "GEO: 7 m B^2 / 10")


def horizon_factor(n: int) -> float:
    s = math.sqrt(n)
    return 2.0 * s / (1.0 + s)


def lemma_lin_constant(m: int, p_min: float, p_max: float) -> float:
    """Smallest ``a`` certified by the LIN niceness argument for given extrema."""
    return m * LOG2E**2 * p_max**2 / (p_min**2 * math.log2(1.0 / p_min))


def lemma_geo_constant(m: int, p_min: float, p_max: float) -> float:
    """Smallest ``a`` certified by the GEO niceness argument for given extrema."""
    return m / LOG2E * math.log2(p_max / p_min) ** 2
