"""Adaptive order-k frequency models that produce probability matrices over P_eps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .core import DomainError, check_alphabet, check_symbol, epsilon_from_bits, floor_to_epsilon

# dense count tables; N^(k+1) entries per model
MAX_TABLE = 1 << 26


@dataclass(frozen=True)
class ModelConfig:
    N: int = 256
    B: int = 12
    orders: tuple[int, ...] = (0, 1, 2)
    delta: float = 1.0

    def __post_init__(self):
        check_alphabet(self.N)
        object.__setattr__(self, "orders", tuple(int(k) for k in self.orders))
        if not self.orders:
            raise DomainError("need at least one context order")
        if len(set(self.orders)) != len(self.orders):
            raise DomainError(f"context orders must be distinct, got {self.orders}")
        if min(self.orders) < 0:
            raise DomainError("context orders must be non-negative")
        if self.B < math.log2(self.N) or self.B > 255:
            raise DomainError(f"B={self.B} must satisfy log2(N) <= B <= 255 for N={self.N}")
        if not self.delta > 0:
            raise DomainError(f"smoothing constant must be positive, got {self.delta}")
        for k in self.orders:
            if self.N ** (k + 1) > MAX_TABLE:
                raise DomainError(f"order {k} needs a {self.N}^{k + 1} count table; too large")

    @property
    def eps(self) -> float:
        return epsilon_from_bits(self.B)

    @property
    def m(self) -> int:
        return len(self.orders)


class ContextModel:
    """Additive-smoothed order-k count model.

    Until k symbols have been seen the model predicts from the longest
    context available. Predictions are floored to ``eps``; the stored counts
    are exact.
    """

    def __init__(self, N: int, order: int, B: int = 12, delta: float = 1.0):
        self.N = check_alphabet(N)
        self.order = int(order)
        self.eps = epsilon_from_bits(B)
        self.delta = float(delta)
        self.counts: dict[tuple[int, ...], np.ndarray] = {}
        self.history: list[int] = []

    @property
    def context(self) -> tuple[int, ...]:
        if self.order == 0:
            return ()
        return tuple(self.history[-self.order:])

    def raw_predict(self) -> np.ndarray:
        c = self.counts.get(self.context)
        if c is None:
            return np.full(self.N, 1.0 / self.N)
        return (c + self.delta) / (c.sum() + self.N * self.delta)

    def predict(self) -> np.ndarray:
        return floor_to_epsilon(self.raw_predict(), self.eps)

    def update(self, x: int) -> None:
        x = check_symbol(x, self.N)
        ctx = self.context
        if ctx not in self.counts:
            self.counts[ctx] = np.zeros(self.N, dtype=np.int64)
        self.counts[ctx][x] += 1
        self.history.append(x)
        if len(self.history) > self.order:
            del self.history[: len(self.history) - self.order]


def model_predict(model: ContextModel) -> np.ndarray:
    return model.predict()


def model_update(model: ContextModel, x: int) -> ContextModel:
    model.update(x)
    return model


def build_matrix_sequence(config: ModelConfig, x) -> np.ndarray:
    """Matrix sequence ``(n, m, N)``: row i of step k is model i's prediction given x^{k-1}."""
    xs = np.asarray(x, dtype=np.int64)
    if xs.ndim != 1 or xs.size == 0:
        raise DomainError("need a non-empty symbol sequence")
    if xs.min() < 0 or xs.max() >= config.N:
        raise DomainError("symbol outside the alphabet")
    orders = np.asarray(config.orders, dtype=np.int64)
    return _jit.build_matrices(xs, config.N, orders, float(config.delta), config.eps)


@dataclass
class ModelBank:
    """Python-side bank of context models (reference for the compiled tables)."""

    config: ModelConfig
    models: list[ContextModel] = field(init=False)

    def __post_init__(self):
        c = self.config
        self.models = [ContextModel(c.N, k, c.B, c.delta) for k in c.orders]

    def predict(self) -> np.ndarray:
        return np.stack([mdl.predict() for mdl in self.models])

    def update(self, x: int) -> None:
        for mdl in self.models:
            mdl.update(x)
