"""Alphabets, distributions, probability matrices and ideal code lengths.

Symbols are 0-based integers ``0 .. N-1``. A probability matrix is an
``(m, N)`` float array whose row ``i`` is the distribution of model ``i``
and whose column ``x`` is the vector of model probabilities of symbol ``x``.
A matrix sequence is an ``(n, m, N)`` array.
"""

from __future__ import annotations

import numpy as np

SUM_TOL = 1e-12
LOG2E = 1.4426950408889634


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def check_alphabet(N: int) -> int:
    N = int(N)
    if N < 2:
        raise DomainError(f"alphabet size must be >= 2, got {N}")
    return N


def check_symbol(x: int, N: int) -> int:
    if not 0 <= int(x) < N:
        raise DomainError(f"symbol {x} outside alphabet 0..{N - 1}")
    return int(x)


def is_distribution(p, eps: float = 0.0, tol: float = SUM_TOL) -> bool:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        return False
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
        return False
    if eps > 0.0 and p.min() < eps * (1 - 1e-12):
        return False
    return abs(p.sum() - 1.0) <= tol


def as_distribution(p, eps: float = 0.0) -> np.ndarray:
    """Validate ``p`` as a member of P_+ (or P_eps when ``eps > 0``)."""
    arr = np.asarray(p, dtype=float)
    if not is_distribution(arr, eps):
        raise DomainError(f"not a distribution over P_{eps or '+'}: {arr!r}")
    return arr


def as_matrix(P, eps: float = 0.0) -> np.ndarray:
    """Validate an ``(m, N)`` probability matrix with ``m >= 2``."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2 or P.shape[1] < 2:
        raise DomainError(f"probability matrix must be (m>=2, N>=2), got {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P <= 0.0):
        raise DomainError("probability matrix has non-positive or non-finite entries")
    if eps > 0.0 and P.min() < eps * (1 - 1e-12):
        raise DomainError(f"probability matrix has entries below eps={eps}")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > SUM_TOL):
        raise DomainError("probability matrix rows do not sum to 1")
    return P


def as_sequence(Ps, eps: float = 0.0) -> np.ndarray:
    """Validate an ``(n, m, N)`` matrix sequence (non-empty, homogeneous)."""
    Ps = np.asarray(Ps, dtype=float)
    if Ps.ndim != 3 or Ps.shape[0] == 0:
        raise DomainError(f"matrix sequence must be a non-empty (n, m, N) array, got {Ps.shape}")
    if Ps.shape[1] < 2 or Ps.shape[2] < 2:
        raise DomainError(f"matrix sequence needs m>=2 and N>=2, got {Ps.shape}")
    if not np.all(np.isfinite(Ps)) or np.any(Ps <= 0.0):
        raise DomainError("matrix sequence has non-positive or non-finite entries")
    if eps > 0.0 and Ps.min() < eps * (1 - 1e-12):
        raise DomainError(f"matrix sequence has entries below eps={eps}")
    if np.any(np.abs(Ps.sum(axis=2) - 1.0) > SUM_TOL):
        raise DomainError("matrix sequence rows do not sum to 1")
    return Ps


def code_length(p, x: int) -> float:
    """Ideal code length ``-log2 p(x)`` in bits."""
    p = as_distribution(p)
    return float(-np.log2(p[check_symbol(x, p.size)]))


def pmin_pmax(P) -> tuple[float, float]:
    P = as_matrix(P)
    return float(P.min()), float(P.max())


def pmin(P, x: int | None = None) -> float:
    P = as_matrix(P)
    if x is None:
        return float(P.min())
    return float(P[:, check_symbol(x, P.shape[1])].min())


def pmax(P, x: int | None = None) -> float:
    P = as_matrix(P)
    if x is None:
        return float(P.max())
    return float(P[:, check_symbol(x, P.shape[1])].max())


def floor_to_epsilon(p, eps: float) -> np.ndarray:
    """Mix ``p`` with the uniform distribution so every entry is at least ``eps``.

    Returns ``(1 - N*eps) * p + eps``. Works on the last axis, so a whole
    matrix or matrix sequence can be floored at once.
    """
    p = np.asarray(p, dtype=float)
    N = p.shape[-1]
    if not 0.0 < eps <= 1.0 / N * (1 + 1e-15):
        raise DomainError(f"infeasible floor eps={eps} for N={N} (need 0 < eps <= 1/N)")
    if np.any(p < 0.0):
        raise DomainError("cannot floor a vector with negative entries")
    out = (1.0 - N * eps) * p + eps
    s = out.sum(axis=-1, keepdims=True)
    drift = np.abs(s - 1.0) > 1e-15
    if np.any(drift):
        out = np.where(drift, out / s, out)
        # renormalising can nudge the floor entries a hair below eps
        out = np.maximum(out, eps)
    return out


def epsilon_from_bits(B: float) -> float:
    return 2.0 ** (-float(B))
