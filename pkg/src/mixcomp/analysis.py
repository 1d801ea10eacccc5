"""Empirical checks of the OGD code-length bounds.

Provides the competing schemes (best static weights, best single model,
best segmentation), evaluates bound right-hand sides against an OGD trace,
and a few diagnostics (the two-model construction where GEO beats every
model, and the entropy/divergence form of the GEO gradient).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .core import LOG2E, DomainError, as_matrix, as_sequence, check_symbol
from .mixtures import Domain, MixtureKind, NicenessConstant, geo_mix, niceness_constant
from .ogd import (ConfigError, OgdTrace, b_for_horizon, project, row_kind, row_needs_horizon,
                  step_size, step_size_from_b)

DP_CAP_BEST = 2000
DP_CAP_STATIC = 200


# ------------------------------------------------------------ static mixing


class StaticObjective:
    """Total code length of ``x`` under fixed weights, with its gradient.

    Caches the per-step model code lengths so repeated evaluations cost one
    pass over ``(n, m, N)``.
    """

    def __init__(self, kind, x, P):
        self.kind = MixtureKind.parse(kind)
        self.P = as_sequence(P)
        self.x = np.asarray(x, dtype=np.int64)
        n = self.P.shape[0]
        if self.x.shape != (n,):
            raise ConfigError(f"{self.x.size} symbols but {n} probability matrices")
        self.Q = self.P[np.arange(n), :, self.x]  # (n, m) probabilities of the coded symbols
        if self.kind is MixtureKind.GEO:
            self.L = -np.log2(self.P)  # (n, m, N)
            self.Lx = -np.log2(self.Q)

    @property
    def m(self) -> int:
        return self.P.shape[1]

    def value(self, w) -> float:
        return self.value_grad(w, need_grad=False)[0]

    def value_grad(self, w, need_grad: bool = True):
        w = np.asarray(w, dtype=float)
        if self.kind is MixtureKind.LIN:
            pw = self.Q @ w
            f = float(-np.log2(pw).sum())
            if not need_grad:
                return f, None
            return f, -LOG2E * (self.Q / pw[:, None]).sum(axis=0)
        E = -np.einsum("kmy,m->ky", self.L, w)
        emax = E.max(axis=1, keepdims=True)
        Z = np.exp2(E - emax)
        S = Z.sum(axis=1)
        # -log2 geo(x_k) = l(x_k).w + emax + log2 S
        f = float((self.Lx @ w).sum() + emax.sum() + np.log2(S).sum())
        if not need_grad:
            return f, None
        G = Z / S[:, None]
        g = self.Lx.sum(axis=0) - np.einsum("ky,kmy->m", G, self.L)
        return f, g


@dataclass
class StaticOptimum:
    w: np.ndarray
    bits: float
    iterations: int
    grad_norm: float
    status: str  # "converged" | "stalled" | "unconverged"

    @property
    def converged(self) -> bool:
        return self.status != "unconverged"


def _pg_norm(w, g, domain):
    return float(np.linalg.norm(w - project(w - g, domain)))


def optimal_static_weights(kind, domain: Domain, x, P, tol: float = 1e-9,
                           max_iter: int = 100_000, w0=None) -> StaticOptimum:
    """Minimise the total code length over fixed weights in ``domain``.

    Projected gradient descent; the trial step is Barzilai-Borwein and is
    halved until the usual sufficient-decrease test passes. Stops when the
    projected gradient norm falls below ``tol``; when line search can no
    longer decrease the objective at machine precision the result is
    reported as ``"stalled"``.
    """
    obj = x if isinstance(x, StaticObjective) else StaticObjective(kind, x, P)
    if obj.kind is MixtureKind.LIN and not domain.is_simplex:
        raise ConfigError("the linear mixture is only defined on the simplex")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    m = obj.m
    w = domain.uniform_start(m) if w0 is None else project(np.asarray(w0, float), domain)
    f, g = obj.value_grad(w)
    pg = _pg_norm(w, g, domain)
    best = (f, pg, w.copy())
    t = 1.0 / max(np.linalg.norm(g), 1e-12)
    status = "unconverged"
    it = 0
    for it in range(1, max_iter + 1):
        if pg < tol:
            status = "converged"
            break
        # below this difference objective values are rounding noise
        noise = 1e-12 * max(1.0, abs(f))
        accepted = False
        while t > 1e-300:
            w_new = project(w - t * g, domain)
            d = w_new - w
            f_new, _ = obj.value_grad(w_new, need_grad=False)
            if f_new < f and f_new <= f + g @ d + (d @ d) / (2 * t):
                f_new, g_new = obj.value_grad(w_new)
                accepted = True
                break
            if f_new <= f + noise:
                # noise regime: fall back to the projected gradient as the merit
                f_new, g_new = obj.value_grad(w_new)
                if _pg_norm(w_new, g_new, domain) < pg:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            status = "stalled"
            break
        s, y = w_new - w, g_new - g
        sy = s @ y
        t = (s @ s) / sy if sy > 0 else 2 * t
        w, f, g = w_new, f_new, g_new
        pg = _pg_norm(w, g, domain)
        if f < best[0] - noise or (f <= best[0] + noise and pg < best[1]):
            best = (f, pg, w.copy())
    else:
        it = max_iter
    best_f, pg, best_w = best
    return StaticOptimum(best_w, float(best_f), it, pg, status)


# ------------------------------------------------------- best single model


def model_code_lengths(x, P) -> np.ndarray:
    """``(n, m)`` array of ``-log2 p_i(x_k)``."""
    P = as_sequence(P)
    xs = np.asarray(x, dtype=np.int64)
    if xs.shape != (P.shape[0],):
        raise ConfigError(f"{xs.size} symbols but {P.shape[0]} probability matrices")
    return -np.log2(P[np.arange(xs.size), :, xs])


def best_single_model(x, P) -> tuple[int, float]:
    totals = model_code_lengths(x, P).sum(axis=0)
    i = int(np.argmin(totals))
    return i, float(totals[i])


# ------------------------------------------------------------ segmentation


@dataclass
class Segmentation:
    starts: list[int]  # 1-based t_1 = 1 < t_2 < ... < t_s
    n: int
    costs: list[float]
    penalty: float
    scale: float
    objective: float

    @property
    def s(self) -> int:
        return len(self.starts)

    @property
    def cost(self) -> float:
        return float(sum(self.costs))

    @property
    def segments(self) -> list[tuple[int, int]]:
        ends = self.starts[1:] + [self.n + 1]
        return [(a, b - 1) for a, b in zip(self.starts, ends)]


class BestModelCost:
    """Segment cost = code length of the best single model on ``x_i..x_j`` (1-based, inclusive)."""

    def __init__(self, x, P):
        C = model_code_lengths(x, P)
        self.S = np.vstack([np.zeros((1, C.shape[1])), np.cumsum(C, axis=0)])
        self.n = C.shape[0]

    def __call__(self, i: int, j: int) -> float:
        return float((self.S[j] - self.S[i - 1]).min())

    def ending_at(self, j: int) -> np.ndarray:
        """Costs of segments ``(i, j)`` for ``i = 1..j``."""
        return (self.S[j] - self.S[:j]).min(axis=1)


class StaticMixCost:
    """Segment cost = optimal static mixture code length on the segment (memoised)."""

    def __init__(self, kind, domain: Domain, x, P, tol: float = 1e-9):
        self.kind = MixtureKind.parse(kind)
        self.domain = domain
        self.x = np.asarray(x, dtype=np.int64)
        self.P = as_sequence(P)
        self.n = self.x.size
        self.tol = tol
        self.cache: dict[tuple[int, int], float] = {}

    def __call__(self, i: int, j: int) -> float:
        key = (i, j)
        if key not in self.cache:
            sl = slice(i - 1, j)
            res = optimal_static_weights(self.kind, self.domain, self.x[sl], self.P[sl], tol=self.tol)
            self.cache[key] = res.bits
        return self.cache[key]

    def ending_at(self, j: int) -> np.ndarray:
        return np.array([self(i, j) for i in range(1, j + 1)])


def best_segmentation(x, P, penalty: float, cost="best", scale: float = 1.0,
                      kind=None, domain: Domain | None = None, max_n: int | None = None) -> Segmentation:
    """Exact minimiser of ``sum_i (penalty + scale * cost(segment_i))`` over all segmentations.

    ``cost`` is ``"best"`` (best single model per segment), ``"static"``
    (optimal static mixture per segment; needs ``kind``) or a cost object.
    Ties prefer the earliest start for the last segment, recursively.
    """
    if isinstance(cost, str):
        if cost == "best":
            cost_fn = BestModelCost(x, P)
            cap = DP_CAP_BEST
        elif cost == "static":
            if kind is None:
                raise ConfigError("static segment costs need a mixture kind")
            cost_fn = StaticMixCost(kind, domain or Domain.simplex(), x, P)
            cap = DP_CAP_STATIC
        else:
            raise ConfigError(f"unknown segment cost {cost!r}")
    else:
        cost_fn = cost
        cap = DP_CAP_BEST
    n = cost_fn.n
    cap = cap if max_n is None else max_n
    if n > cap:
        raise ConfigError(f"exact segmentation over n={n} exceeds the cap {cap}; "
                          "subsample the sequence or raise max_n")
    if n == 0:
        raise DomainError("cannot segment an empty sequence")
    if isinstance(cost_fn, BestModelCost):
        D, arg = _jit.segment_dp(cost_fn.S, float(penalty), float(scale))
    else:
        D = np.empty(n + 1)
        D[0] = 0.0
        arg = np.empty(n + 1, dtype=np.int64)
        for j in range(1, n + 1):
            cand = (D[:j] + penalty) + scale * cost_fn.ending_at(j)
            i0 = int(np.argmin(cand))
            D[j] = cand[i0]
            arg[j] = i0 + 1
    starts = []
    j = n
    while j > 0:
        i = int(arg[j])
        starts.append(i)
        j = i - 1
    starts.reverse()
    ends = starts[1:] + [n + 1]
    costs = [cost_fn(a, b - 1) for a, b in zip(starts, ends)]
    return Segmentation(starts, n, costs, float(penalty), float(scale), float(D[n]))


# ------------------------------------------------------------------ bounds


BOUND_IDS = ("prop1", "thm1a", "thm1b", "row1", "row2", "row3", "row4")


@dataclass
class BoundReport:
    bound_id: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-6 * abs(self.rhs)

    def as_record(self) -> dict:
        return {"bound_id": self.bound_id, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "holds": self.holds, "params": self.params}


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b))


def _table_penalty(row: int, m: int, B: float, n: int) -> tuple[float, float]:
    """Per-segment penalty and comparator scale of a table row on the simplex."""
    if row == 1:
        return 17.0 * m * 4.0**B / (4.0 * B), 2.0
    if row == 2:
        return 35.0 * m * 4.0**B / (4.0 * B) * math.sqrt(n), 1.0
    if row == 3:
        return 7.0 * m * B * B / 5.0, 2.0
    return 19.0 * m * B * B / 10.0 * math.sqrt(n), 1.0


def check_bound(trace: OgdTrace, x, P, bound_id: str, *, a: float | NicenessConstant | None = None,
                b: float | None = None, B: float | None = None, c: float | None = None,
                w1=None, segmentation_cost: str = "best", max_n: int | None = None,
                tol: float = 1e-9) -> BoundReport:
    """Evaluate one code-length bound for the run recorded in ``trace``.

    ``prop1`` and ``thm1a`` take ``a`` and ``b``; ``thm1b`` takes ``a`` and
    ``c``; table rows ``row1``-``row4`` take ``B``. The trace's step size must
    be the one the bound prescribes.
    """
    if bound_id not in BOUND_IDS:
        raise ConfigError(f"unknown bound {bound_id!r}; expected one of {BOUND_IDS}")
    Ps = as_sequence(P)
    xs = np.asarray(x, dtype=np.int64)
    n, m, _ = Ps.shape
    if trace.n != n:
        raise ConfigError(f"trace covers {trace.n} steps, sequence has {n}")
    kind, domain, alpha = trace.kind, trace.domain, trace.alpha
    lhs = trace.total_bits
    diam2 = domain.diameter(m) ** 2
    a_val = a.a if isinstance(a, NicenessConstant) else a
    params: dict = {"m": m, "n": n, "alpha": alpha, "kind": kind.name, "domain": str(domain),
                    "W_diameter": math.sqrt(diam2)}

    if bound_id == "prop1":
        if a_val is None or b is None:
            raise ConfigError("prop1 needs a and b")
        if not _close(alpha, step_size_from_b(a_val, b)):
            raise ConfigError(f"trace step size {alpha} is not 2(1-1/b)/a = {step_size_from_b(a_val, b)}")
        opt = optimal_static_weights(kind, domain, xs, Ps, tol=tol)
        w_first = trace.weights[0] if w1 is None else np.asarray(w1, float)
        dist2 = float(np.sum((w_first - opt.w) ** 2))
        rhs = b * opt.bits + a_val / 4.0 * b * b / (b - 1.0) * dist2
        params.update(a=a_val, b=b, l_star=opt.bits, w_star=opt.w.tolist(), w1_dist2=dist2,
                      solver_status=opt.status)
        return BoundReport("prop1", lhs, rhs, params)

    if bound_id in ("thm1a", "thm1b"):
        if a_val is None:
            raise ConfigError(f"{bound_id} needs a")
        if bound_id == "thm1a":
            if b is None:
                raise ConfigError("thm1a needs b")
            if not _close(alpha, step_size_from_b(a_val, b)):
                raise ConfigError("trace step size does not match 2(1-1/b)/a")
            penalty = a_val * b * b * diam2 / (4.0 * (b - 1.0))
            scale = b
            extra = 0.0
        else:
            if c is None:
                raise ConfigError("thm1b needs c")
            if not _close(alpha, 2.0 / a_val / (1.0 + math.sqrt(n))):
                raise ConfigError("trace step size does not match 2/a/(1+sqrt(n))")
            penalty = a_val * diam2 * math.sqrt(n)
            scale = 1.0
            extra = c * math.sqrt(n)
        seg = best_segmentation(xs, Ps, penalty, cost=segmentation_cost, scale=scale,
                                kind=kind, domain=domain, max_n=max_n)
        rhs = seg.objective + extra
        params.update(a=a_val, b=b, c=c, s=seg.s, starts=seg.starts, penalty=penalty,
                      comparator=segmentation_cost)
        return BoundReport(bound_id, lhs, rhs, params)

    row = int(bound_id[-1])
    if B is None:
        raise ConfigError("table rows need B")
    if row_kind(row) is not kind:
        raise ConfigError(f"table row {row} is for {row_kind(row).name}, trace is {kind.name}")
    expected = step_size(row, m, B, n if row_needs_horizon(row) else None)
    if not _close(alpha, expected):
        raise ConfigError(f"trace step size {alpha} differs from table row {row} value {expected}")
    penalty, scale = _table_penalty(row, m, B, n)
    extrapolated = not domain.is_simplex
    if extrapolated:
        if domain.r < 1.0:
            raise ConfigError("box rows compare against single models and need r >= 1")
        penalty *= diam2 / 2.0
    seg = best_segmentation(xs, Ps, penalty, cost="best", scale=scale,
                            max_n=n if max_n is None else max_n)
    params.update(B=B, s=seg.s, starts=seg.starts, penalty_per_segment=penalty,
                  comparator_scale=scale, best_cost=seg.cost, extrapolated=extrapolated)
    return BoundReport(bound_id, lhs, seg.objective, params)


# --------------------------------------------------------------- examples


def example1_matrix(N: int, q: float, eps: float) -> np.ndarray:
    """Two models that agree on symbol 0 and put their remaining mass on symbols 1 and 2 respectively."""
    if N < 3:
        raise DomainError(f"the construction needs N >= 3, got {N}")
    if not (0 < q < 1 and 0 < eps < 1):
        raise DomainError("need 0 < q < 1 and 0 < eps < 1")
    P = np.empty((2, N))
    rest = (1 - q) * eps / (N - 2)
    P[:] = rest
    P[:, 0] = q
    P[0, 1] = (1 - q) * (1 - eps)
    P[1, 2] = (1 - q) * (1 - eps)
    return P


def example1_closed_form(N: int, q: float, eps: float) -> float:
    f = 2.0 * math.sqrt(eps * (1 - eps) / (N - 2)) + (N - 3) / (N - 2) * eps
    return q / (q + (1 - q) * f)


def example1_eps_limit(N: int) -> float:
    return (N - 2) / (N - 1) ** 2


def entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(-(p * np.log2(p)).sum())


def kl_bits(p, q) -> float:
    p = np.asarray(p, dtype=float)
    return float((p * np.log2(p / np.asarray(q, dtype=float))).sum())


def equilibrium_residuals(w, P, x: int) -> np.ndarray:
    """``-log2 p_i(x) - (H(geo) + D(geo || p_i))`` for each model ``i``, in bits."""
    P = as_matrix(P)
    x = check_symbol(x, P.shape[1])
    g = geo_mix(w, P)
    H = entropy_bits(g)
    return np.array([-math.log2(P[i, x]) - (H + kl_bits(g, P[i])) for i in range(P.shape[0])])


# ---------------------------------------------------------- appendix lemmas


def lemma5_violations(z) -> int:
    """Count points where ``-ln z / (1 - z) >= 1`` fails."""
    z = np.asarray(z, dtype=float)
    return int(np.count_nonzero(-np.log(z) / (1 - z) < 1.0))


def lemma6_violations(a_grid, z_grid) -> int:
    """Count feasible pairs ``0 < a <= z <= 1 - a`` with ``-z^2 ln z < -a^2 ln a``."""
    a = np.asarray(a_grid, dtype=float)[:, None]
    z = np.asarray(z_grid, dtype=float)[None, :]
    fa = -a * a * np.log(a)
    fz = -z * z * np.log(z)
    feasible = (a > 0) & (a <= z) & (z <= 1 - a)
    # a relative slack of a few ulps keeps a == z from counting
    return int(np.count_nonzero(feasible & (fz < fa * (1 - 1e-12))))


__all__ = [
    "StaticObjective", "StaticOptimum", "optimal_static_weights", "model_code_lengths",
    "best_single_model", "Segmentation", "BestModelCost", "StaticMixCost", "best_segmentation",
    "BoundReport", "check_bound", "BOUND_IDS", "example1_matrix", "example1_closed_form",
    "example1_eps_limit", "equilibrium_residuals", "entropy_bits", "kl_bits",
    "lemma5_violations", "lemma6_violations", "niceness_constant", "b_for_horizon",
]
