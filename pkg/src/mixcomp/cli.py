"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 I/O or decode error, 3 bound
violation, 4 selftest failure. Reports and traces are JSON lines.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (best_segmentation, best_single_model, check_bound, equilibrium_residuals,
                       example1_closed_form, example1_eps_limit, example1_matrix,
                       lemma5_violations, lemma6_violations)
from .coder import DecodeError
from .container import CompressConfig, compress, decompress, run_codec
from .core import DomainError, epsilon_from_bits, floor_to_epsilon
from .mixtures import Domain, MixtureKind, geo_mix, loss_grad, niceness_constant
from .models import ModelConfig
from .ogd import (ConfigError, OgdConfig, b_for_horizon, project_simplex, row_kind,
                  row_needs_horizon, run_mix_ogd, step_size, step_size_from_b)
from .oracles import finite_difference_grad, project_simplex_bruteforce
from .synth import SCENARIOS, make_instance

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BOUND, EXIT_SELFTEST = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(record: dict, out=None) -> None:
    (out or sys.stdout).write(json.dumps(record, sort_keys=True) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _domain(args) -> Domain:
    return Domain.box(args.box) if args.box is not None else Domain.simplex()


def _compress_config(args) -> CompressConfig:
    kind = MixtureKind.parse(args.mix)
    model = ModelConfig(N=256, B=args.B, orders=_ints(args.orders), delta=args.delta)
    row = args.table_row
    if args.alpha is None and row is None:
        row = 4 if kind is MixtureKind.GEO else 2
    w1 = np.array(_floats(args.w1)) if args.w1 else None
    return CompressConfig(kind=kind, model=model, domain=_domain(args), alpha=args.alpha,
                          table_row=row, w1=w1)


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
        return
    with open(path, "wb") as fh:
        fh.write(data)


# ------------------------------------------------------------------ commands


def cmd_compress(args) -> int:
    config = _compress_config(args)
    data = _read(args.input)
    blob, stats = compress(data, config)
    _write(args.output, blob)
    rec = stats.as_dict()
    rec["input"] = args.input
    _emit(rec, sys.stderr if args.output == "-" else sys.stdout)
    return EXIT_OK


def cmd_decompress(args) -> int:
    data = decompress(_read(args.input))
    _write(args.output, data)
    return EXIT_OK


def cmd_trace(args) -> int:
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.instance:
            with np.load(args.instance) as z:
                x, P = z["x"], z["P"]
            kind = MixtureKind.parse(args.mix)
            n, m, _ = P.shape
            alpha = args.alpha
            if alpha is None:
                row = args.table_row or (4 if kind is MixtureKind.GEO else 2)
                if row_kind(row) is not kind:
                    raise ConfigError(f"table row {row} is for {row_kind(row).name}")
                alpha = step_size(row, m, args.B, n)
            w1 = np.array(_floats(args.w1)) if args.w1 else None
            trace = run_mix_ogd(OgdConfig(kind, alpha, _domain(args), w1), x, P)
            for rec in trace.records():
                _emit(rec, out)
        else:
            config = _compress_config(args)
            xs = np.frombuffer(_read(args.input), dtype=np.uint8).astype(np.int64)
            *_, rec = run_codec(xs, config, code=False, record=True)
            W, bits, gnorm = rec
            for k in range(xs.size):
                _emit({"step": k + 1, "w": W[k].tolist(), "bits": float(bits[k]),
                       "grad_norm": float(gnorm[k])}, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _bound_trial(job: dict) -> dict:
    """One seeded instance: run OGD with the bound's step size and evaluate the bound."""
    kind = MixtureKind.parse(job["mix"])
    n, m, B, N = job["n"], job["m"], job["B"], job["N"]
    inst = make_instance(job["scenario"], n, m, N, B, job["seed"], segments=job["segments"])
    domain = Domain.box(job["box"]) if job["box"] is not None else Domain.simplex()
    bound = job["bound"]
    kwargs: dict = {}
    if bound.startswith("row"):
        row = int(bound[-1])
        alpha = step_size(row, m, B, n if row_needs_horizon(row) else None)
        kwargs["B"] = B
    else:
        f = 1.0
        b = job["b"]
        if bound == "thm1b":
            f = 2.0 * math.sqrt(n) / (1.0 + math.sqrt(n))
            b = b_for_horizon(n)
        a = niceness_constant(kind, m, B, f)
        alpha = step_size_from_b(a, b)
        kwargs.update(a=a, b=b)
        if bound == "thm1b":
            kwargs["c"] = float(B)
    trace = run_mix_ogd(OgdConfig(kind, alpha, domain), inst.x, inst.P)
    rep = check_bound(trace, inst.x, inst.P, bound, **kwargs)
    rec = rep.as_record()
    rec.update(trial=job["trial"], seed=job["seed"], scenario=job["scenario"])
    return rec


def cmd_bounds(args) -> int:
    if args.row is not None:
        bound = f"row{args.row}"
        kind = row_kind(args.row)
        if args.mix is not None and MixtureKind.parse(args.mix) is not kind:
            raise ConfigError(f"table row {args.row} is for {kind.name}, not {args.mix}")
    else:
        bound = args.bound
        if args.mix is None:
            raise UsageError(f"--bound {bound} needs --mix")
        kind = MixtureKind.parse(args.mix)
        if bound in ("prop1", "thm1a") and args.b is None:
            raise UsageError(f"--bound {bound} needs --b")
    if args.m < 2 or args.n < 1 or args.trials < 1:
        raise UsageError("need --m >= 2, --n >= 1 and --trials >= 1")
    # N = 2^B would force every floored row to be uniform
    N = args.N if args.N is not None else max(2, min(2 ** (int(args.B) - 1), 16))
    if N * epsilon_from_bits(args.B) > 1.0:
        raise UsageError(f"alphabet N={N} too large for B={args.B} (need N <= 2^B)")
    jobs = [dict(mix=kind.name, n=args.n, m=args.m, B=args.B, N=N, scenario=args.scenario,
                 segments=args.segments, seed=args.seed * 1_000_003 + t, trial=t, box=args.box,
                 bound=bound, b=args.b)
            for t in range(args.trials)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            records = list(pool.map(_bound_trial, jobs))
    else:
        records = [_bound_trial(j) for j in jobs]
    violated = False
    for rec in records:
        _emit(rec)
        violated |= not rec["holds"]
    return EXIT_BOUND if violated else EXIT_OK


def cmd_synth(args) -> int:
    inst = make_instance(args.scenario, args.n, args.m, args.N, args.B, args.seed, args.segments)
    if args.out:
        np.savez_compressed(args.out, x=inst.x, P=inst.P)
    penalty = args.penalty if args.penalty is not None else args.B * math.log2(max(args.n, 2))
    idx, bits = best_single_model(inst.x, inst.P)
    seg = best_segmentation(inst.x, inst.P, penalty, max_n=max(args.n, 2000))
    _emit({"scenario": inst.scenario, "seed": args.seed, "n": inst.n, "m": args.m, "N": args.N,
           "B": args.B, "generator_starts": inst.boundaries, "best_model": idx,
           "best_model_bits": bits, "penalty": penalty, "s": seg.s, "starts": seg.starts,
           "segmentation_cost": seg.cost, "out": args.out})
    return EXIT_OK


def selftest_checks(seed: int = 0):
    """Yield ``(name, passed, detail)`` for each built-in check."""
    rng = np.random.default_rng(seed)
    z = np.linspace(0, 1, 100_002)[1:-1]
    bad = lemma5_violations(z)
    yield "lemma5_grid", bad == 0, {"points": z.size, "violations": bad}
    a = np.linspace(0, 0.5, 1001)[1:]
    zg = np.linspace(0, 1, 1002)[1:-1]
    bad = lemma6_violations(a, zg)
    yield "lemma6_grid", bad == 0, {"grid": [a.size, zg.size], "violations": bad}

    P = example1_matrix(4, 0.9, 0.2)
    v = float(geo_mix([0.5, 0.5], P)[0])
    yield "example1_value", abs(v - 0.931129) < 1e-6 and v > 0.9, {"geo": v}
    fails = 0
    for _ in range(1000):
        N = int(rng.integers(3, 300))
        q = float(rng.uniform(0.01, 0.99))
        e = float(rng.uniform(0, example1_eps_limit(N)))
        if e <= 0:
            continue
        gv = geo_mix([0.5, 0.5], example1_matrix(N, q, e))[0]
        fails += not (gv > q and abs(gv - example1_closed_form(N, q, e)) < 1e-9)
    yield "example1_sampled", fails == 0, {"samples": 1000, "failures": fails}

    worst = 0.0
    for _ in range(300):
        m = int(rng.choice([2, 4, 8]))
        N = int(rng.choice([2, 16, 256]))
        P = floor_to_epsilon(rng.dirichlet(np.ones(N), size=m), 2.0**-12)
        w = rng.dirichlet(np.ones(m))
        x = int(rng.integers(N))
        for kind in MixtureKind:
            an = loss_grad(kind, w, P, x)
            fd = finite_difference_grad(kind, w, P, x)
            worst = max(worst, float(np.abs(an - fd).max() / max(np.abs(an).max(), 1e-12)))
    yield "gradient_fd", worst < 1e-5, {"max_rel_error": worst}

    worst = 0.0
    for _ in range(200):
        w = rng.dirichlet(np.ones(3))
        P = floor_to_epsilon(rng.dirichlet(np.ones(8), size=3), 2.0**-8)
        x = int(rng.integers(8))
        worst = max(worst, float(np.abs(equilibrium_residuals(w, P, x) - loss_grad("geo", w, P, x)).max()))
    yield "equilibrium_identity", worst < 1e-9, {"max_abs_diff": worst}

    worst = 0.0
    for _ in range(500):
        v = rng.normal(0, 2, size=int(rng.integers(2, 7)))
        worst = max(worst, float(np.abs(project_simplex(v) - project_simplex_bruteforce(v)).max()))
    yield "projection_oracle", worst < 1e-12, {"max_abs_diff": worst}


def cmd_selftest(args) -> int:
    ok = True
    for name, passed, detail in selftest_checks(args.seed):
        _emit({"check": name, "pass": bool(passed), **detail})
        ok &= bool(passed)
    return EXIT_OK if ok else EXIT_SELFTEST


# ------------------------------------------------------------------- parsing


def _model_flags(p):
    p.add_argument("--mix", choices=["lin", "geo"], default="geo")
    p.add_argument("--orders", default="0,1,2", help="comma-separated context orders")
    p.add_argument("--B", type=int, default=12, help="probability floor 2^-B")
    p.add_argument("--delta", type=float, default=1.0, help="count smoothing")
    step = p.add_mutually_exclusive_group()
    step.add_argument("--alpha", type=float, help="explicit step size")
    step.add_argument("--table-row", type=int, choices=[1, 2, 3, 4], help="step size of a table row")
    p.add_argument("--w1", help="initial weights, comma-separated")
    p.add_argument("--box", type=float, metavar="R", help="use the box [-R, R]^m instead of the simplex")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mixcomp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="compress a file into an MXC1 container")
    p.add_argument("input")
    p.add_argument("output")
    _model_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore a file from an MXC1 container")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("trace", help="per-step weights and code lengths as JSON lines")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("input", nargs="?", help="file to model as bytes")
    src.add_argument("--instance", help="npz file with x and P written by synth")
    p.add_argument("--out", help="write records here instead of stdout")
    _model_flags(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("bounds", help="check code-length bounds on seeded random instances")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--row", type=int, choices=[1, 2, 3, 4])
    which.add_argument("--bound", choices=["prop1", "thm1a", "thm1b"])
    p.add_argument("--mix", choices=["lin", "geo"])
    p.add_argument("--b", type=float, help="trade-off parameter b > 1 (prop1, thm1a)")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--B", type=float, default=8)
    p.add_argument("--N", type=int, help="alphabet size (default max(2, min(2^(B-1), 16)))")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", choices=SCENARIOS, default="switching")
    p.add_argument("--segments", type=int, default=4)
    p.add_argument("--box", type=float, metavar="R")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synth", help="generate a seeded matrix-sequence scenario")
    p.add_argument("--scenario", choices=SCENARIOS, default="switching")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--B", type=float, default=8)
    p.add_argument("--segments", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty", type=float, help="per-segment penalty for the summary DP")
    p.add_argument("--out", help="write x and P to this npz file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("selftest", help="run the built-in consistency checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"mixcomp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"mixcomp: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DecodeError) as exc:
        print(f"mixcomp: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
