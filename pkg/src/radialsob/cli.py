"""Command-line front end.

Subcommands: ``check``, ``embed {check,constant,sweep}``, ``solve`` and
``geometry``.  Exit codes: 0 success, 1 inadmissible data, 2 parse error,
3 numerical non-convergence, 4 no nontrivial solution found.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import defaults
from .embedding import (
    EmbeddingParams,
    check_embedding,
    estimate_best_constant,
    sweep,
    write_sweep_csv,
)
from .system import (
    EmptyFeasibleInterval,
    ProblemParams,
    check_conditions,
    lambda_ladder,
    parse_config,
    small_sphere_min,
    st_interval,
)

EXIT_OK, EXIT_INADMISSIBLE, EXIT_PARSE, EXIT_NONCONVERGED, EXIT_EMPTY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    return int(text, 0)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(path, series: dict, x_name: str = "x", y_name: str = "y") -> None:
    """Plot data: rows ``series,x,y`` for each named ``(xs, ys)`` pair."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", x_name, y_name])
        for name, (xs, ys) in series.items():
            for x, y in zip(xs, ys):
                w.writerow([name, _fmt(x), _fmt(y)])


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get(defaults.ENV_OUTDIR) or "radialsob-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    try:
        return max(1, int(os.environ.get(defaults.ENV_THREADS, "1")))
    except ValueError:
        return 1


def _add_raw(p: argparse.ArgumentParser, required: bool = True) -> None:
    for flag, typ in (("-n", int), ("-p", float), ("-q", float), ("-a", float), ("-b", float)):
        p.add_argument(flag, type=typ, required=required)


def _add_numerics(p: argparse.ArgumentParser, k: int = defaults.K) -> None:
    p.add_argument("--N", type=_positive_int, default=defaults.N, help="transform nodes")
    p.add_argument("--R", type=float, default=defaults.R, help="truncation radius")
    p.add_argument("--k", type=_positive_int, default=k, help="basis dimension")
    p.add_argument("--seed", type=_seed, default=defaults.SEED)
    p.add_argument("--threads", type=_positive_int, default=None)


def _problem(args) -> ProblemParams:
    if args.config:
        text = Path(args.config).read_text()
        prm = parse_config(text)
        if args.s is not None:
            prm = ProblemParams.from_raw(*prm.raw, s=args.s)
        return prm
    missing = [f for f in "npqab" if getattr(args, f) is None]
    if missing:
        raise ValueError(f"missing parameters {missing} (or pass --config)")
    return ProblemParams.from_raw(args.n, args.p, args.q, args.a, args.b, s=args.s)


# --- check ---------------------------------------------------------------


def cmd_check(args) -> int:
    rep = check_conditions(args.n, args.p, args.q, args.a, args.b)
    print(rep.table())
    lo, hi = st_interval(args.n, args.p, args.q, args.a, args.b)
    print(f"s interval: ({_fmt(lo)}, {_fmt(hi)})")
    if lo < hi:
        s = 0.5 * (lo + hi)
        print(f"s={_fmt(s)} t={_fmt(2 - s)}")
    else:
        print("s interval is empty")
    ok = rep.overall and lo < hi
    print("admissible" if ok else "inadmissible")
    return EXIT_OK if ok else EXIT_INADMISSIBLE


# --- embed ---------------------------------------------------------------


def cmd_embed(args) -> int:
    if args.mode == "sweep":
        return _embed_sweep(args)
    prm = EmbeddingParams(args.n, args.s, args.q, args.c)
    rep = check_embedding(prm)
    if args.mode == "check":
        print(rep.table())
        print("admissible" if rep else "inadmissible")
        return EXIT_OK if rep else EXIT_INADMISSIBLE
    if not rep:
        print(rep.table())
        print("inadmissible")
        return EXIT_INADMISSIBLE
    base = estimate_best_constant(prm, k=args.k, N=args.N, R=args.R, seed=args.seed)
    fine_k = estimate_best_constant(prm, k=2 * args.k, N=args.N, R=args.R, seed=args.seed)
    fine_n = estimate_best_constant(prm, k=args.k, N=2 * args.N, R=args.R, seed=args.seed)
    dk = abs(fine_k.value - base.value) / base.value
    dn = abs(fine_n.value - base.value) / base.value
    print(f"C_est={_fmt(base.value)} (k={args.k}, N={args.N}, R={_fmt(args.R)})")
    print(f"refinement: k->2k C={_fmt(fine_k.value)} rel_change={dk:.3e}; "
          f"N->2N C={_fmt(fine_n.value)} rel_change={dn:.3e}")
    if not (base.converged and fine_k.converged and fine_n.converged):
        print("estimator did not converge")
        return EXIT_NONCONVERGED
    return EXIT_OK


def _embed_sweep(args) -> int:
    rows = sweep(
        args.n, args.s, args.q_values, args.c_values, k=args.k, N=args.N, R=args.R,
        seed=args.seed, estimate=not args.no_estimate, workers=_threads(args),
    )
    if args.csv:
        write_sweep_csv(args.csv, rows)
        print(f"wrote {len(rows)} rows to {args.csv}")
    else:
        write_sweep_csv(sys.stdout, rows)
    return EXIT_OK


# --- solve ---------------------------------------------------------------


def cmd_solve(args) -> int:
    from .solver import build_basis, find_multiple, oracle_discrepancy, shooting_oracle, write_solution

    prm = _problem(args)
    rep = check_conditions(*prm.raw)
    if not rep:
        print(rep.table())
        print("inadmissible")
        return EXIT_INADMISSIBLE
    basis = build_basis(prm, args.k, args.N, args.R)
    found = find_multiple(
        prm, basis, args.D, seed=args.seed, starts=args.starts, tol=args.tol, workers=_threads(args)
    )
    if not found.points:
        print(f"no nontrivial solution within {found.starts_used} starts")
        return EXIT_EMPTY
    out = _outdir(args)
    lines = ["index,phi,residual,iterations"]
    for i, cp in enumerate(found.points[: args.D], start=1):
        write_solution(out / f"solution_{i:02d}.csv", prm, basis, cp, seed=args.seed)
        lines.append(f"{i},{_fmt(cp.phi_value)},{cp.residual:.3e},{cp.iterations}")
    if found.shortfall:
        lines.append(f"# shortfall: found {len(found)} of {args.D} after {found.starts_used} starts")
    if args.oracle:
        if abs(prm.s - 1.0) > 1e-14:
            lines.append("# oracle: skipped (needs s = t = 1)")
        else:
            shot = shooting_oracle(prm)
            d = oracle_discrepancy(basis, found.points[0], shot)
            lines.append(f"# oracle: sup_discrepancy={d:.3e} mismatch={shot.mismatch:.3e}")
    text = "\n".join(lines) + "\n"
    (out / "summary.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


# --- geometry --------------------------------------------------------------


def cmd_geometry(args) -> int:
    from .solver import build_basis
    from .system import scaling_exponents

    prm = _problem(args)
    rep = check_conditions(*prm.raw)
    if not rep:
        print(rep.table())
        print("inadmissible")
        return EXIT_INADMISSIBLE
    basis = build_basis(prm, args.k, args.N, args.R)
    m, mu, nu = scaling_exponents(prm, args.m)
    doubling = [2.0**j for j in range(args.ladder + 1)]
    shown = doubling[:: args.every]
    rng = np.random.default_rng(args.seed)
    samples = {"zero": np.zeros(2 * basis.k)}
    for i in range(args.samples):
        w = rng.standard_normal(basis.k)
        e = 0.5 * rng.standard_normal(basis.k)
        z = np.concatenate([w + e, w - e])
        samples[f"z{i + 1:02d}"] = z / np.linalg.norm(z)

    print(f"m={_fmt(m)} mu={_fmt(mu)} nu={_fmt(nu)}")
    print("sample," + ",".join(f"lam=2^{j}" for j in range(0, args.ladder + 1, args.every)) + ",first_negative")
    series = {}
    all_negative = True
    for name, z in samples.items():
        vals = lambda_ladder(prm, basis, z, doubling, args.m)
        series[name] = (doubling, vals)
        neg = np.flatnonzero(vals < 0)
        first = f"2^{neg[0]}" if neg.size else "none"
        print(name + "," + ",".join(f"{v:.6e}" for v in vals[:: args.every]) + f",{first}")
        if name != "zero":
            all_negative &= bool(vals[-1] < 0)
    smin, _ = small_sphere_min(prm, basis, args.radius, args.directions, args.seed)
    print(f"small-sphere min Phi on E+ at r={args.radius:g}: {smin:.6e}")
    print(f"ladder top negative for all samples: {all_negative}")
    if args.out or os.environ.get(defaults.ENV_OUTDIR):
        out = _outdir(args)
        write_series_csv(out / "ladder.csv", series, "lambda", "phi")
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radialsob", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="hypotheses for the Hamiltonian system")
    _add_raw(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("embed", help="weighted embedding of radial H^s")
    p.add_argument("mode", choices=("check", "constant", "sweep"))
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-s", type=float, required=True)
    p.add_argument("-q", type=float, help="exponent (check, constant)")
    p.add_argument("-c", type=float, help="weight power (check, constant)")
    p.add_argument("--q-values", type=_floats, help="sweep: comma-separated q grid")
    p.add_argument("--c-values", type=_floats, help="sweep: comma-separated c grid")
    p.add_argument("--no-estimate", action="store_true", help="sweep: admissibility only")
    p.add_argument("--csv", help="sweep: write CSV here instead of stdout")
    _add_numerics(p, k=8)
    p.set_defaults(func=cmd_embed)

    for name, func, helptext in (
        ("solve", cmd_solve, "Galerkin critical points"),
        ("geometry", cmd_geometry, "scaling ladder and small-sphere check"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key=value parameter file")
        _add_raw(p, required=False)
        p.add_argument("--s", type=float, default=None, help="override the s of the split s + t = 2")
        p.add_argument("--out", help=f"output directory (env {defaults.ENV_OUTDIR})")
        _add_numerics(p)
        p.set_defaults(func=func)
        if name == "solve":
            p.add_argument("--D", type=_positive_int, default=1, help="number of solutions sought")
            p.add_argument("--starts", type=_positive_int, default=64)
            p.add_argument("--tol", type=float, default=defaults.TOL)
            p.add_argument("--oracle", action="store_true", help="compare with the shooting oracle")
        else:
            p.add_argument("--samples", type=_positive_int, default=20)
            p.add_argument("--directions", type=_positive_int, default=50)
            p.add_argument("--radius", type=float, default=0.1)
            p.add_argument("--ladder", type=_positive_int, default=40, help="ladder top is 2**ladder")
            p.add_argument("--every", type=_positive_int, default=4, help="print every n-th doubling")
            p.add_argument("--m", type=float, default=None, help="scaling exponent m > max(p, q)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "embed":
        need = ("q_values", "c_values") if args.mode == "sweep" else ("q", "c")
        if any(getattr(args, f) is None for f in need):
            flags = ["--" + f.replace("_", "-") if "_" in f else "-" + f for f in need]
            parser.error(f"embed {args.mode} needs " + " and ".join(flags))
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        if isinstance(exc, EmptyFeasibleInterval):
            print(f"inadmissible: {exc}", file=sys.stderr)
            return EXIT_INADMISSIBLE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
