"""Command-line front end: ``hsgeo <subcommand> [flags]``.

Exit codes: 0 success, 1 verification failure, 2 configuration or input
error, 3 inadmissible index or truncation level too small.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from hsgeo.algebra import (
    AlgebraError,
    Family,
    InadmissibleIndexError,
    IndexRangeError,
    TruncatedAlgebra,
    counterexample_partial_sum,
    norm,
)
from hsgeo.config import ConfigError, RunConfig, load_config, parse_n_range
from hsgeo.curvature import (
    CLOSED_FORMS,
    PRINCIPAL_FORMS,
    asymptotic_sweep,
    ricci_selfadjoint,
)
from hsgeo.explog import LogDomainError, bcdh_remainder, bcdh_truncated, matrix_from_json
from hsgeo.oracle import oracle_ricci
from hsgeo.reports import DEFAULT_NS, DEFAULT_SCALINGS, CurvatureReport, ReportEntry, fmt, verification_matrix
from hsgeo.scaling import ScalingError, ScalingSequence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INDEX = 0, 1, 2, 3
ORACLE_MAX_DIM = 200


class UsageError(ConfigError):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file (overrides $HSGEO_CONFIG)")
    parser.add_argument("--family", help="gl, so or tri")
    parser.add_argument("--scaling", help="const:<c>, power:<p>, geometric:<r> or file:<path>")
    parser.add_argument("--N", type=int, help="truncation level")
    parser.add_argument("--N-range", dest="N_range", help="a:b:step, inclusive")
    for name in ("i", "j", "k", "m"):
        parser.add_argument(f"--{name}", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--out", help="output file")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--deterministic", action="store_true", default=None,
                        help="omit run-dependent metadata so outputs are byte-identical")
    parser.add_argument("--formula", choices=("published", "corrected"),
                        help="closed forms: published displays (default) or the corrected ones")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsgeo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ricci", help="closed-form truncated Ricci curvature of xi_ij")
    _common(p)
    p.add_argument("--both", action="store_true", help="also run the brute-force oracle")

    p = sub.add_parser("verify", help="closed forms against the oracle over a matrix of cases")
    _common(p)
    p.add_argument("--perturb", type=float, default=0.0, help="add this to one closed form (self-test)")

    p = sub.add_parser("sweep", help="principal curvature a_km(N) over an N range, with a line fit")
    _common(p)

    p = sub.add_parser("counterexample", help="partial sums of the unbounded bracket norm")
    _common(p)
    p.add_argument("--terms", type=int, default=1000)

    p = sub.add_parser("bcdh", help="remainder of the truncated BCDH series")
    _common(p)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--x", help="JSON matrix file for x")
    p.add_argument("--y", help="JSON matrix file for y")
    p.add_argument("--eps", type=float, default=0.1, help="norm of random inputs when no files are given")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("selfadjoint", help="coefficients of the self-adjoint Ricci map on xi_km")
    _common(p)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in ("family", "scaling", "i", "j", "k", "m", "tol", "out",
                                                "format", "jobs", "deterministic", "formula")}
    if args.N_range is not None:
        overrides["N"] = parse_n_range(args.N_range)
    elif args.N is not None:
        overrides["N"] = (args.N,)
    return load_config(args.config, overrides)


def _family(cfg: RunConfig, default: str | None = None) -> Family:
    name = cfg.family or default
    if name is None:
        raise UsageError("--family is required")
    try:
        return Family.parse(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _scaling(cfg: RunConfig) -> ScalingSequence:
    return ScalingSequence.parse(cfg.scaling or "const:1")


def _single_n(cfg: RunConfig) -> int:
    if not cfg.N:
        raise UsageError("--N is required")
    if len(cfg.N) != 1:
        raise UsageError("this command takes a single N")
    return cfg.N[0]


def _pair(cfg: RunConfig, first: str, second: str) -> tuple[int, int]:
    a, b = getattr(cfg, first), getattr(cfg, second)
    if a is None or b is None:
        # k/m and i/j are interchangeable spellings of the base pair
        alt = {"i": ("k", "m"), "k": ("i", "j")}[first]
        a, b = getattr(cfg, alt[0]), getattr(cfg, alt[1])
    if a is None or b is None:
        raise UsageError(f"--{first} and --{second} are required")
    return a, b


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _oracle_alg(family: Family, lam: ScalingSequence, N: int) -> TruncatedAlgebra:
    alg = TruncatedAlgebra(family, lam, N)
    if alg.dim > ORACLE_MAX_DIM:
        raise UsageError(f"oracle is limited to dimension {ORACLE_MAX_DIM}; {family} at N={N} has {alg.dim}")
    return alg


# -- subcommands --------------------------------------------------------------------------

def cmd_ricci(args: argparse.Namespace, cfg: RunConfig) -> int:
    family, lam, N = _family(cfg), _scaling(cfg), _single_n(cfg)
    i, j = _pair(cfg, "i", "j")
    closed = CLOSED_FORMS[cfg.formula](family, i, j, N, lam)
    print(f"family = {family}\nscaling = {lam}\nN = {N}\ni = {i}\nj = {j}")
    print(f"closed_form = {fmt(closed)}")
    if args.both:
        alg = _oracle_alg(family, lam, N)
        orc = oracle_ricci(alg.xi(i, j), alg)
        print(f"oracle = {fmt(orc)}\nresidual = {fmt(abs(closed - orc))}")
        report = CurvatureReport([ReportEntry(family.value, lam.descriptor, N, i, j, closed, orc,
                                              abs(closed - orc))], cfg.formula, cfg.tol)
        _write(cfg.out, report.render(cfg.format))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    families = [_family(cfg)] if cfg.family else list(Family)
    scalings = [_scaling(cfg).descriptor] if cfg.scaling else list(DEFAULT_SCALINGS)
    Ns = cfg.N or DEFAULT_NS
    pairs = None
    if cfg.i is not None or cfg.j is not None:
        pairs = [_pair(cfg, "i", "j")]
        for fam in families:
            for n in Ns:
                TruncatedAlgebra(fam, _scaling(cfg), n).check_index(pairs[0])
                if n <= max(pairs[0]):
                    raise IndexRangeError(f"closed forms need N > max(i, j); got N={n}")
    for n in Ns:
        for fam in families:
            _oracle_alg(fam, ScalingSequence.constant(), n)
    start = time.perf_counter()
    report = verification_matrix(families, scalings, Ns, cfg.formula, cfg.tol, pairs, cfg.jobs, args.perturb)
    elapsed = time.perf_counter() - start
    extra = None if cfg.deterministic else {"elapsed_s": elapsed}
    out = cfg.out or f"hsgeo_verify.{cfg.format}"
    _write(out, report.render(cfg.format, extra))
    bad = report.failures()
    print(f"cases = {len(report.entries)}")
    print(f"max_relative_residual = {fmt(report.max_relative_residual)}")
    print(f"failures = {len(bad)}")
    for e in bad[:10]:
        print(f"  FAIL {e.family} {e.scaling} N={e.N} ({e.i},{e.j}) closed_form={fmt(e.closed_form)} "
              f"oracle={fmt(e.oracle)}")
    print(f"report = {out}")
    print("verdict = " + ("PASS" if not bad else "FAIL"))
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_sweep(args: argparse.Namespace, cfg: RunConfig) -> int:
    family, lam = _family(cfg), _scaling(cfg)
    k, m = _pair(cfg, "k", "m")
    if not cfg.N:
        raise UsageError("--N-range is required")
    TruncatedAlgebra(family, lam, max(cfg.N)).check_index((k, m))
    curve = asymptotic_sweep(family, k, m, lam, cfg.N, cfg.formula)
    out = cfg.out or f"hsgeo_sweep.{cfg.format}"
    if cfg.format == "csv":
        _write(out, curve.to_csv())
    else:
        _write(out, json.dumps({"N": [n for n, _ in curve.samples], "a_km": [v for _, v in curve.samples]},
                               indent=2) + "\n")
    fit_path = str(Path(out).with_suffix("")) + ".fit.json"
    _write(fit_path, json.dumps(curve.fit_record(), indent=2) + "\n")
    print(f"family = {family}\nscaling = {lam}\nk = {k}\nm = {m}")
    print(f"fitted_slope = {fmt(curve.slope)}")
    print(f"predicted_slope = {fmt(curve.predicted)}")
    print(f"slope_difference = {fmt(abs(curve.slope - curve.predicted))}")
    print(f"intercept = {fmt(curve.intercept)}")
    print(f"window = {curve.window[0]}:{curve.window[1]}")
    print(f"verdict = {curve.verdict}")
    return EXIT_OK


def divergence_verdict(K: int) -> str:
    """Unbounded when the second half of the terms adds at least half of the first half's sum."""
    if K < 4:
        return "inconclusive"
    head = counterexample_partial_sum(K // 2)
    tail = counterexample_partial_sum(K) - head
    return "unbounded" if tail >= 0.5 * head else "inconclusive"


def cmd_counterexample(args: argparse.Namespace, cfg: RunConfig) -> int:
    K = args.terms
    if K < 1:
        raise UsageError("--terms must be >= 1")
    total = counterexample_partial_sum(K)
    print(f"terms = {K}\npartial_sum = {fmt(total)}\nratio = {fmt(total / K)}")
    print(f"verdict = {divergence_verdict(K)}")
    return EXIT_OK


def _load_vector(path: str, family: Family, lam: ScalingSequence):
    try:
        m = matrix_from_json(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    alg = TruncatedAlgebra(family, lam, m.shape[0])
    return alg, alg.project(m, tol=1e-9)


def cmd_bcdh(args: argparse.Namespace, cfg: RunConfig) -> int:
    if not (1 <= args.order <= 6):
        raise UsageError("--order must be in [1, 6]")
    family, lam = _family(cfg, "gl"), _scaling(cfg)
    if args.x or args.y:
        if not (args.x and args.y):
            raise UsageError("--x and --y must be given together")
        alg, x = _load_vector(args.x, family, lam)
        alg_y, y = _load_vector(args.y, family, lam)
        if alg_y.N != alg.N:
            raise UsageError("x and y matrices have different sizes")
    else:
        alg = TruncatedAlgebra(family, lam, cfg.N[0] if cfg.N else 4)
        rng = np.random.default_rng(args.seed)
        x = alg.random_vector(rng, nnz=alg.dim)
        y = alg.random_vector(rng, nnz=alg.dim)
        x, y = x * (args.eps / norm(x)), y * (args.eps / norm(y))
    z = bcdh_truncated(x, y, args.order)
    print(f"family = {family}\nN = {alg.N}\norder = {args.order}")
    print(f"norm_x = {fmt(norm(x))}\nnorm_y = {fmt(norm(y))}\nnorm_bcdh = {fmt(norm(z))}")
    print(f"remainder = {fmt(bcdh_remainder(x, y, args.order, alg))}")
    return EXIT_OK


def cmd_selfadjoint(args: argparse.Namespace, cfg: RunConfig) -> int:
    family, lam, N = _family(cfg), _scaling(cfg), _single_n(cfg)
    k, m = _pair(cfg, "k", "m")
    alg = TruncatedAlgebra(family, lam, N)
    alg.check_index((k, m))
    vec = ricci_selfadjoint(alg.xi(k, m), alg)
    diag = vec[(k, m)]
    off = max((abs(v) for idx, v in vec.items() if idx != (k, m)), default=0.0)
    rows = [(i, j, v) for (i, j), v in sorted(vec.items(), key=lambda kv: alg.position(kv[0]))]
    if cfg.format == "csv":
        text = "i,j,coefficient\n" + "".join(f"{i},{j},{fmt(v)}\n" for i, j, v in rows)
    else:
        text = json.dumps({"k": k, "m": m, "N": N, "coefficients": [[i, j, v] for i, j, v in rows]},
                          indent=2) + "\n"
    if cfg.out:
        _write(cfg.out, text)
    else:
        sys.stdout.write(text)
    print(f"diagonal = {fmt(diag)}\nmax_offdiagonal = {fmt(off)}")
    if family is not Family.GENERAL and N > max(k, m):
        a_km = PRINCIPAL_FORMS[cfg.formula](family, k, m, N, lam)
        print(f"principal_curvature = {fmt(a_km)}\nresidual = {fmt(abs(a_km - diag))}")
    return EXIT_OK


COMMANDS = {
    "ricci": cmd_ricci,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "counterexample": cmd_counterexample,
    "bcdh": cmd_bcdh,
    "selfadjoint": cmd_selfadjoint,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (InadmissibleIndexError, IndexRangeError) as exc:
        print(f"hsgeo: index error: {exc}", file=sys.stderr)
        return EXIT_INDEX
    except (ConfigError, ScalingError, AlgebraError, LogDomainError, ValueError) as exc:
        print(f"hsgeo: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
