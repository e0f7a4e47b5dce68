"""Command-line interface.

    speciesmix sample    --gamma 0.5 --zeta 0 --n 10 --reps 5
    speciesmix pmf kn    --gamma 0.5 --zeta 0 --n 20
    speciesmix pmf k     --gamma 0.5 --zeta 0 --eps 1e-10
    speciesmix posterior --gamma 0.5 --n 10 --k 3
    speciesmix eppf      --gamma 0.5 --zeta 0 --sizes 2,3,1
    speciesmix verify    --check recursion

Blocks are written with 1-based ball labels.  Reals are printed with 17
significant digits.  Sampling is reproducible from the command line alone;
the default seed is fixed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional, Sequence

import numpy as np

from .inference import DEFAULT_EPS, PmfTable, pmf_K, pmf_Kn, pmf_Kn_triple, posterior_K
from .model import (
    AdmissibilityError,
    DegenerateError,
    PartitionState,
    ep_eppf,
    eppf,
    gibbs_triple_for,
    restricted_eppf,
    validate_ewens_pitman,
    validate_gnedin,
)
from .sampler import DEFAULT_SEED, SeedSpec, mixture_batch, sequential_batch
from .verify import SUITE_CHECKS, run_suite

DEFAULT_REPS = 10**5
CLI_KAPPA_MAX = 10**6


def fmt(x: float) -> str:
    return format(float(x), ".17g")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument handling


def _family_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--family", choices=("gnedin", "ewens-pitman"), default="gnedin")
    g.add_argument("--gamma", type=float, help="gnedin: gamma >= 0")
    g.add_argument("--zeta", type=float, default=0.0, help="gnedin: zeta (default 0)")
    g.add_argument("--alpha", type=float, help="ewens-pitman: alpha < 1")
    g.add_argument("--theta", type=float, help="ewens-pitman: theta")


def _format_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="JSON lines or CSV with a header row (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speciesmix",
        description="Exchangeable partitions with a random number of boxes: "
                    "sampling, exact tables, posterior of the box count, checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample partitions of {1..n}")
    _family_args(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, default=DEFAULT_REPS, help=f"default {DEFAULT_REPS}")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    s.add_argument("--stream", type=int, default=0, help="stream index (default 0)")
    s.add_argument("--method", choices=("sequential", "mixture"), default="sequential")
    s.add_argument("--initial", help='initial allocation as JSON blocks, e.g. "[[1],[2]]" (zeta = 0)')
    s.add_argument("--workers", type=int, default=1)
    _format_arg(s)

    p = sub.add_parser("pmf", help="law of K_n (kn) or of the terminal box count (k)")
    p.add_argument("which", choices=("kn", "k"))
    _family_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS, help=f"tail tolerance (default {DEFAULT_EPS})")
    p.add_argument("--kappa-max", type=int, default=CLI_KAPPA_MAX, help=f"table cap (default {CLI_KAPPA_MAX})")
    _format_arg(p)

    q = sub.add_parser("posterior", help="law of the terminal box count given K_n = k (zeta = 0)")
    q.add_argument("--gamma", type=float, required=True)
    q.add_argument("--zeta", type=float, default=0.0)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--eps", type=float, default=DEFAULT_EPS)
    q.add_argument("--kappa-max", type=int, default=10**5)
    _format_arg(q)

    e = sub.add_parser("eppf", help="probability of one partition with the given block sizes")
    _family_args(e)
    e.add_argument("--sizes", required=True, help="comma-separated block sizes, e.g. 2,3,1")
    e.add_argument("--initial", help="initial block sizes (comma-separated) or JSON blocks (zeta = 0)")

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--check", action="append", choices=SUITE_CHECKS,
                   help="check group (repeatable; default all)")
    v.add_argument("--perturb", nargs="?", type=float, const=0.01, default=None,
                   help="plant a perturbation g(k)+delta in the recursion check (default delta 0.01)")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def _params(args):
    if args.family == "gnedin":
        if args.gamma is None:
            raise UsageError("--gamma is required for the gnedin family")
        return validate_gnedin(args.gamma, args.zeta)
    if args.alpha is None or args.theta is None:
        raise UsageError("--alpha and --theta are required for the ewens-pitman family")
    return validate_ewens_pitman(args.alpha, args.theta)


def _parse_initial(text: str) -> PartitionState:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--initial is not valid JSON: {exc}") from None
    return PartitionState.from_dict(data)


def _parse_sizes(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("["):
        blocks = json.loads(text)
        if blocks and isinstance(blocks[0], list):
            return list(PartitionState.from_dict(blocks).sizes)
        return [int(x) for x in blocks]
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse sizes {text!r}") from None


# --------------------------------------------------------------------------
# output


def _table_rows(table: PmfTable):
    """``(index, probability, tail_bound)`` where tail_bound is the mass
    beyond the row (suffix of the table plus the untabulated tail)."""
    probs = table.probs
    beyond = np.concatenate((np.cumsum(probs[::-1])[::-1][1:], [0.0])) + table.tail_bound
    for k, p, t in zip(table.support, probs, beyond):
        yield int(k), float(p), float(t)


def write_table(table: PmfTable, out, form: str) -> None:
    if form == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "probability", "tail_bound"])
        for k, p, t in _table_rows(table):
            w.writerow([k, fmt(p), fmt(t)])
    else:
        for k, p, t in _table_rows(table):
            out.write(f'{{"index": {k}, "probability": {fmt(p)}, "tail_bound": {fmt(t)}}}\n')


def write_partitions(rgs: np.ndarray, out, form: str) -> None:
    if form == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["rep", "ball", "block"])
        for r, row in enumerate(rgs, start=1):
            for ball, b in enumerate(row, start=1):
                w.writerow([r, ball, int(b) + 1])
        return
    for row in rgs:
        out.write(PartitionState.from_rgs(row).to_json() + "\n")


# --------------------------------------------------------------------------
# commands


def cmd_sample(args, out) -> int:
    params = _params(args)
    if args.n < 1 or args.reps < 1:
        raise UsageError("--n and --reps must be positive")
    seed = SeedSpec(args.seed, args.stream)
    initial = _parse_initial(args.initial) if args.initial else None
    if args.method == "mixture":
        if args.family != "gnedin":
            raise UsageError("the mixture method is available for the gnedin family only")
        if initial is not None:
            raise UsageError("--initial requires --method sequential")
        rgs = mixture_batch(args.n, params, args.reps, seed, workers=args.workers)
    else:
        if args.family == "gnedin" and initial is None and params.singleton:
            rgs = np.tile(np.arange(args.n, dtype=np.int32), (args.reps, 1))
        else:
            rgs = sequential_batch(args.n, params, args.reps, seed, initial, workers=args.workers)
    write_partitions(rgs, out, args.format)
    return 0


def cmd_pmf(args, out) -> int:
    params = _params(args)
    if args.which == "kn":
        if args.n is None or args.n < 1:
            raise UsageError("pmf kn needs --n >= 1")
        if args.family == "gnedin":
            table = pmf_Kn(args.n, params)
        else:
            table = pmf_Kn_triple(args.n, gibbs_triple_for(params))
    else:
        if args.family != "gnedin":
            raise UsageError("pmf k is defined for the gnedin family")
        table = pmf_K(params, args.eps, args.kappa_max)
    write_table(table, out, args.format)
    return 0


def cmd_posterior(args, out) -> int:
    if args.zeta != 0:
        raise UsageError("the posterior is available for zeta = 0 only")
    table = posterior_K(args.n, args.k, args.gamma, args.eps, args.kappa_max)
    write_table(table, out, args.format)
    return 0


def cmd_eppf(args, out) -> int:
    sizes = _parse_sizes(args.sizes)
    if args.initial:
        if args.family != "gnedin":
            raise UsageError("--initial is available for the gnedin family only")
        if args.gamma is None:
            raise UsageError("--gamma is required")
        if args.zeta != 0:
            raise UsageError("--initial requires zeta = 0")
        value = restricted_eppf(sizes, _parse_sizes(args.initial), args.gamma)
    else:
        params = _params(args)
        value = eppf(sizes, params) if args.family == "gnedin" else ep_eppf(sizes, params)
    out.write(fmt(float(value)) + "\n")
    return 0


def cmd_verify(args, out) -> int:
    reports = run_suite(args.check, SeedSpec(args.seed), perturb=args.perturb)
    for r in reports:
        if args.format == "json":
            out.write(r.to_json() + "\n")
        else:
            out.write(f"{r.status.upper():4s}  {r.name}  statistic={r.statistic:.4g} threshold={r.threshold:.4g}\n")
    return 1 if any(r.status == "fail" for r in reports) else 0


COMMANDS = {
    "sample": cmd_sample,
    "pmf": cmd_pmf,
    "posterior": cmd_posterior,
    "eppf": cmd_eppf,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except BrokenPipeError:
        sys.stderr.close()
        return 0
    except (UsageError, AdmissibilityError, DegenerateError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
