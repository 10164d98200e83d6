"""Command-line driver: ``pirlab {verify,rate,capacity,demo}``.

Exit status: 0 when every condition passes, 2 when one fails (or a rate
trial fails to decode), 1 on usage or parameter errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checker import FAIL, check_privacy, check_scheme
from .errors import AnyTrialFailed, PirError
from .scheme import LinearScheme, MessageLibrary
from .sim import capacity_formula, measure_rate, run_trial
from .sun import SunScheme
from .wang import WangScheme

SCHEMES = tuple(f"{family}-{variant}" for family in ("sun", "wang")
                for variant in ("colluding", "robust", "byzantine"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def make_scheme(name: str, M: int, S: int, T: int = 1, U: int = 0, B: int = 0) -> LinearScheme:
    if name not in SCHEMES:
        raise UsageError(f"unknown scheme {name!r}")
    family, variant = name.split("-")
    cls = SunScheme if family == "sun" else WangScheme
    return cls(M, S, T, U, B, variant)


def _default_seed() -> int:
    raw = os.environ.get("PIRLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PIRLAB_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scheme", choices=SCHEMES, default="sun-colluding")
    for flag, default in (("--M", 2), ("--S", 2), ("--T", 1), ("--U", 0), ("--B", 0)):
        common.add_argument(flag, type=int, default=default)
    common.add_argument("--seed", type=int, default=None, help="default: $PIRLAB_SEED or 0")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--format", choices=("json", "csv", "pretty"), default="pretty")

    parser = _Parser(prog="pirlab", description="Verify and simulate linear PIR schemes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", parents=[common], help="check correctness, privacy and capacity")
    v.add_argument("--seeds", type=int, default=100, help="sampled randomness realizations")
    v.add_argument("--exhaustive", action="store_true", help="iterate the whole randomness space")
    v.add_argument("--budget", type=int, default=1000, help="privacy samples per index")
    r = sub.add_parser("rate", parents=[common], help="measure the download rate")
    r.add_argument("--trials", type=int, default=1000)
    sub.add_parser("capacity", parents=[common], help="print the capacity formula value")
    d = sub.add_parser("demo", parents=[common], help="one retrieval, step by step")
    d.add_argument("--m", type=int, default=1)
    return parser


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def cmd_verify(args, scheme: LinearScheme, seed: int) -> int:
    iteration = "exhaustive" if args.exhaustive else args.seeds
    report = check_scheme(scheme, iteration, seed=seed, n_jobs=args.threads)
    budget = args.budget
    spec = scheme.randomness
    if args.exhaustive and spec.enumerable:
        budget = max(budget, spec.size)
    report.add(check_privacy(scheme, budget=budget, seed=seed))
    if args.format == "json" or args.out is not None:
        _emit(report.to_json(), args.out)
    if args.format == "pretty":
        print(f"{scheme.name} {scheme.params.to_dict()}")
        for e in report.entries:
            print(f"  {e.condition:28s} {e.result:13s} {e.coverage:16s} violations {e.violation_fraction:.4f}")
    return 2 if any(e.result == FAIL for e in report.entries) else 0


def cmd_rate(args, scheme: LinearScheme, seed: int) -> int:
    try:
        res = measure_rate(scheme, args.trials, seed=seed, threads=args.threads)
    except AnyTrialFailed as exc:
        print(f"rate measurement failed: {exc}", file=sys.stderr)
        return 2
    if args.format == "csv":
        _emit(res.trials_csv(), args.out)
    elif args.format == "json" or args.out is not None:
        _emit(res.summary_json(), args.out)
    if args.format == "pretty":
        print(f"{float(res.empirical_rate):.6f} / {float(res.capacity):.6f} ratio {float(res.ratio):.3f}")
    return 0


def cmd_capacity(args, scheme: LinearScheme, seed: int) -> int:
    c = capacity_formula(scheme.params)
    print(f"{c} {float(c):.6f}")
    return 0


def cmd_demo(args, scheme: LinearScheme, seed: int) -> int:
    p = scheme.params
    rng = np.random.default_rng(seed)
    W = MessageLibrary.random(scheme.field, p.M, p.L, rng)
    scheme._check_index(args.m)
    res = run_trial(scheme, args.m, W, seed=rng)
    print(f"{scheme!r}: {p.N} servers, {scheme.rows_per_server} query rows each, L={p.L}")
    print(f"retrieve W_{args.m}: decoded {'ok' if res.decoded_ok else 'FAILED ' + res.reason}, "
          f"downloaded {res.downloaded_symbols} symbols")
    return 0 if res.decoded_ok else 2


COMMANDS = {"verify": cmd_verify, "rate": cmd_rate, "capacity": cmd_capacity, "demo": cmd_demo}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        seed = _default_seed() if args.seed is None else args.seed
        scheme = make_scheme(args.scheme, args.M, args.S, args.T, args.U, args.B)
        return COMMANDS[args.command](args, scheme, seed)
    except (UsageError, PirError) as exc:
        print(f"pirlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
