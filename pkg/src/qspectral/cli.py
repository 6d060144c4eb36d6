"""Command-line front end: ``spectrum``, ``rate``, ``verify`` and ``converge``.

Exit codes: 0 success, 1 check failure, 2 usage or input error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import math
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from qspectral import io
from qspectral.channels import apply_channel
from qspectral.errors import CapacityError, QSpectralError
from qspectral.operators import SubsystemShape
from qspectral.rates import (
    DEFAULT_EPSILON,
    DEFAULT_GAMMA_TOL,
    SENSITIVITY_EPSILONS,
    EntropicKind,
    RateEstimate,
    RateQuery,
    entropic_rates,
    estimate_divergence_rates,
)
from qspectral.spectrum import PairSequence, spectrum_curve
from qspectral.verify import CheckDescriptor, check_ids, dump_reports, format_table, run_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

# preset -> (state, omega or None, rate kind, split, limit, short grid 1..6)
PRESETS = {
    "stein": ("diag:0.9,0.1", "diag:0.5,0.5", "divergence", "", 0.368064, False),
    "entropy": ("diag:0.75,0.25", None, "entropy", "", 0.562335, False),
    "maxmixed": ("maxmixed:2", None, "entropy", "", math.log(2), False),
    "bell-conditional": ("bell", None, "conditional", "A:B", -math.log(2), True),
}
CONVERGE_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
DENSE_PRESET_MAX_N = 6


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _flatten(values) -> list[int]:
    return [x for chunk in values for x in chunk]


def _expand_args_file(argv: list[str]) -> list[str]:
    """Replace ``--args-file F`` with F's contents, one flag (and its values) per line."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok == "--args-file" or tok.startswith("--args-file="):
            path = tok.split("=", 1)[1] if "=" in tok else next(it, None)
            if path is None:
                raise UsageError("--args-file: missing file name")
            try:
                lines = Path(path).read_text().splitlines()
            except OSError as exc:
                raise UsageError(f"--args-file: cannot read {path}: {exc.strerror}") from None
            for line in lines:
                line = line.strip()
                if line and not line.startswith("#"):
                    out.extend(shlex.split(line))
        else:
            out.append(tok)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspectral", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def state_flags(p):
        p.add_argument("--rho", required=True, help="operator JSON file or builtin (bell, ghz3, maxmixed:<d>, diag:<p,...>, classical:<p11,p12;...>)")
        p.add_argument("--omega", default=None, help="operator file, builtin or 'identity' (default identity)")
        p.add_argument("--channel", default=None, help="channel applied to every copy of rho and omega (file or builtin)")
        p.add_argument("--n", type=_int_list, action="append", required=True, help="blocklengths, e.g. '1,2,4'")
        p.add_argument("--engine", choices=("auto", "dense", "typeclass"), default="auto")
        p.add_argument("--out", default=None, help="output CSV (default stdout)")

    sp = sub.add_parser("spectrum", help="tail functional curves over a gamma grid")
    state_flags(sp)
    sp.add_argument("--gamma-min", type=float, required=True)
    sp.add_argument("--gamma-max", type=float, required=True)
    sp.add_argument("--gamma-steps", type=int, required=True)
    sp.add_argument("--functional", choices=("positive", "rho", "omega"), default="positive")

    rp = sub.add_parser("rate", help="finite-n sup/inf/midpoint rate estimates")
    state_flags(rp)
    rp.add_argument("--kind", choices=("divergence", "entropy", "conditional", "mutual"), default=None,
                    help="default: divergence with --omega, entropy without")
    rp.add_argument("--split", default="", help="system:conditioning labels, e.g. A:B or A:BC")
    rp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    rp.add_argument("--gamma-tol", type=float, default=DEFAULT_GAMMA_TOL)
    rp.add_argument("--bits", action="store_true", help="also print a summary in bits (CSV stays in nats)")

    vp = sub.add_parser("verify", help="run registered verification checks")
    vp.add_argument("--suite", default="all", help="check id or 'all'")
    vp.add_argument("--trials", type=int, default=None)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--dims", type=_int_list, default=None)
    vp.add_argument("--jobs", type=int, default=1, help="worker processes")
    vp.add_argument("--out", default=None, help="JSON report file (default stdout)")

    cp = sub.add_parser("converge", help="run a named convergence experiment")
    cp.add_argument("--preset", choices=sorted(PRESETS), required=True)
    cp.add_argument("--n-max", type=int, default=1000)
    cp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    cp.add_argument("--no-sensitivity", action="store_true",
                    help=f"skip the extra rows at epsilon in {SENSITIVITY_EPSILONS}")
    cp.add_argument("--bits", action="store_true", help="also print a summary in bits (CSV stays in nats)")
    cp.add_argument("--out", default=None)
    return parser


# ---------------------------------------------------------------------------


def _load(flag: str, source: str):
    try:
        return io.load_state(source)
    except (QSpectralError, ValueError, OSError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _sequence(args) -> tuple[PairSequence, SubsystemShape]:
    rho, shape = _load("--rho", args.rho)
    omega = None
    if args.omega is not None and args.omega != "identity":
        omega, _ = _load("--omega", args.omega)
        if omega.shape != rho.shape:
            raise UsageError(f"--omega: dimension {omega.shape[0]} differs from --rho dimension {rho.shape[0]}")
    if args.channel:
        try:
            t = io.load_channel(args.channel)
        except (QSpectralError, ValueError, OSError) as exc:
            raise UsageError(f"--channel: {exc}") from None
        if t.dim_in != rho.shape[0] or t.dim_out != t.dim_in:
            raise UsageError(f"--channel: expects dim {t.dim_in} -> {t.dim_out}, state has dim {rho.shape[0]}")
        rho = apply_channel(t, rho)
        omega = apply_channel(t, omega) if omega is not None else None
    return PairSequence.iid(rho, omega, shape=shape), shape


def _n_grid(args) -> list[int]:
    grid = sorted(set(_flatten(args.n)))
    if grid[0] < 1:
        raise UsageError(f"--n: blocklengths must be >= 1, got {grid[0]}")
    return grid


def _cmd_spectrum(args) -> int:
    if args.gamma_steps < 2 or not args.gamma_min < args.gamma_max:
        raise UsageError("--gamma-steps must be >= 2 and --gamma-min < --gamma-max")
    seq, _ = _sequence(args)
    gammas = np.linspace(args.gamma_min, args.gamma_max, args.gamma_steps)
    curves = [spectrum_curve(seq, n, gammas, args.functional, engine=args.engine) for n in _n_grid(args)]
    _emit(args.out, lambda path: io.write_spectrum_csv(path, curves))
    return EXIT_OK


def _split_labels(split: str, shape: SubsystemShape) -> tuple[tuple[str, ...], tuple[str, ...]]:
    head, _, tail = split.partition(":")

    def labels(text):
        out = tuple(text.replace(",", ""))
        for lab in out:
            if lab not in shape.labels:
                raise UsageError(f"--split: unknown subsystem {lab!r}; state has {''.join(shape.labels)}")
        return out

    return labels(head), labels(tail)


def _cmd_rate(args) -> int:
    if not 0 < args.epsilon < 0.5:
        raise UsageError(f"--epsilon must lie in (0, 1/2), got {args.epsilon}")
    seq, shape = _sequence(args)
    kind = args.kind or ("divergence" if args.omega not in (None, "identity") else "entropy")
    grid = _n_grid(args)
    if kind == "divergence":
        est = estimate_divergence_rates(
            RateQuery(seq, grid, args.epsilon, gamma_tol=args.gamma_tol, engine=args.engine, with_rho_tail=False)
        )
    else:
        if args.omega not in (None, "identity"):
            raise UsageError(f"--omega: not used with --kind {kind}; the reference operator is derived from --rho")
        system, cond = _split_labels(args.split, shape)
        try:
            ek = EntropicKind(kind, shape, system, cond)
        except QSpectralError as exc:
            raise UsageError(f"--split: {exc}") from None
        est = entropic_rates(seq, ek, grid, args.epsilon, gamma_tol=args.gamma_tol, engine=args.engine,
                             with_rho_tail=False)
    _emit(args.out, lambda path: io.write_rate_csv(path, [est]))
    if args.bits:
        _print_bits([est])
    return EXIT_OK


def _print_bits(estimates: Sequence[RateEstimate]) -> None:
    to_bits = 1.0 / math.log(2)
    print("n,epsilon,sup_bits,inf_bits,midpoint_bits,kind", file=sys.stderr)
    for est in estimates:
        for r in est.records:
            vals = (r.sup_thresh * to_bits, r.inf_thresh * to_bits, r.midpoint * to_bits)
            print(",".join([io.fmt(r.n), io.fmt(r.epsilon), *map(io.fmt, vals), est.kind]), file=sys.stderr)


def _run_one(desc: CheckDescriptor):
    return run_check(desc)


def _cmd_verify(args) -> int:
    ids = check_ids() if args.suite == "all" else [args.suite]
    unknown = [c for c in ids if c not in check_ids()]
    if unknown:
        raise UsageError(f"--suite: unknown check {unknown[0]!r}; choose 'all' or one of {', '.join(check_ids())}")
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    dims = tuple(args.dims) if args.dims else None
    descs = [CheckDescriptor(cid, trials=args.trials, dims=dims, seed=args.seed) for cid in ids]
    if args.jobs > 1 and len(descs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_run_one, descs))
    else:
        reports = [_run_one(d) for d in descs]
    text = dump_reports(reports)
    if args.out:
        Path(args.out).write_text(text)
        print(format_table(reports))
    else:
        sys.stdout.write(text)
        print(format_table(reports), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def converge_grid(preset: str, n_max: int) -> list[int]:
    if PRESETS[preset][5]:
        return list(range(1, min(n_max, DENSE_PRESET_MAX_N) + 1))
    return sorted({n for n in CONVERGE_GRID if n <= n_max} | {n_max})


def run_preset(preset: str, n_max: int, epsilon: float = DEFAULT_EPSILON) -> RateEstimate:
    state, omega, kind, split, _, _ = PRESETS[preset]
    rho, shape = io.builtin_state(state)
    grid = converge_grid(preset, n_max)
    if kind == "divergence":
        seq = PairSequence.iid(rho, io.builtin_state(omega)[0])
        return estimate_divergence_rates(RateQuery(seq, grid, epsilon))
    system, cond = (tuple(s) for s in split.partition(":")[::2]) if split else ((), ())
    return entropic_rates(PairSequence.iid(rho, shape=shape), EntropicKind(kind, shape, system, cond), grid, epsilon)


def _cmd_converge(args) -> int:
    if args.n_max < 1:
        raise UsageError(f"--n-max must be >= 1, got {args.n_max}")
    if not 0 < args.epsilon < 0.5:
        raise UsageError(f"--epsilon must lie in (0, 1/2), got {args.epsilon}")
    epsilons = [args.epsilon] + ([] if args.no_sensitivity else [e for e in SENSITIVITY_EPSILONS if e != args.epsilon])
    estimates = [run_preset(args.preset, args.n_max, eps) for eps in epsilons]
    oracle = PRESETS[args.preset][4]
    _emit(args.out, lambda path: io.write_rate_csv(path, estimates))
    if args.bits:
        _print_bits(estimates)
    last = estimates[0].records[-1]
    print(f"{args.preset}: n={last.n} midpoint={io.fmt(last.midpoint)} limit={io.fmt(oracle)} "
          f"gap={io.fmt(last.midpoint - oracle)}", file=sys.stderr)
    return EXIT_OK


def _emit(out, writer) -> None:
    if out:
        writer(out)
    else:
        writer(sys.stdout)


COMMANDS = {"spectrum": _cmd_spectrum, "rate": _cmd_rate, "verify": _cmd_verify, "converge": _cmd_converge}


def run_cli(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_args_file(argv))
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"qspectral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"qspectral: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (QSpectralError, ValueError) as exc:
        print(f"qspectral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
