"""Command-line entry point.

Data goes to standard output (or ``--emit``); progress and diagnostics go to
standard error.  Exit status: 0 success, 1 a check found a violation,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction

from .dist import DyadicMass, tail_nonneg, variance
from .measures import (
    canonical_odd,
    clt_probe,
    empirical_frequency,
    limit_iterate,
    measure_report,
    mu_nonneg_mass,
    mu_window,
    p_of,
)
from .scanner import (
    MEMORY_ENV,
    WORKERS_ENV,
    CheckpointError,
    MemoryBudgetExceeded,
    ScanOptions,
    assert_asymmetry,
    assert_median,
    emit_table,
    find_minimizers,
    scan,
)
from .trees import enumerate_distribution, render_bracket, sample_stopped, tree_of
from .verify import SUITES, run_suite
from .words import BOTTOM, letter_counts, odd_to_word, parse_word

log = logging.getLogger("cusickwalk")


class UsageError(Exception):
    pass


def _frac(x) -> str:
    x = x.as_fraction() if isinstance(x, DyadicMass) else Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def _index(t) -> object:
    """Word or bottom for a parsed target."""
    if isinstance(t, int):
        t = canonical_odd(t)
        return BOTTOM if t == 1 else odd_to_word(t)
    return t


def _write(args, text: str):
    if getattr(args, "emit", None):
        with open(args.emit, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _target(args):
    if args.word is not None and args.t is not None:
        raise UsageError("give either --word or --t, not both")
    if args.word is not None:
        try:
            return parse_word(args.word)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.t is not None:
        if args.t < 1:
            raise UsageError("--t must be >= 1")
        return args.t
    raise UsageError("one of --word or --t is required")


# -- subcommands ---------------------------------------------------------


def cmd_dist(args) -> int:
    t = _target(args)
    if args.format == "csv":
        _write(args, p_of(t).to_csv())
    elif args.format == "text":
        p = p_of(t)
        key = canonical_odd(t)
        lines = [f"t = {key}", f"word = {'bottom' if key == 1 else odd_to_word(key)}"]
        lines += [f"P({d}) = {m}" for d, m in p.items()]
        lines.append(f"variance = {DyadicMass.from_fraction(variance(p))}")
        lines.append(f"V = {tail_nonneg(p)}")
        lines.append(f"mu(N) = {mu_nonneg_mass(key)}")
        _write(args, "\n".join(lines) + "\n")
    else:
        _write(args, _dump(measure_report(t)))
    return 0


def _parse_asserts(text: str | None) -> list[str]:
    if not text:
        return []
    names = [x.strip() for x in text.split(",") if x.strip()]
    for n in names:
        if n not in ("median", "asymmetry"):
            raise UsageError(f"unknown assertion {n!r}; use median,asymmetry")
    return names


def cmd_scan(args) -> int:
    asserts = _parse_asserts(args.assert_)
    if args.max < 3:
        raise UsageError("--max must be at least 3")
    if args.checkpoint_level is not None and not args.checkpoint:
        raise UsageError("--checkpoint-level needs --checkpoint")
    ck_level = args.checkpoint_level
    if args.checkpoint and ck_level is None:
        ck_level = max(2, args.max.bit_length() - 1)
    opts = ScanOptions(
        workers=args.workers,
        cell_bits=args.cell_bits,
        memory_mib=args.memory_mib,
        checkpoint_path=args.checkpoint,
        checkpoint_level=ck_level,
    )
    started = time.perf_counter()
    last = [0.0]

    def progress(level, rows):
        now = time.perf_counter()
        if now - last[0] >= 1.0:
            last[0] = now
            log.info("level %d: %d rows (%.1fs)", level, rows, now - started)

    result = scan(args.max, opts, resume_from=args.resume, progress=progress)
    log.info(
        "scanned %d odd t <= %d in %.2fs with the %s kernel; peak storage %.1f MiB",
        result.count, args.max, time.perf_counter() - started, result.backend,
        result.peak_bytes / 2**20,
    )
    minimizers = find_minimizers(result)
    _write(args, emit_table(minimizers, args.format))
    if args.records:
        with open(args.records, "w") as fh:
            result.write_records(fh)
    summary = {
        "K": args.max,
        "records": result.count,
        "minimizers": len(minimizers),
        "minimizers_first_letter_R": sum(
            1 for t in minimizers if t > 3 and str(odd_to_word(t))[0] == "R"
        ),
        "peak_bytes": result.peak_bytes,
        "backend": result.backend,
    }
    status = 0
    for name in asserts:
        rep = assert_median(result) if name == "median" else assert_asymmetry(result)
        summary[name] = rep.to_json_obj()
        if not rep.ok:
            status = 1
            log.error("%s: %d violations, first %s", name, len(rep.violations), rep.violations[:5])
    sys.stderr.write(json.dumps(summary) + "\n")
    return status


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    for n in names:
        if n not in SUITES:
            raise UsageError(f"unknown suite {n!r}; choose from {', '.join(SUITES)} or all")
    reports = []
    status = 0
    for n in names:
        started = time.perf_counter()
        rep = run_suite(n, max_len=args.max_len)
        log.info("%s: %s (%d checks, %.1fs)", n, "ok" if rep.ok else "FAILED",
                 rep.checked, time.perf_counter() - started)
        reports.append(rep.to_json_obj())
        if not rep.ok:
            status = 1
    _write(args, _dump(reports))
    return status


def cmd_simulate(args) -> int:
    tree = tree_of(_index(_target(args)))
    summary = sample_stopped(tree, args.count, seed=args.seed, workers=args.workers or 1,
                             depth_cap=args.depth_cap)
    out = summary.to_json_obj()
    out["seed"] = args.seed
    out["tree"] = render_bracket(tree) if tree.leaves <= 256 else None
    if tree.height <= 30:
        exact = enumerate_distribution(tree)
        out["exact_variance"] = _frac(variance(exact))
        out["total_variation"] = summary.total_variation(exact)
    _write(args, _dump(out))
    return 0


def cmd_limit(args) -> int:
    w = _index(_target(args))
    limit = mu_nonneg_mass(w)
    out = {
        "word": "bottom" if w is BOTTOM else str(w),
        "V_limit": _frac(limit),
        "V_limit_dyadic": [limit.numerator, limit.exponent],
    }
    if w is not BOTTOM:
        if args.steps == "auto":
            n = letter_counts(w)[1] + 2
        else:
            try:
                n = int(args.steps)
            except ValueError:
                raise UsageError("--steps must be 'auto' or a nonnegative integer") from None
            if n < 0:
                raise UsageError("--steps must be nonnegative")
        p = limit_iterate(w, n)
        out.update(
            steps=n,
            P=p.to_json_obj(),
            V=_frac(tail_nonneg(p)),
            mu_nonneg_from_window=_frac(mu_window(w).nonneg_mass()),
        )
    if args.format == "text":
        lines = [f"word = {out['word']}", f"mu(N) = {limit}"]
        if "steps" in out:
            lines.append(f"V after {out['steps']} steps = {tail_nonneg(p)}")
        _write(args, "\n".join(lines) + "\n")
    else:
        _write(args, _dump(out))
    return 0


def cmd_empirical(args) -> int:
    if args.N < 1 or args.t < 0:
        raise UsageError("need --N >= 1 and --t >= 0")
    freq = empirical_frequency(args.t, args.N)
    view = mu_window(max(args.t, 1)) if args.t else None
    rows = []
    for d in sorted(set(freq) | (set(range(view.lo, view.hi + 1)) if view else set())):
        f = freq.get(d, Fraction(0))
        mu = view(d).as_fraction() if view else Fraction(int(d == 0))
        rows.append((d, f, mu))
    if args.format == "csv":
        lines = ["d,count,N,frequency,mu,difference"]
        for d, f, mu in rows:
            lines.append(f"{d},{f * args.N},{args.N},{float(f):.12g},{float(mu):.12g},{float(f - mu):.3e}")
        _write(args, "\n".join(lines) + "\n")
    else:
        _write(args, _dump({
            "t": args.t,
            "N": args.N,
            "max_abs_difference": max(float(abs(f - mu)) for _, f, mu in rows),
            "rows": [{"d": d, "count": int(f * args.N), "mu": _frac(mu)} for d, f, mu in rows],
        }))
    return 0


def cmd_clt(args) -> int:
    rows = [{"n": n, "distance": clt_probe(n)} for n in args.n]
    if args.format == "csv":
        _write(args, "n,distance\n" + "".join(f"{r['n']},{r['distance']:.12g}\n" for r in rows))
    else:
        _write(args, _dump(rows))
    return 0


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cusickwalk",
        description="Exact sum-of-digits measures, tree embeddings and minimizer scans.",
        epilog=f"Environment: {WORKERS_ENV} (default worker count), {MEMORY_ENV} (scan memory budget).",
    )
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def word_args(sp):
        sp.add_argument("--word", help="word over L/R, 'eps' for the empty word, 'bottom' for t=1")
        sp.add_argument("--t", type=int, help="integer index t >= 1")

    sp = sub.add_parser("dist", help="report P_t and mu_t")
    word_args(sp)
    sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_dist)

    sp = sub.add_parser("scan", help="exact V(t) for all odd 3 <= t <= K")
    sp.add_argument("--max", type=int, required=True, metavar="K")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--emit", metavar="FILE", help="minimizer table destination")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--records", metavar="FILE", help="write every record as CSV")
    sp.add_argument("--checkpoint", metavar="FILE")
    sp.add_argument("--checkpoint-level", type=int, metavar="BITS",
                    help="bit-length level to checkpoint after (default: the next-to-last)")
    sp.add_argument("--resume", metavar="FILE")
    sp.add_argument("--assert", dest="assert_", metavar="CHECKS",
                    help="comma list of median,asymmetry")
    sp.add_argument("--cell-bits", type=int, choices=(32, 64), default=64)
    sp.add_argument("--memory-mib", type=int)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="run property suites")
    sp.add_argument("--suite", default="all", help=f"comma list of {', '.join(SUITES)}, or all")
    sp.add_argument("--max-len", type=int, help="longest word to enumerate")
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="Monte Carlo of the stopped walk")
    word_args(sp)
    sp.add_argument("--count", type=int, default=10**6)
    sp.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit seed")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--depth-cap", type=int)
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("limit", help="mu_v(N) through the finite word v R L^k")
    word_args(sp)
    sp.add_argument("--steps", default="auto")
    sp.add_argument("--format", choices=("json", "text"), default="json")
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_limit)

    sp = sub.add_parser("empirical", help="count s(n+t)-s(n) over n < N")
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--N", type=int, default=1 << 22)
    sp.add_argument("--format", choices=("json", "csv"), default="csv")
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_empirical)

    sp = sub.add_parser("clt", help="distance of the alternating word's law to N(0,1)")
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--emit", metavar="FILE")
    sp.set_defaults(func=cmd_clt)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (MemoryBudgetExceeded, CheckpointError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
