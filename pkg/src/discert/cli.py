"""Command-line interface: ``discert certify | sample | selftest``."""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq

from .certify import (
    DEFAULT_CAP,
    certify_bounds,
    certify_l0,
    certify_point,
    default_jobs,
    max_radius_frontier,
)
from .confidence import two_stage_estimate
from .core import (
    BINARY_CLASS,
    MULTI_CLASS,
    CertError,
    CertResult,
    NoiseSpec,
    RadiiSpec,
    parse_decimal,
    validate_noise_spec,
)
from .formats import FormatError, read_vectors, read_votes, render, write_results, write_votes
from .smoothing import Group, SamplerConfig, collect_votes, parse_classifier, synthetic_sparse


class UsageError(ValueError):
    pass


def _range(text: str) -> Tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        a, b = int(lo), int(hi if sep else lo)
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected A..B") from None
    if a < 0 or b < a:
        raise UsageError(f"bad range {text!r}")
    return a, b


def _joint_group(text: str, K: int) -> Tuple[NoiseSpec, RadiiSpec]:
    # P_PLUS,P_MINUS:R_ADD,R_DEL
    try:
        probs, radii = text.split(":")
        pp, pm = probs.split(",")
        ra, rd = (int(t) for t in radii.split(","))
    except ValueError:
        raise UsageError(f"bad joint group {text!r}, expected P_PLUS,P_MINUS:R_ADD,R_DEL") from None
    return validate_noise_spec(pp, pm, K), RadiiSpec(ra, rd)


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


# -- certify -------------------------------------------------------------------

def _frontier_job(args):
    noise, bounds, cap = args
    return max_radius_frontier(noise, bounds, cap)


def _grid_job(args):
    noise, bounds, cells = args
    return [certify_point(noise, RadiiSpec(*c), bounds).certified for c in cells]


def _l0_job(args):
    noise, bounds, r = args
    return certify_l0(noise, bounds, r)


def _map(fn, work, jobs):
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, work))
    return [fn(w) for w in work]


def _distinct(bounds_seq):
    index = {}
    for b in bounds_seq:
        index.setdefault(b, len(index))
    return index


def cmd_certify(args) -> int:
    votes = read_votes(open(args.votes) if args.votes != "-" else sys.stdin)
    K = args.K
    jobs = args.jobs or default_jobs()
    if args.joint:
        ga, gf = (_joint_group(t, K) for t in args.joint)
        noise, radii = (ga[0], gf[0]), (ga[1], gf[1])
        if args.frontier or args.grid_ra or args.grid_rd or args.l0 is not None:
            raise UsageError("--joint supports fixed radii only")
    else:
        noise = validate_noise_spec(args.p_plus, args.p_minus, K)
        radii = RadiiSpec(args.ra, args.rd, args.rc).check_for(K)
    alpha = parse_decimal(args.alpha)
    mode = MULTI_CLASS if args.mode == "multi" else BINARY_CLASS
    bounds_seq = [two_stage_estimate(sel, est, alpha, mode, votes.num_classes) for sel, est in votes.records]
    ids = [sel.input_id for sel, _ in votes.records]
    index = _distinct(bounds_seq)
    profiles = list(index)

    out, close = _open_out(args.output)
    try:
        if args.grid_ra or args.grid_rd or args.grid_rc:
            ra_lo, ra_hi = _range(args.grid_ra or "0..0")
            rd_lo, rd_hi = _range(args.grid_rd or "0..0")
            rc_lo, rc_hi = _range(args.grid_rc or "0..0")
            cells = [(a, d, c) for c in range(rc_lo, rc_hi + 1) for d in range(rd_lo, rd_hi + 1)
                     for a in range(ra_lo, ra_hi + 1)]
            for c in cells:
                RadiiSpec(*c).check_for(K)
            verdicts = _map(_grid_job, [(noise, b, cells) for b in profiles], jobs)
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["ra", "rd", "rc", "certified", "total", "certified_ratio"])
            n = len(bounds_seq)
            for j, c in enumerate(cells):
                k = sum(verdicts[index[b]][j] for b in bounds_seq)
                w.writerow([*c, k, n, render_ratio(k, n)])
            _summary(f"grid of {len(cells)} cells over {n} inputs")
            return 0

        if args.frontier:
            fronts = _map(_frontier_job, [(noise, b, args.cap) for b in profiles], jobs)
            rows: List[CertResult] = []
            certified = 0
            for rid, b in zip(ids, bounds_seq):
                front = fronts[index[b]]
                if not front:
                    rows.append(certify_point(noise, RadiiSpec(), b, rid))
                    continue
                certified += 1
                rows.extend(certify_point(noise, r, b, rid) for r in front)
            write_results(out, rows)
            _summary(f"certified ratio at zero radius: {certified}/{len(ids)} = {render_ratio(certified, len(ids))}")
            return 0

        if args.l0 is not None:
            res = _map(_l0_job, [(noise, b, args.l0) for b in profiles], jobs)
            results = [res[index[b]].with_id(i) for b, i in zip(bounds_seq, ids)]
        else:
            results = certify_bounds(bounds_seq, noise, radii, jobs, ids)
        write_results(out, results)
        k = sum(r.certified for r in results)
        _summary(f"certified ratio: {k}/{len(results)} = {render_ratio(k, len(results))}")
        return 0
    finally:
        if close:
            out.close()


def render_ratio(k: int, n: int) -> str:
    return render(mpq(k, n)) if n else "0"


def _summary(text: str):
    print(text, file=sys.stderr)


# -- sample --------------------------------------------------------------------

def _parse_group(text: str, K: int) -> Group:
    # NAME:A..B:P_PLUS:P_MINUS
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"bad group {text!r}, expected NAME:A..B:P_PLUS:P_MINUS")
    name, span, pp, pm = parts
    lo, hi = _range(span)
    return Group(name, tuple(range(lo, hi + 1)), validate_noise_spec(pp, pm, K))


def cmd_sample(args) -> int:
    K = args.K
    try:
        classifier = parse_classifier(args.classifier, K)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.input:
        with open(args.input) as fh:
            items = read_vectors(fh)
    elif args.synthetic:
        try:
            n, d, density = args.synthetic.split(":")
            data = synthetic_sparse(int(n), int(d), float(density), args.seed, K)
        except ValueError:
            raise UsageError("bad --synthetic, expected N:D:DENSITY") from None
        items = [(f"x{i}", list(row)) for i, row in enumerate(data)]
    else:
        raise UsageError("need --input or --synthetic")

    groups = tuple(_parse_group(g, K) for g in args.group or ())
    noise = None if groups else validate_noise_spec(args.p_plus, args.p_minus, K)
    cfg = SamplerConfig(noise, args.seed, args.n_select, args.n_estimate, groups, jobs=1)

    def run(i):
        rid, vec = items[i]
        x = np.asarray(vec, dtype=np.int64)
        if np.any((x < 0) | (x >= K)):
            raise UsageError(f"vector {rid} has values outside 0..{K - 1}")
        return collect_votes(x, classifier, cfg, args.num_classes, stream=i, input_id=rid)

    jobs = args.jobs or default_jobs()
    if jobs > 1 and not getattr(classifier, "serial_only", False):
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run, range(len(items))))
    else:
        records = [run(i) for i in range(len(items))]
    if hasattr(classifier, "close"):
        classifier.close()
    out, close = _open_out(args.output)
    try:
        write_votes(out, args.num_classes, args.n_select, args.n_estimate, records)
    finally:
        if close:
            out.close()
    return 0


# -- selftest ------------------------------------------------------------------

def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return 0 if run_selftest(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def noise_flags(p):
        p.add_argument("--p-plus", default="0.01", help="flip probability of zeros (decimal)")
        p.add_argument("--p-minus", default="0.6", help="flip probability of nonzeros (decimal)")
        p.add_argument("-K", type=int, default=2, help="number of categories per coordinate")
        p.add_argument("--jobs", type=int, default=None, help="worker count (default: $DISCERT_JOBS or 1)")
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    c = sub.add_parser("certify", help="certify inputs from a votes file")
    c.add_argument("votes", help="votes file ('-' for stdin)")
    noise_flags(c)
    c.add_argument("--alpha", default="0.01")
    c.add_argument("--mode", choices=["binary", "multi"], default="multi")
    c.add_argument("--ra", type=int, default=0)
    c.add_argument("--rd", type=int, default=0)
    c.add_argument("--rc", type=int, default=0)
    c.add_argument("--frontier", action="store_true", help="emit maximal certified radii per input")
    c.add_argument("--cap", type=int, default=DEFAULT_CAP, help="per-axis search limit for --frontier")
    c.add_argument("--grid-ra", default=None, metavar="A..B")
    c.add_argument("--grid-rd", default=None, metavar="A..B")
    c.add_argument("--grid-rc", default=None, metavar="A..B")
    c.add_argument("--l0", type=int, default=None, metavar="R", help="certify all splits of an l0 radius")
    c.add_argument("--joint", nargs=2, metavar="P_PLUS,P_MINUS:R_ADD,R_DEL",
                   help="two coordinate groups with their own noise and radii")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("sample", help="collect two-stage votes for a set of inputs")
    noise_flags(s)
    s.add_argument("--classifier", required=True,
                   help="constant:C | threshold:I[:T] | majority:K | linear:W,..[:B] | exec:COMMAND")
    s.add_argument("--input", default=None, help="vectors file: 'id v0 v1 ...' per line")
    s.add_argument("--synthetic", default=None, metavar="N:D:DENSITY")
    s.add_argument("--num-classes", type=int, default=2)
    s.add_argument("--group", action="append", metavar="NAME:A..B:P_PLUS:P_MINUS",
                   help="smooth coordinates A..B with their own flip probabilities (repeatable)")
    s.add_argument("--n-select", type=int, default=1000)
    s.add_argument("--n-estimate", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sample)

    t = sub.add_parser("selftest", help="run oracle sweeps and worked examples")
    t.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, CertError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
