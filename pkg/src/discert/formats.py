"""Votes files, vector files and results CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

from .core import INF, CertResult, RadiiSpec, VoteRecord

VOTES_MAGIC = "#votes"
RESULT_COLUMNS = ["id", "mode", "p_lower", "runner_upper", "ra", "rd", "rc",
                  "rho_or_margin", "certified", "abstained"]


class FormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class VotesFile:
    num_classes: int
    n_selection: int
    n_estimation: int
    records: List[Tuple[VoteRecord, VoteRecord]]


def _parse_header(line: str, lineno: int) -> dict:
    fields = {}
    for tok in line.split()[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise FormatError(f"malformed header field {tok!r}", lineno)
        try:
            fields[key] = int(value)
        except ValueError:
            raise FormatError(f"header field {key} is not an integer", lineno) from None
    for key in ("num_classes", "n_selection", "n_estimation"):
        if key not in fields:
            raise FormatError(f"header misses {key}", lineno)
    return fields


def _parse_counts(tokens: Sequence[str], expected: int, lineno: int) -> Tuple[int, ...]:
    try:
        counts = tuple(int(t) for t in tokens)
    except ValueError:
        raise FormatError("vote counts must be integers", lineno) from None
    if len(counts) != expected:
        raise FormatError(f"expected {expected} counts, found {len(counts)}", lineno)
    if any(c < 0 for c in counts):
        raise FormatError("vote counts must be nonnegative", lineno)
    return counts


def read_votes(stream: TextIO) -> VotesFile:
    """Parse a votes file.

    Header: ``#votes num_classes=C n_selection=N0 n_estimation=N``.
    Records: ``id c_0 .. c_{C-1} | c_0 .. c_{C-1}`` (selection | estimation).
    A record without ``|`` uses the same counts for both stages.
    """
    header = None
    records = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(VOTES_MAGIC):
            if header is not None:
                raise FormatError("duplicate header", lineno)
            header = _parse_header(line, lineno)
            continue
        if line.startswith("#"):
            continue
        if header is None:
            raise FormatError("record before the #votes header", lineno)
        C = header["num_classes"]
        left, bar, right = line.partition("|")
        tokens = left.split()
        if not tokens:
            raise FormatError("missing id", lineno)
        rid = tokens[0]
        sel = _parse_counts(tokens[1:], C, lineno)
        est = _parse_counts(right.split(), C, lineno) if bar else sel
        if sum(est) == 0:
            raise FormatError("estimation stage has no votes", lineno)
        records.append((VoteRecord(rid, sel), VoteRecord(rid, est)))
    if header is None:
        raise FormatError("missing #votes header")
    return VotesFile(header["num_classes"], header["n_selection"], header["n_estimation"], records)


def write_votes(stream: TextIO, num_classes: int, n_selection: int, n_estimation: int,
                records: Iterable[Tuple[VoteRecord, VoteRecord]]):
    stream.write(f"{VOTES_MAGIC} num_classes={num_classes} n_selection={n_selection} "
                 f"n_estimation={n_estimation}\n")
    for sel, est in records:
        stream.write(" ".join([sel.input_id, *map(str, sel.counts), "|", *map(str, est.counts)]) + "\n")


def read_vectors(stream: TextIO) -> List[Tuple[str, List[int]]]:
    """``id v_0 v_1 ...`` per line; ``#`` starts a comment line."""
    out = []
    width = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            values = [int(t) for t in tokens[1:]]
        except ValueError:
            raise FormatError("vector entries must be integers", lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise FormatError(f"expected {width} entries, found {len(values)}", lineno)
        out.append((tokens[0], values))
    return out


def render(value) -> str:
    """Decimal rendering with 12 significant digits."""
    if value == INF:
        return "inf"
    num, den = int(value.numerator), int(value.denominator)
    with localcontext() as ctx:
        ctx.prec = 12
        return str(Decimal(num) / Decimal(den))


def _radii_cells(radii) -> List[str]:
    if isinstance(radii, tuple):
        # joint: report the per-group radii as "a+f"
        return [f"{radii[0].r_add}+{radii[1].r_add}", f"{radii[0].r_del}+{radii[1].r_del}",
                f"{radii[0].r_change}+{radii[1].r_change}"]
    r = radii if radii is not None else RadiiSpec()
    return [str(r.r_add), str(r.r_del), str(r.r_change)]


def result_row(res: CertResult) -> List[str]:
    return [str(res.input_id), res.mode, render(res.p_lower), render(res.p_upper_runner),
            *_radii_cells(res.radii), render(res.rho_or_margin),
            "true" if res.certified else "false", "true" if res.abstained else "false"]


def write_results(stream: TextIO, results: Iterable[CertResult]):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for res in results:
        w.writerow(result_row(res))


def results_to_string(results: Iterable[CertResult]) -> str:
    buf = io.StringIO()
    write_results(buf, results)
    return buf.getvalue()
