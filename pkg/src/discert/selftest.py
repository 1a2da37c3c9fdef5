"""Quick self-check: region tables and LP values against brute-force enumeration,
plus a few hand-computed values."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List, Tuple

from gmpy2 import mpq

from .certify import certify_point, margin, rho
from .core import ClassBounds, NoiseSpec, RadiiSpec, sphere_representatives
from .exactmath import clopper_pearson_lower
from .oracle import enumerate_regions, lp_exact, lp_exact_margin
from .regions import build_table

GRID = ("0.1", "0.3", "0.5", "0.7", "0.9")


def _binary_regions() -> bool:
    for pp in GRID:
        for pm in GRID:
            noise = NoiseSpec(pp, pm)
            for ra in range(4):
                for rd in range(4 - ra):
                    x, xt = sphere_representatives(RadiiSpec(ra, rd))
                    if build_table(noise, RadiiSpec(ra, rd)) != enumerate_regions(list(x), list(xt), noise):
                        return False
    return True


def _ternary_regions() -> bool:
    for pp, pm in (("0.2", "0.5"), ("0.3", "0.3"), ("0", "0.4"), ("0.6", "1")):
        noise = NoiseSpec(pp, pm, 3)
        for r0 in range(3):
            for r1 in range(3 - r0):
                for r2 in range(3 - r0 - r1):
                    radii = RadiiSpec(r0, r1, r2)
                    x, xt = sphere_representatives(radii, 3)
                    if build_table(noise, radii) != enumerate_regions(list(x), list(xt), noise):
                        return False
    return True


def _lp_values() -> bool:
    for pp, pm in (("0.1", "0.5"), ("0.3", "0.7"), ("0.5", "0.5")):
        noise = NoiseSpec(pp, pm)
        for ra, rd in ((1, 0), (0, 2), (2, 1)):
            radii = RadiiSpec(ra, rd)
            x, xt = sphere_representatives(radii)
            table = build_table(noise, radii)
            for p in ("0.6", "0.8", "0.95"):
                if rho(table, mpq(p)) != lp_exact(list(x), list(xt), noise, Fraction(p)):
                    return False
            if margin(table, mpq("0.7"), mpq("0.2")) != lp_exact_margin(
                    list(x), list(xt), noise, Fraction("0.7"), Fraction("0.2")):
                return False
    return True


def _golden() -> bool:
    res = certify_point(NoiseSpec("0.2", "0.4"), RadiiSpec(1, 1), ClassBounds.binary("0.9"))
    return res.rho_or_margin == mpq(1, 2) and not res.certified


def _clopper_pearson() -> bool:
    alpha = mpq(1, 100)
    for n in (1, 5, 50, 1000):
        if abs(float(clopper_pearson_lower(n, n, alpha)) - 0.01 ** (1 / n)) > 1e-10:
            return False
    return True


CHECKS: List[Tuple[str, Callable[[], bool]]] = [
    ("binary regions match enumeration", _binary_regions),
    ("K=3 regions match enumeration", _ternary_regions),
    ("rho and margin match the pointwise LP", _lp_values),
    ("golden value rho = 1/2 is not certified", _golden),
    ("Clopper-Pearson lower(n, n) = alpha^(1/n)", _clopper_pearson),
]


def run_selftest(verbose: bool = False) -> bool:
    ok = True
    for name, check in CHECKS:
        try:
            passed = check()
        except Exception as exc:  # a crash counts as a failure
            passed = False
            name = f"{name} ({exc!r})"
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
