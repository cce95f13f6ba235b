"""Brute-force reference implementations used to pin expected test values.

Everything here is deliberately naive: trial division, direct enumeration,
extended-precision direct sums.  None of it shares code with the package, so
agreement is meaningful.
"""
from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from functools import lru_cache

import numpy as np


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@lru_cache(maxsize=None)
def primes_upto(limit: int) -> tuple[int, ...]:
    return tuple(n for n in range(2, limit + 1) if is_prime(n))


def primes_in(lo: int, hi: int) -> list[int]:
    """Primes in [lo, hi) by trial division."""
    return [n for n in range(max(lo, 2), hi) if is_prime(n)]


def prime_powers_upto(limit: int) -> list[tuple[int, int, int]]:
    """(p**k, p, k) with k >= 2 and p**k <= limit, ascending by value."""
    out = []
    for p in primes_upto(int(math.isqrt(limit)) + 1):
        v = p * p
        k = 2
        while v <= limit:
            out.append((v, p, k))
            v *= p
            k += 1
    out.sort()
    return out


def brute_force_characters(q: int) -> list[dict[int, complex]]:
    """Every completely multiplicative map units -> roots of unity.

    Enumerates all assignments of phi(q)-th roots of unity to the units and
    keeps the multiplicative ones.  Exponential in phi(q); fine for q <= 8.
    """
    units = [a for a in range(q) if math.gcd(a, q) == 1]
    phi = len(units)
    roots = [cmath.exp(2j * cmath.pi * j / phi) for j in range(phi)]
    found = []
    # chi is determined by its exponents on the units; prune via recursion
    def extend(partial: dict[int, complex]):
        if len(partial) == phi:
            found.append(dict(partial))
            return
        a = next(u for u in units if u not in partial)
        for r in roots:
            partial[a] = r
            ok = True
            for x in list(partial):
                for y in list(partial):
                    z = (x * y) % q
                    if z in partial:
                        if abs(partial[x] * partial[y] - partial[z]) > 1e-9:
                            ok = False
                            break
                if not ok:
                    break
            if ok:
                extend(partial)
            del partial[a]

    extend({1: 1.0 + 0j})
    return found


class ReferenceTally:
    """Direct extended-precision sums over trial-division primes.

    Builds sorted per-term arrays once, then answers prefix queries at any x
    via longdouble cumulative sums.  Used as the independent oracle for the
    streaming accumulator.
    """

    def __init__(self, x_max: int, q: int, char_values: dict[int, dict[int, complex]] | None = None):
        char_values = char_values or {}
        self.q = q
        self.primes = [p for p in primes_upto(x_max)]
        self.units = [a for a in range(q) if math.gcd(a, q) == 1]
        ps = np.array(self.primes, dtype=np.float64)
        res = np.array([p % q for p in self.primes])
        self.positions = np.array(self.primes, dtype=np.int64)
        self.by_class = {}
        for a in self.units:
            mask = res == a
            pa = ps[mask]
            self.by_class[a] = {
                "positions": self.positions[mask],
                "count": np.arange(1, int(mask.sum()) + 1, dtype=np.int64),
                "invsqrt": np.cumsum((1.0 / np.sqrt(pa)).astype(np.longdouble)),
                "log": np.cumsum(np.log(pa.astype(np.longdouble))),
            }
        # psi terms: primes and higher powers interleaved, sorted by value
        psi_terms: dict[int, list[tuple[int, float]]] = {a: [] for a in self.units}
        for p in self.primes:
            if math.gcd(p % q, q) == 1:
                psi_terms[p % q].append((p, math.log(p)))
        for v, p, _k in prime_powers_upto(x_max):
            if math.gcd(v % q, q) == 1:
                psi_terms[v % q].append((v, math.log(p)))
        self.psi = {}
        for a in self.units:
            psi_terms[a].sort()
            pos = np.array([v for v, _ in psi_terms[a]], dtype=np.int64)
            terms = np.array([t for _, t in psi_terms[a]], dtype=np.longdouble)
            self.psi[a] = {"positions": pos, "sum": np.cumsum(terms)}
        # per-character prefix sums
        self.char = {}
        for idx, table in char_values.items():
            # residues off the unit group (primes dividing q) contribute zero
            chi = np.array([table.get(int(a), 0j) for a in res])
            invsqrt = np.cumsum((chi / np.sqrt(ps)).astype(np.clongdouble))
            mert = np.cumsum(
                np.array(
                    [table.get((p * p) % q, 0j) / p for p in self.primes],
                    dtype=np.clongdouble,
                )
            )
            eul = np.cumsum(
                np.array(
                    [-cmath.log(1.0 - table.get(p % q, 0j) / math.sqrt(p)) for p in self.primes],
                    dtype=np.clongdouble,
                )
            )
            self.char[idx] = {"invsqrt": invsqrt, "mertens": mert, "eulerlog": eul}

    @staticmethod
    def _prefix(positions: np.ndarray, cumulative: np.ndarray, x: float):
        i = int(np.searchsorted(positions, x, side="right"))
        if i == 0:
            return cumulative.dtype.type(0)
        return cumulative[i - 1]

    def class_stats(self, a: int, x: float) -> dict[str, float]:
        d = self.by_class[a]
        return {
            "count": int(self._prefix(d["positions"], d["count"], x)),
            "invsqrt": float(self._prefix(d["positions"], d["invsqrt"], x)),
            "log": float(self._prefix(d["positions"], d["log"], x)),
            "psi": float(self._prefix(self.psi[a]["positions"], self.psi[a]["sum"], x)),
        }

    def char_stats(self, idx: int, x: float) -> dict[str, complex]:
        d = self.char[idx]
        return {
            key: complex(self._prefix(self.positions, d[key], x)) for key in d
        }


def exact_race_density(positions, weights, x_lo: float, x_hi: float) -> float:
    """Linear measure of {x in [x_lo, x_hi] : step function > 0}, brute style.

    Walks the jump list in pure Python.  Normalized by (x_hi - x_lo).
    """
    total = 0.0
    current = 0.0
    prev = x_lo
    for pos, w in zip(positions, weights):
        if pos <= x_lo:
            current += w
            continue
        if pos > x_hi:
            break
        if current > 0:
            total += pos - prev
        prev = pos
        current += w
    if current > 0 and x_hi > prev:
        total += x_hi - prev
    return total / (x_hi - x_lo)


def exact_race_log_density(positions, weights, x_lo: float, x_hi: float) -> float:
    """Same walk as exact_race_density but with du/u measure."""
    total = 0.0
    current = 0.0
    prev = x_lo
    for pos, w in zip(positions, weights):
        if pos <= x_lo:
            current += w
            continue
        if pos > x_hi:
            break
        if current > 0:
            total += math.log(pos / prev)
        prev = pos
        current += w
    if current > 0 and x_hi > prev:
        total += math.log(x_hi / prev)
    return total / math.log(x_hi / x_lo)
