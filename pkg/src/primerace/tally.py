"""Streaming tallies of weighted prime sums on a log-spaced checkpoint grid.

One pass over the primes up to x_max populates, for every grid point
x_j = exp(y_j), per-residue-class sums (counts, 1/sqrt(p), log p, and the
psi-style sums that also see proper prime powers) and per-character sums
(chi(p)/sqrt(p), chi(p^2)/p, and -log(1 - chi(p)/sqrt(p)) for the partial
Euler product on the critical line).

Accumulators use error-free expansion summation (Shewchuk partials): every
reported total is the correctly rounded double of the exact sum of its
inputs.  Because exact addition is associative, a resumed run, a merge of
partials split on a segment boundary, and a worker pool of any size all
reproduce the single-threaded totals bit for bit.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .characters import (
    Character,
    ClassFunction,
    enumerate_characters,
    unit_residues,
)
from .sieve import (
    DEFAULT_SEGMENT_ODDS,
    PrimeEvent,
    prime_powers,
    segment_bounds,
    sieve_segment,
    simple_sieve,
)

__all__ = [
    "LOG2",
    "CheckpointGrid",
    "TallyCheckpoint",
    "CheckpointSeries",
    "TallyResult",
    "TallyPartial",
    "TallyOrderError",
    "ExactSum",
    "accumulate",
    "range_partial",
    "merge",
    "pi_half",
    "pi_weighted",
    "theta_of",
    "psi_of",
    "psi_char",
    "char_sum",
    "euler_product_partial",
    "mertens_chi_square",
    "write_series_csv",
    "read_series_csv",
]

LOG2 = math.log(2.0)

_CHAR_FIELDS = ("invsqrt", "mertens", "eulerlog")
_CLASS_FIELDS = ("invsqrt", "theta", "psi", "invp")


class TallyOrderError(RuntimeError):
    """An input stream violated the ascending-order contract."""


# ---------------------------------------------------------------------------
# exact summation


class ExactSum:
    """Error-free streaming sum of doubles.

    Keeps a list of non-overlapping partials (Shewchuk's algorithm, as in
    math.fsum); value() is the correctly rounded total.  The represented sum
    is exact, so folding order cannot change the outcome.
    """

    __slots__ = ("partials",)

    def __init__(self, partials: Iterable[float] = ()):  # noqa: D107
        self.partials = list(partials)

    def add(self, x: float) -> None:
        partials = self.partials
        x = float(x)
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def merge(self, other: "ExactSum") -> None:
        for p in list(other.partials):
            self.add(p)

    def value(self) -> float:
        return math.fsum(self.partials) if self.partials else 0.0

    def copy(self) -> "ExactSum":
        return ExactSum(self.partials)

    def to_hex(self) -> list[str]:
        return [p.hex() for p in self.partials]

    @classmethod
    def from_hex(cls, hexes: Iterable[str]) -> "ExactSum":
        return cls(float.fromhex(h) for h in hexes)


class ExactComplexSum:
    """A pair of ExactSums for the real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: ExactSum | None = None, im: ExactSum | None = None):
        self.re = re or ExactSum()
        self.im = im or ExactSum()

    def add(self, z: complex) -> None:
        self.re.add(z.real)
        self.im.add(z.imag)

    def merge(self, other: "ExactComplexSum") -> None:
        self.re.merge(other.re)
        self.im.merge(other.im)

    def value(self) -> complex:
        return complex(self.re.value(), self.im.value())

    def copy(self) -> "ExactComplexSum":
        return ExactComplexSum(self.re.copy(), self.im.copy())

    def to_hex(self) -> list[list[str]]:
        return [self.re.to_hex(), self.im.to_hex()]

    @classmethod
    def from_hex(cls, pair) -> "ExactComplexSum":
        return cls(ExactSum.from_hex(pair[0]), ExactSum.from_hex(pair[1]))


# ---------------------------------------------------------------------------
# checkpoint grid


@dataclass(frozen=True)
class CheckpointGrid:
    """Uniform y-grid y_j = log 2 + j*h, j = 0..n-1; checkpoints at x = e^y."""

    h: float
    n: int

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.n < 1:
            raise ValueError(f"grid needs at least one point, got n={self.n}")

    @classmethod
    def from_xmax(cls, x_max: float, h: float = 0.01) -> "CheckpointGrid":
        if x_max < 2:
            raise ValueError(f"x_max must be at least 2, got {x_max}")
        n = int(math.floor((math.log(x_max) - LOG2) / h + 1e-12)) + 1
        return cls(h=h, n=n)

    @property
    def y(self) -> np.ndarray:
        return LOG2 + self.h * np.arange(self.n)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.y)

    @property
    def y_max(self) -> float:
        return LOG2 + self.h * (self.n - 1)

    @property
    def x_max(self) -> float:
        return math.exp(self.y_max)


# ---------------------------------------------------------------------------
# per-modulus lookup tables


class _Layout:
    """Precomputed residue and character tables for one modulus."""

    def __init__(self, q: int):
        chars = enumerate_characters(q)
        self.q = q
        self.units = unit_residues(q)
        self.nclass = len(self.units)
        self.slot = np.full(q, -1, dtype=np.int64)
        for i, a in enumerate(self.units):
            self.slot[a] = i
        nonprincipal = chars[1:]
        self.nchar = len(nonprincipal)
        self.char_indices = tuple(chi.index for chi in nonprincipal)
        self.char_labels = tuple(chi.label for chi in nonprincipal)
        # chi(p mod q) and chi(p^2 mod q) lookups, zero off the units
        self.chi_tab = np.stack([chi.values for chi in nonprincipal]) if self.nchar else np.zeros((0, q), np.complex128)
        chi2 = np.zeros((self.nchar, q), dtype=np.complex128)
        for j, chi in enumerate(nonprincipal):
            for a in self.units:
                chi2[j, a] = chi.values[(a * a) % q]
        self.chi2_tab = chi2
        # chi(a) per (character, class slot), for the Euler-log inner loop
        self.z_class = np.zeros((self.nchar, self.nclass), dtype=np.complex128)
        for j, chi in enumerate(nonprincipal):
            for i, a in enumerate(self.units):
                self.z_class[j, i] = chi.values[a]
        self.z_is_real = np.abs(self.z_class.imag).max(initial=0.0) == 0.0


@dataclass(eq=False)
class _SegmentPartial:
    """Per-chunk sums for one sieved segment (chunks split at grid points)."""

    lo: int
    hi: int
    nchunks: int
    counts: np.ndarray  # (nchunks, nclass) int64
    invsqrt: np.ndarray  # (nchunks, nclass) float64
    theta: np.ndarray
    invp: np.ndarray
    char_invsqrt: np.ndarray  # (nchunks, nchar) complex128
    char_mertens: np.ndarray
    char_eulerlog: np.ndarray
    jumps: dict[int, np.ndarray]


def _segment_partial(
    primes: np.ndarray,
    lo: int,
    hi: int,
    boundaries: np.ndarray,
    layout: _Layout,
    collect: tuple[int, ...],
) -> _SegmentPartial:
    """Chunked sums over one segment; boundaries are checkpoint x-values."""
    nb = len(boundaries)
    nch = nb + 1
    ncl, nchar = layout.nclass, layout.nchar
    counts = np.zeros((nch, ncl), dtype=np.int64)
    invsqrt = np.zeros((nch, ncl))
    theta = np.zeros((nch, ncl))
    invp = np.zeros((nch, ncl))
    ch_inv = np.zeros((nch, nchar), dtype=np.complex128)
    ch_mer = np.zeros((nch, nchar), dtype=np.complex128)
    ch_eul = np.zeros((nch, nchar), dtype=np.complex128)
    jumps = {a: np.empty(0, dtype=np.int64) for a in collect}
    if len(primes):
        r = primes % layout.q
        pf = primes.astype(np.float64)
        s_all = 1.0 / np.sqrt(pf)
        for i, a in enumerate(layout.units):
            sel = np.flatnonzero(r == a)
            pa = primes[sel]
            if a in jumps:
                jumps[a] = pa
            if not len(pa):
                continue
            sa = s_all[sel]
            la = np.log(pa.astype(np.float64))
            ia = 1.0 / pa.astype(np.float64)
            edges = np.searchsorted(pa, boundaries, side="right")
            prev = 0
            for c in range(nch):
                e = edges[c] if c < nb else len(pa)
                if e > prev:
                    sl = slice(prev, e)
                    counts[c, i] = e - prev
                    invsqrt[c, i] = np.sum(sa[sl])
                    theta[c, i] = np.sum(la[sl])
                    invp[c, i] = np.sum(ia[sl])
                    for j in range(nchar):
                        z = layout.z_class[j, i]
                        if z.imag == 0.0:
                            ch_eul[c, j] += -np.sum(np.log1p(-z.real * sa[sl]))
                        else:
                            ch_eul[c, j] += -np.sum(np.log(1.0 - z * sa[sl]))
                prev = e
        if nchar:
            edges_all = np.searchsorted(primes, boundaries, side="right")
            for j in range(nchar):
                terms_inv = layout.chi_tab[j][r] * s_all
                terms_mer = layout.chi2_tab[j][r] / pf
                prev = 0
                for c in range(nch):
                    e = edges_all[c] if c < nb else len(primes)
                    if e > prev:
                        ch_inv[c, j] = np.sum(terms_inv[prev:e])
                        ch_mer[c, j] = np.sum(terms_mer[prev:e])
                    prev = e
    return _SegmentPartial(
        lo=lo, hi=hi, nchunks=nch,
        counts=counts, invsqrt=invsqrt, theta=theta, invp=invp,
        char_invsqrt=ch_inv, char_mertens=ch_mer, char_eulerlog=ch_eul,
        jumps=jumps,
    )


# ---------------------------------------------------------------------------
# checkpoints


@dataclass(frozen=True, eq=False)
class TallyCheckpoint:
    """Accumulated sums over primes (and prime powers, for psi) up to x."""

    q: int
    x: float
    y: float
    units: tuple[int, ...]
    char_labels: tuple[str, ...]
    counts: np.ndarray
    invsqrt: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    char_invsqrt: np.ndarray
    char_mertens: np.ndarray
    char_eulerlog: np.ndarray
    invp: np.ndarray | None = None  # per-class sum 1/p; not persisted to CSV

    def class_index(self, a: int) -> int:
        try:
            return self.units.index(a % self.q)
        except ValueError:
            raise ValueError(f"residue {a} is not a unit mod {self.q}") from None

    def char_column(self, chi: Character) -> int:
        if chi.modulus != self.q:
            raise ValueError(f"modulus mismatch: checkpoint mod {self.q}, character mod {chi.modulus}")
        if chi.is_principal:
            raise ValueError("principal character has no stored column")
        return self.char_labels.index(chi.label)


def _weight_values(t, q: int) -> np.ndarray:
    if isinstance(t, (ClassFunction, Character)):
        if t.modulus != q:
            raise ValueError(f"modulus mismatch: tally mod {q}, weight mod {t.modulus}")
        return t.values
    raise TypeError(f"expected ClassFunction or Character, got {type(t).__name__}")


def _class_combination(ckpt: TallyCheckpoint, table: np.ndarray, t) -> complex:
    vals = _weight_values(t, ckpt.q)
    total = 0j
    for i, a in enumerate(ckpt.units):
        total += vals[a] * table[i]
    return total


def pi_half(ckpt: TallyCheckpoint, t) -> complex:
    """Weighted count sum_{p <= x} t(p) / sqrt(p)."""
    return _class_combination(ckpt, ckpt.invsqrt, t)


def pi_weighted(ckpt: TallyCheckpoint, t) -> complex:
    """Plain weighted count sum_{p <= x} t(p)."""
    return _class_combination(ckpt, ckpt.counts.astype(np.float64), t)


def theta_of(ckpt: TallyCheckpoint, t) -> complex:
    """sum_{p <= x} t(p) log p."""
    return _class_combination(ckpt, ckpt.theta, t)


def psi_of(ckpt: TallyCheckpoint, t) -> complex:
    """sum over prime powers p^k <= x of t(p^k mod q) log p.

    The weight sees the residue of the prime power itself, so 9 = 3*3
    contributes t(9 mod q), not t(3 mod q).
    """
    return _class_combination(ckpt, ckpt.psi, t)


def psi_char(ckpt: TallyCheckpoint, chi: Character) -> complex:
    """psi twisted by a character, via the per-class sums."""
    return _class_combination(ckpt, ckpt.psi, chi)


def char_sum(ckpt: TallyCheckpoint, chi: Character, kind: str) -> complex:
    """Stored per-character sum: kind is invsqrt, mertens, or eulerlog."""
    col = ckpt.char_column(chi)
    table = {
        "invsqrt": ckpt.char_invsqrt,
        "mertens": ckpt.char_mertens,
        "eulerlog": ckpt.char_eulerlog,
    }[kind]
    return complex(table[col])


def euler_product_partial(ckpt: TallyCheckpoint, chi: Character, vanishing_order: int = 0) -> complex:
    """(log x)^m * prod_{p <= x} (1 - chi(p)/sqrt(p))^(-1), evaluated in log space."""
    if chi.is_principal:
        raise ValueError("Euler product on the critical line needs a nonprincipal character")
    if vanishing_order < 0:
        raise ValueError("vanishing order must be nonnegative")
    col = ckpt.char_column(chi)
    log_f = complex(ckpt.char_eulerlog[col])
    scale = math.log(ckpt.x) ** vanishing_order
    return scale * complex(np.exp(log_f))


def mertens_chi_square(ckpt: TallyCheckpoint, chi: Character) -> complex:
    """sum_{p <= x} chi(p^2) / p."""
    col = ckpt.char_column(chi)
    return complex(ckpt.char_mertens[col])


class CheckpointSeries:
    """Checkpoints for every grid point, with matrix views for analysis."""

    def __init__(self, q: int, grid: CheckpointGrid, units, char_labels, checkpoints):
        self.q = q
        self.grid = grid
        self.units = tuple(units)
        self.char_labels = tuple(char_labels)
        self.checkpoints = list(checkpoints)

    def __len__(self) -> int:
        return len(self.checkpoints)

    def __iter__(self):
        return iter(self.checkpoints)

    def __getitem__(self, i) -> TallyCheckpoint:
        return self.checkpoints[i]

    def _stack(self, attr: str) -> np.ndarray:
        return np.stack([getattr(c, attr) for c in self.checkpoints])

    @property
    def counts(self) -> np.ndarray:
        return self._stack("counts")

    @property
    def invsqrt(self) -> np.ndarray:
        return self._stack("invsqrt")

    @property
    def theta(self) -> np.ndarray:
        return self._stack("theta")

    @property
    def psi(self) -> np.ndarray:
        return self._stack("psi")

    def char_matrix(self, kind: str) -> np.ndarray:
        return self._stack(f"char_{kind}")

    def weighted(self, t, table: str = "invsqrt") -> np.ndarray:
        """Per-checkpoint weighted class sums, as a complex vector."""
        vals = _weight_values(t, self.q)
        w = np.array([vals[a] for a in self.units])
        mat = getattr(self, table)
        return mat.astype(np.complex128) @ w


@dataclass(eq=False)
class TallyResult:
    """accumulate() output: the series, optional jump positions, run status."""

    series: CheckpointSeries
    jumps: dict[int, np.ndarray]
    completed: bool
    x_hi: int


# ---------------------------------------------------------------------------
# the reducer


class _Accumulator:
    def __init__(self, grid: CheckpointGrid, layout: _Layout, powers: Sequence[tuple[int, int, int]], collect):
        self.grid = grid
        self.layout = layout
        self.grid_x = grid.x
        self.counts = [0] * layout.nclass
        self.acc = {name: [ExactSum() for _ in range(layout.nclass)] for name in _CLASS_FIELDS}
        self.char_acc = {name: [ExactComplexSum() for _ in range(layout.nchar)] for name in _CHAR_FIELDS}
        pw = [(v, layout.slot[v % layout.q], math.log(p)) for v, p, _k in powers]
        self.pw_val = [v for v, _s, _l in pw]
        self.pw_slot = [int(s) for _v, s, _l in pw]
        self.pw_log = [l for _v, _s, l in pw]
        self.pw_ptr = 0
        self.next_j = 0
        self.row_offset = 0  # checkpoints persisted by an earlier process
        self.expected_lo: int | None = None
        self.collect = tuple(sorted(collect))
        self.jump_parts: dict[int, list[np.ndarray]] = {a: [] for a in self.collect}
        self.checkpoints: list[TallyCheckpoint] = []

    # -- state round trip (resume support)

    def state_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "class": {
                name: [e.to_hex() for e in sums] for name, sums in self.acc.items()
            },
            "char": {
                name: [e.to_hex() for e in sums] for name, sums in self.char_acc.items()
            },
            "pw_ptr": self.pw_ptr,
            "next_j": self.next_j,
            "expected_lo": self.expected_lo,
        }

    def load_state(self, state: dict) -> None:
        self.counts = [int(c) for c in state["counts"]]
        for name in _CLASS_FIELDS:
            self.acc[name] = [ExactSum.from_hex(h) for h in state["class"][name]]
        for name in _CHAR_FIELDS:
            self.char_acc[name] = [ExactComplexSum.from_hex(h) for h in state["char"][name]]
        self.pw_ptr = int(state["pw_ptr"])
        self.next_j = int(state["next_j"])
        self.expected_lo = state["expected_lo"]

    # -- folding

    def _fold_chunk(self, part: _SegmentPartial, c: int) -> None:
        for i in range(self.layout.nclass):
            n = int(part.counts[c, i])
            if n:
                self.counts[i] += n
                self.acc["invsqrt"][i].add(part.invsqrt[c, i])
                self.acc["theta"][i].add(part.theta[c, i])
                self.acc["psi"][i].add(part.theta[c, i])
                self.acc["invp"][i].add(part.invp[c, i])
        for j in range(self.layout.nchar):
            self.char_acc["invsqrt"][j].add(complex(part.char_invsqrt[c, j]))
            self.char_acc["mertens"][j].add(complex(part.char_mertens[c, j]))
            self.char_acc["eulerlog"][j].add(complex(part.char_eulerlog[c, j]))

    def _fold_powers_upto(self, x: float) -> None:
        while self.pw_ptr < len(self.pw_val) and self.pw_val[self.pw_ptr] <= x:
            slot = self.pw_slot[self.pw_ptr]
            if slot >= 0:
                self.acc["psi"][slot].add(self.pw_log[self.pw_ptr])
            self.pw_ptr += 1

    def _snapshot(self, j: int) -> None:
        lay = self.layout
        ck = TallyCheckpoint(
            q=lay.q,
            x=float(self.grid_x[j]),
            y=float(LOG2 + self.grid.h * j),
            units=lay.units,
            char_labels=lay.char_labels,
            counts=np.array(self.counts, dtype=np.int64),
            invsqrt=np.array([e.value() for e in self.acc["invsqrt"]]),
            theta=np.array([e.value() for e in self.acc["theta"]]),
            psi=np.array([e.value() for e in self.acc["psi"]]),
            invp=np.array([e.value() for e in self.acc["invp"]]),
            char_invsqrt=np.array([e.value() for e in self.char_acc["invsqrt"]], dtype=np.complex128),
            char_mertens=np.array([e.value() for e in self.char_acc["mertens"]], dtype=np.complex128),
            char_eulerlog=np.array([e.value() for e in self.char_acc["eulerlog"]], dtype=np.complex128),
        )
        self.checkpoints.append(ck)

    def boundary_count(self, lo: int, hi: int) -> int:
        """How many still-unemitted grid points fall inside [lo, hi)."""
        j_hi = int(np.searchsorted(self.grid_x, hi, side="left"))
        return max(0, j_hi - self.next_j)

    def feed(self, part: _SegmentPartial) -> None:
        if self.expected_lo is not None and part.lo != self.expected_lo:
            raise TallyOrderError(
                f"segment [{part.lo}, {part.hi}) arrived out of order; expected lo={self.expected_lo}"
            )
        nb = part.nchunks - 1
        for c in range(part.nchunks):
            self._fold_chunk(part, c)
            if c < nb:
                j = self.next_j
                if j >= self.grid.n:
                    raise TallyOrderError("more chunk boundaries than grid points")
                xj = float(self.grid_x[j])
                self._fold_powers_upto(xj)
                self._snapshot(j)
                self.next_j += 1
        for a in self.collect:
            self.jump_parts[a].append(part.jumps.get(a, np.empty(0, dtype=np.int64)))
        self.expected_lo = part.hi


def _ordered_map(fn, jobs: Sequence, threads: int) -> Iterator:
    """Map fn over jobs with a worker pool, yielding results in job order."""
    if threads <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield fn(*job)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window = threads + 2
        pending = []
        it = iter(jobs)
        for job in it:
            pending.append(pool.submit(fn, *job))
            if len(pending) >= window:
                break
        while pending:
            fut = pending.pop(0)
            for job in it:
                pending.append(pool.submit(fn, *job))
                break
            yield fut.result()


# ---------------------------------------------------------------------------
# persistence


def _csv_columns(units, char_labels) -> list[str]:
    cols = ["x", "y"]
    for a in units:
        cols += [f"n_{a}", f"invsqrt_{a}", f"theta_{a}", f"psi_{a}"]
    for label in char_labels:
        for name in _CHAR_FIELDS:
            cols += [f"chi_{label}_{name}_re", f"chi_{label}_{name}_im"]
    return cols


def _format_row(ck: TallyCheckpoint) -> str:
    parts = [repr(ck.x), repr(ck.y)]
    for i in range(len(ck.units)):
        parts += [
            str(int(ck.counts[i])),
            repr(float(ck.invsqrt[i])),
            repr(float(ck.theta[i])),
            repr(float(ck.psi[i])),
        ]
    for j in range(len(ck.char_labels)):
        for table in (ck.char_invsqrt, ck.char_mertens, ck.char_eulerlog):
            parts += [repr(float(table[j].real)), repr(float(table[j].imag))]
    return ",".join(parts)


def write_series_csv(series: CheckpointSeries, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(_csv_columns(series.units, series.char_labels)) + "\n")
        for ck in series.checkpoints:
            fh.write(_format_row(ck) + "\n")


def read_series_csv(path: str | Path) -> CheckpointSeries:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    units = [int(c[2:]) for c in header if c.startswith("n_")]
    char_labels = []
    for c in header:
        if c.startswith("chi_") and c.endswith("_invsqrt_re"):
            char_labels.append(c[len("chi_"):-len("_invsqrt_re")])
    if not units:
        raise ValueError(f"{path}: no per-class columns found")
    q = int(char_labels[0].split(".")[0]) if char_labels else max(units) + 1
    ncl, nchar = len(units), len(char_labels)
    checkpoints = []
    for row in rows:
        vals = row
        x, y = float(vals[0]), float(vals[1])
        counts = np.array([int(vals[2 + 4 * i]) for i in range(ncl)], dtype=np.int64)
        invsqrt = np.array([float(vals[3 + 4 * i]) for i in range(ncl)])
        theta = np.array([float(vals[4 + 4 * i]) for i in range(ncl)])
        psi = np.array([float(vals[5 + 4 * i]) for i in range(ncl)])
        base = 2 + 4 * ncl
        cvals = []
        for j in range(nchar):
            trip = []
            for k in range(3):
                re = float(vals[base + 6 * j + 2 * k])
                im = float(vals[base + 6 * j + 2 * k + 1])
                trip.append(complex(re, im))
            cvals.append(trip)
        checkpoints.append(
            TallyCheckpoint(
                q=q, x=x, y=y, units=tuple(units), char_labels=tuple(char_labels),
                counts=counts, invsqrt=invsqrt, theta=theta, psi=psi,
                char_invsqrt=np.array([c[0] for c in cvals], dtype=np.complex128),
                char_mertens=np.array([c[1] for c in cvals], dtype=np.complex128),
                char_eulerlog=np.array([c[2] for c in cvals], dtype=np.complex128),
            )
        )
    ys = np.array([c.y for c in checkpoints])
    if len(ys) > 1:
        h = float((ys[-1] - ys[0]) / (len(ys) - 1))
    else:
        h = 0.01
    grid = CheckpointGrid(h=h, n=len(ys))
    return CheckpointSeries(q, grid, units, char_labels, checkpoints)


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".meta.json")


def _write_sidecar(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# drivers


def _events_to_primes(events: Iterable[PrimeEvent], q: int) -> np.ndarray:
    out = []
    last = 1
    for ev in events:
        if ev.p <= last:
            raise TallyOrderError(
                f"prime event {ev.p} arrived out of order (previous was {last})"
            )
        if ev.p % q != ev.residue:
            raise TallyOrderError(f"event for {ev.p} carries residue {ev.residue}, not {ev.p % q}")
        if ev.is_unit != (math.gcd(ev.residue, q) == 1):
            raise TallyOrderError(f"event for {ev.p} carries a wrong unit flag")
        last = ev.p
        out.append(ev.p)
    return np.array(out, dtype=np.int64)


def accumulate(
    grid: CheckpointGrid,
    q: int,
    *,
    x_hi: int | None = None,
    segment_odds: int = DEFAULT_SEGMENT_ODDS,
    threads: int = 1,
    collect: Sequence[int] = (),
    events: Iterable[PrimeEvent] | None = None,
    powers: Sequence[tuple[int, int, int]] | None = None,
    persist: str | Path | None = None,
    resume: bool = False,
    flush_every: int = 64,
    max_segments: int | None = None,
) -> TallyResult:
    """Single pass over the primes, emitting one checkpoint per grid point.

    With events supplied the stream is consumed as given (and validated: any
    out-of-order or inconsistent event is a hard TallyOrderError); otherwise
    the segmented sieve drives the pass, optionally with a worker pool whose
    size never changes the output.  collect lists residue classes whose prime
    positions are returned as sorted arrays (for exact step-function work).
    persist writes the checkpoint CSV plus a JSON sidecar as the run goes,
    and resume=True continues a previously interrupted persisted run;
    max_segments stops early after that many segments (the persisted state
    stays resumable).
    """
    layout = _Layout(q)
    if x_hi is None:
        x_hi = int(math.floor(grid.x_max)) + 1
    if grid.x_max >= x_hi:
        raise ValueError(
            f"grid reaches x={grid.x_max:.3f}; the sieved range must extend strictly past it, got {x_hi}"
        )
    collect = tuple(int(a) % q for a in collect)
    for a in collect:
        if math.gcd(a, q) != 1:
            raise ValueError(f"collect residue {a} is not a unit mod {q}")
    pw = powers if powers is not None else prime_powers(x_hi - 1)
    acc = _Accumulator(grid, layout, pw, collect)

    if events is not None:
        primes = _events_to_primes(events, q)
        boundaries = acc.grid_x[: int(np.searchsorted(acc.grid_x, x_hi, side="left"))]
        part = _segment_partial(primes, 2, x_hi, boundaries, layout, tuple(collect))
        acc.expected_lo = 2
        acc.feed(part)
        if acc.next_j != grid.n:
            raise ValueError("event stream ended before the grid was covered")
        series = CheckpointSeries(q, grid, layout.units, layout.char_labels, acc.checkpoints)
        jumps = {a: np.concatenate(acc.jump_parts[a]) if acc.jump_parts[a] else np.empty(0, np.int64) for a in acc.collect}
        return TallyResult(series=series, jumps=jumps, completed=True, x_hi=x_hi)

    bounds = list(segment_bounds(2, x_hi, segment_odds))
    csv_path = Path(persist) if persist is not None else None
    meta_path = _sidecar_path(csv_path) if csv_path is not None else None
    start_idx = 0
    rows_written = 0

    if resume:
        if csv_path is None:
            raise ValueError("resume requires a persist path")
        if not meta_path.exists():
            raise ValueError(f"no sidecar at {meta_path} to resume from")
        with open(meta_path) as fh:
            meta = json.load(fh)
        # collect is deliberately absent here: jump positions are never
        # persisted, so any collect set may be requested on resume
        expect = {"q": q, "h": grid.h, "n": grid.n, "segment_odds": segment_odds,
                  "x_hi": x_hi}
        got = {k: meta.get(k) for k in expect}
        if got != expect:
            raise ValueError(
                f"persisted run does not match the requested configuration: {got} != {expect}"
            )
        if meta["complete"]:
            stored = read_series_csv(csv_path)
            series = CheckpointSeries(q, grid, layout.units, layout.char_labels, stored.checkpoints)
            jumps = _collect_only(bounds, len(bounds), layout, collect)
            return TallyResult(series=series, jumps=jumps, completed=True, x_hi=x_hi)
        start_idx = int(meta["next_segment_index"])
        rows_written = int(meta["rows_written"])
        acc.load_state(meta["state"])
        acc.row_offset = rows_written
        _truncate_csv(csv_path, rows_written, layout)
        if collect:
            pre = _collect_only(bounds, start_idx, layout, collect)
            for a in collect:
                acc.jump_parts[a].append(pre[a])
    elif csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write(",".join(_csv_columns(layout.units, layout.char_labels)) + "\n")

    base = simple_sieve(math.isqrt(x_hi - 1)) if x_hi > 4 else np.array([2], dtype=np.int64)

    def job(a: int, b: int) -> _SegmentPartial:
        primes = sieve_segment(a, b, base)
        j_lo = int(np.searchsorted(acc.grid_x, a, side="left"))
        j_hi = int(np.searchsorted(acc.grid_x, b, side="left"))
        boundaries = acc.grid_x[j_lo:j_hi]
        return _segment_partial(primes, a, b, boundaries, layout, tuple(collect))

    todo = bounds[start_idx:]
    if max_segments is not None:
        todo = todo[: max(0, max_segments)]
    if acc.expected_lo is None and todo:
        acc.expected_lo = todo[0][0]

    done_idx = start_idx
    since_flush = 0
    for part in _ordered_map(job, todo, threads):
        acc.feed(part)
        done_idx += 1
        since_flush += 1
        if csv_path is not None and since_flush >= flush_every:
            rows_written = _flush(csv_path, meta_path, acc, grid, q, segment_odds, x_hi,
                                  collect, done_idx, rows_written, bounds, complete=False)
            since_flush = 0

    completed = done_idx == len(bounds)
    if completed:
        acc._fold_powers_upto(float(acc.grid_x[-1]))
        while acc.next_j < grid.n:
            # grid points at or beyond the final segment boundary
            acc._fold_powers_upto(float(acc.grid_x[acc.next_j]))
            acc._snapshot(acc.next_j)
            acc.next_j += 1
    if csv_path is not None:
        rows_written = _flush(csv_path, meta_path, acc, grid, q, segment_odds, x_hi,
                              collect, done_idx, rows_written, bounds, complete=completed)

    checkpoints = acc.checkpoints
    if acc.row_offset and completed:
        # a resumed run holds only the new rows in memory; the CSV has them all
        checkpoints = read_series_csv(csv_path).checkpoints
    series = CheckpointSeries(q, grid, layout.units, layout.char_labels, checkpoints)
    jumps = {a: (np.concatenate(acc.jump_parts[a]) if acc.jump_parts[a] else np.empty(0, np.int64))
             for a in acc.collect}
    return TallyResult(series=series, jumps=jumps, completed=completed, x_hi=x_hi)


def _collect_only(bounds, upto_idx: int, layout: _Layout, collect) -> dict[int, np.ndarray]:
    """Re-sieve already-tallied segments just to extract class positions."""
    jumps = {a: [] for a in collect}
    if not collect or upto_idx == 0:
        return {a: np.empty(0, np.int64) for a in collect}
    hi = bounds[upto_idx - 1][1]
    base = simple_sieve(math.isqrt(hi - 1)) if hi > 4 else np.array([2], dtype=np.int64)
    for a0, b0 in bounds[:upto_idx]:
        primes = sieve_segment(a0, b0, base)
        r = primes % layout.q
        for a in collect:
            jumps[a].append(primes[r == a])
    return {a: np.concatenate(jumps[a]) if jumps[a] else np.empty(0, np.int64) for a in collect}


def _truncate_csv(csv_path: Path, rows: int, layout: _Layout) -> None:
    """Keep the header and the first rows data lines (crash cleanup)."""
    with open(csv_path) as fh:
        lines = fh.readlines()
    want = 1 + rows
    if len(lines) < want:
        raise ValueError(f"{csv_path} holds fewer rows than the sidecar claims")
    if len(lines) > want:
        with open(csv_path, "w") as fh:
            fh.writelines(lines[:want])


def _flush(csv_path, meta_path, acc, grid, q, segment_odds, x_hi, collect,
           done_idx, rows_written, bounds, *, complete) -> int:
    new_rows = acc.checkpoints[rows_written - acc.row_offset:]
    if new_rows:
        with open(csv_path, "a") as fh:
            for ck in new_rows:
                fh.write(_format_row(ck) + "\n")
        rows_written += len(new_rows)
    next_lo = bounds[done_idx][0] if done_idx < len(bounds) else x_hi
    payload = {
        "format": 1,
        "q": q,
        "h": grid.h,
        "n": grid.n,
        "segment_odds": segment_odds,
        "x_hi": x_hi,
        "collect": sorted(int(a) for a in collect),
        "complete": complete,
        "next_segment_index": done_idx,
        "rows_written": rows_written,
        "last_completed_prime": next_lo - 1,
    }
    if not complete:
        payload["state"] = acc.state_dict()
    _write_sidecar(meta_path, payload)
    return rows_written


# ---------------------------------------------------------------------------
# partial tallies and merge


@dataclass(eq=False)
class TallyPartial:
    """Sums over the primes (and prime powers) in one contiguous range."""

    q: int
    lo: int
    hi: int
    units: tuple[int, ...]
    char_labels: tuple[str, ...]
    counts: list[int]
    class_sums: dict[str, list[ExactSum]]
    char_sums: dict[str, list[ExactComplexSum]]

    @classmethod
    def empty(cls, q: int, at: int = 2) -> "TallyPartial":
        layout = _Layout(q)
        return cls(
            q=q, lo=at, hi=at, units=layout.units, char_labels=layout.char_labels,
            counts=[0] * layout.nclass,
            class_sums={n: [ExactSum() for _ in range(layout.nclass)] for n in _CLASS_FIELDS},
            char_sums={n: [ExactComplexSum() for _ in range(layout.nchar)] for n in _CHAR_FIELDS},
        )

    def totals(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {"counts": np.array(self.counts, dtype=np.int64)}
        for name, sums in self.class_sums.items():
            out[name] = np.array([e.value() for e in sums])
        for name, sums in self.char_sums.items():
            out["char_" + name] = np.array([e.value() for e in sums], dtype=np.complex128)
        return out

    def copy(self) -> "TallyPartial":
        return TallyPartial(
            q=self.q, lo=self.lo, hi=self.hi, units=self.units, char_labels=self.char_labels,
            counts=list(self.counts),
            class_sums={n: [e.copy() for e in sums] for n, sums in self.class_sums.items()},
            char_sums={n: [e.copy() for e in sums] for n, sums in self.char_sums.items()},
        )


def range_partial(
    lo: int,
    hi: int,
    q: int,
    *,
    segment_odds: int = DEFAULT_SEGMENT_ODDS,
    threads: int = 1,
) -> TallyPartial:
    """Tally sums over primes in [lo, hi), folded per segment in order."""
    if lo < 2:
        raise ValueError(f"range must start at 2 or above, got {lo}")
    if hi < lo:
        raise ValueError(f"inverted range [{lo}, {hi})")
    layout = _Layout(q)
    out = TallyPartial.empty(q, lo)
    out.hi = hi
    if hi == lo:
        return out
    base = simple_sieve(math.isqrt(hi - 1)) if hi > 4 else np.array([2], dtype=np.int64)
    pw = [
        (v, int(layout.slot[v % q]), math.log(p))
        for v, p, _k in prime_powers(hi - 1)
        if lo <= v
    ]
    pw_ptr = 0
    none = np.empty(0, dtype=np.float64)

    def fold(part: _SegmentPartial) -> None:
        nonlocal pw_ptr
        for i in range(layout.nclass):
            n = int(part.counts[0, i])
            if n:
                out.counts[i] += n
                out.class_sums["invsqrt"][i].add(part.invsqrt[0, i])
                out.class_sums["theta"][i].add(part.theta[0, i])
                out.class_sums["psi"][i].add(part.theta[0, i])
                out.class_sums["invp"][i].add(part.invp[0, i])
        for j in range(layout.nchar):
            out.char_sums["invsqrt"][j].add(complex(part.char_invsqrt[0, j]))
            out.char_sums["mertens"][j].add(complex(part.char_mertens[0, j]))
            out.char_sums["eulerlog"][j].add(complex(part.char_eulerlog[0, j]))
        while pw_ptr < len(pw) and pw[pw_ptr][0] < part.hi:
            _v, slot, lg = pw[pw_ptr]
            if slot >= 0:
                out.class_sums["psi"][slot].add(lg)
            pw_ptr += 1

    jobs = [(a, b) for a, b in segment_bounds(lo, hi, segment_odds)]

    def job(a: int, b: int) -> _SegmentPartial:
        return _segment_partial(sieve_segment(a, b, base), a, b, none, layout, ())

    for part in _ordered_map(job, jobs, threads):
        fold(part)
    return out


def merge(left: TallyPartial, right: TallyPartial) -> TallyPartial:
    """Combine partials over adjacent ranges; left must sit just below right.

    Componentwise exact addition, so a merged pair over a split that falls on
    a segment boundary reproduces the single-pass totals bit for bit.
    """
    if left.q != right.q:
        raise ValueError(f"modulus mismatch: {left.q} vs {right.q}")
    if left.lo == left.hi:
        return right.copy()
    if right.lo == right.hi:
        return left.copy()
    if right.lo < left.hi:
        raise ValueError(
            f"overlapping ranges: [{left.lo}, {left.hi}) and [{right.lo}, {right.hi})"
        )
    if right.lo > left.hi:
        raise ValueError(
            f"ranges are not adjacent: [{left.lo}, {left.hi}) then [{right.lo}, {right.hi})"
        )
    out = left.copy()
    out.hi = right.hi
    for i in range(len(out.counts)):
        out.counts[i] += right.counts[i]
    for name in _CLASS_FIELDS:
        for mine, theirs in zip(out.class_sums[name], right.class_sums[name]):
            mine.merge(theirs)
    for name in _CHAR_FIELDS:
        for mine, theirs in zip(out.char_sums[name], right.char_sums[name]):
            mine.merge(theirs)
    return out
