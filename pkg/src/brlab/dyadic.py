"""Dyadic squares, dilates and annuli on the periodic grid, sparse collections.

All geometry is in cell units of an ``N x N`` root square.  A dyadic square
of ``level`` k and ``anchor`` (a1, a2) covers the cells
``[a1 2**k, (a1+1) 2**k) x [a2 2**k, (a2+1) 2**k)``.  A general
:class:`Square` owns the cells whose centres ``(i + 1/2, k + 1/2)`` fall in
its half-open extent, so dilates of dyadic squares of level >= 1 are exact.
Index ranges are taken modulo ``N``; a dilate wider than the torus covers
some cells more than once, which is the periodic extension used for
averages.

Sparse collections carry carve-out sets ``E_Q`` that must lie inside
``Q``; all sparseness clauses are checked cell by cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "DyadicSquare",
    "Square",
    "SparseEntry",
    "SparseCollection",
    "SparseReport",
    "BoxSums",
    "children",
    "dilate",
    "annulus",
    "cells_of",
    "cell_mask",
    "verify_sparse",
    "sparse_form",
    "collection_to_json",
    "collection_from_json",
    "save_collection",
    "load_collection",
]


@dataclass(frozen=True, order=True)
class DyadicSquare:
    level: int
    anchor: tuple[int, int]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        object.__setattr__(self, "anchor", (int(self.anchor[0]), int(self.anchor[1])))

    @property
    def side(self) -> int:
        return 1 << self.level

    @property
    def area(self) -> int:
        return 1 << (2 * self.level)

    @property
    def lower(self) -> tuple[int, int]:
        s = self.side
        return self.anchor[0] * s, self.anchor[1] * s

    def slices(self) -> tuple[slice, slice]:
        i, k = self.lower
        s = self.side
        return slice(i, i + s), slice(k, k + s)

    def to_square(self) -> "Square":
        i, k = self.lower
        s = self.side
        return Square((i + s / 2, k + s / 2), float(s))

    def contains(self, other: "DyadicSquare") -> bool:
        if other.level > self.level:
            return False
        shift = self.level - other.level
        return (other.anchor[0] >> shift, other.anchor[1] >> shift) == self.anchor

    def intersects(self, other: "DyadicSquare") -> bool:
        return self.contains(other) or other.contains(self)

    def parent(self) -> "DyadicSquare":
        return DyadicSquare(self.level + 1, (self.anchor[0] >> 1, self.anchor[1] >> 1))

    def physical_side(self, h: float) -> float:
        return self.side * h

    def to_dict(self) -> dict:
        return {"level": self.level, "anchor": list(self.anchor)}


@dataclass(frozen=True)
class Square:
    center: tuple[float, float]
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("side must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "side", float(self.side))

    @property
    def area(self) -> float:
        return self.side * self.side


def children(Q: DyadicSquare) -> list[DyadicSquare]:
    """The four level-``(k-1)`` squares partitioning ``Q``, in anchor order."""
    if Q.level == 0:
        raise ValueError("no children: level-0 squares are single cells")
    a1, a2 = Q.anchor
    lv = Q.level - 1
    return [DyadicSquare(lv, (2 * a1 + di, 2 * a2 + dk)) for di in (0, 1) for dk in (0, 1)]


def dilate(Q, c: float) -> Square:
    """``cQ``: same centre, side multiplied by ``c >= 1``."""
    if c < 1:
        raise ValueError(f"invalid dilation factor {c}; need c >= 1")
    if isinstance(Q, DyadicSquare):
        Q = Q.to_square()
    return Square(Q.center, Q.side * c)


def _cell_range(lo: float, hi: float) -> tuple[int, int]:
    # cells i with centre i + 1/2 in [lo, hi)
    return math.ceil(lo - 0.5), math.ceil(hi - 0.5)


def _ranges(Q) -> tuple[tuple[int, int], tuple[int, int]]:
    if isinstance(Q, DyadicSquare):
        i, k = Q.lower
        return (i, i + Q.side), (k, k + Q.side)
    half = Q.side / 2
    return (_cell_range(Q.center[0] - half, Q.center[0] + half),
            _cell_range(Q.center[1] - half, Q.center[1] + half))


def cells_of(Q, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices (mod ``N``, with multiplicity) of the cells of ``Q``."""
    (r0, r1), (c0, c1) = _ranges(Q)
    return np.arange(r0, r1) % N, np.arange(c0, c1) % N


def cell_mask(Q, N: int) -> np.ndarray:
    """Boolean mask of the torus cells covered by ``Q`` at least once."""
    rows, cols = cells_of(Q, N)
    m = np.zeros((N, N), dtype=bool)
    m[np.ix_(rows, cols)] = True
    return m


def annulus(Q, k: int, N: int) -> np.ndarray:
    """Flat indices of the cells of ``2**k Q`` not in ``2**(k-1) Q``, ``k >= 2``."""
    if k < 2:
        raise ValueError(f"invalid annulus index k={k}; need k >= 2")
    outer = dilate(Q, 2.0**k)
    if outer.side > N:
        raise ValueError(f"2^{k}Q has side {outer.side} > root side {N}")
    m = cell_mask(outer, N) & ~cell_mask(dilate(Q, 2.0 ** (k - 1)), N)
    return np.flatnonzero(m)


class BoxSums:
    """O(1) sums of a fixed array over periodic rectangles, via a prefix table."""

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        self.N = v.shape[0]
        P = np.zeros((self.N + 1, self.N + 1))
        P[1:, 1:] = v.cumsum(axis=0).cumsum(axis=1)
        self.P = P

    def _pieces(self, a: int, b: int):
        N = self.N
        w = b - a
        cycles, rem = divmod(w, N)
        out = []
        if cycles:
            out.append((0, N, cycles))
        if rem:
            s = a % N
            if s + rem <= N:
                out.append((s, s + rem, 1))
            else:
                out.append((s, N, 1))
                out.append((0, s + rem - N, 1))
        return out

    def rect(self, r0: int, r1: int, c0: int, c1: int) -> float:
        P = self.P
        total = 0.0
        for a, b, m in self._pieces(r0, r1):
            for c, d, n in self._pieces(c0, c1):
                total += m * n * (P[b, d] - P[a, d] - P[b, c] + P[a, c])
        return total

    def sum(self, Q) -> float:
        (r0, r1), (c0, c1) = _ranges(Q)
        return self.rect(r0, r1, c0, c1)

    def mean(self, Q) -> float:
        (r0, r1), (c0, c1) = _ranges(Q)
        n = (r1 - r0) * (c1 - c0)
        if n <= 0:
            raise ValueError(f"square {Q} contains no grid cell")
        return self.rect(r0, r1, c0, c1) / n


@dataclass(frozen=True, eq=False)
class SparseEntry:
    square: DyadicSquare
    carve_out: np.ndarray  # sorted flat cell indices

    def __post_init__(self):
        c = np.unique(np.asarray(self.carve_out, dtype=np.int64))
        c.setflags(write=False)
        object.__setattr__(self, "carve_out", c)


@dataclass(frozen=True, eq=False)
class SparseCollection:
    N: int
    entries: tuple[SparseEntry, ...]
    eta: Fraction = Fraction(1, 10)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "eta", Fraction(self.eta))

    def squares(self) -> list[DyadicSquare]:
        return [e.square for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class SparseReport:
    ok: bool
    eta: Fraction
    n_squares: int
    overlapping_pairs: list = field(default_factory=list)
    small_carve_outs: list = field(default_factory=list)
    outside_square: list = field(default_factory=list)
    min_ratio: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "eta": str(self.eta),
            "n_squares": self.n_squares,
            "min_carve_out_ratio": None if self.min_ratio is None else str(self.min_ratio),
            "overlapping_pairs": self.overlapping_pairs,
            "small_carve_outs": self.small_carve_outs,
            "outside_square": self.outside_square,
        }


def verify_sparse(S: SparseCollection, eta=None) -> SparseReport:
    """Check ``E_Q`` inside ``Q``, ``|E_Q| >= eta |Q|`` and pairwise disjointness.

    Measures are integers (cell counts) and ``eta`` is a Fraction, so both
    clauses are decided exactly.  ``eta`` defaults to the collection's own
    parameter and must be at least 1/10.
    """
    eta = S.eta if eta is None else Fraction(eta)
    N = S.N
    owner = np.full(N * N, -1, dtype=np.int64)
    overlaps, small, outside = [], [], []
    min_ratio = None
    for idx, e in enumerate(S.entries):
        Q = e.square
        cells = e.carve_out
        rs, cs = Q.slices()
        ri, ci = np.divmod(cells, N)
        inside = (ri >= rs.start) & (ri < rs.stop) & (ci >= cs.start) & (ci < cs.stop)
        if not inside.all():
            outside.append(idx)
        ratio = Fraction(int(cells.size), Q.area)
        min_ratio = ratio if min_ratio is None else min(min_ratio, ratio)
        if ratio < eta:
            small.append(idx)
        prev = owner[cells]
        for other in np.unique(prev[prev >= 0]):
            overlaps.append((int(other), idx))
        owner[cells] = idx
    ok = eta >= Fraction(1, 10) and not (overlaps or small or outside)
    return SparseReport(ok, eta, len(S.entries), overlaps, small, outside, min_ratio)


def sparse_form(S: SparseCollection, f, h, r: float, s: float, dilation: float = 3.0) -> float:
    """``sum_Q <f>_{cQ,r} <h>_{cQ,s} |Q|`` with ``c = dilation`` (1 or 3 in practice).

    ``|Q|`` is the physical area.  Terms are accumulated with ``math.fsum``
    in the collection's order, so the value does not depend on scheduling.
    """
    if r < 1 or s < 1:
        raise ValueError("r, s must be >= 1")
    if not f.same_grid(h):
        raise ValueError("mismatched grids for f and h")
    if f.N != S.N:
        raise ValueError(f"collection is on an N={S.N} grid, fields on N={f.N}")
    fs = BoxSums(np.abs(f.data) ** r)
    hs = BoxSums(np.abs(h.data) ** s)
    terms = []
    for e in S.entries:
        D = dilate(e.square, dilation)
        fa = max(fs.mean(D), 0.0) ** (1.0 / r)
        ha = max(hs.mean(D), 0.0) ** (1.0 / s)
        terms.append(fa * ha * e.square.area * f.cell_area)
    return math.fsum(terms)


# ---------------------------------------------------------------- JSON

def collection_to_json(S: SparseCollection, **meta) -> dict:
    entries = []
    for e in S.entries:
        ri, ci = np.divmod(e.carve_out, S.N)
        entries.append({
            "level": e.square.level,
            "anchor": list(e.square.anchor),
            "carve_out_cells": np.stack([ri, ci], axis=1).tolist(),
        })
    out = {"N": S.N, "eta": str(S.eta), "entries": entries}
    out.update(meta)
    return out


def collection_from_json(obj, N: int | None = None) -> SparseCollection:
    if isinstance(obj, list):
        raw, eta = obj, Fraction(1, 10)
        if N is None:
            raise ValueError("a bare entry list needs the grid size N")
    else:
        raw, eta = obj["entries"], Fraction(obj.get("eta", "1/10"))
        N = int(obj.get("N", N))
    entries = []
    for item in raw:
        cells = np.asarray(item["carve_out_cells"], dtype=np.int64).reshape(-1, 2)
        flat = cells[:, 0] * N + cells[:, 1]
        entries.append(SparseEntry(DyadicSquare(int(item["level"]), tuple(item["anchor"])), flat))
    return SparseCollection(N, tuple(entries), eta)


def save_collection(S: SparseCollection, path, **meta) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(collection_to_json(S, **meta)) + "\n")
    return p


def load_collection(path) -> SparseCollection:
    return collection_from_json(json.loads(Path(path).read_text()))
