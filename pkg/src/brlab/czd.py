"""L^p Calderon-Zygmund decomposition over dyadic subsquares of a root square.

At level ``t = m**(1/p) <f>_{E,p}`` (``m = 100`` by default) the bad squares
are the maximal dyadic ``Q`` inside ``E`` with ``<|f|**p>_Q > t**p``.
Chebyshev on the disjoint maximal squares gives ``|union B| <= |E| / m``,
and maximality gives ``|<f>_Q| <= 4**(1/p) t`` on every bad square and
``|f| <= t`` off them, hence ``||g||_inf <= 4**(1/p) m**(1/p) <f>_{E,p}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicSquare
from .field import SampledField

__all__ = ["CZOutput", "cz_decompose", "select_bad", "regroup", "group_index", "cz_invariants", "brute_force_bad"]


@dataclass(eq=False)
class CZOutput:
    """Result of :func:`cz_decompose`.

    ``bad_parts[Q]`` is the ``side x side`` block of ``b_Q`` on ``Q``;
    :meth:`bad_field` embeds it in the grid.
    """

    root: DyadicSquare
    p: float
    multiplier: float
    mean: float  # <f>_{E,p}
    level: float  # t
    good: SampledField
    bad_squares: list[DyadicSquare]
    bad_parts: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)

    @property
    def C_cz(self) -> float:
        return (4.0 * self.multiplier) ** (1.0 / self.p)

    @property
    def bad_area(self) -> int:
        return sum(Q.area for Q in self.bad_squares)

    def bad_field(self, Q: DyadicSquare) -> SampledField:
        out = np.zeros((self.good.N, self.good.N), dtype=complex)
        out[Q.slices()] = self.bad_parts[Q]
        return self.good.like(out)

    def bad_total(self) -> SampledField:
        out = np.zeros((self.good.N, self.good.N), dtype=complex)
        for Q in self.bad_squares:
            out[Q.slices()] += self.bad_parts[Q]
        return self.good.like(out)

    def to_dict(self, h: float | None = None) -> dict:
        rows = []
        for Q in self.bad_squares:
            b = self.bad_parts[Q]
            rows.append({
                "level": Q.level,
                "anchor": list(Q.anchor),
                "lp_norm_p": float(np.sum(np.abs(b) ** self.p) * (h * h if h else 1.0)),
            })
        return {
            "root": self.root.to_dict(),
            "p": self.p,
            "multiplier": self.multiplier,
            "mean_E_p": self.mean,
            "level": self.level,
            "C_cz": self.C_cz,
            "bad_area_cells": self.bad_area,
            "root_area_cells": self.root.area,
            "bad_squares": rows,
        }


def _pyramid(block: np.ndarray) -> list[np.ndarray]:
    """Sums over the dyadic squares of each level, level 0 first."""
    out = [block]
    while out[-1].shape[0] > 1:
        a = out[-1]
        n = a.shape[0] // 2
        out.append(a.reshape(n, 2, n, 2).sum(axis=(1, 3)))
    return out


def _check_support(f: SampledField, E: DyadicSquare):
    outside = np.ones((f.N, f.N), dtype=bool)
    outside[E.slices()] = False
    if np.any(f.data[outside] != 0):
        raise ValueError(f"f is not supported in the root square {E}")


def select_bad(pw: np.ndarray, E: DyadicSquare, multiplier: float = 100.0,
               total: float | None = None) -> list[DyadicSquare]:
    """Maximal dyadic ``Q`` inside ``E`` with ``<|f|**p>_Q > multiplier <|f|**p>_E``.

    ``pw`` is the block of ``|f|**p`` on ``E``.  The descent runs from level
    ``E.level - 1`` down to single cells, in anchor order within a level.
    """
    if total is None:
        total = math.fsum(pw.ravel())
    if E.level == 0 or total == 0.0:
        return []
    pyr = _pyramid(pw)
    i0, k0 = E.lower
    area_E = E.area
    covered = np.zeros((1, 1), dtype=bool)
    bad = []
    # compares sum_Q |E| > m sum_E |Q|, i.e. <|f|^p>_Q > t^p
    for lev in range(E.level - 1, -1, -1):
        covered = np.repeat(np.repeat(covered, 2, axis=0), 2, axis=1)
        sel = (pyr[lev] * area_E > multiplier * total * (1 << (2 * lev))) & ~covered
        for a, b in zip(*np.nonzero(sel)):
            bad.append(DyadicSquare(lev, ((i0 >> lev) + int(a), (k0 >> lev) + int(b))))
        covered |= sel
    return bad


def cz_decompose(f: SampledField, E: DyadicSquare, p: float, multiplier: float = 100.0) -> CZOutput:
    """Decompose ``f = g + sum_Q b_Q`` at level ``multiplier**(1/p) <f>_{E,p}``.

    ``f`` must vanish outside ``E``.  A single-cell root returns ``g = f``
    with no bad squares.  Squares are listed by decreasing level, then
    anchor, which is also the order of the tree descent.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if multiplier <= 1:
        raise ValueError("the level multiplier must exceed 1")
    if E.side > f.N:
        raise ValueError(f"root {E} does not fit an N={f.N} grid")
    _check_support(f, E)
    block = f.data[E.slices()]
    pw = np.abs(block) ** p
    area_E = E.area
    total = math.fsum(pw.ravel())
    mean = (total / area_E) ** (1.0 / p)
    level = multiplier ** (1.0 / p) * mean
    out = CZOutput(E, p, multiplier, mean, level, f, [])
    if E.level == 0 or total == 0.0:
        return out

    bad = select_bad(pw, E, multiplier, total)
    g = f.data.copy()
    parts = {}
    for Q in bad:
        sl = Q.slices()
        fq = f.data[sl]
        m = fq.mean()
        parts[Q] = fq - m
        g[sl] = m
    out.good = f.like(g)
    out.bad_squares = bad
    out.bad_parts = parts
    out.groups = regroup(out)
    return out


def group_index(Q: DyadicSquare, h: float) -> int:
    """Group ``t`` of a bad square: ``l(Q) = 2**t`` physically, ``t = 0`` for ``l(Q) <= 1``."""
    m, e = math.frexp(h)
    if m != 0.5:
        raise ValueError(f"grid spacing {h} is not a power of 2")
    return max(0, Q.level + e - 1)


def regroup(out: CZOutput) -> dict[int, SampledField]:
    """Sum the ``b_Q`` by side length into ``beta_t`` (``t = 0`` collects ``l(Q) <= 1``)."""
    h = out.good.h
    N = out.good.N
    acc: dict[int, np.ndarray] = {}
    for Q in out.bad_squares:
        t = group_index(Q, h)
        if t not in acc:
            acc[t] = np.zeros((N, N), dtype=complex)
        acc[t][Q.slices()] += out.bad_parts[Q]
    return {t: out.good.like(acc[t]) for t in sorted(acc)}


def cz_invariants(out: CZOutput, f: SampledField) -> dict:
    """Evaluate the six decomposition invariants; ``ok`` is their conjunction."""
    p = out.p
    rep = {}
    rep["good_bound"] = float(np.max(np.abs(out.good.data))) <= out.C_cz * out.mean * (1 + 1e-12)
    mean_zero = True
    worst = 0.0
    bq_bound = 2.0**p * 4.0 * out.multiplier
    for Q, b in out.bad_parts.items():
        l1 = float(np.sum(np.abs(b)))
        if l1 > 0 and abs(b.sum()) > 1e-12 * l1:
            mean_zero = False
        ratio = float(np.sum(np.abs(b) ** p)) / (out.mean**p * Q.area)
        worst = max(worst, ratio)
    rep["mean_zero"] = mean_zero
    rep["bad_lp_ratio"] = worst
    rep["bad_lp_bound"] = worst <= bq_bound * (1 + 1e-12)
    rep["bad_measure"] = out.multiplier * out.bad_area <= out.root.area
    recon = out.good.data + out.bad_total().data
    rep["reconstruction"] = bool(np.array_equal(recon, f.data)) or bool(
        np.max(np.abs(recon - f.data)) <= 1e-14 * max(1.0, float(np.max(np.abs(f.data)))))
    rep["reconstruction_error"] = float(np.max(np.abs(recon - f.data))) if f.data.size else 0.0
    beta = sum((g.data for g in out.groups.values()), np.zeros_like(f.data))
    rep["regroup"] = bool(np.max(np.abs(beta - out.bad_total().data), initial=0.0) <= 1e-12 * max(
        1.0, float(np.max(np.abs(f.data)))))
    rep["disjoint"] = _disjoint(out.bad_squares)
    rep["ok"] = all(rep[k] for k in ("good_bound", "mean_zero", "bad_lp_bound", "bad_measure",
                                     "reconstruction", "regroup", "disjoint"))
    return rep


def _disjoint(squares) -> bool:
    for i, Q in enumerate(squares):
        for R in squares[i + 1:]:
            if Q.intersects(R):
                return False
    return True


def brute_force_bad(f: SampledField, E: DyadicSquare, p: float, multiplier: float = 100.0) -> list[DyadicSquare]:
    """Reference selection: test every dyadic subsquare directly, keep the maximal ones."""
    t_p = multiplier * float(np.mean(np.abs(f.data[E.slices()]) ** p))
    hits = []
    i0, k0 = E.lower
    for lev in range(E.level - 1, -1, -1):
        n = 1 << (E.level - lev)
        for a in range(n):
            for b in range(n):
                Q = DyadicSquare(lev, ((i0 >> lev) + a, (k0 >> lev) + b))
                if np.mean(np.abs(f.data[Q.slices()]) ** p) > t_p:
                    hits.append(Q)
    return sorted((Q for Q in hits if not any(R.contains(Q) and R != Q for R in hits)),
                  key=lambda Q: (-Q.level, Q.anchor))
