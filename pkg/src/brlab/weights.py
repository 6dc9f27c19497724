"""Power weights, their A1 / RH_rho / A_inf characteristics, and the weighted weak-type quotient.

Characteristic sups run over the grid-aligned dyadic squares and their
translates by half a side in each coordinate, so every value reported here
is a lower bound for the true characteristic.  ``A_inf`` uses the
Fujii-Wilson form with the dyadic maximal function local to each square.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SampledField, lp_norm, weighted_weak_lp
from .symbol import SymbolSpec, apply, critical_p

__all__ = [
    "WeightProfile",
    "characteristics",
    "power_weight",
    "weight_profile",
    "rho_threshold",
    "weighted_weak_quotient",
    "weak_quotient",
    "strong_quotient",
    "quantitative_rhs",
    "brute_force_characteristics",
]


@dataclass
class WeightProfile:
    w: SampledField
    rho: float
    a1: float
    rh: float
    ainf: float
    name: str = "weight"

    def to_dict(self) -> dict:
        return {"name": self.name, "rho": self.rho, "a1": self.a1, "rh": self.rh, "ainf": self.ainf,
                "N": self.w.N, "L": self.w.L}


def _offsets(s: int):
    if s == 1:
        return [(0, 0)]
    o = s // 2
    return [(0, 0), (o, 0), (0, o), (o, o)]


def _blocks(a: np.ndarray, s: int, o1: int, o2: int) -> np.ndarray:
    """``(n1, n2, s, s)`` view of the side-``s`` squares of the lattice offset by ``(o1, o2)``."""
    n1 = (a.shape[0] - o1) // s
    n2 = (a.shape[1] - o2) // s
    sub = a[o1:o1 + n1 * s, o2:o2 + n2 * s]
    return sub.reshape(n1, s, n2, s).transpose(0, 2, 1, 3)


def _ratio(num: np.ndarray, den: np.ndarray, flat: np.ndarray) -> float:
    # constant squares give exactly 1, whatever rounding the means carry
    r = np.where(flat, 1.0, num / den)
    return float(r.max())


def _local_maximal_mean(wr: np.ndarray, s: int) -> np.ndarray:
    """Mean over each side-``s`` block of the dyadic maximal function of ``wr`` local to that block.

    ``wr`` is a whole number of blocks; every dyadic subsquare of a block is
    a block of a finer level of the same lattice, so the local maximal
    function is the running max of the level averages.
    """
    n1, n2 = wr.shape[0] // s, wr.shape[1] // s
    run = wr.copy()
    cur = wr
    size = 1
    while size < s:
        a, b = cur.shape
        cur = cur.reshape(a // 2, 2, b // 2, 2).mean(axis=(1, 3))
        size *= 2
        run = np.maximum(run, np.repeat(np.repeat(cur, size, axis=0), size, axis=1))
    return run.reshape(n1, s, n2, s).mean(axis=(1, 3))


def characteristics(w: np.ndarray, rho: float) -> tuple[float, float, float]:
    """``([w]_A1, [w]_RH_rho, [w**rho]_A_inf)`` over dyadic squares and half-translates."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weight must be a square array")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weight must be positive and finite")
    N = w.shape[0]
    wr = w**rho
    a1 = rh = ainf = 1.0
    s = 1
    while s <= N:
        for o1, o2 in _offsets(s):
            if o1 + s > N or o2 + s > N:
                continue
            B = _blocks(w, s, o1, o2)
            Br = _blocks(wr, s, o1, o2)
            flat = B.max(axis=(2, 3)) == B.min(axis=(2, 3))
            mean = B.mean(axis=(2, 3))
            mean_r = Br.mean(axis=(2, 3))
            a1 = max(a1, _ratio(mean, B.min(axis=(2, 3)), flat))
            rh = max(rh, _ratio(mean_r ** (1.0 / rho), mean, flat))
            n1, n2 = B.shape[:2]
            sub = wr[o1:o1 + n1 * s, o2:o2 + n2 * s]
            ainf = max(ainf, _ratio(_local_maximal_mean(sub, s), mean_r, flat))
        s *= 2
    return a1, rh, ainf


def brute_force_characteristics(w: np.ndarray, rho: float) -> tuple[float, float, float]:
    """Square-by-square reference for :func:`characteristics` (small grids only)."""
    w = np.asarray(w, dtype=float)
    N = w.shape[0]
    wr = w**rho
    a1 = rh = ainf = 1.0
    s = 1
    while s <= N:
        for o1, o2 in _offsets(s):
            for i in range(o1, N - s + 1, s):
                for k in range(o2, N - s + 1, s):
                    q = w[i:i + s, k:k + s]
                    qr = wr[i:i + s, k:k + s]
                    if q.max() == q.min():
                        continue
                    a1 = max(a1, q.mean() / q.min())
                    rh = max(rh, qr.mean() ** (1.0 / rho) / q.mean())
                    # local dyadic maximal function, point by point
                    M = np.zeros((s, s))
                    for x in range(s):
                        for y in range(s):
                            best = 0.0
                            t = 1
                            while t <= s:
                                a, b = (x // t) * t, (y // t) * t
                                best = max(best, qr[a:a + t, b:b + t].mean())
                                t *= 2
                            M[x, y] = best
                    ainf = max(ainf, M.mean() / qr.mean())
        s *= 2
    return a1, rh, ainf


def weight_profile(w: SampledField, rho: float, name: str = "weight") -> WeightProfile:
    data = np.real(w.data) if np.iscomplexobj(w.data) else w.data
    a1, rh, ainf = characteristics(data, rho)
    return WeightProfile(w.like(np.asarray(data, dtype=float)), rho, a1, rh, ainf, name)


def power_weight(a: float, N: int, L: float, rho: float = 2.0) -> WeightProfile:
    """``w(x) = max(|x|, h)**-a`` with its characteristics at exponent ``rho``."""
    if a >= 2:
        raise ValueError(f"|x|^-a is not an A1 weight in the plane for a >= 2 (got a={a})")
    if a < 0:
        raise ValueError("power weights need a >= 0")
    f = SampledField(np.zeros((N, N)), L)
    x1, x2 = f.coords()
    r = np.maximum(np.hypot(x1, x2), f.h)
    w = np.ones((N, N)) if a == 0 else r ** (-a)
    return weight_profile(f.like(w), rho, name=f"power:{a:g}")


def rho_threshold(lam: float) -> float:
    """Smallest admissible reverse Holder exponent, ``4 / (4 - 3 p_lam)``; exact for Fraction input."""
    p = critical_p(lam)
    return 4 / (4 - 3 * p)


def _weight_array(w, f: SampledField) -> np.ndarray:
    if w is None:
        return np.ones(f.data.size)
    data = w.w.data if isinstance(w, WeightProfile) else (w.data if isinstance(w, SampledField) else w)
    data = np.asarray(np.real(data), dtype=float)
    if data.shape != f.data.shape:
        raise ValueError("weight and field live on different grids")
    return data.ravel()


def weighted_weak_quotient(f: SampledField, lam: float, w=None) -> float:
    """``sup_t t w({|B_lam f| > t})**(1/p) / ||f||_{L^p(w)}`` at ``p = p_lam``.

    ``w = None`` is the unweighted quotient, computed through the same code
    with unit weights.
    """
    p = critical_p(lam)
    wa = _weight_array(w, f)
    if np.any(wa[np.abs(f.data.ravel()) > 0] <= 0):
        raise ValueError("weight must be positive on the support of f")
    den = lp_norm(f, p, weight=wa.reshape(f.data.shape))
    if den == 0:
        raise ValueError("||f||_{L^p(w)} = 0")
    Bf = apply(SymbolSpec(lam, "full"), f)
    return weighted_weak_lp(Bf.data, wa, p, f.cell_area) / den


def weak_quotient(f: SampledField, lam: float) -> float:
    return weighted_weak_quotient(f, lam, None)


def strong_quotient(f: SampledField, lam: float, w=None) -> float:
    """``||B_lam f||_{L^p(w)} / ||f||_{L^p(w)}``, which dominates the weak quotient."""
    p = critical_p(lam)
    wa = _weight_array(w, f).reshape(f.data.shape)
    Bf = apply(SymbolSpec(lam, "full"), f)
    return lp_norm(Bf, p, weight=wa) / lp_norm(f, p, weight=wa)


def quantitative_rhs(prof: WeightProfile, lam: float, c: float = 1.0) -> float:
    """``c [w^rho]_A_inf**(1 + 1/p) ([w]_A1 [w]_RH_rho)**(1/p)`` at ``p = p_lam``."""
    p = critical_p(lam)
    return c * prof.ainf ** (1.0 + 1.0 / p) * (prof.a1 * prof.rh) ** (1.0 / p)
