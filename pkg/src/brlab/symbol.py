"""Bochner-Riesz symbols and their smooth annular decomposition.

The partition of unity is built from one fixed smooth bump

    theta(t) = exp(-1/t) for t > 0, else 0
    s(t)     = theta(t) / (theta(t) + theta(1 - t))
    phi(x)   = s(2 - |x|)            (1 on [-1, 1], 0 off [-2, 2])
    psi(x)   = phi(x) - phi(2 x)     (supported in 1/2 <= |x| <= 2)

and the pieces

    full        (1 - |xi|^2)_+^lam
    annular j   2^(lam j) (1 - |xi|^2)_+^lam psi(2^j (1 - |xi|))
    trunc jmax  sum_{j=0}^{jmax} 2^(-lam j) annular_j

The j = 0 piece is the low-frequency part, so ``full`` equals
``annular 0 + sum_{j>=1} 2^(-lam j) annular j`` exactly: the sum over
``psi(2^j t)`` telescopes to ``phi(t) = 1`` for ``0 < t <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .field import SampledField, transform

__all__ = [
    "bump_phi",
    "psi",
    "psi_j",
    "partition_sum",
    "partition_indices",
    "critical_p",
    "lambda_of_p",
    "dual_exponent",
    "IndexPack",
    "SymbolSpec",
    "symbol_eval",
    "symbol_grid",
    "symbol_sup",
    "symbol_peak",
    "apply",
    "max_resolvable_j",
    "jmax_for_side",
    "RhombusRegion",
    "rhombus",
    "contains",
    "contains_point",
    "apply_raw",
]

_THETA_CUT = 1.0 / 700.0  # exp(-700) underflows the smooth step; treat as 0


def _theta(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > _THETA_CUT
    out[m] = np.exp(-1.0 / t[m])
    return out


def _step(t):
    a = _theta(t)
    b = _theta(1.0 - t)
    return a / (a + b)


def bump_phi(x):
    """Even smooth bump: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``, monotone between."""
    x = np.asarray(x, dtype=float)
    out = _step(2.0 - np.abs(x))
    return out if out.ndim else float(out)


def psi(x):
    """``phi(x) - phi(2x)``, supported in ``1/2 <= |x| <= 2``."""
    x = np.asarray(x, dtype=float)
    out = _step(2.0 - np.abs(x)) - _step(2.0 - 2.0 * np.abs(x))
    return out if out.ndim else float(out)


def psi_j(x, j: int):
    return psi(np.ldexp(np.asarray(x, dtype=float), j))


def partition_indices(t: float) -> list[int]:
    """Indices ``j >= 0`` with ``psi(2^j t) != 0``; at most two of them."""
    if not t > 0:
        raise ValueError("partition of unity is defined for t in (0, 1]")
    jmax = max(0, math.ceil(math.log2(2.0 / t)))
    return [j for j in range(jmax + 2) if psi(math.ldexp(t, j)) != 0.0]


def partition_sum(t):
    """``sum_{j>=0} psi(2^j t)`` for ``t`` in ``(0, 1]`` (identically 1)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("partition of unity is defined for t in (0, 1]")
    jmax = int(max(0, math.ceil(math.log2(2.0 / float(t.min())))))
    total = np.zeros_like(t)
    for j in range(jmax + 2):
        total = total + psi_j(t, j)
    return total if total.ndim else float(total)


# ---------------------------------------------------------------- exponents

def critical_p(lam):
    """``p_lam = 4 / (3 + 2 lam)``; exact for Fraction input."""
    return 4 / (3 + 2 * lam)


def lambda_of_p(p):
    """``lam_p = 2 (1/p - 1/2) - 1/2``, the inverse of :func:`critical_p`."""
    half = Fraction(1, 2) if isinstance(p, (int, Fraction)) else 0.5
    return 2 * (1 / p - half) - half


def dual_exponent(p):
    return p / (p - 1)


@dataclass(frozen=True)
class IndexPack:
    """Exponents attached to ``lam``: ``p = p_lam``, its dual, the sparse exponent ``q``."""

    lam: float
    q: float | None = None

    def __post_init__(self):
        if not 0 < self.lam < 0.5:
            raise ValueError(f"lambda must lie in (0, 1/2), got {self.lam}")

    @property
    def p(self) -> float:
        return critical_p(self.lam)

    @property
    def p_dual(self) -> float:
        return dual_exponent(self.p)

    @property
    def lam_p(self) -> float:
        return lambda_of_p(self.p)

    def q_in_range(self, q: float | None = None) -> bool:
        q = self.q if q is None else q
        return q is not None and 4 < q < self.p_dual

    def check_q(self, q: float | None = None) -> float:
        q = self.q if q is None else q
        if q is None:
            raise ValueError("q is required")
        if not q > 4:
            raise ValueError(f"q must exceed 4 (got q={q})")
        if not q < self.p_dual:
            raise ValueError(f"q must be below p_lambda' = {self.p_dual:.6g} (got q={q})")
        return q


# ---------------------------------------------------------------- symbols

_PIECES = ("full", "annular", "trunc", "identity")


@dataclass(frozen=True)
class SymbolSpec:
    """Which multiplier to use: ``full``, ``annular`` (needs ``j``), ``trunc`` (``j`` = jmax) or ``identity``."""

    lam: float
    piece: str = "full"
    j: int | None = None

    def __post_init__(self):
        if self.piece not in _PIECES:
            raise ValueError(f"unknown piece {self.piece!r}, expected one of {_PIECES}")
        if self.piece in ("annular", "trunc"):
            if self.j is None or self.j < 0:
                raise ValueError(f"piece {self.piece!r} needs an integer j >= 0")
        if self.piece == "full" and not 0 <= self.lam:
            raise ValueError("the full symbol needs lambda >= 0")

    @classmethod
    def parse(cls, lam: float, text: str) -> "SymbolSpec":
        """Parse ``full | identity | annular:J | trunc:JMAX``."""
        name, _, arg = text.partition(":")
        if name in ("full", "identity"):
            return cls(lam, name)
        if name in ("annular", "trunc") and arg:
            return cls(lam, name, int(arg))
        raise ValueError(f"cannot parse piece {text!r}")

    def indices(self) -> list[int]:
        if self.piece == "annular":
            return [self.j]
        if self.piece == "trunc":
            return list(range(self.j + 1))
        return []

    def __str__(self) -> str:
        return self.piece if self.j is None else f"{self.piece}:{self.j}"


def _radial_power(base, lam):
    # (base)_+^lam through log/exp; exactly 0 when base <= 1e-300
    out = np.zeros_like(base)
    m = base > 1e-300
    out[m] = np.exp(lam * np.log(base[m]))
    return out


def _annular_radial(r, lam, j):
    t = 1.0 - r
    return 2.0 ** (lam * j) * _radial_power(1.0 - r * r, lam) * psi_j(t, j)


def symbol_eval(spec: SymbolSpec, xi1, xi2=None):
    """Symbol value at ``(xi1, xi2)`` (or at radius ``xi1`` when ``xi2`` is None)."""
    r = np.abs(np.asarray(xi1, dtype=float)) if xi2 is None else np.hypot(xi1, xi2)
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if spec.piece == "identity":
        out = np.ones_like(r)
    elif spec.piece == "full":
        out = _radial_power(1.0 - r * r, spec.lam)
    elif spec.piece == "annular":
        out = _annular_radial(r, spec.lam, spec.j)
    else:
        out = np.zeros_like(r)
        for j in spec.indices():
            out += 2.0 ** (-spec.lam * j) * _annular_radial(r, spec.lam, j)
    return float(out[0]) if scalar else out


def max_resolvable_j(L: float) -> int:
    """Largest ``j`` with ``2**-j >= 4/L`` (annulus at least four frequency bins wide)."""
    return math.floor(math.log2(L / 4.0))


def jmax_for_side(side: float) -> int | None:
    """Largest ``j >= 0`` with ``2**j < side``; None when there is none (side <= 1)."""
    if side <= 1:
        return None
    return math.ceil(math.log2(side)) - 1


@lru_cache(maxsize=64)
def _grid(spec: SymbolSpec, N: int, L: float) -> np.ndarray:
    k = np.fft.fftfreq(N, d=L / N)
    r = np.hypot(k[:, None], k[None, :])
    m = symbol_eval(spec, r.ravel()).reshape(N, N)
    m.setflags(write=False)
    return m


def symbol_grid(spec: SymbolSpec, N: int, L: float) -> np.ndarray:
    """Symbol sampled at the grid frequencies ``k/L`` in FFT order (cached, read-only)."""
    return _grid(spec, int(N), float(L))


def symbol_peak(spec: SymbolSpec, samples: int = 200001) -> tuple[float, float]:
    """``(r*, |m(r*)|)`` maximising the radial profile, by dense sampling and local refinement."""
    from scipy.optimize import minimize_scalar

    r = np.linspace(0.0, 1.0, samples)
    v = np.abs(symbol_eval(spec, r))
    i = int(np.argmax(v))
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, samples - 1)]
    res = minimize_scalar(lambda x: -abs(symbol_eval(spec, x)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    if -res.fun >= v[i]:
        return float(res.x), float(-res.fun)
    return float(r[i]), float(v[i])


def symbol_sup(spec: SymbolSpec, samples: int = 200001) -> float:
    """Supremum of ``|symbol|`` over the plane."""
    return symbol_peak(spec, samples)[1]


def _check_resolution(spec: SymbolSpec, f: SampledField):
    if spec.piece != "identity" and f.N / (2.0 * f.L) < 1.0:
        raise ValueError(
            f"grid Nyquist frequency {f.N / (2 * f.L):.3g} < 1: the unit circle is not resolved"
        )
    js = spec.indices()
    if js and max(js) > max_resolvable_j(f.L):
        raise ValueError(
            f"annulus j={max(js)} is not resolved on extent L={f.L:g}; "
            f"max usable j is {max_resolvable_j(f.L)}"
        )


def apply(spec: SymbolSpec, f: SampledField, check: bool = True) -> SampledField:
    """Fourier multiplier: inverse transform of symbol times forward transform.

    ``check=False`` skips the annulus-resolution test; the discrete
    decomposition stays exact, only the reading of a thin piece as its
    continuum counterpart degrades.
    """
    if check:
        _check_resolution(spec, f)
    if spec.piece == "identity":
        return f.like(f.data.copy())
    F = transform(f, "forward")
    G = SampledField(F.data * symbol_grid(spec, f.N, f.L), f.L, "frequency")
    return transform(G, "inverse")


def apply_raw(m: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Multiplier on raw samples (FFT order symbol), no normalisation bookkeeping."""
    return np.fft.ifft2(np.fft.fft2(data) * m)


# ---------------------------------------------------------------- rhombus

@dataclass(frozen=True)
class RhombusRegion:
    lam: object
    vertices: tuple  # counter-clockwise in the (1/r, 1/s) square


def rhombus(lam) -> RhombusRegion:
    """Open rhombus of known sparse bounds; exact for Fraction ``lam``."""
    if not 0 < lam < Fraction(1, 2):
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    p = critical_p(lam)
    ip = 1 / p
    ipd = 1 - ip
    mid = (1 + 6 * lam) / 4
    # (1/p, 1/p'), ((1+6l)/4, 1/p'), (1/p, (1+6l)/4), (1/p', 1/p)
    return RhombusRegion(lam, ((ip, ipd), (mid, ipd), (ip, mid), (ipd, ip)))


def _ordered(region: RhombusRegion):
    a, b, c, d = region.vertices
    # boundary order: (1/p,1/p') -> (1/p,mid) -> (1/p',1/p) -> (mid,1/p')
    return (a, c, d, b)


def contains(region: RhombusRegion, r, s) -> bool:
    """Strict membership of ``(1/r, 1/s)`` in the open rhombus."""
    return contains_point(region, 1 / r, 1 / s)


def contains_point(region: RhombusRegion, x, y) -> bool:
    """Strict membership of the point ``(x, y)``; exact for Fraction input."""
    pts = _ordered(region)
    signs = []
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        signs.append(cross)
    return all(c > 0 for c in signs) or all(c < 0 for c in signs)
