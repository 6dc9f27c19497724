"""Complex fields sampled on a periodic N x N grid of extent L.

Sample ``(i, k)`` sits at the lower-left corner ``(-L/2 + i*h, -L/2 + k*h)``
of its cell, ``h = L/N``; axis 0 is ``x1`` and axis 1 is ``x2``.  The
continuous Fourier convention is ``F f(xi) = int f(x) exp(-2 pi i x.xi) dx``,
discretised with cell area ``h**2`` so that Plancherel reads
``h**2 sum |f|**2 == L**-2 sum |F f|**2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SampledField",
    "NormReport",
    "transform",
    "lp_norm",
    "avg",
    "weak_lp",
    "weighted_weak_lp",
    "pairing",
    "save_field",
    "load_field",
    "indicator",
    "gaussian_bump",
    "knapp_plate",
    "radial_chirp",
    "random_patch",
    "smooth_bump",
]


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SampledField:
    data: np.ndarray
    L: float
    domain: str = "space"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"field data must be square, got shape {data.shape}")
        if not _is_pow2(data.shape[0]):
            raise ValueError(f"N must be a power of 2, got {data.shape[0]}")
        if not self.L > 0:
            raise ValueError("extent L must be positive")
        if self.domain not in ("space", "frequency"):
            raise ValueError(f"unknown domain {self.domain!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "L", float(self.L))

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample positions ``(x1, x2)`` as ``ij``-indexed 2-D arrays."""
        x = -self.L / 2 + self.h * np.arange(self.N)
        return np.meshgrid(x, x, indexing="ij")

    def freqs(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete frequencies in FFT order, spacing ``1/L``."""
        k = np.fft.fftfreq(self.N, d=self.h)
        return np.meshgrid(k, k, indexing="ij")

    def like(self, data) -> "SampledField":
        return SampledField(data, self.L, self.domain)

    def same_grid(self, other: "SampledField") -> bool:
        return self.N == other.N and self.L == other.L

    def __add__(self, other):
        _check_grid(self, other)
        return self.like(self.data + other.data)

    def __sub__(self, other):
        _check_grid(self, other)
        return self.like(self.data - other.data)

    def __mul__(self, c):
        if isinstance(c, SampledField):
            _check_grid(self, c)
            return self.like(self.data * c.data)
        return self.like(self.data * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class NormReport:
    p: float
    value: float
    kind: str  # "strong" | "weak"


def _check_grid(a: SampledField, b: SampledField):
    if not a.same_grid(b):
        raise ValueError(f"mismatched grids: (N={a.N}, L={a.L}) vs (N={b.N}, L={b.L})")


def _corner_phase(N: int) -> np.ndarray:
    # exp(-2 pi i x0 xi_k) with x0 = -L/2 and xi_k = k/L reduces to (-1)**k
    k = np.rint(np.fft.fftfreq(N) * N).astype(np.int64)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return np.outer(sign, sign)


def transform(f: SampledField, direction: str = "forward") -> SampledField:
    """Discrete realisation of the continuous Fourier transform.

    ``forward`` maps a space field to frequency samples ``F f(k/L)`` in FFT
    order; ``inverse`` undoes it exactly (up to rounding).
    """
    phase = _corner_phase(f.N)
    if direction == "forward":
        if f.domain != "space":
            raise ValueError("forward transform expects a space-domain field")
        out = np.fft.fft2(f.data) * phase * f.cell_area
        return SampledField(out, f.L, "frequency")
    if direction == "inverse":
        if f.domain != "frequency":
            raise ValueError("inverse transform expects a frequency-domain field")
        out = np.fft.ifft2(f.data * phase) / f.cell_area
        return SampledField(out, f.L, "space")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def lp_norm(f: SampledField, p: float, weight: np.ndarray | None = None) -> float:
    """``(sum |f|**p w h**2)**(1/p)``; ``p = inf`` gives the max modulus."""
    a = np.abs(f.data)
    if math.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    if f.domain == "frequency":
        dA = 1.0 / (f.L * f.L)
    else:
        dA = f.cell_area
    v = a**p
    if weight is not None:
        v = v * weight
    return float(math.fsum(v.ravel()) * dA) ** (1.0 / p)


def avg(f: SampledField, Q, r: float = 1.0) -> float:
    """``<f>_{Q,r}``: the r-power mean of ``|f|`` over the cells of ``Q``.

    ``Q`` is a :class:`brlab.dyadic.Square` or ``DyadicSquare`` in cell units.
    Dilates larger than the torus wrap periodically (cells counted with
    multiplicity).
    """
    from .dyadic import cells_of

    if r < 1:
        raise ValueError("r must be >= 1")
    rows, cols = cells_of(Q, f.N)
    if rows.size == 0 or cols.size == 0:
        raise ValueError(f"square {Q} contains no grid cell")
    block = np.abs(f.data[np.ix_(rows, cols)])
    return float(np.mean(block**r)) ** (1.0 / r)


def weighted_weak_lp(values: np.ndarray, weight: np.ndarray, p: float, dA: float) -> float:
    """``sup_t t * (w-measure of {|v| > t})**(1/p)`` evaluated at sample values.

    Samples are sorted by decreasing modulus; the sup is attained just below
    a sample value, where the level set holds that sample and every sample
    at least as large.
    """
    a = np.abs(np.asarray(values)).ravel()
    w = np.asarray(weight, dtype=float).ravel()
    order = np.argsort(-a, kind="stable")
    a = a[order]
    mass = np.cumsum(w[order]) * dA
    return float(np.max(a * mass ** (1.0 / p)))


def weak_lp(f: SampledField, p: float) -> float:
    """Weak-type quasi-norm ``sup_t t |{|f| > t}|**(1/p)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return weighted_weak_lp(f.data, np.ones(f.data.size), p, f.cell_area)


def pairing(F: SampledField, G: SampledField) -> complex:
    """Discrete pairing ``sum F conj(G) h**2``."""
    _check_grid(F, G)
    return complex(np.vdot(G.data, F.data) * F.cell_area)


# ---------------------------------------------------------------- file format

def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".json", ".bin"):
        p = p.with_suffix("")
    return p.with_suffix(".json"), p.with_suffix(".bin")


def save_field(f: SampledField, path) -> tuple[Path, Path]:
    """Write ``<stem>.json`` (header) and ``<stem>.bin`` (raw little-endian c128)."""
    jpath, bpath = _paths(path)
    jpath.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "N": f.N,
        "L": f.L,
        "dtype": "c128",
        "layout": "row-major",
        "domain": f.domain,
        "data_file": bpath.name,
    }
    jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    np.ascontiguousarray(f.data, dtype="<c16").tofile(bpath)
    return jpath, bpath


def load_field(path) -> SampledField:
    jpath, bpath = _paths(path)
    header = json.loads(jpath.read_text())
    if header.get("dtype", "c128") != "c128" or header.get("layout", "row-major") != "row-major":
        raise ValueError(f"unsupported field encoding in {jpath}")
    if "data_file" in header:
        bpath = jpath.parent / header["data_file"]
    N = int(header["N"])
    data = np.fromfile(bpath, dtype="<c16")
    if data.size != N * N:
        raise ValueError(f"{bpath} holds {data.size} samples, expected {N * N}")
    return SampledField(data.reshape(N, N), float(header["L"]), header.get("domain", "space"))


# ---------------------------------------------------------------- generators

def _radius(N: int, L: float, center=(0.0, 0.0)):
    f = SampledField(np.zeros((N, N)), L)
    x1, x2 = f.coords()
    return x1 - center[0], x2 - center[1]


def smooth_bump(t):
    """The compactly supported profile ``phi(2 t)``: 1 for |t| <= 1/2, 0 for |t| >= 1."""
    from .symbol import bump_phi

    return bump_phi(2.0 * np.asarray(t, dtype=float))


def indicator(N: int, L: float, lower, side: float) -> SampledField:
    """Indicator of the physical box ``[lower, lower + side)**2`` (sample rule)."""
    x1, x2 = _radius(N, L)
    eps = 1e-9 * (L / N)
    m = (
        (x1 >= lower[0] - eps) & (x1 < lower[0] + side - eps)
        & (x2 >= lower[1] - eps) & (x2 < lower[1] + side - eps)
    )
    return SampledField(m.astype(float), L)


def gaussian_bump(N: int, L: float, width: float, center=(0.0, 0.0), cutoff: float = 4.0) -> SampledField:
    """``exp(-pi |x - c|**2 / width**2)``, set to zero from radius ``cutoff * width`` on."""
    d1, d2 = _radius(N, L, center)
    r2 = d1 * d1 + d2 * d2
    g = np.exp(-np.pi * r2 / width**2)
    g[r2 >= (cutoff * width) ** 2] = 0.0
    return SampledField(g, L)


def knapp_plate(N: int, L: float, j: int, theta: float = 0.0, radius: float | None = None,
                center=(0.0, 0.0), long_scale: float | None = None) -> SampledField:
    """Wave packet whose spectrum sits on a ``2**-j x 2**(-j/2)`` plate tangent to the circle.

    In space it is a compactly supported tube of size ``2**j x 2**(j/2)``
    (along ``e_theta`` and its normal) modulated by ``exp(2 pi i r0 x.e_theta)``
    with ``r0 = 1 - 1.5 * 2**-j`` by default.  ``long_scale`` overrides the
    tube length, e.g. to fit a bounded support box.
    """
    r0 = 1.0 - 1.5 * 2.0**-j if radius is None else radius
    d1, d2 = _radius(N, L, center)
    c, s = math.cos(theta), math.sin(theta)
    along = c * d1 + s * d2
    normal = -s * d1 + c * d2
    a = 2.0**j if long_scale is None else long_scale
    b = 2.0 ** (j / 2.0)
    env = smooth_bump(along / a) * smooth_bump(normal / b)
    return SampledField(env * np.exp(2j * np.pi * r0 * along), L)


def radial_chirp(N: int, L: float, R: float, center=(0.0, 0.0), frequency: float = 1.0) -> SampledField:
    """Focusing example ``exp(2 pi i |x|) psi(|x|/R)`` on the annulus ``R/2 <= |x| <= 2R``."""
    from .symbol import psi

    d1, d2 = _radius(N, L, center)
    r = np.hypot(d1, d2)
    return SampledField(np.exp(2j * np.pi * frequency * r) * psi(r / R), L)


def random_patch(N: int, L: float, half_width: float, seed: int, center=(0.0, 0.0),
                 complex_values: bool = True) -> SampledField:
    """Seeded random samples on the box ``-w <= x_i - c_i < w``, zero elsewhere."""
    rng = np.random.default_rng(seed)
    d1, d2 = _radius(N, L, center)
    eps = 1e-9 * (L / N)
    m = (d1 >= -half_width - eps) & (d1 < half_width - eps)
    m &= (d2 >= -half_width - eps) & (d2 < half_width - eps)
    # draw only the box samples, so the patch is the same physical field on
    # every grid with the same spacing
    n = int(m.sum())
    vals = rng.uniform(-1.0, 1.0, size=n)
    if complex_values:
        vals = vals + 1j * rng.uniform(-1.0, 1.0, size=n)
    out = np.zeros((N, N), dtype=complex)
    out[m] = vals
    return SampledField(out, L)
