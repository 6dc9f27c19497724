"""Lower-bound estimates of ``||T_j||_{p->p}`` and the growth of ``||tau_j||_1``.

Probes run on grids with spacing ``1/4`` (Nyquist frequency 2) and extent
``8 * 2**j`` (at least 64), which hold the bulk of ``tau_j`` and of the
outputs of the test families without wrap-around.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import fit_log2_slope, seeger_check
from .field import SampledField, knapp_plate, lp_norm, radial_chirp, random_patch
from .symbol import SymbolSpec, apply_raw, lambda_of_p, symbol_grid, symbol_peak

__all__ = [
    "GrowthTable",
    "FAMILIES",
    "probe_grid",
    "kernel_l1",
    "kernel_l1_growth",
    "family_fields",
    "nearest_lattice_frequency",
    "probe_ratios",
    "norm_probe",
    "norm_growth",
    "p2_check",
    "seeger_check",
]

FAMILIES = ("knapp", "radial-chirp", "random")
PROBE_H = 0.25


@dataclass
class GrowthTable:
    p: float
    lam: float
    family: str
    rows: list[tuple[int, float]] = field(default_factory=list)

    @property
    def slope(self) -> float | None:
        return fit_log2_slope([j for j, _ in self.rows], [v for _, v in self.rows])

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda": self.lam, "family": self.family,
                "rows": [{"j": j, "estimate": v} for j, v in self.rows], "slope": self.slope}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "lambda", "family", "j", "estimate"])
        for j, v in self.rows:
            w.writerow([self.p, self.lam, self.family, j, repr(v)])
        return buf.getvalue()


def probe_grid(j: int, h: float = PROBE_H, factor: int = 8) -> tuple[int, float]:
    """``(N, L)`` with spacing ``h`` and extent ``max(64, factor * 2**j)``."""
    L = float(max(64, factor * 2**j))
    N = int(round(L / h))
    if N & (N - 1):
        raise ValueError(f"L/h = {L / h} is not a power of 2")
    return N, L


def _default_lam(p: float) -> float:
    return float(lambda_of_p(p))


def kernel_l1(j: int, lam: float = 0.5, h: float = PROBE_H, factor: int = 8) -> float:
    """``||tau_j||_1`` of the annular piece, as ``h**2 sum |tau_j|`` on the probe grid."""
    N, L = probe_grid(j, h, factor)
    m = symbol_grid(SymbolSpec(lam, "annular", j), N, L)
    # tau = ifft2(m) N**2 / L**2 on the grid, so h**2 sum |tau| = sum |ifft2(m)|
    return float(np.sum(np.abs(np.fft.ifft2(m))))


def kernel_l1_growth(js=range(2, 7), lam: float = 0.5, h: float = PROBE_H, factor: int = 8) -> GrowthTable:
    """The ``p = 1`` row: ``||T_j||_{1->1} = ||tau_j||_1`` for each ``j``.

    ``lam`` defaults to ``lam_1 = 1/2``.
    """
    js = list(js)
    if min(js) < 0:
        raise ValueError("j must be >= 0")
    tab = GrowthTable(1.0, lam, "kernel")
    for j in js:
        tab.rows.append((j, kernel_l1(j, lam, h, factor)))
    return tab


def nearest_lattice_frequency(r: float, L: float) -> tuple[int, int]:
    """Integer ``(k1, k2)`` with ``|k| / L`` closest to ``r``."""
    R = r * L
    k1 = np.arange(0, int(math.floor(R)) + 1)
    k2 = np.round(np.sqrt(np.maximum(R * R - k1 * k1, 0.0)))
    i = int(np.argmin(np.abs(np.hypot(k1, k2) - R)))
    return int(k1[i]), int(k2[i])


def family_fields(family: str, j: int, N: int, L: float, lam: float, seed: int = 0) -> dict[str, SampledField]:
    """Test functions of one family at scale ``j``.

    knapp: tubes whose spectra are ``delta x delta**(1/2)`` plates tangent to
    the circle at the radius where the annular symbol peaks, for
    ``delta = 2**-m``, ``m = 0..j+1``, plus the plane wave at the grid
    frequency nearest that peak (the ``delta -> 0`` limit).
    radial-chirp: ``exp(2 pi i r* |x|)`` on annuli of radius ``2**m``.
    random: seeded complex samples on patches of half width ``1, 2**(j/2), 2**j``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    r_star, _ = symbol_peak(SymbolSpec(lam, "annular", j))
    out = {}
    if family == "knapp":
        for m in range(0, j + 2):
            out[f"plate_{m}"] = knapp_plate(N, L, m, radius=r_star)
        k1, k2 = nearest_lattice_frequency(r_star, L)
        x = -L / 2 + (L / N) * np.arange(N)
        wave = np.exp(2j * np.pi * (k1 / L) * x)[:, None] * np.exp(2j * np.pi * (k2 / L) * x)[None, :]
        out["plane_wave"] = SampledField(wave, L)
    elif family == "radial-chirp":
        for m in range(0, j + 1):
            out[f"chirp_{m}"] = radial_chirp(N, L, 2.0**m, frequency=r_star)
    else:
        for k, hw in enumerate((1.0, 2.0 ** (j / 2), 2.0**j)):
            out[f"random_{hw:g}"] = random_patch(N, L, hw, seed + k)
    return out


def probe_ratios(j: int, p: float, family: str, lam: float | None = None, h: float = PROBE_H,
                 seed: int = 0) -> dict[str, float]:
    """``||T_j f||_p / ||f||_p`` for every member of the family."""
    lam = _default_lam(p) if lam is None else lam
    N, L = probe_grid(j, h)
    m = symbol_grid(SymbolSpec(lam, "annular", j), N, L)
    out = {}
    for name, f in family_fields(family, j, N, L, lam, seed).items():
        Tf = f.like(apply_raw(m, f.data))
        out[name] = lp_norm(Tf, p) / lp_norm(f, p)
    return out


def norm_probe(j: int, p: float, family: str = "knapp", lam: float | None = None, h: float = PROBE_H,
               seed: int = 0) -> float:
    """Largest ratio over the family: a lower bound for ``||T_j^{lam}||_{p->p}`` (``lam = lam_p``)."""
    if not 1 < p <= 2:
        raise ValueError("norm probes take 1 < p <= 2")
    return max(probe_ratios(j, p, family, lam, h, seed).values())


def norm_growth(p: float, js=range(2, 7), family: str = "knapp", lam: float | None = None,
                h: float = PROBE_H, seed: int = 0) -> GrowthTable:
    lam = _default_lam(p) if lam is None else lam
    tab = GrowthTable(p, lam, family)
    for j in js:
        tab.rows.append((j, norm_probe(j, p, family, lam, h, seed)))
    return tab


def p2_check(j: int, lam: float | None = None) -> dict:
    """Plancherel cross-check: the ``p = 2`` probe against ``sup |m_j|``."""
    lam = _default_lam(2.0) if lam is None else lam
    probe = norm_probe(j, 2.0, "knapp", lam)
    _, sup = symbol_peak(SymbolSpec(lam, "annular", j))
    return {"j": j, "lambda": lam, "probe": probe, "symbol_sup": sup,
            "relative_gap": abs(probe - sup) / sup if sup else math.nan}
