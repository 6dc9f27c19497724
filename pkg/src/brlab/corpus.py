"""Named (f, h) test pairs for the domination, audit and weighted experiments.

Every field is supported in a physical box of side 8 and is a fixed
physical function: smooth fields are sampled, and the lattice fields
(random patches, spikes, the dipole ladder) are drawn on the spacing-1/2
lattice and repeated onto finer grids.  Growing ``L`` at fixed spacing pads
with zeros and refining the spacing at fixed ``L`` resamples, so both kinds
of grid doubling see the same data.  The smallest admissible grid is
``L = 64``, spacing ``<= 1/2``.  Most fields sit in ``[-4, 4)**2``; the ``far`` test functions
sit in ``[24, 32) x [-4, 4)``, outside the ``3Q`` dilates of bad squares on
the left half, so the off-diagonal term of the audit is exercised.  Pairs
whose ``h`` is built from ``B_lam f`` depend on ``lam``; they use
``(B_lam f) 1_box`` as a near-dual test function.
"""

from __future__ import annotations

import math

import numpy as np

from .field import (SampledField, gaussian_bump, indicator, knapp_plate, radial_chirp,
                    random_patch)
from .symbol import SymbolSpec, apply, critical_p

__all__ = ["BASE", "on_lattice", "BOX", "FAR", "corpus", "corpus_f", "localize", "box_mask", "sparse_spikes", "dipole_ladder"]

BASE = 0.5  # spacing of the lattice the random fields are drawn on
BOX = 4.0  # half side of the support box
FAR = (28.0, 0.0)  # centre of the displaced box


def on_lattice(make, N: int, L: float, base: float = BASE) -> SampledField:
    """Build ``make(N0, L)`` at spacing ``base`` and repeat each sample onto the ``N`` grid."""
    N0 = int(round(L / base))
    if N % N0 or abs(N0 * base - L) > 1e-9 * L:
        raise ValueError(f"grid spacing {L / N} does not refine the base lattice {base}")
    r = N // N0
    f = make(N0, L)
    return f.like(np.repeat(np.repeat(f.data, r, axis=0), r, axis=1))


def box_mask(N: int, L: float, half: float = BOX) -> np.ndarray:
    f = SampledField(np.zeros((N, N)), L)
    x1, x2 = f.coords()
    eps = 1e-9 * f.h
    return (x1 >= -half - eps) & (x1 < half - eps) & (x2 >= -half - eps) & (x2 < half - eps)


def sparse_spikes(N: int, L: float, count: int, seed: int, half: float = BOX,
                  decades: float = 3.0) -> SampledField:
    """``count`` random cells in the box with log-uniform moduli over ``decades`` and random phases.

    Cells are drawn on the ``h``-lattice of the box, so grids with the same
    spacing give the same field.
    """
    rng = np.random.default_rng(seed)
    m = box_mask(N, L, half)
    idx = np.flatnonzero(m)
    pick = idx[rng.choice(idx.size, size=count, replace=False)]
    mod = 10.0 ** (-decades * rng.uniform(size=count))
    phase = np.exp(2j * np.pi * rng.uniform(size=count))
    out = np.zeros(N * N, dtype=complex)
    out[pick] = mod * phase
    return SampledField(out.reshape(N, N), L)


# lower-left corners of the 1 x 1 checkerboard blocks, one rung each; the
# first three rungs sit alone in their quadrant of the box, the last three
# share the lower-left quadrant in separate 2 x 2 subsquares
_LADDER = ((1.0, 1.0), (-3.0, 1.0), (1.0, -3.0), (-2.0, -2.0), (-4.0, -4.0), (-4.0, -2.0))


def dipole_ladder(N: int, L: float, p: float) -> SampledField:
    """Checkerboard blocks on 2 x 2 cells with ``|f|**p`` mass falling by 4 per rung.

    A block holding the share ``s`` of the total ``|f|**p`` mass is a bad
    square of side 1 when ``4 < s |E| / 100 <= 16``, so successive rungs
    provide side-1 bad squares on roots of ``4**k`` times the area.  Laid
    out at spacing 1/2; use :func:`on_lattice` for finer grids.
    """
    if L / N != BASE:
        raise ValueError("dipole_ladder is laid out for grid spacing 1/2")
    out = np.zeros((N, N), dtype=complex)
    pattern = np.array([[1.0, -1.0], [-1.0, 1.0]])
    for k, (x, y) in enumerate(_LADDER):
        i = int(round((x + L / 2) / 0.5))
        j = int(round((y + L / 2) / 0.5))
        out[i:i + 2, j:j + 2] = 4.0 ** (-k / p) * pattern
    return SampledField(out, L)


def localize(f: SampledField, half: float = BOX) -> SampledField:
    return f.like(np.where(box_mask(f.N, f.L, half), f.data, 0.0))


def _dual(lam: float):
    def make(f: SampledField) -> SampledField:
        return localize(apply(SymbolSpec(lam, "full"), f))
    return make


def corpus_f(N: int, L: float, seed: int = 0, p: float = 8 / 7) -> dict[str, SampledField]:
    """The f-side fields by name (``p`` sets the dipole ladder's rungs)."""
    out = {
        "ind_unit": indicator(N, L, (0.0, 0.0), 1.0),
        "ind_2": indicator(N, L, (-1.0, -1.0), 2.0),
        "ind_4": indicator(N, L, (-2.0, -2.0), 4.0),
        "ind_offcentre": indicator(N, L, (1.0, -3.0), 2.0),
        "cell": indicator(N, L, (0.0, 0.0), BASE),
        "gauss_0.5": gaussian_bump(N, L, 0.5),
        "gauss_1": gaussian_bump(N, L, 1.0),
        "gauss_2": gaussian_bump(N, L, 2.0, cutoff=2.0),
        "knapp_2": knapp_plate(N, L, 2),
        "knapp_3": knapp_plate(N, L, 3, long_scale=BOX),
        "knapp_3_vertical": knapp_plate(N, L, 3, theta=math.pi / 2, long_scale=BOX),
        "chirp_2": radial_chirp(N, L, 2.0),
        "chirp_1.5": radial_chirp(N, L, 1.5),
    }
    for k, hw in enumerate((4.0, 2.0, 1.0)):
        out[f"random_{hw:g}"] = on_lattice(lambda n, l: random_patch(n, l, hw, seed + k), N, L)
    out["random_real"] = on_lattice(lambda n, l: random_patch(n, l, BOX, seed + 10, complex_values=False), N, L)
    out["spikes"] = on_lattice(lambda n, l: sparse_spikes(n, l, 24, seed + 20), N, L)
    out["ladder"] = on_lattice(lambda n, l: dipole_ladder(n, l, p), N, L)
    return out


def corpus(N: int, L: float, lam: float, seed: int = 0) -> list[tuple[str, SampledField, SampledField]]:
    """At least twenty ``(name, f, h)`` pairs: indicators, bumps, Knapp plates, chirps, random data."""
    F = corpus_f(N, L, seed, critical_p(lam))
    dual = _dual(lam)
    G = {
        "ind_4": indicator(N, L, (-2.0, -2.0), 4.0),
        "ind_8": indicator(N, L, (-BOX, -BOX), 2 * BOX),
        "gauss_1": F["gauss_1"],
        "random_b": on_lattice(lambda n, l: random_patch(n, l, BOX, seed + 100), N, L),
        "random_c": on_lattice(lambda n, l: random_patch(n, l, 2.0, seed + 101), N, L),
        "far_gauss": gaussian_bump(N, L, 1.0, center=FAR),
        "far_random": on_lattice(lambda n, l: random_patch(n, l, BOX, seed + 102, center=FAR), N, L),
    }
    pairs = [
        ("ind_unit|ind_unit", F["ind_unit"], F["ind_unit"]),
        ("ind_2|ind_4", F["ind_2"], G["ind_4"]),
        ("ind_4|ind_8", F["ind_4"], G["ind_8"]),
        ("ind_offcentre|ind_2", F["ind_offcentre"], F["ind_2"]),
        ("ind_unit|dual", F["ind_unit"], dual(F["ind_unit"])),
        ("cell|gauss_1", F["cell"], G["gauss_1"]),
        ("gauss_0.5|gauss_1", F["gauss_0.5"], G["gauss_1"]),
        ("gauss_1|ind_4", F["gauss_1"], G["ind_4"]),
        ("gauss_2|dual", F["gauss_2"], dual(F["gauss_2"])),
        ("knapp_2|knapp_2", F["knapp_2"], F["knapp_2"]),
        ("knapp_2|dual", F["knapp_2"], dual(F["knapp_2"])),
        ("knapp_3|dual", F["knapp_3"], dual(F["knapp_3"])),
        ("knapp_3_vertical|ind_8", F["knapp_3_vertical"], G["ind_8"]),
        ("chirp_2|chirp_2", F["chirp_2"], F["chirp_2"]),
        ("chirp_1.5|gauss_1", F["chirp_1.5"], G["gauss_1"]),
        ("random_4|random_b", F["random_4"], G["random_b"]),
        ("random_2|random_c", F["random_2"], G["random_c"]),
        ("random_1|ind_4", F["random_1"], G["ind_4"]),
        ("random_real|dual", F["random_real"], dual(F["random_real"])),
        ("random_4|dual", F["random_4"], dual(F["random_4"])),
        ("chirp_2|dual", F["chirp_2"], dual(F["chirp_2"])),
        ("random_2|gauss_1", F["random_2"], G["gauss_1"]),
        ("spikes|gauss_1", F["spikes"], G["gauss_1"]),
        ("spikes|dual", F["spikes"], dual(F["spikes"])),
        ("ladder|ind_8", F["ladder"], G["ind_8"]),
        ("ladder|dual", F["ladder"], dual(F["ladder"])),
        ("random_4|far_random", F["random_4"], G["far_random"]),
        ("gauss_2|far_gauss", F["gauss_2"], G["far_gauss"]),
        ("ind_4|far_random", F["ind_4"], G["far_random"]),
    ]
    return pairs
