"""Stopping-time recursion, sparse collections and the four-term audit.

Each node ``Q`` of the recursion runs the Calderon-Zygmund selection on
``f 1_Q`` at level ``100**(1/p) <f>_{Q,p}``; the bad squares become its
children and ``E_Q = Q`` minus the children.  The root is the whole grid.
A node whose physical side is at most 1 has an empty truncated operator
(no ``j`` with ``2**j < l(Q)``) and is a leaf.

Pairings are ``<F, G> = sum F conj(G) h**2``.  Every symbol used here is real
and radial, so ``<T F, G> = <F, T G>``; the audit evaluates the global
inner products against ``T_j h`` and computes only the ``3Q``-localised
pieces by direct convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .czd import cz_decompose, group_index, select_bad
from .dyadic import BoxSums, DyadicSquare, SparseCollection, SparseEntry, dilate, sparse_form
from .field import SampledField, lp_norm, pairing
from .symbol import IndexPack, SymbolSpec, apply, apply_raw, jmax_for_side, lambda_of_p, symbol_grid

__all__ = [
    "ETA",
    "RecursionNode",
    "DominationReport",
    "AuditReport",
    "root_square",
    "support_diameter",
    "check_padding",
    "recursive_step",
    "sparse_collection",
    "build_sparse",
    "domination_ratio",
    "audit_terms",
    "seeger_check",
    "fit_log2_slope",
    "summarize_audits",
]

ETA = Fraction(99, 100)


@dataclass
class RecursionNode:
    square: DyadicSquare
    depth: int
    children: list[DyadicSquare]
    local_value: float | None = None  # <f>_{Q,p} <h>_{3Q,q} |Q|


@dataclass
class DominationReport:
    pairing: float
    form: float
    ratio: float
    root_term: float
    collection: SparseCollection
    nodes: list[RecursionNode]
    lam: float
    p: float
    q: float
    N: int
    L: float

    def to_dict(self) -> dict:
        return {
            "pairing": self.pairing,
            "form": self.form,
            "ratio": self.ratio,
            "root_term": self.root_term,
            "n_squares": len(self.collection),
            "max_depth": max((n.depth for n in self.nodes), default=0),
            "eta": str(self.collection.eta),
            "lambda": self.lam,
            "p": self.p,
            "q": self.q,
            "grid": {"N": self.N, "L": self.L, "h": self.L / self.N},
        }


@dataclass
class AuditReport:
    bench: float
    lhs: float
    I: float
    II: float
    II_by_s: dict
    III: float
    IV1: float
    IV1_by_sigma: dict
    IV2: float
    signed_error: float
    jE: int
    n_bad: int
    localized: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.I + self.II + self.III + self.IV1 + self.IV2

    @property
    def triangle_ok(self) -> bool:
        return self.lhs <= self.total * (1 + 1e-9) + 1e-300

    def normalized(self) -> dict:
        b = self.bench
        return {k: (v / b if b > 0 else 0.0) for k, v in
                (("I", self.I), ("II", self.II), ("III", self.III), ("IV1", self.IV1), ("IV2", self.IV2))}

    def to_dict(self) -> dict:
        return {
            "bench": self.bench,
            "lhs": self.lhs,
            "terms": {"I": self.I, "II": self.II, "III": self.III, "IV1": self.IV1, "IV2": self.IV2},
            "normalized": self.normalized(),
            "II_by_s": {str(k): v for k, v in self.II_by_s.items()},
            "IV1_by_sigma": {str(k): v for k, v in self.IV1_by_sigma.items()},
            "localized_by_k": {str(k): v for k, v in self.localized.items()},
            "signed_error": self.signed_error,
            "triangle_ok": self.triangle_ok,
            "jE": self.jE,
            "n_bad": self.n_bad,
        }


# ---------------------------------------------------------------- geometry helpers

def root_square(N: int) -> DyadicSquare:
    return DyadicSquare(int(N).bit_length() - 1, (0, 0))


def support_diameter(data: np.ndarray) -> int:
    """Side (in cells) of the bounding box of the nonzero samples; 0 for the zero field."""
    nz = data != 0
    if not nz.any():
        return 0
    rows = np.nonzero(nz.any(axis=1))[0]
    cols = np.nonzero(nz.any(axis=0))[0]
    return int(max(rows[-1] - rows[0] + 1, cols[-1] - cols[0] + 1))


def check_padding(*fields: SampledField, factor: int = 8):
    """Require the root square (the grid) to be ``factor`` times wider than every support."""
    for f in fields:
        D = support_diameter(f.data)
        if factor * D > f.N:
            raise ValueError(
                f"support of diameter {D} cells is not deeply contained in the N={f.N} root "
                f"square; re-pad to N >= {factor * D}"
            )


def _carve_out(Q: DyadicSquare, kids: list[DyadicSquare], N: int) -> np.ndarray:
    s = Q.side
    i0, k0 = Q.lower
    keep = np.ones((s, s), dtype=bool)
    for c in kids:
        a, b = c.lower
        keep[a - i0:a - i0 + c.side, b - k0:b - k0 + c.side] = False
    r, c = np.nonzero(keep)
    return (r + i0) * N + (c + k0)


# ---------------------------------------------------------------- recursion

def _is_leaf(Q: DyadicSquare, h: float) -> bool:
    return Q.level == 0 or jmax_for_side(Q.side * h) is None


def recursive_step(f: SampledField, h: SampledField | None, E: DyadicSquare, pack: IndexPack,
                   q: float | None = None, multiplier: float = 100.0, depth: int = 0) -> RecursionNode:
    """One application of the recursive estimate on ``E``: children are the CZ bad squares of ``f 1_E``.

    With ``h`` and ``q`` given, the node also records ``<f>_{E,p} <h>_{3E,q} |E|``.
    """
    p = pack.p
    kids = [] if _is_leaf(E, f.h) else select_bad(np.abs(f.data[E.slices()]) ** p, E, multiplier)
    node = RecursionNode(E, depth, kids)
    if h is not None and q is not None:
        fa = (np.mean(np.abs(f.data[E.slices()]) ** p)) ** (1.0 / p)
        ha = BoxSums(np.abs(h.data) ** q).mean(dilate(E, 3.0)) ** (1.0 / q)
        node.local_value = float(fa * ha * E.area * f.cell_area)
    return node


def sparse_collection(f: SampledField, pack: IndexPack, multiplier: float = 100.0):
    """Run the recursion from the root and return ``(collection, nodes)``.

    Entries are ordered by decreasing level, then anchor.
    """
    N = f.N
    pw = np.abs(f.data) ** pack.p
    nodes = []
    stack = [(root_square(N), 0)]
    while stack:
        Q, d = stack.pop()
        kids = [] if _is_leaf(Q, f.h) else select_bad(pw[Q.slices()], Q, multiplier)
        nodes.append(RecursionNode(Q, d, kids))
        for c in reversed(kids):
            stack.append((c, d + 1))
    nodes.sort(key=lambda n: (-n.square.level, n.square.anchor))
    entries = [SparseEntry(n.square, _carve_out(n.square, n.children, N)) for n in nodes]
    eta = 1 - Fraction(1, int(multiplier)) if float(multiplier).is_integer() else ETA
    return SparseCollection(N, entries, eta), nodes


def build_sparse(f: SampledField, h: SampledField, pack: IndexPack, q: float | None = None,
                 check_range: bool = True, dilation: float = 3.0, multiplier: float = 100.0,
                 collection=None) -> DominationReport:
    """Sparse collection of the recursion plus ``|<B_lam f, h>|`` against the ``3Q``-averaged form.

    ``check_range=False`` admits ``q`` outside ``4 < q < p_lam'`` (the form is
    still well defined; the bound is then not claimed).  A precomputed
    ``(collection, nodes)`` pair can be passed to share the recursion across ``q``.
    """
    q = pack.check_q(q) if check_range else float(q if q is not None else pack.q)
    if not f.same_grid(h):
        raise ValueError("f and h live on different grids")
    check_padding(f, h)
    S, nodes = collection if collection is not None else sparse_collection(f, pack, multiplier)
    Bf = apply(SymbolSpec(pack.lam, "full"), f)
    pair = abs(pairing(Bf, h))
    return domination_ratio(S, nodes, f, h, pack, q, pair, dilation)


def domination_ratio(S, nodes, f, h, pack, q, pair, dilation=3.0) -> DominationReport:
    p = pack.p
    form = sparse_form(S, f, h, p, q, dilation)
    hs = BoxSums(np.abs(h.data) ** q)
    fs = BoxSums(np.abs(f.data) ** p)
    for n in nodes:
        fa = max(fs.mean(n.square), 0.0) ** (1.0 / p)
        ha = max(hs.mean(dilate(n.square, 3.0)), 0.0) ** (1.0 / q)
        n.local_value = float(fa * ha * n.square.area * f.cell_area)
    E = S.entries[0].square
    D = dilate(E, dilation)
    root = (max(fs.mean(D), 0.0) ** (1.0 / p)) * (max(hs.mean(D), 0.0) ** (1.0 / q)) * E.area * f.cell_area
    ratio = pair / form if form > 0 else (0.0 if pair == 0 else math.inf)
    return DominationReport(float(pair), float(form), float(ratio), float(root), S, nodes,
                            pack.lam, p, q, f.N, f.L)


# ---------------------------------------------------------------- audit

def fit_log2_slope(xs, ys) -> float | None:
    """Least-squares slope of ``log2 y`` against ``x`` over the positive ``y``; None if < 2 points."""
    pts = [(x, y) for x, y in zip(xs, ys) if y > 0]
    if len(pts) < 2:
        return None
    x = np.array([a for a, _ in pts], dtype=float)
    y = np.log2(np.array([b for _, b in pts], dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _kernel_patch(K: np.ndarray, reach: int) -> np.ndarray:
    N = K.shape[0]
    d = np.arange(-reach, reach + 1) % N
    return K[np.ix_(d, d)]


def _local_output(K: np.ndarray, b: np.ndarray, Q: DyadicSquare, margin: int):
    """``T b`` on the window ``Q`` enlarged by ``margin`` cells per side (rows, cols, values)."""
    s = Q.side
    patch = _kernel_patch(K, margin + s - 1)
    out = fftconvolve(patch, b, mode="valid")
    i0, k0 = Q.lower
    N = K.shape[0]
    rows = np.arange(i0 - margin, i0 + s + margin) % N
    cols = np.arange(k0 - margin, k0 + s + margin) % N
    return rows, cols, out


def audit_terms(f: SampledField, h: SampledField, pack: IndexPack, q: float | None = None,
                E: DyadicSquare | None = None, k_max: int = 4, check_range: bool = True,
                multiplier: float = 100.0) -> AuditReport:
    """Split ``<T^E f, h>`` into the terms I, II(s), III, IV1(sigma), IV2 and evaluate each.

    ``bench = <f>_{E,p} <h>_{3E,q} |E|``.  The signed pieces sum to
    ``<T^E f, h>``; ``signed_error`` reports the relative mismatch.  The
    ``localized`` table holds, for ``k = 2..k_max``, the largest
    ``|<1_{Delta^k Q} T_j b_Q, h>| / (2**(lam j) 2**-sigma <f>_{Q,p} <h>_{2^k Q,q} |Q|)``
    over bad squares and ``j < t_Q`` whose window fits the grid.
    """
    q = pack.check_q(q) if check_range else float(q if q is not None else pack.q)
    p = pack.p
    lam = pack.lam_p
    N, hc = f.N, f.h
    dA = f.cell_area
    E = root_square(N) if E is None else E
    fE = np.zeros_like(f.data)
    fE[E.slices()] = f.data[E.slices()]
    fE = f.like(fE)
    cz = cz_decompose(fE, E, p, multiplier)
    jE = jmax_for_side(E.side * hc)
    if jE is None:
        jE = -1
    ip = lambda F, G: complex(np.vdot(G, F)) * dA

    kernels, Th = {}, {}
    TEh = np.zeros_like(h.data)
    for j in range(jE + 1):
        m = symbol_grid(SymbolSpec(pack.lam, "annular", j), N, f.L)
        Th[j] = apply_raw(m, h.data)
        kernels[j] = np.fft.ifft2(m)
        TEh += 2.0 ** (-lam * j) * Th[j]

    fa_E = float(np.mean(np.abs(fE.data[E.slices()]) ** p)) ** (1.0 / p)
    hs = BoxSums(np.abs(h.data) ** q)
    bench = fa_E * max(hs.mean(dilate(E, 3.0)), 0.0) ** (1.0 / q) * E.area * dA
    lhs_c = ip(fE.data, TEh)

    vI = ip(cz.good.data, TEh)
    beta = {t: g.data for t, g in cz.groups.items()}
    vIII = ip(beta[0], TEh) if 0 in beta else 0j
    II_by_s, vII = {}, 0j
    for s in range(max(jE, 0)):
        acc = 0j
        for j in range(s + 1, jE + 1):
            if (j - s) in beta:
                acc += 2.0 ** (-lam * j) * ip(beta[j - s], Th[j])
        II_by_s[s] = abs(acc)
        vII += acc

    IV1_s: dict[int, complex] = {}
    vIV2 = 0j
    loc: dict[int, float] = {}
    fs = BoxSums(np.abs(fE.data) ** p)
    for Q in cz.bad_squares:
        t = group_index(Q, hc)
        if t < 1:
            continue
        b = cz.bad_parts[Q]
        s_side = Q.side
        fQ = max(fs.mean(Q), 0.0) ** (1.0 / p)
        # widest Delta^k window that fits, at least 3Q
        ks = [k for k in range(2, k_max + 1) if 2 * ((2**k - 1) * s_side // 2 + s_side) - 1 <= N]
        margin = max([(2**k - 1) * s_side // 2 for k in ks] + [s_side])
        for j in range(0, min(t - 1, jE) + 1):
            sigma = t - j
            w = 2.0 ** (-lam * j)
            sl = Q.slices()
            full = complex(np.vdot(Th[j][sl], b)) * dA
            rows, cols, out = _local_output(kernels[j], b, Q, margin)
            hw = h.data[np.ix_(rows, cols)]
            prod = out * np.conj(hw)
            c = margin - s_side
            local = complex(prod[c:c + 3 * s_side, c:c + 3 * s_side].sum()) * dA
            IV1_s[sigma] = IV1_s.get(sigma, 0j) + w * (full - local)
            vIV2 += w * local
            if fQ == 0:
                continue
            for k in ks:
                outer = (2**k - 1) * s_side // 2
                inner = (2 ** (k - 1) - 1) * s_side // 2
                o, i_ = margin - outer, margin - inner
                ring = prod[o:o + 2**k * s_side, o:o + 2**k * s_side].sum() - (
                    prod[i_:i_ + 2 ** (k - 1) * s_side, i_:i_ + 2 ** (k - 1) * s_side].sum())
                sq = dilate(Q, float(2**k))
                hk = max(hs.mean(sq), 0.0) ** (1.0 / q)
                if hk == 0:
                    continue
                norm = 2.0 ** (lam * j) * 2.0 ** (-sigma) * fQ * hk * Q.area * dA
                loc[k] = max(loc.get(k, 0.0), abs(complex(ring)) * dA / norm)

    IV1_by_sigma = {s: abs(v) for s, v in sorted(IV1_s.items())}
    signed = vI + vII + vIII + sum(IV1_s.values()) + vIV2
    scale = max(abs(lhs_c), abs(vI), 1e-300)
    return AuditReport(
        bench=float(bench),
        lhs=abs(lhs_c),
        I=abs(vI),
        II=float(sum(II_by_s.values())),
        II_by_s=II_by_s,
        III=abs(vIII),
        IV1=float(sum(IV1_by_sigma.values())),
        IV1_by_sigma=IV1_by_sigma,
        IV2=abs(vIV2),
        signed_error=abs(signed - lhs_c) / scale,
        jE=jE,
        n_bad=len(cz.bad_squares),
        localized=dict(sorted(loc.items())),
    )


SIGMA_FLOOR = 1e-12


def summarize_audits(reports: list[AuditReport], sigma_max: int = 4, floor: float = SIGMA_FLOOR) -> dict:
    """Corpus constants ``C_emp`` (max normalised term) and the ``IV1`` sigma table.

    The table holds ``max IV1(sigma) / bench`` over the corpus.  Entries below
    ``floor`` are at rounding level and are replaced by ``floor``, an upper
    bound, which can only flatten the fitted decay.
    """
    C = {k: 0.0 for k in ("I", "II", "III", "IV1", "IV2")}
    table = {s: 0.0 for s in range(1, sigma_max + 1)}
    for r in reports:
        for k, v in r.normalized().items():
            C[k] = max(C[k], v)
        if r.bench > 0:
            for s in table:
                table[s] = max(table[s], r.IV1_by_sigma.get(s, 0.0) / r.bench)
    clamped = {s: max(v, floor) for s, v in table.items()}
    slope = fit_log2_slope(list(clamped), list(clamped.values()))
    return {"C_emp": C, "sigma_table": table, "sigma_table_clamped": clamped,
            "sigma_below_floor": [s for s, v in table.items() if v < floor],
            "sigma_slope": slope, "floor": floor}


# ---------------------------------------------------------------- vector-valued check

def seeger_check(fj: dict[int, SampledField], p: float) -> dict:
    """``||sum_j T_j f_j||_p`` against ``(sum_j 2**(p lam_p j) ||f_j||_p**p)**(1/p)`` with ``lam = lam_p``.

    Only the ratio is reported; its size is not asserted.
    """
    if not 1 <= p < 4 / 3:
        raise ValueError("the vector-valued inequality needs 1 <= p < 4/3")
    lam = float(lambda_of_p(p))
    items = sorted(fj.items())
    if not items:
        raise ValueError("no f_j given")
    f0 = items[0][1]
    acc = np.zeros_like(f0.data)
    rhs = []
    for j, f in items:
        if j < 1:
            raise ValueError("indices j start at 1")
        m = symbol_grid(SymbolSpec(lam, "annular", j), f.N, f.L)
        acc += apply_raw(m, f.data)
        rhs.append(2.0 ** (p * lam * j) * lp_norm(f, p) ** p)
    lhs = lp_norm(f0.like(acc), p)
    R = math.fsum(rhs) ** (1.0 / p)
    return {"p": p, "lambda_p": lam, "lhs": lhs, "rhs": R, "ratio": lhs / R if R > 0 else math.inf,
            "js": [j for j, _ in items], "N": f0.N, "L": f0.L}
