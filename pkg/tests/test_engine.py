import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brlab.czd import cz_decompose
from brlab.dyadic import DyadicSquare, verify_sparse
from brlab.engine import (ETA, AuditReport, audit_terms, build_sparse, check_padding, fit_log2_slope,
                          recursive_step, root_square, seeger_check, sparse_collection, summarize_audits)
from brlab.field import SampledField, indicator, knapp_plate, random_patch
from brlab.symbol import IndexPack

PACK = IndexPack(0.25, 4.5)


def shifted(f, s):
    return f.like(np.roll(f.data, s, axis=(0, 1)))


class TestRecursiveStep:
    def test_constant(self):
        f = SampledField(np.full((64, 64), 3.0), 32.0)
        node = recursive_step(f, f, root_square(64), PACK, 4.5)
        assert node.children == []
        assert node.local_value == pytest.approx(3.0 * 3.0 * 32.0**2)

    def test_children_are_the_cz_bad_squares(self):
        N = 128
        d = np.zeros((N, N))
        d[40, 77] = 1e5
        d[90:94, 12:16] = 50.0
        f = SampledField(d, 32.0)
        E = root_square(N)
        node = recursive_step(f, None, E, PACK)
        assert node.children == cz_decompose(f, E, PACK.p).bad_squares
        assert 100 * sum(c.area for c in node.children) <= E.area

    def test_unit_scale_is_a_leaf(self):
        # side 4 cells at spacing 1/4 is physical side 1: no j with 2^j < 1
        d = np.zeros((16, 16))
        d[0, 0] = 1e9
        f = SampledField(d, 4.0)
        assert recursive_step(f, None, DyadicSquare(2, (0, 0)), PACK).children == []


class TestBuildSparse:
    def test_indicator_pair(self):
        f = indicator(256, 64.0, (0.0, 0.0), 4.0)
        rep = build_sparse(f, f, PACK, 4.5)
        assert verify_sparse(rep.collection, ETA).ok
        assert rep.collection.eta == ETA
        assert math.isfinite(rep.ratio) and rep.ratio > 0
        assert rep.ratio == pytest.approx(rep.pairing / rep.form)

    def test_root_term(self):
        f = random_patch(128, 64.0, 3.0, 1)
        h = random_patch(128, 64.0, 2.0, 2)
        rep = build_sparse(f, h, PACK, 4.5)
        # 3E wraps the whole periodic grid, so its averages are grid means
        fa = np.mean(np.abs(f.data) ** PACK.p) ** (1 / PACK.p)
        ha = np.mean(np.abs(h.data) ** 4.5) ** (1 / 4.5)
        assert rep.root_term == pytest.approx(fa * ha * 64.0**2, rel=1e-12)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0, 2 * math.pi))
    @settings(max_examples=10)
    def test_scaling_invariance(self, a, b, phase):
        f = random_patch(128, 64.0, 3.0, 5)
        h = random_patch(128, 64.0, 3.0, 6)
        base = build_sparse(f, h, PACK, 4.5).ratio
        rep = build_sparse(a * f, (b * np.exp(1j * phase)) * h, PACK, 4.5)
        assert rep.ratio == pytest.approx(base, rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_translation_invariance(self, k):
        N = 256
        f = random_patch(N, 64.0, 3.0, 7)
        h = indicator(N, 64.0, (-2.0, -2.0), 4.0)
        base = build_sparse(f, h, PACK, 4.5).ratio
        s = k * N // 8
        moved = build_sparse(shifted(f, s), shifted(h, s), PACK, 4.5).ratio
        assert moved == pytest.approx(base, rel=1e-10)

    def test_padding(self):
        f = random_patch(64, 32.0, 8.0, 0)
        with pytest.raises(ValueError, match="re-pad"):
            build_sparse(f, f, PACK, 4.5)
        check_padding(random_patch(256, 64.0, 2.0, 0))

    def test_q_range(self):
        f = indicator(128, 64.0, (0.0, 0.0), 2.0)
        with pytest.raises(ValueError, match="q must exceed 4"):
            build_sparse(f, f, PACK, 4.0)
        rep = build_sparse(f, f, IndexPack(0.1, 5.0), 5.0, check_range=False)
        assert math.isfinite(rep.ratio)


class TestRecursion:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=15)
    def test_structure(self, seed):
        rng = np.random.default_rng(seed)
        N = 128
        d = np.zeros((N, N), dtype=complex)
        d[48:80, 48:80] = rng.pareto(1.0, (32, 32)) * (rng.uniform(size=(32, 32)) < 0.2)
        f = SampledField(d, 32.0)
        S, nodes = sparse_collection(f, PACK)
        assert verify_sparse(S, ETA).ok
        assert max(n.depth for n in nodes) <= math.log2(N)
        for n in nodes:
            for c in n.children:
                assert c.side < n.square.side and n.square.contains(c)
            assert 100 * sum(c.area for c in n.children) <= n.square.area


def audit_report(**kw):
    base = dict(bench=1.0, lhs=0.0, I=0.0, II=0.0, II_by_s={}, III=0.0, IV1=0.0, IV1_by_sigma={}, IV2=0.0,
                signed_error=0.0, jE=4, n_bad=0)
    base.update(kw)
    return AuditReport(**base)


class TestAudit:
    def test_constant_field(self):
        f = SampledField(np.full((128, 128), 2.0), 32.0)
        rep = audit_terms(f, f, PACK, 4.5)
        assert rep.n_bad == 0
        assert rep.II == 0 and rep.III == 0 and rep.IV1 == 0 and rep.IV2 == 0
        assert rep.I == pytest.approx(rep.lhs)

    def test_terms_reassemble(self):
        N = 256
        rng = np.random.default_rng(2)
        d = np.zeros((N, N), dtype=complex)
        d[100:156, 100:156] = rng.pareto(1.0, (56, 56)) * (rng.uniform(size=(56, 56)) < 0.1)
        f = SampledField(d, 64.0)
        h = random_patch(N, 64.0, 6.0, 3)
        rep = audit_terms(f, h, PACK, 4.5)
        assert rep.n_bad > 0
        assert rep.signed_error <= 1e-10
        assert rep.triangle_ok
        assert rep.jE == 5

    def test_summary_clamps_below_floor(self):
        reps = [audit_report(IV1_by_sigma={1: 0.5, 2: 0.1, 3: 1e-20}, I=2.0),
                audit_report(bench=2.0, IV1_by_sigma={1: 0.4, 2: 0.3}, III=1.0)]
        out = summarize_audits(reps)
        assert out["C_emp"]["I"] == 2.0 and out["C_emp"]["III"] == 0.5
        assert out["sigma_table"] == {1: 0.5, 2: 0.15, 3: 1e-20, 4: 0.0}
        assert out["sigma_below_floor"] == [3, 4]
        assert out["sigma_table_clamped"][4] == out["floor"]
        ref = fit_log2_slope([1, 2, 3, 4], [0.5, 0.15, 1e-12, 1e-12])
        assert out["sigma_slope"] == pytest.approx(ref)

    def test_fit(self):
        assert fit_log2_slope([1, 2, 3], [2.0, 1.0, 0.5]) == pytest.approx(-1.0)
        assert fit_log2_slope([1, 2], [0.0, 1.0]) is None


class TestSeeger:
    def test_range(self):
        f = knapp_plate(128, 64.0, 2)
        with pytest.raises(ValueError):
            seeger_check({2: f}, 4 / 3)
        with pytest.raises(ValueError):
            seeger_check({0: f}, 1.1)
        assert math.isfinite(seeger_check({2: f}, 1.0)["ratio"])

    def test_single_term(self):
        from brlab.field import lp_norm
        from brlab.symbol import SymbolSpec, apply, lambda_of_p
        f = knapp_plate(256, 64.0, 3)
        p = 8 / 7
        out = seeger_check({3: f}, p)
        lam = float(lambda_of_p(p))
        Tf = apply(SymbolSpec(lam, "annular", 3), f)
        assert out["ratio"] == pytest.approx(lp_norm(Tf, p) / (2 ** (lam * 3) * lp_norm(f, p)), rel=1e-12)

    def test_refinement_stability(self):
        ratios = []
        for N in (256, 512):
            fj = {j: knapp_plate(N, 128.0, j) for j in (1, 2, 3, 4)}
            ratios.append(seeger_check(fj, 8 / 7)["ratio"])
        assert 0.5 <= ratios[1] / ratios[0] <= 2
