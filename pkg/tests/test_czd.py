import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brlab.czd import brute_force_bad, cz_decompose, cz_invariants, group_index, regroup
from brlab.dyadic import DyadicSquare
from brlab.field import SampledField, lp_norm


def heavy_field(seed, N=32, L=32.0, E=None):
    rng = np.random.default_rng(seed)
    data = rng.pareto(1.2, (N, N)) * np.exp(2j * np.pi * rng.uniform(size=(N, N)))
    data *= rng.uniform(size=(N, N)) < 0.3
    f = np.zeros((N, N), dtype=complex)
    E = E or DyadicSquare(N.bit_length() - 1, (0, 0))
    f[E.slices()] = data[E.slices()]
    return SampledField(f, L), E


class TestSelection:
    def test_constant_has_no_bad_squares(self):
        f = SampledField(np.full((32, 32), 2.5), 32.0)
        out = cz_decompose(f, DyadicSquare(5, (0, 0)), 8 / 7)
        assert out.bad_squares == [] and np.array_equal(out.good.data, f.data)

    def test_deep_spike(self):
        N = 32
        d = np.zeros((N, N))
        d[13, 6] = 1e6
        f = SampledField(d, 32.0)
        E = DyadicSquare(5, (0, 0))
        out = cz_decompose(f, E, 8 / 7)
        assert out.bad_squares == brute_force_bad(f, E, 8 / 7)
        (Q,) = out.bad_squares
        assert Q.contains(DyadicSquare(0, (13, 6)))
        # maximal: the parent no longer exceeds the level
        assert np.mean(np.abs(d[Q.parent().slices()]) ** (8 / 7)) <= 100 * np.mean(np.abs(d) ** (8 / 7))

    @given(st.integers(0, 2**32 - 1), st.floats(1.0, 1.33))
    def test_against_brute_force(self, seed, p):
        f, E = heavy_field(seed)
        assert cz_decompose(f, E, p).bad_squares == brute_force_bad(f, E, p)

    def test_subsquare_root(self):
        E = DyadicSquare(3, (1, 2))
        f, _ = heavy_field(4, E=E)
        out = cz_decompose(f, E, 1.1)
        assert all(E.contains(Q) for Q in out.bad_squares)
        assert out.bad_squares == brute_force_bad(f, E, 1.1)

    def test_determinism(self):
        f, E = heavy_field(9)
        a, b = cz_decompose(f, E, 8 / 7), cz_decompose(f, E, 8 / 7)
        assert a.bad_squares == b.bad_squares
        assert np.array_equal(a.good.data, b.good.data)


class TestInvariants:
    @given(st.integers(0, 2**32 - 1), st.floats(1.01, 1.33))
    def test_all_invariants(self, seed, p):
        f, E = heavy_field(seed)
        out = cz_decompose(f, E, p)
        rep = cz_invariants(out, f)
        assert rep["ok"], rep
        assert 100 * out.bad_area <= E.area

    @given(st.integers(0, 2**32 - 1), st.floats(1.01, 1.33))
    def test_mass(self, seed, p):
        # |f - <f>_Q|^p <= 2^(p-1) (|f|^p + |<f>_Q|^p) and Jensen give the constant 1 + 2^p
        f, E = heavy_field(seed)
        out = cz_decompose(f, E, p)
        lhs = lp_norm(out.good, p) ** p + sum(lp_norm(out.bad_field(Q), p) ** p for Q in out.bad_squares)
        assert lhs <= (1 + 2**p) * lp_norm(f, p) ** p * (1 + 1e-12)

    def test_reconstruction_is_exact(self):
        f, E = heavy_field(3)
        out = cz_decompose(f, E, 8 / 7)
        assert np.array_equal(out.good.data + out.bad_total().data, f.data)

    def test_constant(self):
        out = cz_decompose(SampledField(np.ones((16, 16)), 16.0), DyadicSquare(4, (0, 0)), 1.2)
        assert out.C_cz == pytest.approx(400 ** (1 / 1.2))
        assert out.level == pytest.approx(100 ** (1 / 1.2))


class TestRegroup:
    def test_single_square_side_eight(self):
        # |E| / |Q| = 256 > 100 but the parent only gives 64, so Q is the maximal bad square
        N, L = 128, 128.0
        rng = np.random.default_rng(0)
        d = np.zeros((N, N))
        d[8:16, 16:24] = 1 + rng.random((8, 8))
        f = SampledField(d, L)
        out = cz_decompose(f, DyadicSquare(7, (0, 0)), 8 / 7)
        assert out.bad_squares == [DyadicSquare(3, (1, 2))]
        assert list(out.groups) == [3]

    def test_group_index(self):
        assert group_index(DyadicSquare(3, (0, 0)), 0.5) == 2
        assert group_index(DyadicSquare(1, (0, 0)), 0.5) == 0
        assert group_index(DyadicSquare(0, (0, 0)), 0.25) == 0
        with pytest.raises(ValueError):
            group_index(DyadicSquare(0, (0, 0)), 0.3)

    @given(st.integers(0, 2**32 - 1))
    def test_groups_sum_and_disjoint(self, seed):
        f, E = heavy_field(seed, 64, 16.0)
        out = cz_decompose(f, E, 8 / 7)
        G = regroup(out)
        total = sum((g.data for g in G.values()), np.zeros_like(f.data))
        assert np.max(np.abs(total - out.bad_total().data), initial=0) <= 1e-12
        ts = list(G)
        for i, a in enumerate(ts):
            for b in ts[i + 1:]:
                assert not np.any(G[a].data * G[b].data)


class TestErrors:
    def test_single_cell_root(self):
        f = SampledField(np.zeros((8, 8)), 8.0)
        d = np.zeros((8, 8))
        d[2, 3] = 5.0
        f = f.like(d)
        out = cz_decompose(f, DyadicSquare(0, (2, 3)), 1.1)
        assert out.bad_squares == [] and np.array_equal(out.good.data, d)

    def test_support_outside_root(self):
        f = SampledField(np.ones((8, 8)), 8.0)
        with pytest.raises(ValueError, match="not supported"):
            cz_decompose(f, DyadicSquare(2, (0, 0)), 1.1)

    def test_parameters(self):
        f = SampledField(np.ones((8, 8)), 8.0)
        E = DyadicSquare(3, (0, 0))
        with pytest.raises(ValueError):
            cz_decompose(f, E, 0.5)
        with pytest.raises(ValueError):
            cz_decompose(f, E, 1.1, multiplier=1.0)
        with pytest.raises(ValueError):
            cz_decompose(f, DyadicSquare(4, (0, 0)), 1.1)

    def test_report(self):
        f, E = heavy_field(1)
        d = cz_decompose(f, E, 8 / 7).to_dict(h=1.0)
        assert d["bad_area_cells"] * 100 <= d["root_area_cells"]
        assert len(d["bad_squares"]) > 0
