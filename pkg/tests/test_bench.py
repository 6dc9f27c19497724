import csv
import io
import math

import numpy as np
import pytest

from brlab.bench import (FAMILIES, GrowthTable, family_fields, kernel_l1, kernel_l1_growth, nearest_lattice_frequency,
                         norm_growth, norm_probe, p2_check, probe_grid, probe_ratios)
from brlab.field import SampledField, lp_norm, random_patch
from brlab.symbol import SymbolSpec, apply_raw, symbol_grid


class TestKernelL1:
    @pytest.mark.parametrize("j", [1, 3, 5])
    def test_mean_zero(self, j):
        N, L = probe_grid(j)
        tau = np.fft.ifft2(symbol_grid(SymbolSpec(0.5, "annular", j), N, L))
        # h^2 sum tau = m(0) = 0
        assert abs(tau.sum()) <= 1e-12 * np.abs(tau).sum()

    @pytest.mark.parametrize("j", [2, 4])
    def test_young(self, j):
        N, L = probe_grid(j)
        m = symbol_grid(SymbolSpec(0.5, "annular", j), N, L)
        K = kernel_l1(j)
        for seed in range(3):
            f = random_patch(N, L, 6.0, seed)
            Tf = f.like(apply_raw(m, f.data))
            assert lp_norm(Tf, 1) <= K * lp_norm(f, 1) * (1 + 1e-10)

    def test_table(self):
        tab = kernel_l1_growth(range(2, 5))
        assert [j for j, _ in tab.rows] == [2, 3, 4] and tab.p == 1.0
        assert all(b > a for (_, a), (_, b) in zip(tab.rows, tab.rows[1:]))
        with pytest.raises(ValueError):
            kernel_l1_growth([-1, 2])


class TestProbes:
    def test_grid(self):
        assert probe_grid(2) == (256, 64.0)
        assert probe_grid(4) == (512, 128.0)
        with pytest.raises(ValueError):
            probe_grid(2, h=0.3)

    def test_lattice_frequency(self):
        k1, k2 = nearest_lattice_frequency(0.9, 64.0)
        assert abs(math.hypot(k1, k2) / 64.0 - 0.9) <= 0.5 / 64.0

    def test_families(self):
        N, L = probe_grid(3)
        assert set(family_fields("knapp", 3, N, L, 0.25)) == {f"plate_{m}" for m in range(5)} | {"plane_wave"}
        with pytest.raises(ValueError):
            family_fields("gauss", 3, N, L, 0.25)
        with pytest.raises(ValueError):
            norm_probe(3, 2.5)

    @pytest.mark.parametrize("j", [2, 4])
    def test_p2_matches_symbol_sup(self, j):
        out = p2_check(j)
        assert out["probe"] <= out["symbol_sup"] * (1 + 1e-9)
        assert out["relative_gap"] <= 0.01

    def test_probes_are_lower_bounds_at_p2(self):
        from brlab.symbol import symbol_peak
        sup = symbol_peak(SymbolSpec(0.25, "annular", 3))[1]
        for family in FAMILIES:
            assert max(probe_ratios(3, 2.0, family, lam=0.25).values()) <= sup * (1 + 1e-9)

    @pytest.mark.parametrize("j", [4, 5])
    def test_random_below_knapp(self, j):
        p = 8 / 7
        assert norm_probe(j, p, "random") <= 1.1 * norm_probe(j, p, "knapp")

    @pytest.mark.slow
    def test_endpoint_growth_is_slow(self):
        tab = norm_growth(4 / 3, range(2, 7))
        js = [j for j, _ in tab.rows]
        slope = np.polyfit(np.log2(js), np.log2([v for _, v in tab.rows]), 1)[0]
        assert slope <= 0.15


class TestGrowthTable:
    def test_slope_and_csv(self):
        tab = GrowthTable(1.0, 0.5, "kernel", [(2, 4.0), (3, 8.0), (4, 16.0)])
        assert tab.slope == pytest.approx(1.0)
        rows = list(csv.reader(io.StringIO(tab.to_csv())))
        assert rows[0] == ["p", "lambda", "family", "j", "estimate"]
        assert rows[2] == ["1.0", "0.5", "kernel", "3", "8.0"]
        assert tab.to_dict()["rows"][0] == {"j": 2, "estimate": 4.0}
