from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brlab.corpus import corpus_f
from brlab.field import SampledField, gaussian_bump
from brlab.weights import (brute_force_characteristics, characteristics, power_weight, quantitative_rhs,
                           rho_threshold, strong_quotient, weak_quotient, weight_profile, weighted_weak_quotient)


class TestCharacteristics:
    @given(st.integers(0, 2**32 - 1), st.sampled_from([1.5, 2.0, 8.0]))
    def test_against_brute_force(self, seed, rho):
        w = np.exp(np.random.default_rng(seed).normal(size=(8, 8)))
        fast = characteristics(w, rho)
        slow = brute_force_characteristics(w, rho)
        assert fast == pytest.approx(slow, rel=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.0])
    def test_power_weight_against_brute_force(self, a):
        pr = power_weight(a, 16, 8.0, 2.0)
        assert (pr.a1, pr.rh, pr.ainf) == pytest.approx(brute_force_characteristics(pr.w.data.real, 2.0), rel=1e-12)

    @pytest.mark.parametrize("c", [1.0, 3.7, 1e-3])
    def test_constant_weights_are_exactly_one(self, c):
        assert characteristics(np.full((32, 32), c), 8.0) == (1.0, 1.0, 1.0)

    def test_unit_power(self):
        pr = power_weight(0.0, 64, 32.0, 8.0)
        assert (pr.a1, pr.rh, pr.ainf) == (1.0, 1.0, 1.0)

    def test_monotone_in_a(self):
        assert power_weight(1.0, 64, 32.0).a1 >= power_weight(0.5, 64, 32.0).a1

    @pytest.mark.parametrize("rho", [2.0, 8.0])
    def test_monotone_under_refinement(self, rho):
        prev = None
        for N in (32, 64, 128):
            pr = power_weight(0.5, N, 16.0, rho)
            cur = (pr.a1, pr.rh, pr.ainf)
            if prev is not None:
                assert all(c >= p * (1 - 1e-12) for c, p in zip(cur, prev))
            prev = cur

    def test_at_least_one(self):
        w = np.random.default_rng(0).random((16, 16)) + 0.1
        assert all(v >= 1 for v in characteristics(w, 2.0))

    def test_errors(self):
        with pytest.raises(ValueError, match="not an A1 weight"):
            power_weight(2.0, 16, 8.0)
        with pytest.raises(ValueError):
            power_weight(-0.5, 16, 8.0)
        with pytest.raises(ValueError):
            characteristics(np.zeros((4, 4)), 2.0)


class TestThreshold:
    def test_quarter(self):
        assert rho_threshold(Fraction(1, 4)) == 7
        assert rho_threshold(0.25) == pytest.approx(7.0)

    def test_limit_and_monotone(self):
        assert rho_threshold(0.5 - 1e-12) == pytest.approx(4.0)
        lams = np.linspace(0.01, 0.49, 50)
        vals = [rho_threshold(l) for l in lams]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestQuotient:
    N, L = 128, 64.0

    def test_unit_weight_is_unweighted(self):
        f = corpus_f(self.N, self.L)["random_2"]
        pr = power_weight(0.0, self.N, self.L, 8.0)
        assert weighted_weak_quotient(f, 0.25, pr) == weak_quotient(f, 0.25)

    @given(st.floats(1e-3, 1e3), st.floats(0, 6.2))
    def test_homogeneous(self, a, phase):
        f = gaussian_bump(64, 32.0, 1.0)
        pr = power_weight(0.5, 64, 32.0)
        base = weighted_weak_quotient(f, 0.25, pr)
        assert weighted_weak_quotient((a * np.exp(1j * phase)) * f, 0.25, pr) == pytest.approx(base, rel=1e-12)

    def test_below_strong(self):
        pr = power_weight(0.5, self.N, self.L, 8.0)
        for f in corpus_f(self.N, self.L).values():
            assert weighted_weak_quotient(f, 0.25, pr) <= strong_quotient(f, 0.25, pr) * (1 + 1e-12)

    def test_margin(self):
        pr = power_weight(0.5, self.N, self.L, 8.0)
        F = corpus_f(self.N, self.L)
        names = [n for n in F if n.startswith(("gauss", "spikes", "cell", "ind"))]
        worst = max(weighted_weak_quotient(F[n], 0.25, pr) for n in names)
        assert worst <= 10 * quantitative_rhs(pr, 0.25)

    def test_errors(self):
        f = SampledField(np.zeros((16, 16)), 8.0)
        with pytest.raises(ValueError):
            weighted_weak_quotient(f, 0.25)
        g = gaussian_bump(16, 8.0, 1.0)
        with pytest.raises(ValueError):
            weighted_weak_quotient(g, 0.25, power_weight(0.5, 32, 8.0))

    def test_profile_from_field(self):
        w = SampledField(np.full((8, 8), 2.0 + 0j), 4.0)
        pr = weight_profile(w, 3.0)
        assert pr.to_dict()["a1"] == 1.0 and not np.any(pr.w.data.imag)
