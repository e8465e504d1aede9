import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bessel_exact, bessel_mp, kloosterman_complex, ramanujan_sum
from scv.specialfun import (
    BesselQuery,
    KloostermanQuery,
    bessel,
    bessel_i,
    bessel_j,
    kloosterman,
    kloosterman_batch,
    units_and_inverses,
)


class TestKloosterman:
    def test_trivial_modulus(self):
        assert kloosterman(1, 1, 1) == 1.0

    def test_modulus_three(self):
        assert kloosterman(1, 1, 3) == pytest.approx(-1.0, abs=1e-12)

    def test_query_object(self):
        assert kloosterman(KloostermanQuery(2, 5, 7)) == pytest.approx(kloosterman(2, 5, 7))

    def test_bad_modulus(self):
        with pytest.raises(ValueError):
            KloostermanQuery(1, 1, 0)

    def test_brute_force_small_moduli(self):
        rng = np.random.default_rng(7)
        for c in range(1, 51):
            for m, n in rng.integers(-60, 60, size=(4, 2)):
                ref = kloosterman_complex(int(m), int(n), c)
                assert abs(ref.imag) < 1e-10
                assert kloosterman(int(m), int(n), c) == pytest.approx(ref.real, abs=1e-9)

    @pytest.mark.parametrize("c", [1, 2, 6, 9, 12, 30, 97])
    def test_ramanujan_sum(self, c):
        assert kloosterman(-1, 0, c) == pytest.approx(ramanujan_sum(c, 1), abs=1e-9)
        assert kloosterman(-4, 0, c) == pytest.approx(ramanujan_sum(c, 4), abs=1e-9)

    @given(st.integers(-500, 500), st.integers(-500, 500), st.integers(1, 200))
    @settings(max_examples=150)
    def test_symmetric(self, m, n, c):
        assert kloosterman(m, n, c) == pytest.approx(kloosterman(n, m, c), abs=1e-9)

    @given(st.integers(-500, 500), st.integers(-500, 500), st.integers(1, 200))
    @settings(max_examples=100)
    def test_periodic(self, m, n, c):
        assert kloosterman(m + c, n, c) == pytest.approx(kloosterman(m, n, c), abs=1e-9)

    @given(st.integers(-100, 100), st.integers(-100, 100), st.integers(1, 120))
    @settings(max_examples=100)
    def test_weil_bound(self, m, n, c):
        d = sum(1 for x in range(1, c + 1) if c % x == 0)
        g = math.gcd(math.gcd(m, n), c)
        assert abs(kloosterman(m, n, c)) <= d * math.sqrt(g * c) + 1e-9

    def test_batch_matches_scalar(self):
        ns = np.arange(-10, 30)
        got = kloosterman_batch(3, ns, 45)
        assert np.allclose(got, [kloosterman(3, int(n), 45) for n in ns], atol=1e-10)

    def test_inverses(self):
        for c in (2, 9, 64, 1001, 5000):
            v, vbar = units_and_inverses(c)
            assert np.all(v * vbar % c == 1)
            assert len(v) == sum(1 for x in range(c) if math.gcd(x, c) == 1)


class TestBessel:
    def test_zero_argument(self):
        assert bessel(11, 0.0) == 0.0
        assert bessel(0, 0.0) == 1.0

    def test_one_term_regime(self):
        x = 1e-3
        assert bessel(11, x) == pytest.approx((x / 2) ** 11 / math.factorial(11), rel=1e-12)

    def test_rational_series_oracle(self):
        x = Fraction(4 * math.pi)
        assert bessel(11, float(x)) == pytest.approx(bessel_exact(11, x), rel=1e-13)
        assert bessel(11, float(x), "I") == pytest.approx(bessel_exact(11, x, "I"), rel=1e-13)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            BesselQuery(-1, 1.0)
        with pytest.raises(ValueError):
            BesselQuery(1, -1.0)
        with pytest.raises(ValueError):
            BesselQuery(1, 1.0, "K")

    @pytest.mark.parametrize("order", [1, 3, 11, 23])
    def test_grid_against_mpmath(self, order):
        xs = np.logspace(-3, 2.3, 40)
        for kind, fn in (("J", bessel_j), ("I", bessel_i)):
            if kind == "I":
                xs_k = xs[xs < 120]
            else:
                xs_k = xs
            got = fn(order, xs_k)
            ref = np.array([bessel_mp(order, float(x), kind) for x in xs_k])
            scale = np.maximum(1.0, np.abs(ref)) if kind == "J" else np.abs(ref)
            assert np.all(np.abs(got - ref) <= 1e-12 * scale + 1e-300)

    def test_scalar_matches_vector(self):
        xs = [0.5, 3.0, 17.0, 60.0]
        assert np.allclose([bessel(5, x) for x in xs], bessel_j(5, xs), rtol=1e-14, atol=1e-16)
