import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import falling_binomial
from scv.forms import FormSpec
from scv.poincare import SumControl
from scv.shiftconv import (
    ConditionalConvergenceError,
    ConvolutionRequest,
    alpha_coeff,
    beta_coeff,
    binomial,
    derived_series,
    dhat,
    dhat_nu,
    l_series,
    naive_dhat,
    smoothed_sum,
)

DELTA = FormSpec.eta(24, 1)
ETA83 = FormSpec.eta(8, 3)
DELTA2 = FormSpec.eta(48, 1)  # weight 24 on level one


class TestCoefficients:
    @given(st.integers(-30, 30), st.integers(0, 8))
    def test_binomial(self, x, j):
        assert binomial(x, j) == falling_binomial(x, j)

    @given(st.integers(0, 6), st.integers(2, 30), st.integers(2, 30), st.data())
    def test_alpha_against_oracle(self, nu, k1, k2, data):
        mu = data.draw(st.integers(0, nu))
        a = alpha_coeff(nu, k1, k2, mu)
        assert isinstance(a, int)
        assert a == falling_binomial(nu - k1 + 1, nu - mu) * falling_binomial(nu + k2 - 1, mu)

    def test_small_values(self):
        assert alpha_coeff(1, 12, 4, 0) == -10
        assert alpha_coeff(1, 12, 4, 1) == 4
        assert beta_coeff(0, 12, 12) == 1
        assert beta_coeff(1, 12, 4) == -6

    def test_mu_range(self):
        with pytest.raises(ValueError):
            alpha_coeff(2, 12, 4, 3)


class TestRequests:
    def test_weights_sorted(self):
        r = ConvolutionRequest(ETA83, DELTA, 1)
        assert (r.k1, r.k2, r.point) == (12, 4, 11.0)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            ConvolutionRequest(DELTA, DELTA, 0)
        with pytest.raises(ValueError):
            ConvolutionRequest(DELTA, DELTA, 1, nu=-1)
        with pytest.raises(ValueError):
            dhat(ConvolutionRequest(DELTA, DELTA, 5, terms=40))
        with pytest.raises(ValueError):
            dhat_nu(ConvolutionRequest(DELTA, ETA83, 1, nu=5, terms=100))

    def test_conditional_needs_opt_in(self):
        with pytest.raises(ConditionalConvergenceError):
            derived_series(ConvolutionRequest(DELTA, DELTA, 1, terms=1000))
        v = derived_series(ConvolutionRequest(DELTA, DELTA, 1, terms=1000, allow_conditional=True))
        assert math.isfinite(v.value)


class TestDerivedSeries:
    def test_brute_force_absolute_region(self):
        T, h, s = 1000, 2, 20.0
        req = ConvolutionRequest(DELTA, DELTA, h, s=s, terms=T)
        a = DELTA.table(T + h)
        for mu in (0, 1, 3):
            ref = sum(a[n + h] * a[n] * (n + h) ** mu / n**s for n in range(1, T + 1))
            assert derived_series(req, mu).value == pytest.approx(ref, rel=1e-12)

    def test_single_term(self):
        # s large enough that only n = 1 matters
        v = derived_series(ConvolutionRequest(DELTA, DELTA, 1, s=200.0, terms=10))
        assert v.value == pytest.approx(-24.0, rel=1e-12)
        assert v.converged

    def test_zero_form(self):
        z = FormSpec.zero(12, 1)
        assert dhat(ConvolutionRequest(z, DELTA, 3, terms=1000)).value == 0.0


class TestDhat:
    @pytest.mark.parametrize("h", [1, 2, 5])
    def test_paired_matches_naive(self, h):
        req = ConvolutionRequest(DELTA, DELTA, h, s=15.0, terms=10_000)
        assert dhat(req).value == pytest.approx(naive_dhat(req), rel=1e-10, abs=1e-12)

    def test_paired_matches_naive_unequal_weights(self):
        req = ConvolutionRequest(DELTA, ETA83, 2, s=12.0, terms=10_000)
        assert dhat(req).value == pytest.approx(naive_dhat(req), rel=1e-10)

    def test_nu_zero_agrees(self):
        req = ConvolutionRequest(DELTA, DELTA, 2, terms=20_000)
        assert dhat_nu(req).value == dhat(req).value

    def test_eta_3tau_vanishes_off_multiples_of_three(self):
        for h in (1, 2, 4, 5, 7):
            assert dhat(ConvolutionRequest(ETA83, ETA83, h, terms=10_000)).value == 0.0

    def test_records(self):
        res = l_series(DELTA, DELTA, 0, 3, 20_000)
        rec = json.loads(res.to_json())
        assert [r["h"] for r in rec] == [1, 2, 3]
        assert set(rec[0]) == {"h", "nu", "s", "value", "tail_estimate", "terms_used", "converged"}
        assert rec[0]["s"] == 11.0
        assert res.tails.shape == (3,)


class TestSmoothing:
    def test_alternating_series(self):
        n = np.arange(1, 200_001)
        b = (-1.0) ** (n + 1) / n
        v, tail = smoothed_sum(b, SumControl())
        assert abs(v - math.log(2)) < 1e-9
        assert abs(v - math.log(2)) <= tail

    def test_short_input(self):
        v, tail = smoothed_sum(np.ones(4), SumControl())
        assert v == 4.0 and tail == math.inf


@pytest.mark.slow
class TestStability:
    def test_doubling_terms_within_tail(self):
        a = l_series(DELTA, DELTA, 0, 3, 500_000)
        b = l_series(DELTA, DELTA, 0, 3, 1_000_000)
        for x, y in zip(a.values, b.values):
            assert abs(x.value - y.value) <= 3 * x.tail_estimate
