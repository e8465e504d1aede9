"""Rankin-Cohen brackets of q-expansions and the projected bracket of a mock form.

All derivatives are theta = q d/dq, so the (2 pi i)^-nu normalisation of the
bracket disappears and exact inputs give exact outputs.  Weights may be negative
(the holomorphic part of a weight 2-k harmonic form), which is why the binomials
are the falling-factorial kind shared with :mod:`scv.shiftconv`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import FormSpec
from .poincare import SumControl
from .qalg import QSeries, add, mul, scale, theta_derivative
from .shiftconv import CONVOLUTION_CONTROL, ConvolutionValue, alpha_coeff, binomial, smoothed_sum

__all__ = [
    "WeightedSeries",
    "GPolyParams",
    "rc_bracket",
    "g_poly",
    "ProjectedBracket",
    "projected_bracket",
]


@dataclass(frozen=True)
class WeightedSeries:
    series: QSeries
    weight: int


@dataclass(frozen=True)
class GPolyParams:
    a: int
    b: int

    def __post_init__(self):
        if self.a < 2:
            raise ValueError(f"G_(a,b) needs a >= 2, got a={self.a}")
        if self.b < 0:
            raise ValueError(f"G_(a,b) needs b >= 0, got b={self.b}")


def _theta_power(s: QSeries, j: int) -> QSeries:
    for _ in range(j):
        s = theta_derivative(s)
    return s


def rc_bracket(f: WeightedSeries, g: WeightedSeries, nu: int) -> WeightedSeries:
    """[f, g]_nu = sum_mu (-1)^mu C(k+nu-1, nu-mu) C(l+nu-1, mu) theta^mu f theta^(nu-mu) g."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    fs, gs = f.series, g.series
    if fs.exact != gs.exact:
        raise ValueError("bracket inputs must share a coefficient mode")
    k, l = f.weight, g.weight
    total = None
    for mu in range(nu + 1):
        c = (-1) ** mu * binomial(k + nu - 1, nu - mu) * binomial(l + nu - 1, mu)
        if not c:
            continue
        term = scale(mul(_theta_power(fs, mu), _theta_power(gs, nu - mu)), c if fs.exact else float(c))
        total = term if total is None else add(total, term)
    if total is None:
        nmax = min(fs.nmax + gs.start, gs.nmax + fs.start)
        total = QSeries.zero(nmax, start=fs.start + gs.start, exact=fs.exact)
    return WeightedSeries(total, k + l + 2 * nu)


def g_poly(p: GPolyParams, X, Y):
    """G_(a,b)(X, Y) = sum_j (-1)^j C(a+b-3, a-2-j) C(j+b-2, j) X^(a-2-j) Y^j."""
    a, b = p.a, p.b
    exact = all(isinstance(v, (int, Fraction)) for v in (X, Y))
    total = 0 if exact else 0.0
    for j in range(a - 1):
        c = (-1) ** j * binomial(a + b - 3, a - 2 - j) * binomial(j + b - 2, j)
        if c:
            total += c * X ** (a - 2 - j) * Y**j
    return total


def _g_poly_array(p: GPolyParams, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(X)
    for j in range(p.a - 1):
        c = (-1) ** j * binomial(p.a + p.b - 3, p.a - 2 - j) * binomial(j + p.b - 2, j)
        if c:
            out += c * X ** (p.a - 2 - j) * Y**j
    return out


@dataclass
class ProjectedBracket:
    """[M+, f2]_nu - (k1-2)! sum_h q^h S_h, with the smoothed sums S_h kept alongside."""

    series: QSeries
    bracket: WeightedSeries
    inner: list[ConvolutionValue]
    factorial: int


def projected_bracket(
    mplus: WeightedSeries,
    f2: FormSpec,
    f1: FormSpec,
    nu: int,
    hmax: int,
    terms: int,
    control: SumControl | None = None,
) -> ProjectedBracket:
    """Holomorphic projection of [M_f1, f2]_nu from M+ and the coefficients of f1, f2.

    The inner double sum is evaluated directly from the G-polynomial formula (not
    through :func:`scv.shiftconv.dhat_nu`), with the same smoothing of partial sums.
    The polynomial G_(2 nu - k1 + k2 + 2, k1 - mu) needs a first index of at least 2,
    which together with nu <= (k1 - k2)/2 pins nu to (k1 - k2)/2.
    """
    k1, k2 = f1.weight, f2.weight
    if mplus.weight != 2 - k1:
        raise ValueError(f"M+ should have weight {2 - k1}, got {mplus.weight}")
    if nu < 0 or 2 * nu > k1 - k2:
        raise ValueError(f"nu={nu} outside 0..(k1-k2)/2")
    a = 2 * nu - k1 + k2 + 2
    if a < 2:
        raise ValueError(f"G polynomial index a={a} < 2; the formula needs nu = (k1-k2)/2")
    control = control or CONVOLUTION_CONTROL
    if hmax < 1 or terms < 10 * hmax:
        raise ValueError("need hmax >= 1 and terms >= 10*hmax")

    top = mplus.series.nmax + 1
    f2_series = f2.coefficients(max(top, hmax) + 1)
    ms = mplus.series if not mplus.series.exact else mplus.series.to_float()
    bracket = rc_bracket(WeightedSeries(ms, mplus.weight), WeightedSeries(f2_series, k2), nu)

    lam1 = f1.normalized(terms + hmax)
    lam2 = f2.normalized(terms + hmax)
    n = np.arange(1, terms + 1, dtype=np.float64)
    alphas = [alpha_coeff(nu, k1, k2, mu) for mu in range(nu + 1)]
    inner = []
    for h in range(1, hmax + 1):
        # a2(n+h) a1(n) = lam2(n+h) lam1(n) (n+h)^((k2-1)/2) n^((k1-1)/2); every power is
        # rewritten as a ratio r = n/(n+h) so the terms stay O(1)
        r = n / (n + h)
        base = lam2[h + 1 : terms + h + 1] * lam1[1 : terms + 1]
        bracket_h = np.zeros(terms)
        for mu, al in enumerate(alphas):
            if not al:
                continue
            G = _g_poly_array(GPolyParams(a, k1 - mu), np.ones(terms), r)
            # (n+h)^(-nu-k2+1) G(n+h, n) and n^(mu-k1+1) (n+h)^(nu-mu), scaled by the
            # half-integral powers above; homogeneity of G puts (n+h)^(a-2) in front
            first = r ** ((k1 - 1) / 2.0) * G
            second = r ** ((k1 - 1) / 2.0 + mu - k1 + 1)
            # both sides carry (n+h)^(k2/2 - k1/2 + nu) = 1 at nu = (k1-k2)/2
            bracket_h += al * (first - second)
        b = base * bracket_h
        value, tail = smoothed_sum(b, control)
        inner.append(ConvolutionValue(value, tail, terms, bool(tail <= control.tol)))

    fact = 1
    for i in range(2, k1 - 1):
        fact *= i
    corr = QSeries(1, np.array([-float(fact) * v.value for v in inner]), hmax, exact=False)
    nmax = min(bracket.series.nmax, hmax)
    total = add(bracket.series.truncate(nmax) if bracket.series.nmax > nmax else bracket.series, corr.truncate(nmax))
    return ProjectedBracket(total, bracket, inner, fact)
