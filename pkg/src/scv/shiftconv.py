"""Shifted convolution Dirichlet series and their symmetrised combinations.

Coefficients enter through the normalised values lambda(n) = a(n) n^((1-k)/2),
so every summand is lambda_1(n+h) lambda_2(n) n^E times a bracket in
x = log(1 + h/n).  For the symmetrised series the bracket is a difference of
exponentials in x, which is evaluated with expm1 so the O(h/n) cancellation
costs no precision.

At s = k1 - 1 the symmetrised series converge only conditionally.  Partial sums
are smoothed by repeated moving averages over a window at the end of the range
(a spline-weighted Cesaro mean).  The reported tail estimate is the largest
change of that smoothed value when the range is cut back to 50%..90%.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .forms import FormSpec
from .poincare import SumControl
from .qalg import QSeries

__all__ = [
    "ConvolutionRequest",
    "ConvolutionValue",
    "LSeriesResult",
    "derived_series",
    "dhat",
    "dhat_nu",
    "alpha_coeff",
    "beta_coeff",
    "binomial",
    "l_series",
    "naive_dhat",
    "smoothed_sum",
    "ConditionalConvergenceError",
    "CONVOLUTION_CONTROL",
]

# accuracy target for the conditionally convergent sums; Kloosterman sums run tighter
CONVOLUTION_CONTROL = SumControl(tol=1e-2)


class ConditionalConvergenceError(ValueError):
    """The requested point lies outside absolute convergence and no opt-in was given."""


def binomial(x: int, j: int) -> int:
    """Generalised binomial x(x-1)...(x-j+1)/j! for any integer x and j >= 0."""
    if j < 0:
        return 0
    num = 1
    for i in range(j):
        num *= x - i
    return num // math.factorial(j)


def alpha_coeff(nu: int, k1: int, k2: int, mu: int) -> int:
    if not 0 <= mu <= nu:
        raise ValueError("need 0 <= mu <= nu")
    return binomial(nu - k1 + 1, nu - mu) * binomial(nu + k2 - 1, mu)


def beta_coeff(nu: int, k1: int, k2: int) -> int:
    return sum(alpha_coeff(nu, k1, k2, mu) for mu in range(nu + 1))


@dataclass(frozen=True)
class ConvolutionRequest:
    f1: FormSpec
    f2: FormSpec
    h: int
    nu: int = 0
    s: float | None = None
    terms: int = 1_000_000
    control: SumControl = field(default_factory=lambda: CONVOLUTION_CONTROL)
    allow_conditional: bool = False

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("shift h must be positive")
        if self.terms < 1:
            raise ValueError("terms must be positive")
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")

    @property
    def k1(self) -> int:
        return max(self.f1.weight, self.f2.weight)

    @property
    def k2(self) -> int:
        return min(self.f1.weight, self.f2.weight)

    @property
    def point(self) -> float:
        return float(self.k1 - 1) if self.s is None else float(self.s)


@dataclass(frozen=True)
class ConvolutionValue:
    value: float
    tail_estimate: float
    terms_used: int
    converged: bool


# -- summation -------------------------------------------------------------------


def _window_mean(b: np.ndarray, window: int, passes: int) -> float:
    S = np.cumsum(b)
    for _ in range(passes):
        c = np.concatenate(([0.0], np.cumsum(S)))
        S = (c[window:] - c[:-window]) / window
    return float(S[-1])


def smoothed_sum(b: np.ndarray, control: SumControl) -> tuple[float, float]:
    """Window-averaged value of sum(b) and its tail estimate.

    The window is ``control.tail_window`` or len(b) // (2 * smoothing), so the
    averaging touches the last half of the range.  The same smoothing is applied
    to prefixes of 50%..90% of the range (window scaled alike); the estimate is the
    largest change seen.  One prefix alone can land on a node of the oscillating
    error, several cannot.
    """
    T = len(b)
    passes = control.smoothing
    window = control.tail_window or T // (2 * passes)
    if window < 2 or passes * window > T // 2:
        return float(b.sum()), float("inf") if T else 0.0
    full = _window_mean(b, window, passes)
    spread = 0.0
    for frac in _PREFIXES:
        sub = int(T * frac)
        spread = max(spread, abs(full - _window_mean(b[:sub], max(int(window * frac), 1), passes)))
    # a running sum of T floats can drift by T ulps of its largest magnitude
    floor = T * np.finfo(float).eps * max(float(np.abs(b).max()), abs(full))
    return full, float(spread + floor)


_PREFIXES = (0.5, 0.6, 0.7, 0.8, 0.9)


def _deligne_tail(T: int, h: int, exponent: float, scale: float) -> float:
    """Bound for sum_{n>T} d(n) d(n+h) n^exponent, with d(n) <= 2 sqrt(n) replaced by the log-square average."""
    if exponent >= -1.0:
        return float("inf")
    p = -1.0 - exponent
    L = math.log(T + h) + 1.0
    return scale * L**3 * T ** (-p) / p


def _tables(req: ConvolutionRequest, n_hi: int) -> tuple[np.ndarray, np.ndarray]:
    return req.f1.normalized(n_hi), req.f2.normalized(n_hi)


def _grid(req: ConvolutionRequest):
    T = req.terms
    lam1, lam2 = _tables(req, T + req.h)
    n = np.arange(1, T + 1, dtype=np.float64)
    x = np.log1p(req.h / n)
    base = lam1[req.h + 1 : T + req.h + 1] * lam2[1 : T + 1]
    return n, x, base


def _finish(b: np.ndarray, req: ConvolutionRequest, exponent: float, conditional: bool) -> ConvolutionValue:
    T = len(b)
    if not conditional:
        value = float(b.sum())
        tail = _deligne_tail(T, req.h, exponent, 1.0)
        if tail <= req.control.tol * max(1.0, abs(value)):
            return ConvolutionValue(value, tail, T, tail <= req.control.tol)
    value, tail = smoothed_sum(b, req.control)
    return ConvolutionValue(value, tail, T, bool(tail <= req.control.tol))


def derived_series(req: ConvolutionRequest, mu: int = 0) -> ConvolutionValue:
    """D^(mu)(f1, f2, h; s) = sum a1(n+h) a2(n) (n+h)^mu / n^s."""
    s = req.point
    ka, kb = req.f1.weight, req.f2.weight
    conditional = s <= (ka + kb) / 2.0 + mu
    if conditional and not req.allow_conditional:
        raise ConditionalConvergenceError(
            f"D^({mu}) at s={s} needs s > {(ka + kb) / 2 + mu}; pass allow_conditional=True"
        )
    n, x, base = _grid(req)
    E = (ka + kb) / 2.0 - 1.0 + mu - s
    b = base * np.exp(((ka - 1) / 2.0 + mu) * x + E * np.log(n))
    return _finish(b, req, E, conditional)


def _paired_summand(req: ConvolutionRequest, subtract: bool) -> tuple[np.ndarray, float]:
    """Per-n summand of sum_mu alpha_mu D^(nu-mu)(s-mu) - beta D^(0)(f2, f1, -h; s-nu)."""
    k1, k2, nu, s = req.k1, req.k2, req.nu, req.point
    ka, kb = req.f1.weight, req.f2.weight
    n, x, base = _grid(req)
    E = (ka + kb) / 2.0 - 1.0 + nu - s
    C = (ka - 1) / 2.0 + nu - s
    alphas = [alpha_coeff(nu, k1, k2, mu) for mu in range(nu + 1)]
    if subtract:
        # sum alpha_mu e^{(C + s - mu) x} - beta e^{C x} with beta = sum alpha_mu
        bracket = sum(a * np.expm1((s - mu) * x) for mu, a in enumerate(alphas) if a)
        bracket = np.exp(C * x) * bracket
    else:
        bracket = sum(a * np.exp((C + s - mu) * x) for mu, a in enumerate(alphas) if a)
    b = base * bracket
    if E:
        b = b * np.exp(E * np.log(n))
    # the bracket is O(x) when the subtraction is active, so the decay gains a power
    return b, E - (1.0 if subtract else 0.0)


def dhat(req: ConvolutionRequest) -> ConvolutionValue:
    """D-hat(f1, f2, h; s) = D(f1, f2, h; s) - [k1 = k2] D(f2, f1, -h; s), paired per n."""
    if req.nu != 0:
        raise ValueError("dhat is the nu = 0 series; use dhat_nu")
    if req.terms < 10 * req.h:
        raise ValueError(f"terms={req.terms} is below 10*h={10 * req.h}")
    subtract = req.f1.weight == req.f2.weight
    b, decay = _paired_summand(req, subtract)
    return _finish(b, req, decay, True)


def dhat_nu(req: ConvolutionRequest) -> ConvolutionValue:
    """D-hat^(nu) with every mu-component and the subtracted series combined before summing."""
    if req.terms < 10 * req.h:
        raise ValueError(f"terms={req.terms} is below 10*h={10 * req.h}")
    if 2 * req.nu > req.k1 - req.k2:
        raise ValueError(f"nu={req.nu} exceeds (k1-k2)/2 = {(req.k1 - req.k2) // 2}")
    b, decay = _paired_summand(req, True)
    return _finish(b, req, decay, True)


def naive_dhat(req: ConvolutionRequest) -> float:
    """Oracle: the two series of D-hat summed separately in plain integer-indexed loops."""
    k = req.f1.weight
    s = req.point
    T, h = req.terms, req.h
    a1 = req.f1.table(T + h)
    a2 = req.f2.table(T + h)
    first = 0.0
    for n in range(1, T + 1):
        first += a1[n + h] * a2[n] / float(n) ** s
    second = 0.0
    if k == req.f2.weight:
        # D(f2, f1, -h; s) = sum_{n > h} a2(n - h) a1(n) / n^s, cut at the same pair range
        for n in range(h + 1, T + h + 1):
            second += a2[n - h] * a1[n] / float(n) ** s
    return first - second


# -- generating function ---------------------------------------------------------------


@dataclass
class LSeriesResult:
    series: QSeries
    values: list[ConvolutionValue]
    nu: int
    s: float

    @property
    def converged(self) -> bool:
        return all(v.converged for v in self.values)

    @property
    def tails(self) -> np.ndarray:
        return np.array([v.tail_estimate for v in self.values])

    def records(self) -> list[dict]:
        return [
            {"h": h, "nu": self.nu, "s": self.s, **asdict(v)}
            for h, v in enumerate(self.values, start=self.series.start)
        ]

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=2)


def l_series(
    f1: FormSpec,
    f2: FormSpec,
    nu: int = 0,
    hmax: int = 10,
    terms: int = 1_000_000,
    control: SumControl | None = None,
) -> LSeriesResult:
    """Coefficients h = 1..hmax of sum_h D-hat^(nu)(f1, f2, h; k1 - 1) q^h."""
    if hmax < 1:
        raise ValueError("hmax must be at least 1")
    control = control or CONVOLUTION_CONTROL
    # load both tables once at the largest shift
    f1.normalized(terms + hmax)
    f2.normalized(terms + hmax)
    values = []
    for h in range(1, hmax + 1):
        req = ConvolutionRequest(f1, f2, h, nu, None, terms, control)
        values.append(dhat_nu(req) if nu else dhat(req))
    k1 = max(f1.weight, f2.weight)
    series = QSeries(1, np.array([v.value for v in values]), hmax, exact=False)
    return LSeriesResult(series, values, nu, float(k1 - 1))
