"""Fourier coefficients of the Poincare series P(m,k,N) and of the holomorphic part of
the Maass-Poincare series Q(-m,k,N).

Both are Kloosterman sums weighted by Bessel functions, summed over moduli
c = N, 2N, 3N, ...  The sum stops once a tail estimate drops below the requested
tolerance.  The estimate combines the Weil bound for |K(m,n,c)| with
|J_nu(y)| <= (y/2)^nu / nu! and I_nu(y) <= (y/2)^nu / nu! * exp(y^2/4).  It is an
estimate, not a certificate: the divisor-sum tail is replaced by its integral.

``qplus_coeff`` uses the normalisation whose principal part is exactly q^-m,
i.e. the holomorphic part of Q(-m,k,N) divided by (k-1)!.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qalg import QSeries
from .specialfun import bessel_i, bessel_j, kloosterman_batch

__all__ = [
    "SumControl",
    "PoincareSpec",
    "CoefficientEstimate",
    "TruncationWarning",
    "cusp_coeff",
    "cusp_coeffs",
    "qplus_coeff",
    "qplus_coeffs",
    "qplus_series",
    "petersson_beta",
    "LiftResult",
    "lift_to_basis",
]


class TruncationWarning(RuntimeWarning):
    """A Kloosterman-Bessel sum hit c_max before its tail bound reached tol."""


@dataclass(frozen=True)
class SumControl:
    """Truncation policy for the infinite sums.

    ``c_max`` caps the Kloosterman modulus, ``tol`` is the target accuracy,
    ``max_terms`` bounds any n-sum and ``tail_window`` is the averaging window
    used for conditionally convergent series.
    """

    c_max: int = 100_000
    tol: float = 1e-8
    max_terms: int = 20_000_000
    tail_window: int = 0
    smoothing: int = 3

    def __post_init__(self):
        if self.c_max < 1:
            raise ValueError("c_max must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tail_window < 0:
            raise ValueError("tail_window must be nonnegative (0 selects the default)")
        if self.smoothing < 1:
            raise ValueError("smoothing must be at least 1")


@dataclass(frozen=True)
class PoincareSpec:
    m: int
    k: int
    N: int = 1
    control: SumControl = field(default_factory=SumControl)

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError(f"weight must be even and >= 2, got {self.k}")
        if self.m < 1 or self.N < 1:
            raise ValueError("m and N must be positive")
        if self.control.c_max < self.N:
            raise ValueError("c_max must be at least the level N")


@dataclass(frozen=True)
class CoefficientEstimate:
    value: float
    tail_estimate: float
    c_used: int
    converged: bool


_EULER_GAMMA = 0.5772156649015329


def _divisor_count(n: int) -> int:
    count = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            count += 1 if d * d == n else 2
        d += 1
    return count


def _tail_estimate(amp: np.ndarray, nu: int, N: int, C: int, gcds: np.ndarray, growth=None) -> np.ndarray:
    """Estimate of sum_{c > C, N | c} |K(c)|/c * (amp/c)^nu / nu! under the Weil bound.

    |K(m,n,c)| <= d(c) sqrt(gcd(m,n,c)) sqrt(c), d(jN) <= d(j) d(N), and
    sum_{j>J} d(j) j^-s is replaced by its integral J^(1-s) ((ln J + 2 gamma)/(s-1) + 1/(s-1)^2).
    A factor 2 covers the gap between the sum and the integral at moderate J.
    """
    J = max(C // N, 1)
    s = nu + 0.5
    dsum = J ** (1.0 - s) * ((math.log(J) + 2 * _EULER_GAMMA) / (s - 1.0) + 1.0 / (s - 1.0) ** 2)
    logb = nu * np.log(amp) - s * math.log(N) - math.lgamma(nu + 1)
    out = 2.0 * _divisor_count(N) * np.sqrt(gcds) * np.exp(logb) * dsum
    if growth is not None:
        out = out * growth
    return out


def _kloosterman_bessel_sum(
    spec: PoincareSpec, m_arg: int, ns: np.ndarray, kind: str
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """sum_{c = N, 2N, ...} K(m_arg, n, c)/c * Bessel_{k-1}(4 pi sqrt(m n)/c) for each n.

    Returns (partial sums, tail bounds, last c, converged).  The caller rescales;
    ``scale`` is applied to the tail bound so the stopping test is relative to
    the final coefficient.
    """
    nu = spec.k - 1
    ctl = spec.control
    X = 4.0 * np.pi * np.sqrt(spec.m * ns.astype(np.float64))
    bess = bessel_j if kind == "J" else bessel_i
    total = np.zeros(len(ns))
    gcds = np.gcd(abs(m_arg), ns).astype(np.float64)
    c = 0
    converged = False
    tail = np.full(len(ns), np.inf)
    check_every = 8
    steps = 0
    while c + spec.N <= ctl.c_max:
        c += spec.N
        K = kloosterman_batch(m_arg, ns, c)
        total += K / c * bess(nu, X / c)
        steps += 1
        if steps % check_every == 0 or c + spec.N > ctl.c_max:
            growth = np.exp((X / c) ** 2 / 4.0) if kind == "I" else None
            tail = _tail_estimate(X / 2.0, nu, spec.N, c, gcds, growth)
            yield_scale = _scale(spec, ns, kind)
            if np.all(np.abs(yield_scale) * tail <= ctl.tol * np.maximum(1.0, np.abs(yield_scale * total))):
                converged = True
                break
    return total, tail, c, converged


def _scale(spec: PoincareSpec, ns: np.ndarray, kind: str) -> np.ndarray:
    ratio = ns.astype(np.float64) / spec.m
    sign = (-1) ** (spec.k // 2)
    if kind == "J":
        return 2.0 * np.pi * sign * ratio ** ((spec.k - 1) / 2.0)
    return -2.0 * np.pi * sign * ratio ** ((1 - spec.k) / 2.0)


def _warn(what: str, spec: PoincareSpec, c: int) -> None:
    warnings.warn(
        f"{what} for (m,k,N)=({spec.m},{spec.k},{spec.N}) stopped at c={c} before reaching tol={spec.control.tol}",
        TruncationWarning,
        stacklevel=3,
    )


def cusp_coeffs(spec: PoincareSpec, ns: Sequence[int]) -> list[CoefficientEstimate]:
    """Full coefficients of q^n in P(m,k,N), Kronecker term included."""
    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns < 1):
        raise ValueError("cusp coefficients are defined for n >= 1")
    total, tail, c, ok = _kloosterman_bessel_sum(spec, spec.m, ns, "J")
    sc = _scale(spec, ns, "J")
    values = sc * total + (ns == spec.m)
    if not ok:
        _warn("cusp coefficient", spec, c)
    return [CoefficientEstimate(float(v), float(abs(s) * t), c, ok) for v, s, t in zip(values, sc, tail)]


def cusp_coeff(spec: PoincareSpec, n: int) -> float:
    return cusp_coeffs(spec, [n])[0].value


def petersson_beta(spec: PoincareSpec) -> float:
    """Coefficient of q^m in P(m,k,N)."""
    return cusp_coeff(spec, spec.m)


def _qplus_constant(spec: PoincareSpec) -> CoefficientEstimate:
    k, m, N, ctl = spec.k, spec.m, spec.N, spec.control
    pref = -((2 * np.pi) ** k) * (-1) ** (k // 2) * m ** (k - 1) / math.factorial(k - 1)
    total = 0.0
    c = 0
    tail = np.inf
    ok = False
    while c + N <= ctl.c_max:
        c += N
        total += kloosterman_batch(-m, [0], c)[0] / c**k
        J = c // N
        # |K(-m,0,c)| is a Ramanujan sum, bounded by gcd(m, c) <= m
        tail = abs(pref) * m * ((J + 1.0) ** (-k) + J ** (1.0 - k) / (k - 1)) / N**k
        if tail <= ctl.tol * max(1.0, abs(pref * total)):
            ok = True
            break
    if not ok:
        _warn("constant term of Q+", spec, c)
    return CoefficientEstimate(float(pref * total), float(tail), c, ok)


def qplus_coeffs(spec: PoincareSpec, ns: Sequence[int]) -> list[CoefficientEstimate]:
    """Coefficients of q^n (n >= -m) in the normalised holomorphic part Q+ = q^-m + O(1)."""
    ns = list(int(n) for n in ns)
    out: dict[int, CoefficientEstimate] = {}
    pos = np.array([n for n in ns if n > 0], dtype=np.int64)
    if pos.size:
        total, tail, c, ok = _kloosterman_bessel_sum(spec, -spec.m, pos, "I")
        sc = _scale(spec, pos, "I")
        if not ok:
            _warn("Q+ coefficient", spec, c)
        for n, v, s, t in zip(pos, sc * total, sc, tail):
            out[int(n)] = CoefficientEstimate(float(v), float(abs(s) * t), c, ok)
    if 0 in ns:
        out[0] = _qplus_constant(spec)
    for n in ns:
        if n < 0:
            if n < -spec.m:
                raise ValueError(f"Q+ has no terms below q^-{spec.m}")
            out[n] = CoefficientEstimate(1.0 if n == -spec.m else 0.0, 0.0, 0, True)
    return [out[n] for n in ns]


def qplus_coeff(spec: PoincareSpec, n: int) -> float:
    if n < 0 and n != -spec.m:
        raise ValueError("only the principal term q^-m and n >= 0 belong to the holomorphic part")
    return qplus_coeffs(spec, [n])[0].value


def qplus_series(spec: PoincareSpec, nmax: int) -> tuple[QSeries, np.ndarray]:
    """Normalised Q+ from q^-m to q^nmax, with per-coefficient error bounds."""
    ns = list(range(-spec.m, nmax + 1))
    est = qplus_coeffs(spec, ns)
    vals = np.array([e.value for e in est])
    errs = np.array([e.tail_estimate for e in est])
    return QSeries(-spec.m, vals, nmax, exact=False), errs


@dataclass
class LiftResult:
    series: QSeries
    coefficients: np.ndarray
    residual: float
    probes: np.ndarray


def lift_to_basis(spec: PoincareSpec, basis: Sequence[QSeries], probe_count: int, check_count: int = 0) -> LiftResult:
    """Express P(m,k,N) in a cusp-form basis by matching its first probe_count coefficients.

    The fit is least squares when probe_count exceeds the basis size.  The residual
    is the largest relative mismatch on the fitted probes, plus ``check_count``
    further coefficients that are not used in the fit.
    """
    dim = len(basis)
    if probe_count < dim:
        raise ValueError(f"need at least {dim} probes for a {dim}-dimensional basis")
    total_probes = probe_count + check_count
    for b in basis:
        if b.nmax < total_probes:
            raise ValueError("basis series are truncated below the probe range")
    est = cusp_coeffs(spec, range(1, total_probes + 1))
    target = np.array([e.value for e in est])
    A = np.array([[float(b[n]) for b in basis] for n in range(1, total_probes + 1)])
    rows = slice(0, probe_count)
    weight = 1.0 / np.maximum(np.abs(target[rows]), np.abs(A[rows]).max(axis=1))
    weight[~np.isfinite(weight)] = 1.0
    Aw = A[rows] * weight[:, None]
    if np.linalg.matrix_rank(Aw) < dim:
        raise ValueError("probe matrix is rank deficient; basis does not determine the lift")
    coef, *_ = np.linalg.lstsq(Aw, target[rows] * weight, rcond=None)
    fitted = A @ coef
    scale_ = np.maximum(1.0, np.abs(target))
    residual = float(np.max(np.abs(fitted - target) / scale_))
    if residual > 10 * spec.control.tol + 10 * max(e.tail_estimate for e in est):
        warnings.warn(f"lift residual {residual:.3g} exceeds tolerance", TruncationWarning, stacklevel=2)
    nmax = min(b.nmax for b in basis)
    start = min(b.start for b in basis)
    arr = np.zeros(nmax - start + 1)
    for c_i, b in zip(coef, basis):
        arr[b.start - start :] += c_i * b.to_array(b.start, nmax)
    return LiftResult(QSeries(start, arr, nmax, exact=False), coef, residual, target)
