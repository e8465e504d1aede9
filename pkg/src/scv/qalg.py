"""Truncated Laurent q-expansions and the classical modular objects built from them.

A :class:`QSeries` stores the coefficients of ``q^start, ..., q^nmax``.  Nothing is
known about exponents above ``nmax``; arithmetic propagates that bound instead of
padding with zeros.  Coefficients are either exact rationals (Python ``int`` or
``Fraction``) or IEEE doubles held in a numpy array, and the two modes never mix
implicitly.

Large exact products go through Kronecker substitution: both operands are packed
into one big integer, multiplied with GMP, and unpacked again.  That keeps the
weight-24 tables at 10**6 coefficients to a few seconds each.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2
import numpy as np

__all__ = [
    "QSeries",
    "ModeError",
    "add",
    "mul",
    "scale",
    "theta_derivative",
    "eta_power",
    "eisenstein",
    "bernoulli",
    "divisor_sum",
    "divisor_sums",
    "delta",
    "j_function",
    "r_series",
]

# below this many output coefficients, schoolbook multiplication wins
_KRONECKER_CUTOFF = 96


class ModeError(TypeError):
    """Raised when exact and float series meet without an explicit conversion."""


def _is_exact_number(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


class QSeries:
    """Laurent series ``sum_{n=start}^{nmax} c_n q^n + O(q^{nmax+1})``."""

    __slots__ = ("start", "nmax", "coeffs", "exact")

    def __init__(self, start: int, coeffs, nmax: int | None = None, exact: bool | None = None):
        start = int(start)
        if exact is None:
            exact = not isinstance(coeffs, np.ndarray)
        if nmax is None:
            nmax = start + len(coeffs) - 1
        nmax = int(nmax)
        length = max(nmax - start + 1, 0)
        if exact:
            values = list(coeffs[:length])
            for c in values:
                if not _is_exact_number(c):
                    raise ModeError(f"exact series got non-rational coefficient {c!r}")
            values.extend([0] * (length - len(values)))
            values = tuple(values)
        else:
            values = np.zeros(length, dtype=np.float64)
            src = np.asarray(coeffs, dtype=np.float64)[:length]
            values[: len(src)] = src
            values.flags.writeable = False
        self.start = start
        self.nmax = nmax
        self.coeffs = values
        self.exact = exact

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, nmax: int, start: int = 0, exact: bool = True) -> "QSeries":
        return cls(start, [] if exact else np.zeros(0), nmax, exact=exact)

    @classmethod
    def monomial(cls, exponent: int, nmax: int, coeff=1, exact: bool = True) -> "QSeries":
        if exact:
            return cls(exponent, [coeff], nmax, exact=True)
        return cls(exponent, np.array([float(coeff)]), nmax, exact=False)

    @classmethod
    def from_dict(cls, terms: dict, nmax: int, exact: bool = True) -> "QSeries":
        start = min(terms) if terms else 0
        length = max(nmax - start + 1, 0)
        values = [0] * length if exact else np.zeros(length)
        for e, c in terms.items():
            if e <= nmax:
                values[e - start] = c
        return cls(start, values, nmax, exact=exact)

    # -- access ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n: int):
        if n > self.nmax:
            raise IndexError(f"coefficient of q^{n} is beyond the truncation q^{self.nmax}")
        if n < self.start:
            return 0 if self.exact else 0.0
        return self.coeffs[n - self.start]

    def coefficient_list(self, lo: int, hi: int) -> list:
        return [self[n] for n in range(lo, hi + 1)]

    def valuation(self) -> int | None:
        """Smallest exponent with a nonzero stored coefficient (None for zero)."""
        for i, c in enumerate(self.coeffs):
            if c != 0:
                return self.start + i
        return None

    def is_zero(self) -> bool:
        return self.valuation() is None

    def to_array(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        """Float copy of the coefficients at exponents lo..hi."""
        lo = self.start if lo is None else lo
        hi = self.nmax if hi is None else hi
        if hi > self.nmax:
            raise IndexError(f"requested q^{hi} beyond truncation q^{self.nmax}")
        out = np.zeros(max(hi - lo + 1, 0))
        a, b = max(lo, self.start), hi
        if b >= a:
            seg = self.coeffs[a - self.start : b - self.start + 1]
            out[a - lo : b - lo + 1] = seg if not self.exact else [float(c) for c in seg]
        return out

    def to_float(self) -> "QSeries":
        if not self.exact:
            return self
        return QSeries(self.start, np.array([float(c) for c in self.coeffs]), self.nmax, exact=False)

    def to_exact(self, max_denominator: int | None = None) -> "QSeries":
        """Convert a float series to rationals (exact binary value unless limited)."""
        if self.exact:
            return self
        vals = []
        for c in self.coeffs:
            fr = Fraction(float(c))
            if max_denominator is not None:
                fr = fr.limit_denominator(max_denominator)
            vals.append(fr.numerator if fr.denominator == 1 else fr)
        return QSeries(self.start, vals, self.nmax, exact=True)

    def truncate(self, nmax: int) -> "QSeries":
        if nmax > self.nmax:
            raise ValueError(f"cannot extend truncation from q^{self.nmax} to q^{nmax}")
        return QSeries(self.start, self.coeffs[: max(nmax - self.start + 1, 0)], nmax, exact=self.exact)

    def shift(self, k: int) -> "QSeries":
        """Multiply by q^k."""
        return QSeries(self.start + k, self.coeffs, self.nmax + k, exact=self.exact)

    def substitute(self, scale: int) -> "QSeries":
        """Replace q by q^scale."""
        if scale < 1:
            raise ValueError("scale must be positive")
        n = len(self.coeffs)
        nmax = self.start * scale + (n - 1) * scale + (scale - 1) if n else self.nmax * scale
        length = nmax - self.start * scale + 1
        if self.exact:
            vals = [0] * length
            vals[::scale] = self.coeffs
        else:
            vals = np.zeros(length)
            vals[::scale] = self.coeffs
        return QSeries(self.start * scale, vals, nmax, exact=self.exact)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, QSeries):
            return add(self, other)
        return add(self, _constant_like(self, other))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QSeries):
            return divide(self, other)
        if self.exact and _is_exact_number(other):
            return scale(self, Fraction(1) / Fraction(other))
        return scale(self, 1.0 / other)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers: use divide")
        result = None
        base = self
        while e:
            if e & 1:
                result = base if result is None else mul(result, base)
            e >>= 1
            if e:
                base = mul(base, base)
        if result is None:
            return QSeries.monomial(0, self.nmax - self.start, 1 if self.exact else 1.0, exact=self.exact)
        return result

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        if self.exact != other.exact or self.nmax != other.nmax:
            return False
        lo = min(self.start, other.start)
        return all(self[n] == other[n] for n in range(lo, self.nmax + 1))

    def __hash__(self):
        return hash((self.start, self.nmax, self.exact))

    def __repr__(self):
        shown = []
        for i, c in enumerate(self.coeffs[:8]):
            if c != 0:
                shown.append(f"{c}*q^{self.start + i}")
        body = " + ".join(shown) if shown else "0"
        more = " + ..." if len(self.coeffs) > 8 else ""
        return f"QSeries({body}{more} + O(q^{self.nmax + 1}))"


def _constant_like(s: QSeries, c) -> QSeries:
    if s.exact:
        if not _is_exact_number(c):
            raise ModeError("adding a float constant to an exact series")
        return QSeries.monomial(0, s.nmax, c, exact=True)
    return QSeries.monomial(0, s.nmax, float(c), exact=False)


def _check_modes(a: QSeries, b: QSeries) -> None:
    if a.exact != b.exact:
        raise ModeError("exact and float series cannot be combined; convert explicitly")


def add(a: QSeries, b: QSeries) -> QSeries:
    _check_modes(a, b)
    nmax = min(a.nmax, b.nmax)
    start = min(a.start, b.start)
    length = max(nmax - start + 1, 0)
    if a.exact:
        vals = [0] * length
        for s in (a, b):
            off = s.start - start
            for i, c in enumerate(s.coeffs[: max(nmax - s.start + 1, 0)]):
                vals[off + i] += c
        return QSeries(start, vals, nmax, exact=True)
    vals = np.zeros(length)
    for s in (a, b):
        off = s.start - start
        seg = s.coeffs[: max(nmax - s.start + 1, 0)]
        vals[off : off + len(seg)] += seg
    return QSeries(start, vals, nmax, exact=False)


def scale(a: QSeries, c) -> QSeries:
    if a.exact:
        if not _is_exact_number(c):
            raise ModeError("scaling an exact series by a float; convert explicitly")
        return QSeries(a.start, [c * x for x in a.coeffs], a.nmax, exact=True)
    if _is_exact_number(c):
        c = float(c)
    return QSeries(a.start, np.asarray(a.coeffs) * c, a.nmax, exact=False)


def theta_derivative(a: QSeries) -> QSeries:
    """Apply q d/dq, i.e. (1/2 pi i) d/d tau: q^n -> n q^n."""
    exps = range(a.start, a.nmax + 1)
    if a.exact:
        return QSeries(a.start, [n * c for n, c in zip(exps, a.coeffs)], a.nmax, exact=True)
    return QSeries(a.start, np.arange(a.start, a.start + len(a.coeffs)) * a.coeffs, a.nmax, exact=False)


def mul(a: QSeries, b: QSeries) -> QSeries:
    _check_modes(a, b)
    start = a.start + b.start
    nmax = min(a.nmax + b.start, b.nmax + a.start)
    n_out = nmax - start + 1
    if n_out <= 0:
        return QSeries.zero(nmax, start, exact=a.exact)
    ca = a.coeffs[:n_out]
    cb = b.coeffs[:n_out]
    if not a.exact:
        out = np.convolve(ca, cb)[:n_out]
        return QSeries(start, out, nmax, exact=False)
    return QSeries(start, _exact_convolve(list(ca), list(cb), n_out), nmax, exact=True)


def divide(a: QSeries, b: QSeries) -> QSeries:
    """Laurent division a/b; b's leading stored coefficient must be nonzero."""
    _check_modes(a, b)
    v = b.valuation()
    if v is None:
        raise ZeroDivisionError("division by a series with no nonzero stored coefficient")
    if b.start != v:
        b = QSeries(v, b.coeffs[v - b.start :], b.nmax, exact=b.exact)
    rel = min(a.nmax - a.start, b.nmax - v)
    inv = _inverse(b, rel)  # start -v
    a_trim = QSeries(a.start, a.coeffs[: rel + 1], a.start + rel, exact=a.exact)
    return mul(a_trim, inv)


def _inverse(b: QSeries, rel: int) -> QSeries:
    """1/b to relative precision rel, by Newton iteration on the unit part."""
    v = b.start
    lead = b.coeffs[0]
    if b.exact:
        inv0 = Fraction(1) / Fraction(lead)
        inv0 = inv0.numerator if inv0.denominator == 1 else inv0
    else:
        inv0 = 1.0 / lead
    unit = QSeries(0, b.coeffs[: rel + 1], rel, exact=b.exact)
    g = QSeries.monomial(0, 0, inv0, exact=b.exact)
    prec = 1
    two = 2 if b.exact else 2.0
    while prec < rel + 1:
        prec = min(2 * prec, rel + 1)
        u = unit.truncate(prec - 1)
        g = QSeries(0, g.coeffs, prec - 1, exact=b.exact)
        g = g * (two - u * g)
    g = QSeries(0, g.coeffs, rel, exact=b.exact)
    return g.shift(-v)


# -- exact convolution ------------------------------------------------------------


def _exact_convolve(a: list, b: list, n_out: int) -> list:
    if all(type(x) is int for x in a) and all(type(x) is int for x in b):
        return _int_convolve(a, b, n_out)
    da = _common_denominator(a)
    db = _common_denominator(b)
    ia = [int(x * da) for x in a]
    ib = [int(x * db) for x in b]
    prod = _int_convolve(ia, ib, n_out)
    d = da * db
    out = []
    for x in prod:
        fr = Fraction(x, d)
        out.append(fr.numerator if fr.denominator == 1 else fr)
    return out


def _common_denominator(xs: Iterable) -> int:
    d = 1
    for x in xs:
        q = x.denominator if isinstance(x, Fraction) else 1
        if q != 1:
            d = d * q // gcd(d, q)
    return d


def _int_convolve(a: list[int], b: list[int], n_out: int) -> list[int]:
    a = a[:n_out]
    b = b[:n_out]
    if not a or not b:
        return [0] * n_out
    if min(len(a), len(b)) * n_out <= _KRONECKER_CUTOFF * _KRONECKER_CUTOFF or min(len(a), len(b)) < 8:
        out = [0] * n_out
        nz_b = [(j, y) for j, y in enumerate(b) if y]
        for i, x in enumerate(a):
            if x:
                for j, y in nz_b:
                    if i + j >= n_out:
                        break
                    out[i + j] += x * y
        return out
    return _kronecker(a, b, n_out)


def _pack(values: Sequence[int], nbytes: int) -> int:
    pos = b"".join(max(v, 0).to_bytes(nbytes, "little") for v in values)
    neg = b"".join(max(-v, 0).to_bytes(nbytes, "little") for v in values)
    return int.from_bytes(pos, "little") - int.from_bytes(neg, "little")


def _kronecker(a: list[int], b: list[int], n_out: int) -> list[int]:
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma == 0 or mb == 0:
        return [0] * n_out
    bound = ma * mb * min(len(a), len(b))
    nbytes = (bound.bit_length() + 2 + 7) // 8
    bits = 8 * nbytes
    x = gmpy2.mpz(_pack(a, nbytes))
    y = gmpy2.mpz(_pack(b, nbytes))
    z = x * y
    # keep the low n_out slots; slots above contribute only whole multiples of 2^(bits*n_out)
    z = gmpy2.f_mod_2exp(z, bits * n_out)
    half = 1 << (bits - 1)
    offset = int.from_bytes(half.to_bytes(nbytes, "little") * n_out, "little")
    # signed slots: adding 2^(bits-1) per slot makes every digit nonnegative, but the
    # truncation above stored z modulo 2^(bits*n_out), so wrap after the offset too
    w = (int(z) + offset) & ((1 << (bits * n_out)) - 1)
    raw = w.to_bytes(nbytes * n_out, "little")
    mv = memoryview(raw)
    return [int.from_bytes(mv[i * nbytes : (i + 1) * nbytes], "little") - half for i in range(n_out)]


# -- classical objects ------------------------------------------------------------


def _euler_product(power: int, n: int) -> list[int]:
    """Coefficients 0..n of prod_{m>=1} (1-q^m)^power, exact integers."""
    if n < 0:
        return []
    if power % 3 == 0:
        # Jacobi: prod (1-q^m)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}
        base = [0] * (n + 1)
        k = 0
        while k * (k + 1) // 2 <= n:
            base[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
            k += 1
        e = power // 3
    else:
        # Euler pentagonal theorem
        base = [0] * (n + 1)
        base[0] = 1
        k = 1
        while k * (3 * k - 1) // 2 <= n:
            sgn = -1 if k % 2 else 1
            base[k * (3 * k - 1) // 2] += sgn
            if k * (3 * k + 1) // 2 <= n:
                base[k * (3 * k + 1) // 2] += sgn
            k += 1
        e = power
    result = None
    while e:
        if e & 1:
            result = base if result is None else _int_convolve(result, base, n + 1)
        e >>= 1
        if e:
            base = _int_convolve(base, base, n + 1)
    return result if result is not None else [1] + [0] * n


def eta_power(power: int, scale: int, nmax: int) -> QSeries:
    """eta(scale*tau)^power, exact; the leading exponent power*scale/24 must be integral."""
    if power < 1 or scale < 1:
        raise ValueError("power and scale must be positive")
    if (power * scale) % 24:
        raise ValueError(f"eta({scale}tau)^{power} has non-integral leading exponent {power * scale}/24")
    e0 = power * scale // 24
    m = (nmax - e0) // scale
    prod = QSeries(0, _euler_product(power, m), m, exact=True)
    sub = prod.substitute(scale).shift(e0)
    if sub.nmax > nmax:
        sub = sub.truncate(nmax)
    return QSeries(sub.start, sub.coeffs, nmax, exact=True)


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n (B_1 = -1/2)."""
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    b = a[0]
    return -b if n == 1 else b


def divisor_sum(n: int, weight: int, exclude_multiples_of: int | None = None):
    """sum of d**weight over divisors d of n, skipping d divisible by exclude_multiples_of."""
    if n < 1:
        raise ValueError("n must be positive")
    total = 0
    r = isqrt(n)
    for d in range(1, r + 1):
        if n % d == 0:
            for e in {d, n // d}:
                if exclude_multiples_of is None or e % exclude_multiples_of:
                    total += e**weight
    return total


def divisor_sums(nmax: int, weight: int, exclude_multiples_of: int | None = None) -> list[int]:
    """[sigma(0)=0, sigma(1), ..., sigma(nmax)] by sieving."""
    out_obj = weight * np.log2(max(nmax, 2)) + 2 * np.log2(max(nmax, 2)) > 62
    arr = np.zeros(nmax + 1, dtype=object if out_obj else np.int64)
    if out_obj:
        arr[:] = 0
    for d in range(1, nmax + 1):
        if exclude_multiples_of is not None and d % exclude_multiples_of == 0:
            continue
        arr[d::d] += d**weight
    return [int(x) for x in arr.tolist()]


def eisenstein(k: int, nmax: int) -> QSeries:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, exact."""
    if k < 2 or k % 2:
        raise ValueError(f"Eisenstein weight must be even and >= 2, got {k}")
    c = -Fraction(2 * k) / bernoulli(k)
    c = c.numerator if c.denominator == 1 else c
    sig = divisor_sums(nmax, k - 1) if nmax >= 1 else [0]
    vals = [1] + [c * s for s in sig[1 : nmax + 1]]
    return QSeries(0, vals, nmax, exact=True)


def delta(nmax: int) -> QSeries:
    """Ramanujan's Delta = eta^24."""
    return eta_power(24, 1, nmax)


def j_function(nmax: int) -> QSeries:
    """Klein's j = E_4^3 / Delta, exact, from q^-1 to q^nmax."""
    if nmax < -1:
        raise ValueError("nmax must be >= -1")
    e4 = eisenstein(4, nmax + 1)
    return divide(e4 ** 3, delta(nmax + 2))


def r_series(alpha: float, nmax: int) -> QSeries:
    """-Delta (j^2 - 1464 j - alpha^2 + 1464 alpha) as a float series from q^-1."""
    if nmax < -1:
        raise ValueError("nmax must be >= -1")
    d = delta(nmax + 2)
    j = j_function(nmax + 1)
    exact_part = -(d * (j * j - 1464 * j))
    exact_part = exact_part.truncate(nmax)
    const = alpha * alpha - 1464.0 * alpha
    return exact_part.to_float() + d.truncate(max(nmax, 1)).to_float() * const
