"""Kloosterman sums and integer-order Bessel functions J_nu, I_nu.

These are the two kernels of every Poincare-series coefficient.  Kloosterman sums are
evaluated by direct enumeration over the unit group mod c (inverses by Euler powering
v^(phi(c)-1), with extended Euclid once c^2 overflows int64), Bessel functions by their ascending series with a Miller
backward-recurrence fallback for J at large argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "KloostermanQuery",
    "BesselQuery",
    "NumericError",
    "kloosterman",
    "kloosterman_batch",
    "bessel",
    "bessel_j",
    "bessel_i",
    "units_and_inverses",
]


class NumericError(ArithmeticError):
    """A numerical procedure did not reach its tolerance; ``value`` holds the partial result."""

    def __init__(self, message: str, value: float = float("nan"), estimate: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


@dataclass(frozen=True)
class KloostermanQuery:
    m: int
    n: int
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"Kloosterman modulus must be positive, got {self.c}")


@dataclass(frozen=True)
class BesselQuery:
    order: int
    argument: float
    kind: Literal["J", "I"] = "J"

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("Bessel order must be nonnegative")
        if self.argument < 0:
            raise ValueError("Bessel argument must be nonnegative")
        if self.kind not in ("J", "I"):
            raise ValueError(f"unknown Bessel kind {self.kind!r}")


# -- Kloosterman sums ---------------------------------------------------------------


def _prime_factors(c: int) -> list[int]:
    out = []
    d = 2
    while d * d <= c:
        if c % d == 0:
            out.append(d)
            while c % d == 0:
                c //= d
        d += 1
    if c > 1:
        out.append(c)
    return out


def _inverse_mod(v: np.ndarray, c: int) -> np.ndarray:
    """Elementwise inverse of units v modulo c by the extended Euclidean algorithm."""
    old_r = v.astype(np.int64).copy()
    r = np.full_like(old_r, c)
    old_s = np.ones_like(old_r)
    s = np.zeros_like(old_r)
    while True:
        act = np.flatnonzero(r)
        if act.size == 0:
            return np.mod(old_s, c)
        q = old_r[act] // r[act]
        old_r[act], r[act] = r[act], old_r[act] - q * r[act]
        old_s[act], s[act] = s[act], old_s[act] - q * s[act]


def _inverse_mod_euler(v: np.ndarray, c: int, phi: int) -> np.ndarray:
    """v^(phi(c)-1) mod c by square-and-multiply on the whole array."""
    result = np.ones_like(v)
    base = v % c
    e = phi - 1
    while e:
        if e & 1:
            result = result * base % c
        e >>= 1
        if e:
            base = base * base % c
    return result


_UNIT_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def units_and_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    """(v, v^-1 mod c) for the primitive residues v mod c; c = 1 gives ([0], [0])."""
    hit = _UNIT_CACHE.get(c)
    if hit is not None:
        return hit
    if c == 1:
        v = np.zeros(1, dtype=np.int64)
        out = (v, v)
    else:
        mask = np.ones(c, dtype=bool)
        mask[0] = False
        for p in _prime_factors(c):
            mask[::p] = False
        v = np.flatnonzero(mask).astype(np.int64)
        if c < 3_000_000_000:
            # c^2 fits in int64, so powering mod c is exact
            out = (v, _inverse_mod_euler(v, c, len(v)))
        else:
            out = (v, _inverse_mod(v, c))
    if c <= 4096:
        _UNIT_CACHE[c] = out
    return out


_K_CACHE: dict[tuple[int, int, int], float] = {}


def kloosterman(m: int | KloostermanQuery, n: int | None = None, c: int | None = None) -> float:
    """K(m, n, c) = sum over v in (Z/c)^* of cos(2 pi (m v^-1 + n v) / c); K(m, n, 1) = 1."""
    q = m if isinstance(m, KloostermanQuery) else KloostermanQuery(int(m), int(n), int(c))
    key = (q.m % q.c, q.n % q.c, q.c)
    val = _K_CACHE.get(key)
    if val is None:
        val = float(kloosterman_batch(key[0], np.array([key[1]]), q.c)[0])
        _K_CACHE[key] = val
    return val


def kloosterman_batch(m: int, ns, c: int) -> np.ndarray:
    """K(m, n, c) for every n in ``ns`` with a shared modulus c."""
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if c < 1:
        raise ValueError(f"Kloosterman modulus must be positive, got {c}")
    if c == 1:
        return np.ones(len(ns))
    v, vbar = units_and_inverses(c)
    table = np.cos((2.0 * np.pi / c) * np.arange(c))
    base = (m % c) * vbar % c
    phase = (base[None, :] + (ns % c)[:, None] * v[None, :]) % c
    return table[phase].sum(axis=1)


# -- Bessel functions --------------------------------------------------------------

_MAX_TERMS = 10_000


def _series(order: int, x: float, sign: float, tol: float) -> float:
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    y = 0.25 * x * x
    term = math.exp(order * math.log(0.5 * x) - math.lgamma(order + 1))
    total = term
    j = 0
    while True:
        j += 1
        if j > _MAX_TERMS:
            raise NumericError(f"Bessel series for order {order} at {x} did not converge", total)
        term *= sign * y / (j * (j + order))
        total += term
        ratio = y / ((j + 1) * (j + 1 + order))
        if ratio < 1.0 and abs(term) * ratio / (1.0 - ratio) <= tol * abs(total):
            return total


def _miller_j(order: int, x: float) -> float:
    """J_order(x) by backward recurrence normalised with J_0 + 2 sum J_2k = 1."""
    top = max(order, int(x)) + 20 + int(math.sqrt(40.0 * max(order, x, 1.0)))
    top += top % 2
    big, small = 1e250, 1e-250
    bjp, bj = 0.0, 1e-30
    ans = 0.0
    even_sum = 0.0
    for j in range(top, 0, -1):
        bjm = 2.0 * j / x * bj - bjp
        bjp, bj = bj, bjm
        if abs(bj) > big:
            bj *= small
            bjp *= small
            ans *= small
            even_sum *= small
        if (j - 1) % 2 == 0 and j - 1 > 0:
            even_sum += bj
        if j - 1 == order:
            ans = bj
    norm = bj + 2.0 * even_sum
    return ans / norm


def _j_series_ok(order: int, x: float) -> bool:
    # the alternating series loses about exp(x^2/(4(order+1))) in relative accuracy
    return 0.25 * x * x <= 3.0 * (order + 1)


def bessel(q: BesselQuery | int, x: float | None = None, kind: str = "J", tol: float = 1e-15) -> float:
    """J_nu(x) or I_nu(x) for integer nu >= 0, x >= 0."""
    if not isinstance(q, BesselQuery):
        q = BesselQuery(int(q), float(x), kind)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if q.kind == "I":
        return _series(q.order, q.argument, 1.0, tol)
    if q.argument == 0.0 or _j_series_ok(q.order, q.argument):
        return _series(q.order, q.argument, -1.0, tol)
    return _miller_j(q.order, q.argument)


def _vector_series(order: int, x: np.ndarray, sign: float, tol: float) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    if not pos.any():
        if order == 0:
            out[:] = 1.0
        return out
    xp = x[pos]
    y = 0.25 * xp * xp
    term = np.exp(order * np.log(0.5 * xp) - math.lgamma(order + 1))
    total = term.copy()
    j = 0
    while True:
        j += 1
        if j > _MAX_TERMS:
            raise NumericError(f"vectorised Bessel series for order {order} did not converge", float("nan"))
        term = term * (sign * y / (j * (j + order)))
        total += term
        ratio = y / ((j + 1) * (j + 1 + order))
        if np.all(ratio < 1.0) and np.all(np.abs(term) * ratio / (1.0 - ratio) <= tol * np.abs(total)):
            break
    out[pos] = total
    if order == 0:
        out[~pos] = 1.0
    return out


def bessel_j(order: int, x, tol: float = 1e-15) -> np.ndarray:
    """Vectorised J_order over an array of nonnegative arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0):
        raise ValueError("Bessel argument must be nonnegative")
    small = 0.25 * x * x <= 3.0 * (order + 1)
    out = np.empty_like(x)
    out[small] = _vector_series(order, x[small], -1.0, tol)
    for i in np.flatnonzero(~small):
        out[i] = _miller_j(order, float(x[i]))
    return out


def bessel_i(order: int, x, tol: float = 1e-15) -> np.ndarray:
    """Vectorised I_order over an array of nonnegative arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0):
        raise ValueError("Bessel argument must be nonnegative")
    return _vector_series(order, x, 1.0, tol)
