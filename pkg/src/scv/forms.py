"""Cusp forms as coefficient sources.

A :class:`FormSpec` names a cusp form by weight, level and where its coefficients
come from.  The textual grammar accepted by :meth:`FormSpec.parse` is

    eta:POWER:SCALE       eta(SCALE tau)^POWER, weight POWER/2, level SCALE^2
    poincare:M:K:N        the Poincare series P(M,K,N), lifted through a cusp basis
    file:PATH[:K[:N]]     an SCV1 table; weight and level default to 12 and 1

Long coefficient tables are built once and kept in the SCV1 cache as doubles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import cache
from .poincare import PoincareSpec, SumControl, lift_to_basis
from .qalg import QSeries, delta, eisenstein, eta_power

__all__ = ["FormSpec", "cusp_basis", "basis_dimension"]


def basis_dimension(k: int, N: int) -> int:
    if N == 1:
        if k < 12 or k % 2:
            return 0
        return k // 12 - (1 if k % 12 == 2 else 0)
    if (k, N) == (4, 9):
        return 1
    raise ValueError(f"no cusp basis registered for weight {k}, level {N}")


def _echelon(series: list[QSeries]) -> list[QSeries]:
    """Reduce q^j + O(q^{j+1}) generators (j = 1..d) so element j vanishes at every q^i, i != j."""
    out = list(series)
    d = len(out)
    for j in range(d - 1, -1, -1):
        for i in range(j):
            c = out[i][j + 1]
            if c:
                out[i] = out[i] - out[j] * c
    return out


def _level_one_basis(k: int, nmax: int) -> list[QSeries]:
    d = basis_dimension(k, 1)
    gens = []
    D = delta(nmax) if d else None
    Dj = None
    for j in range(1, d + 1):
        Dj = D if j == 1 else (Dj * D)
        w = k - 12 * j
        # E_w as E4^a E6^b with a as small as possible (w = 0 gives 1)
        b = 0
        while (w - 6 * b) % 4:
            b += 1
        a = (w - 6 * b) // 4
        factor = None
        if a:
            factor = eisenstein(4, nmax) ** a
        if b:
            e6 = eisenstein(6, nmax) ** b
            factor = e6 if factor is None else factor * e6
        gens.append(Dj if factor is None else Dj * factor)
    return _echelon(gens)


def cusp_basis(k: int, N: int, nmax: int) -> list[QSeries]:
    """Exact echelon basis of S_k(Gamma_0(N)) for level 1 and for (k, N) = (4, 9)."""
    if N == 1:
        return _level_one_basis(k, nmax)
    if (k, N) == (4, 9):
        return [eta_power(8, 3, nmax)]
    raise ValueError(f"no cusp basis registered for weight {k}, level {N}")


@dataclass(frozen=True)
class FormSpec:
    """A cusp form of weight ``weight`` on Gamma_0(``level``)."""

    kind: str
    weight: int
    level: int
    params: tuple = ()
    label: str = ""
    control: SumControl = field(default_factory=SumControl, compare=False)

    def __post_init__(self):
        if self.kind not in ("eta", "poincare", "file", "zero"):
            raise ValueError(f"unknown form kind {self.kind!r}")
        if self.weight < 2 or self.weight % 2:
            raise ValueError(f"weight must be even and >= 2, got {self.weight}")
        if self.level < 1:
            raise ValueError("level must be positive")

    # -- construction -------------------------------------------------------------

    @classmethod
    def eta(cls, power: int, scale: int) -> "FormSpec":
        if power < 1 or scale < 1:
            raise ValueError("power and scale must be positive")
        if (power * scale) % 24:
            raise ValueError(f"eta({scale}tau)^{power} has a non-integral leading exponent")
        if power % 4:
            raise ValueError(f"eta power {power} does not give an even weight")
        return cls("eta", power // 2, scale * scale, (power, scale), f"eta:{power}:{scale}")

    @classmethod
    def poincare(cls, m: int, k: int, N: int = 1, control: SumControl | None = None) -> "FormSpec":
        PoincareSpec(m, k, N)  # validates
        basis_dimension(k, N)
        return cls("poincare", k, N, (m, k, N), f"poincare:{m}:{k}:{N}", control or SumControl())

    @classmethod
    def from_file(cls, path: str, weight: int = 12, level: int = 1) -> "FormSpec":
        return cls("file", weight, level, (str(path),), f"file:{path}:{weight}:{level}")

    @classmethod
    def zero(cls, weight: int = 12, level: int = 1) -> "FormSpec":
        return cls("zero", weight, level, (), f"zero:{weight}:{level}")

    @classmethod
    def parse(cls, text: str) -> "FormSpec":
        kind, _, rest = text.partition(":")
        parts = rest.split(":") if rest else []
        try:
            if kind == "eta" and len(parts) == 2:
                return cls.eta(int(parts[0]), int(parts[1]))
            if kind == "poincare" and len(parts) == 3:
                return cls.poincare(*(int(p) for p in parts))
            if kind == "file" and parts:
                # trailing integer fields are weight and level; the rest is the path
                nums = []
                while len(parts) > 1 and len(nums) < 2 and parts[-1].isdigit():
                    nums.insert(0, int(parts.pop()))
                path = ":".join(parts)
                return cls.from_file(path, *nums)
            if kind == "zero":
                return cls.zero(*(int(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"bad form spec {text!r}: {exc}") from exc
        raise ValueError(f"bad form spec {text!r}; expected eta:P:S, poincare:M:K:N or file:PATH")

    # -- coefficients ---------------------------------------------------------------

    def exact_series(self, nmax: int) -> QSeries:
        if self.kind == "eta":
            return eta_power(self.params[0], self.params[1], nmax)
        if self.kind == "zero":
            return QSeries.zero(nmax, start=1)
        if self.kind == "file":
            s = cache.read_series(self.params[0])
            if not s.exact:
                raise ValueError(f"{self.params[0]} holds float coefficients")
            return s.truncate(nmax) if s.nmax > nmax else s
        raise ValueError("Poincare series have no exact expansion")

    def lift(self, probes: int | None = None):
        """Coefficients of P(m,k,N) in the echelon cusp basis."""
        m, k, N = self.params
        return _lift(m, k, N, self.control, probes)

    def table(self, nmax: int) -> np.ndarray:
        """Float coefficients a(0), a(1), ..., a(nmax)."""
        if self.kind == "zero":
            return np.zeros(nmax + 1)
        if self.kind == "file":
            s = cache.read_series(self.params[0])
            if s.nmax < nmax:
                raise ValueError(f"{self.params[0]} stops at q^{s.nmax}, need q^{nmax}")
            return s.to_array(0, nmax).astype(np.float64)
        # round up so that nearby requests share one cached table
        build_to = -(-nmax // _TABLE_STEP) * _TABLE_STEP
        if self.kind == "eta":
            s = cache.cached(self._cache_name(), build_to, lambda n: self.exact_series(n).to_float())
            return s.to_array(0, nmax)
        m, k, N = self.params
        coef = self.lift()
        out = np.zeros(nmax + 1)
        for c, g in zip(coef, _basis_tables(k, N, build_to)):
            out += c * g[: nmax + 1]
        return out

    def normalized(self, nmax: int) -> np.ndarray:
        """lambda(n) = a(n) / n^((k-1)/2) for n = 0..nmax (entry 0 is 0)."""
        key = (self.label, self.weight)
        hit = _NORMALIZED.get(key)
        if hit is not None and len(hit) > nmax:
            return hit[: nmax + 1]
        a = self.table(nmax)
        n = np.arange(nmax + 1, dtype=np.float64)
        out = np.zeros(nmax + 1)
        out[1:] = a[1:] / n[1:] ** ((self.weight - 1) / 2.0)
        out.flags.writeable = False
        if self.kind != "file":
            _NORMALIZED[key] = out
        return out

    def coefficients(self, nmax: int) -> QSeries:
        return QSeries(0, self.table(nmax), nmax, exact=False)

    def _cache_name(self) -> str:
        return self.label.replace(":", "_")

    def __str__(self) -> str:
        return self.label


_TABLE_STEP = 4096

# normalised tables by form label; the convolution sums reread them for every shift
_NORMALIZED: dict[tuple[str, int], np.ndarray] = {}


def _basis_tables(k: int, N: int, nmax: int) -> list[np.ndarray]:
    d = basis_dimension(k, N)
    out = []
    built: list[QSeries] | None = None
    for i in range(d):
        name = f"basis_{k}_{N}_{i}"

        def build(n, i=i):
            nonlocal built
            if built is None or built[0].nmax < n:
                built = cusp_basis(k, N, n)
            return built[i].to_float()

        out.append(cache.cached(name, nmax, build).to_array(0, nmax))
    return out


@lru_cache(maxsize=32)
def _lift(m: int, k: int, N: int, control: SumControl, probes: int | None) -> tuple[float, ...]:
    d = basis_dimension(k, N)
    probes = probes or max(2 * d, d + 2)
    basis = cusp_basis(k, N, probes + d + 2)
    res = lift_to_basis(PoincareSpec(m, k, N, control), basis, probes, check_count=2)
    return tuple(float(c) for c in res.coefficients)
