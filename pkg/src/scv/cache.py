"""Binary coefficient cache ("SCV1").

Layout, all integers little-endian::

    magic        4 bytes   b"SCV1"
    mode         int64     0 = exact rational, 1 = IEEE double
    start        int64     exponent of the first stored coefficient
    nmax         int64     truncation bound
    coefficients nmax - start + 1 records

A float record is one IEEE-754 double.  A rational record is a pair
(numerator int64, denominator int64) with denominator > 0.  A value that does not
fit that pair is written as the escape pair (0, 0) followed by two length-prefixed
integers, each an int64 byte count and that many bytes of two's complement.
"""
from __future__ import annotations

import os
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from .qalg import QSeries

MAGIC = b"SCV1"
MODE_RATIONAL = 0
MODE_FLOAT = 1

_HEADER = struct.Struct("<4sqqq")
_PAIR = struct.Struct("<qq")
_LEN = struct.Struct("<q")
_I64_MIN, _I64_MAX = -(1 << 63), (1 << 63) - 1


class CacheFormatError(ValueError):
    pass


def _big(x: int) -> bytes:
    n = (x.bit_length() + 8) // 8
    return _LEN.pack(n) + x.to_bytes(n, "little", signed=True)


def dumps(series: QSeries) -> bytes:
    mode = MODE_RATIONAL if series.exact else MODE_FLOAT
    parts = [_HEADER.pack(MAGIC, mode, series.start, series.nmax)]
    if not series.exact:
        parts.append(np.asarray(series.coeffs, dtype="<f8").tobytes())
        return b"".join(parts)
    pack = _PAIR.pack
    escape = pack(0, 0)
    for c in series.coeffs:
        if isinstance(c, Fraction):
            num, den = c.numerator, c.denominator
        else:
            num, den = int(c), 1
        if _I64_MIN <= num <= _I64_MAX and den <= _I64_MAX:
            parts.append(pack(num, den))
        else:
            parts.append(escape + _big(num) + _big(den))
    return b"".join(parts)


def loads(data: bytes) -> QSeries:
    if len(data) < _HEADER.size:
        raise CacheFormatError("truncated header")
    magic, mode, start, nmax = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}")
    count = max(nmax - start + 1, 0)
    pos = _HEADER.size
    if mode == MODE_FLOAT:
        need = pos + 8 * count
        if len(data) < need:
            raise CacheFormatError("truncated float payload")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
        return QSeries(start, arr, nmax, exact=False)
    if mode != MODE_RATIONAL:
        raise CacheFormatError(f"unknown coefficient mode {mode}")
    vals = []
    unpack = _PAIR.unpack_from
    mv = memoryview(data)
    try:
        for _ in range(count):
            num, den = unpack(data, pos)
            pos += 16
            if den == 0:
                (n1,) = _LEN.unpack_from(data, pos)
                pos += 8
                num = int.from_bytes(mv[pos : pos + n1], "little", signed=True)
                pos += n1
                (n2,) = _LEN.unpack_from(data, pos)
                pos += 8
                den = int.from_bytes(mv[pos : pos + n2], "little", signed=True)
                pos += n2
            vals.append(num if den == 1 else Fraction(num, den))
    except struct.error as exc:
        raise CacheFormatError("truncated rational payload") from exc
    return QSeries(start, vals, nmax, exact=True)


def write_series(path: str | os.PathLike, series: QSeries) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dumps(series))
    os.replace(tmp, path)


def read_series(path: str | os.PathLike) -> QSeries:
    return loads(Path(path).read_bytes())


def cache_dir() -> Path:
    root = os.environ.get("SCV_CACHE_DIR")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "scv"


def cached(name: str, nmax: int, build) -> QSeries:
    """Load ``name`` from the cache if it reaches nmax, else build, store and return it."""
    if os.environ.get("SCV_NO_CACHE"):
        return build(nmax)
    path = cache_dir() / f"{name}.scv"
    if path.exists():
        try:
            s = read_series(path)
        except CacheFormatError:
            s = None
        if s is not None and s.nmax >= nmax:
            return s if s.nmax == nmax else s.truncate(nmax)
    s = build(nmax)
    try:
        write_series(path, s)
    except OSError:
        pass
    return s
