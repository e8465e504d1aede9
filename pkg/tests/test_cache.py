from fractions import Fraction

import numpy as np
import pytest

from scv import cache
from scv.qalg import QSeries, eta_power


class TestFormat:
    def test_round_trip_exact(self):
        s = QSeries(-1, [1, Fraction(-3, 7), 10**40, Fraction(1, 10**30), 0], 3)
        assert cache.loads(cache.dumps(s)) == s

    def test_round_trip_float(self):
        s = QSeries(2, np.array([1.5, -2.25, np.pi]), 4, exact=False)
        back = cache.loads(cache.dumps(s))
        assert not back.exact
        assert np.array_equal(back.to_array(2, 4), s.to_array(2, 4))

    def test_header_layout(self):
        data = cache.dumps(QSeries(0, [7], 0))
        assert data[:4] == b"SCV1"
        assert int.from_bytes(data[4:12], "little") == cache.MODE_RATIONAL
        assert data[28:44] == (7).to_bytes(8, "little") + (1).to_bytes(8, "little")

    def test_bad_magic(self):
        with pytest.raises(cache.CacheFormatError):
            cache.loads(b"XXXX" + bytes(24))

    def test_truncated(self):
        data = cache.dumps(QSeries(0, [1, 2, 3], 2))
        with pytest.raises(cache.CacheFormatError):
            cache.loads(data[:-3])


class TestCachedBuild:
    def test_builds_once(self, tmp_cache):
        calls = []

        def build(n):
            calls.append(n)
            return eta_power(24, 1, n)

        a = cache.cached("delta", 20, build)
        b = cache.cached("delta", 10, build)
        assert calls == [20]
        assert b.nmax == 10 and b == a.truncate(10)
        assert (tmp_cache / "delta.scv").exists()

    def test_file_round_trip(self, tmp_path):
        s = eta_power(8, 3, 50)
        cache.write_series(tmp_path / "f.scv", s)
        assert cache.read_series(tmp_path / "f.scv") == s
