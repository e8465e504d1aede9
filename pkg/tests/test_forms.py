import numpy as np
import pytest

from scv import cache
from scv.forms import FormSpec, basis_dimension, cusp_basis
from scv.qalg import eta_power


class TestParse:
    def test_eta(self):
        f = FormSpec.parse("eta:8:3")
        assert (f.weight, f.level) == (4, 9)
        assert str(f) == "eta:8:3"

    def test_poincare(self):
        f = FormSpec.parse("poincare:2:24:1")
        assert f.kind == "poincare" and f.weight == 24

    def test_file_with_weight(self, tmp_path):
        path = tmp_path / "d.scv"
        cache.write_series(path, eta_power(24, 1, 40))
        f = FormSpec.parse(f"file:{path}:12:1")
        assert f.weight == 12
        assert np.allclose(f.table(40), eta_power(24, 1, 40).to_float().to_array(0, 40))
        with pytest.raises(ValueError):
            f.table(41)

    def test_zero(self):
        f = FormSpec.parse("zero:4:9")
        assert f.table(5).tolist() == [0.0] * 6

    @pytest.mark.parametrize(
        "text", ["eta:7:1", "eta:24", "poincare:1:12", "poincare:1:3:1", "bogus:1", "eta:a:b", ""]
    )
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            FormSpec.parse(text)


class TestBasis:
    @pytest.mark.parametrize("k, dim", [(12, 1), (16, 1), (22, 1), (24, 2), (36, 3), (4, 0)])
    def test_dimensions(self, k, dim):
        assert basis_dimension(k, 1) == dim

    def test_echelon_form(self):
        b = cusp_basis(24, 1, 10)
        assert [g.valuation() for g in b] == [1, 2]
        assert b[0][1] == 1 and b[0][2] == 0 and b[1][2] == 1

    def test_level_nine_weight_four(self):
        b = cusp_basis(4, 9, 12)
        assert len(b) == 1 and b[0] == eta_power(8, 3, 12)

    def test_eta_table_is_float(self):
        t = FormSpec.eta(24, 1).table(5)
        assert t.tolist() == [0.0, 1.0, -24.0, 252.0, -1472.0, 4830.0]

    def test_normalized_read_only(self):
        lam = FormSpec.eta(24, 1).normalized(10)
        assert lam[1] == 1.0 and lam[2] == pytest.approx(-24 / 2**5.5)
        with pytest.raises(ValueError):
            lam[3] = 0.0
