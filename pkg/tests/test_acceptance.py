"""Acceptance criteria 1-7, one printed PASS/FAIL line per criterion.

Criteria 3-6 share one end-to-end run per worked example (tables are cached
under SCV_CACHE_DIR, so only the first run pays for the coefficient builds).
"""
from fractions import Fraction

import numpy as np
import pytest

from oracles import bracket_naive, falling_binomial, kloosterman_complex, pentagonal_euler, bessel_mp
from scv.forms import FormSpec
from scv.poincare import PoincareSpec, SumControl, cusp_coeff, petersson_beta, qplus_coeff
from scv.qalg import QSeries, _euler_product, eta_power, mul
from scv.rcproj import GPolyParams, WeightedSeries, g_poly, rc_bracket
from scv.shiftconv import ConvolutionRequest, alpha_coeff, beta_coeff, dhat, naive_dhat
from scv.specialfun import bessel_i, bessel_j, kloosterman
from scv.verify import rational_snap, verify_example

DELTA_TABLE = [-33.383, 266.439, -1519.218, 4827.434, -5704.330]
CM_TABLE = {3: -10.7466, 6: 12.7931, 9: 6.4671, 12: -79.2777, 15: 64.2494}
T_TABLE = {3: Fraction(-33, 4), 6: Fraction(2799, 125), 9: Fraction(-32919, 4000), 12: Fraction(-8250771, 133100)}


@pytest.fixture
def verdict(capsys):
    def record(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


@pytest.fixture(scope="module")
def reports():
    cache = {}

    def get(which):
        if which not in cache:
            cache[which] = verify_example(which)
        return cache[which]

    return get


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_petersson_constants(verdict):
    b1 = petersson_beta(PoincareSpec(1, 12, 1, SumControl(c_max=100_000)))
    b9 = petersson_beta(PoincareSpec(1, 4, 9, SumControl(c_max=100_000)))
    ok = abs(b1 - 2.8402) <= 5e-4 and abs(b9 - 1.0468) <= 1e-3
    verdict(1, ok, f"beta(1,12,1)={b1:.6f} beta(1,4,9)={b9:.6f}")


def test_criterion_2_mock_coefficients(verdict):
    spec = PoincareSpec(1, 4, 9)
    want = {2: -0.25, 5: 49 / 125, 8: -3 / 32}
    got = {n: qplus_coeff(spec, n) for n in want}
    ok = all(abs(got[n] - want[n]) <= 1e-3 for n in want)
    verdict(2, ok, " ".join(f"Q+({n})={got[n]:.6f}" for n in want))


def test_criterion_3_delta_table(verdict, reports):
    lseries = reports(1).details["lseries"]
    vals = [lseries[h] for h in range(1, 6)]
    worst = max(rel(v, p) for v, p in zip(vals, DELTA_TABLE))
    verdict(3, worst <= 0.01, f"values={[round(v, 3) for v in vals]} worst rel={worst:.2e}")


def test_criterion_4_cm_example(verdict, reports):
    r = reports(2)
    lseries = r.details["lseries"]
    worst = max(rel(lseries[h], v) for h, v in CM_TABLE.items())
    zeros = all(lseries[h] == 0.0 for h in lseries if h % 3)
    t_ok = snap_ok = True
    for row in r.details["T"]:
        want = T_TABLE[row["h"]]
        t_ok &= abs(row["T"] - float(want)) <= 1e-2
        snap_ok &= rational_snap(row["T_mock_side"], 200_000)[0] == want
    ok = worst <= 0.01 and zeros and t_ok and snap_ok
    verdict(4, ok, f"worst rel={worst:.2e} zeros={zeros} T within 1e-2={t_ok} snapped={snap_ok}")


def test_criterion_5_weight_24(verdict, reports):
    r = reports(3)
    gamma, delta_ = r.coefficients[:2]
    a1, a2 = (cusp_coeff(PoincareSpec(2, 24, 1), n) for n in (1, 2))
    near_table = rel(gamma, -0.00001585) <= 0.02 and rel(delta_, -2.45743) <= 0.02
    negated = rel(gamma, -a1) <= 0.02 and rel(delta_, -a2) <= 0.02
    pole = r.checks["weakly_holomorphic"]
    verdict(5, near_table and negated and pole, f"gamma={gamma:.6e} delta={delta_:.6f} a1={a1:.6e} a2={a2:.6f} pole={pole}")


def test_criterion_6_held_out_residuals(verdict, reports):
    parts, ok = [], True
    for which in (1, 2, 3):
        rows = [row for row in reports(which).per_h if row["held_out"]]
        good = all(abs(row["residual"]) <= row["bound"] for row in rows)
        worst = max(abs(row["residual"]) / row["bound"] for row in rows)
        ok &= good and [row["h"] for row in rows] == list(range(5, 11))
        parts.append(f"ex{which} max |res|/bound={worst:.2f}")
    verdict(6, ok, "; ".join(parts))


def test_criterion_7_property_suites(verdict):
    rng = np.random.default_rng(2024)
    failures = []

    for c in range(1, 51):
        for m, n in rng.integers(-200, 200, size=(3, 2)):
            m, n = int(m), int(n)
            if abs(kloosterman(m, n, c) - kloosterman_complex(m, n, c).real) > 1e-9:
                failures.append(f"K({m},{n},{c})")
            if abs(kloosterman(m, n, c) - kloosterman(n, m, c)) > 1e-9:
                failures.append(f"K sym ({m},{n},{c})")

    xs = np.logspace(-2, 1.7, 25)
    for order in (1, 11):
        if not np.allclose(bessel_j(order, xs), [bessel_mp(order, x, "J") for x in xs], rtol=1e-11, atol=1e-14):
            failures.append(f"J_{order}")
        if not np.allclose(bessel_i(order, xs), [bessel_mp(order, x, "I") for x in xs], rtol=1e-11, atol=1e-300):
            failures.append(f"I_{order}")

    f = WeightedSeries(eta_power(24, 1, 8), 12)
    g = WeightedSeries(QSeries(0, [1, 240, 2160, 6720, 17520, 30240, 60480, 82560, 140400], 8), 4)
    if rc_bracket(f, g, 0).series != mul(f.series, g.series):
        failures.append("[f,g]_0")
    for nu in range(4):
        if rc_bracket(f, g, nu).series != rc_bracket(g, f, nu).series * (-1) ** nu:
            failures.append(f"parity nu={nu}")
    fd = {n: f.series[n] for n in range(1, 9)}
    gd = {n: g.series[n] for n in range(0, 9)}
    ref = bracket_naive(fd, gd, 12, 4, 2)
    if any(rc_bracket(f, g, 2).series[n] != ref.get(n, 0) for n in range(1, 9)):
        failures.append("bracket oracle")

    for a, b in ((2, 0), (2, 7), (4, 3), (6, 10)):
        p = GPolyParams(a, b)
        if a == 2 and g_poly(p, 5, 3) != 1:
            failures.append("G_2b")
        if g_poly(p, 3 * 5, 3 * 2) != 3 ** (a - 2) * g_poly(p, 5, 2):
            failures.append(f"G homogeneity {a},{b}")

    for nu in range(5):
        for k1, k2 in ((12, 12), (12, 4), (24, 12)):
            al = [alpha_coeff(nu, k1, k2, mu) for mu in range(nu + 1)]
            oracle = [falling_binomial(nu - k1 + 1, nu - mu) * falling_binomial(nu + k2 - 1, mu) for mu in range(nu + 1)]
            if al != oracle or beta_coeff(nu, k1, k2) != sum(oracle):
                failures.append(f"alpha {nu},{k1},{k2}")

    if _euler_product(1, 200) != pentagonal_euler(200):
        failures.append("pentagonal")
    e = eta_power(8, 3, 600)
    if any(e[n] != 0 for n in range(1, 601) if n % 3 != 1):
        failures.append("eta(3tau)^8 support")

    D = FormSpec.eta(24, 1)
    for h in (1, 3):
        req = ConvolutionRequest(D, D, h, s=13.0, terms=10_000)
        if abs(dhat(req).value - naive_dhat(req)) > 1e-10 * max(1.0, abs(naive_dhat(req))):
            failures.append(f"paired vs naive h={h}")

    verdict(7, not failures, "all property checks hold" if not failures else ", ".join(failures))
