import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ergw import expsum
from ergw.arith import EULER_GAMMA, divisor_summatory, sieve
from ergw.errors import ParameterError, PreconditionError, ResourceError

from conftest import brute_mu, trial_divisors


def naive_D(n, x):
    xf = float(x) if not isinstance(x, Fraction) else x
    tot = 0j
    for k in range(1, n + 1):
        t = (k * xf) % 1
        tot += len(trial_divisors(k)) * cmath.exp(2j * math.pi * float(t))
    return tot


def test_value_at_zero():
    assert expsum.hyperbola(4, Fraction(0)).value == 8
    for n in (1, 10, 97, 1000):
        D = divisor_summatory(n)
        for method in ("direct", "hyperbola", "batch"):
            assert expsum.evaluate(n, Fraction(0), method).value == pytest.approx(D, abs=1e-9)


def test_single_term():
    x = 0.3
    assert expsum.hyperbola(1, x).value == pytest.approx(cmath.exp(2j * math.pi * x))


@given(st.integers(1, 400), st.floats(0, 1, exclude_max=True))
def test_hyperbola_matches_naive_oracle(n, x):
    ref = naive_D(n, x)
    got = expsum.hyperbola(n, x).value
    assert abs(got - ref) <= 1e-9 * divisor_summatory(n)


@given(st.integers(1, 3000), st.integers(1, 500), st.data())
def test_exact_rationals_agree_across_routes(n, q, data):
    a = data.draw(st.integers(0, q - 1))
    x = Fraction(a, q)
    d = expsum.direct(n, x).value
    h = expsum.hyperbola(n, x).value
    b = expsum.batch(n, q)[a].value
    D = divisor_summatory(n)
    assert abs(d - h) <= 1e-10 * D
    assert abs(d - b) <= 1e-10 * D


@given(st.integers(1, 2000), st.floats(0, 1, exclude_max=True))
def test_conjugate_symmetry_and_periodicity(n, x):
    v = expsum.hyperbola(n, x).value
    assert abs(expsum.hyperbola(n, 1 - x).value - v.conjugate()) <= 1e-9 * divisor_summatory(n)
    assert abs(expsum.hyperbola(n, x + 3).value - v) <= 1e-8 * divisor_summatory(n)


def test_geometric_sum_and_taylor_branch():
    L = np.arange(1, 50)
    for th in (0.37, -0.2, 1e-3):
        ref = np.array([sum(cmath.exp(2j * math.pi * l * th) for l in range(1, m + 1)) for m in L])
        assert np.max(np.abs(expsum.geometric_sum(L, th) - ref)) < 1e-12
    # continuity across the switch to the Taylor expansion
    for L0 in (10, 1000, 10**5):
        l = np.arange(1, L0 + 1)
        for th in (1.01e-8 / math.pi, 0.99e-8 / math.pi, 1e-12):
            ref = np.sum(np.exp(2j * np.pi * l * th))
            assert abs(expsum.geometric_sum(L0, th) - ref) <= 1e-9 * L0
    assert expsum.geometric_sum(7, 0.0) == 7


def test_batch_sequence_interface():
    b = expsum.batch(50, 8)
    assert len(b) == 8
    assert b[0].x == 0 and b[3].x == Fraction(3, 8)
    assert [r.method for r in b] == ["batch"] * 8


def test_rational_diagnostic_against_naive():
    n = 600
    for a, q in [(1, 3), (2, 5), (5, 12), (0, 1), (1, 1)]:
        r = expsum.rational_diagnostic(n, a, q)
        assert abs(r.value - naive_D(n, Fraction(a, q))) < 1e-8
        assert r.main == pytest.approx(n / q * (math.log(n) - 2 * math.log(q) + 2 * EULER_GAMMA - 1))
        assert r.normalized == pytest.approx(r.defect / ((math.sqrt(n) + q) * math.log(q + 1)))
    with pytest.raises(ParameterError):
        expsum.rational_diagnostic(n, 2, 4)


def test_rational_defect_small_for_small_q():
    # the main term captures D_n(a/q) up to O((sqrt n + q) log q)
    rs = expsum.rational_scan([2**14], 12)
    assert max(r.normalized for r in rs) < 0.65


def test_minor_arc_bound_formula():
    n, P, Q = 10**4, 10, 6400
    L = math.log(n)
    assert expsum.minor_arc_bound(n, P, Q) == pytest.approx(
        n * L / P + math.sqrt(n) * L + Q * L + n * n * L / (P * Q))


def test_minor_arc_diagnostic_precondition():
    with pytest.raises(PreconditionError):
        expsum.minor_arc_diagnostic(10**4, Fraction(1, 3) + Fraction(1, 10**6), 10, 6400)


def test_minor_arc_ratio_stable_near_sqrt2_convergents():
    x = math.sqrt(2) - 1
    ratios = []
    for k in range(12, 19):
        n = 2**k
        P = int(n**0.25)
        ratios.append(expsum.minor_arc_diagnostic(n, x, P, 64 * P * P))
    assert all(math.isfinite(r) and r > 0 for r in ratios)
    assert max(ratios) < 0.01


def test_mobius_sums():
    n = 300
    for x in (0.25, Fraction(2, 7), 0.123):
        ref = sum(brute_mu(k) * cmath.exp(2j * math.pi * float(k * x % 1)) for k in range(1, n + 1))
        assert abs(expsum.mobius_expsum(n, x).value - ref) < 1e-10
    G = 64
    direct_sup = max(abs(expsum.mobius_expsum(n, Fraction(j, G)).value) for j in range(G))
    assert expsum.mobius_sup(n, G) == pytest.approx(direct_sup, rel=1e-10)
    assert expsum.mobius_decay(n, G, 2) == pytest.approx(math.log(n) ** 2 / n * direct_sup)


def test_mobius_sup_decays():
    assert expsum.mobius_sup(10**5, 2**16) / 1e5 < 0.5 * expsum.mobius_sup(10**3, 2**16) / 1e3


def test_harmonic_gamma_decreases_to_gamma():
    vals = [expsum.harmonic_gamma(n) for n in (1, 2, 10, 100, 10**4, 10**6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] - EULER_GAMMA == pytest.approx(1 / (2 * 10**6), rel=1e-3)


def test_resource_and_parameter_errors():
    with pytest.raises(ResourceError):
        expsum.direct(10, 0.1, table=sieve("d", 5))
    with pytest.raises(ResourceError):
        expsum.batch(10, 2**30)
    with pytest.raises(ParameterError):
        expsum.hyperbola(0, 0.1)
    with pytest.raises(ParameterError):
        expsum.evaluate(10, 0.1, "batch")
