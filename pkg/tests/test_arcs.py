import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ergw import arcs
from ergw.errors import ArcConstraintError, ParameterError, ResourceError

# smallest n with 16 M P^2 <= Q <= n for S = 1.1, M = 4, found by a separate scan
MIN_N_S11_M4 = 2872736878885458


def brute_best(X, Q):
    best = None
    for q in range(1, Q + 1):
        for a in (math.floor(X * q), math.ceil(X * q)):
            if not 0 <= a <= q or math.gcd(a, q) != 1:
                continue
            d = abs(X - Fraction(a, q))
            if best is None or d < best[0]:
                best = (d, a, q)
    return best[1], best[2]


fractions_01 = st.builds(
    lambda a, q: Fraction(a % (q + 1), q), st.integers(0, 10**9), st.integers(1, 10**6))


@given(fractions_01, st.integers(1, 150))
def test_best_rational_matches_brute_force(X, Q):
    r = arcs.best_rational(X, Q)
    assert (r.a, r.q) == brute_best(X, Q)


@given(st.floats(0, 1), st.integers(1, 10**6))
def test_best_rational_is_legendre_consistent(x, Q):
    r = arcs.best_rational(x, Q)
    X = arcs.to_fraction(x)
    assert 1 <= r.q <= Q
    # Dirichlet: some a/q with q <= Q lies within 1/(q(Q+1))
    assert abs(X - r.fraction) <= Fraction(1, Q + 1)


def test_best_rational_ties_prefer_smaller_q():
    # 1/4 is equidistant from 0/1 and 1/2
    r = arcs.best_rational(Fraction(1, 4), 2)
    assert (r.a, r.q) == (0, 1)


def test_convergents_of_golden_ratio_are_fibonacci():
    phi = (math.sqrt(5) - 1) / 2
    qs = [q for _, q in arcs.convergents(phi)][:20]
    fib = [1, 1]
    while len(fib) < 22:
        fib.append(fib[-1] + fib[-2])
    assert qs[1:20] == fib[1:20]


def test_rational_validation():
    with pytest.raises(ParameterError):
        arcs.Rational(2, 4)
    with pytest.raises(ParameterError):
        arcs.Rational(3, 2)
    with pytest.raises(ParameterError):
        arcs.best_rational(1.5, 10)
    with pytest.raises(ParameterError):
        arcs.best_rational(0.5, 0)
    with pytest.raises(ParameterError):
        arcs.to_fraction(float("nan"))


def test_schedule_formula():
    n = 10**6
    L = math.log(n)
    P, Q = arcs.schedule(n, 1.5)
    assert P == math.floor(L**4.5)
    assert Q == math.floor(n / L**3)


def test_frozen_minimal_feasible_n():
    n = arcs.minimal_feasible_n(1.1, 4)
    assert n == MIN_N_S11_M4
    assert arcs._feasible(n, 1.1, 4)
    assert not arcs._feasible(n - 1, 1.1, 4)


def test_strict_default_raises_with_minimal_n():
    with pytest.raises(ArcConstraintError) as exc:
        arcs.default_parameters(2**20, S=1.1, M=4)
    assert exc.value.minimal_n == MIN_N_S11_M4
    assert str(MIN_N_S11_M4) in str(exc.value)
    p = arcs.default_parameters(MIN_N_S11_M4, S=1.1, M=4)
    assert not p.relaxed and 16 * 4 * p.P**2 <= p.Q <= p.n


@given(st.integers(2**8, 2**40))
def test_relaxed_parameters_are_feasible(n):
    p = arcs.default_parameters(n, S=2.0, relax=True)
    assert p.relaxed
    assert 0 < p.S <= 2.0 and p.S_requested == 2.0
    assert 16 * p.M * p.P**2 <= p.Q <= p.n
    # S is the largest feasible value up to the bisection resolution
    assert not arcs._feasible(n, p.S * (1 + 1e-6) + 1e-9, p.M)


def test_relax_impossible_for_tiny_n():
    with pytest.raises(ArcConstraintError):
        arcs.default_parameters(10, relax=True)
    with pytest.raises(ParameterError):
        arcs.default_parameters(2)
    with pytest.raises(ParameterError):
        arcs.default_parameters(100, S=1.0)


@pytest.fixture(scope="module")
def params():
    return arcs.default_parameters(2**16, relax=True)


def test_classify_major_and_minor(params):
    x = Fraction(1, 3) + Fraction(1, 2 * params.Q)
    loc = arcs.classify(x, params)
    assert loc.is_major and (loc.center.a, loc.center.q) == (1, 3)
    y = math.sqrt(2) - 1
    loc = arcs.classify(y, params)
    assert not loc.is_major and loc.center.q <= params.Q


def test_classify_grid_matches_pointwise(params):
    G = 4096
    g = arcs.classify_grid(G, params)
    for j in range(0, G, 7):
        loc = arcs.classify(Fraction(j, G), params)
        assert g.is_major[j] == loc.is_major
        if loc.is_major:
            assert (g.a[j], g.q[j]) == (loc.center.a, loc.center.q)
            assert g.distance[j] == pytest.approx(float(loc.distance), abs=1e-15)


def test_major_centers_count():
    P = 30
    c = arcs.major_centers(P)
    assert len(c) == 1 + sum(sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1)
                             for q in range(1, P + 1))
    assert len(set(c)) == len(c)


@pytest.mark.parametrize("s", range(1, 9))
def test_farey_band_contents(s):
    band = arcs.farey_band(s)
    phi_sum = sum(sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1)
                  for q in range(2 ** (s - 1), 2**s))
    assert len(band) == phi_sum
    assert all(2 ** (s - 1) <= r.q < 2**s for r in band)


def test_farey_band_resource_guard():
    with pytest.raises(ResourceError):
        arcs.farey_band(20)
    with pytest.raises(ParameterError):
        arcs.farey_band(0)


@pytest.mark.parametrize("s", range(2, 10))
def test_disjointness_holds_for_M_above_2(s):
    audit = arcs.disjointness_audit(s, 4)
    assert audit and audit.witness is None
    # Farey neighbours with denominators below 2^s are at least 1/4^s apart
    assert audit.min_gap >= Fraction(1, 4**s)


def test_disjointness_fails_for_small_M():
    audit = arcs.disjointness_audit(3, Fraction(1, 8))
    assert not audit
    assert audit.witness is not None
