"""Major/minor arc decomposition of the circle and Farey bands.

Floats are quantized to the dyadic rational round(x 2^62)/2^62 before any
continued-fraction work, so every decision below is made in exact rational
arithmetic.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ArcConstraintError, ParameterError, ResourceError

_QUANT = 2**62
MAX_BAND_CENTERS = 2 * 10**7


def to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError("x must be finite")
    return Fraction(round(x * _QUANT), _QUANT)


@dataclass(frozen=True)
class Rational:
    """Reduced a/q with q >= 1 and 0 <= a <= q."""

    a: int
    q: int

    def __post_init__(self):
        if self.q < 1 or not 0 <= self.a <= self.q or math.gcd(self.a, self.q) != 1:
            raise ParameterError(f"{self.a}/{self.q} is not a reduced fraction in [0, 1]")

    @property
    def fraction(self):
        return Fraction(self.a, self.q)

    @property
    def value(self):
        return self.a / self.q

    def __str__(self):
        return f"{self.a}/{self.q}"


def convergents(x):
    """Continued-fraction convergents (p, q) of a rational x >= 0."""
    X = to_fraction(x)
    num, den = X.numerator, X.denominator
    p0, q0, p1, q1 = 0, 1, 1, 0
    out = []
    while den:
        a = num // den
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
        num, den = den, num - a * den
    return out


def best_rational(x, Q):
    """Closest a/q to x in [0, 1] with 1 <= q <= Q; ties go to the smaller q.

    Walks the continued fraction of x until the next convergent would exceed
    Q, then compares the last convergent with the largest admissible
    semiconvergent.
    """
    if Q < 1:
        raise ParameterError("Q must be >= 1")
    X = to_fraction(x)
    if X < 0 or X > 1:
        raise ParameterError("x must lie in [0, 1]")
    if X.denominator <= Q:
        return Rational(X.numerator, X.denominator)
    p0, q0, p1, q1 = 0, 1, 1, 0
    num, den = X.numerator, X.denominator
    while True:
        a = num // den
        q2 = q0 + a * q1
        if q2 > Q:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        num, den = den, num - a * den
    k = (Q - q0) // q1
    semi = Fraction(p0 + k * p1, q0 + k * q1)
    conv = Fraction(p1, q1)
    ds, dc = abs(semi - X), abs(conv - X)
    if ds < dc or (ds == dc and semi.denominator < conv.denominator):
        best = semi
    else:
        best = conv
    return Rational(best.numerator, best.denominator)


def schedule(n, S):
    """(P, Q) = (floor((log n)^{3S}), floor(n / (log n)^{2S}))."""
    L = math.log(n)
    P = math.floor(L ** (3 * S))
    Q = math.floor(Fraction(n) / Fraction(L ** (2 * S)))
    return P, Q


def _feasible(n, S, M):
    if n < 3:
        return False
    P, Q = schedule(n, S)
    return P >= 1 and 16 * M * P * P <= Q <= n


@dataclass(frozen=True)
class ArcParameters:
    """Parameters of the arc decomposition at scale n.

    ``relaxed`` marks parameter sets where S was lowered below the requested
    value so that 16 M P^2 <= Q <= n holds; ``S_requested`` keeps the
    original choice.
    """

    n: int
    S: float
    tau: float
    M: int
    P: int
    Q: int
    relaxed: bool = False
    S_requested: float | None = field(default=None)

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("n must be >= 2")
        if not 0 < self.tau <= 1:
            raise ParameterError("tau must lie in (0, 1]")
        if int(self.M) != self.M or self.M <= 2:
            raise ParameterError("M must be an integer > 2")
        if self.S <= 0 or (not self.relaxed and self.S <= 1):
            raise ParameterError("S must exceed 1")
        if self.P < 1:
            raise ParameterError("P must be >= 1")
        if not 16 * self.M * self.P**2 <= self.Q <= self.n:
            raise ArcConstraintError(
                f"16*M*P^2 <= Q <= n fails: P={self.P}, Q={self.Q}, n={self.n}")

    @property
    def P_n(self):
        return self.P

    @property
    def Q_n(self):
        return self.Q

    def as_dict(self):
        return {"n": self.n, "S": self.S, "tau": self.tau, "M": self.M,
                "P_n": self.P, "Q_n": self.Q, "relaxed": self.relaxed,
                "S_requested": self.S_requested}


def largest_feasible_S(n, S, M):
    """Largest S' <= S with a feasible schedule at n, or None."""
    if _feasible(n, S, M):
        return S
    lo, hi = 0.0, S
    if not _feasible(n, 1e-12, M):
        return None
    lo = 1e-12
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _feasible(n, mid, M):
            lo = mid
        else:
            hi = mid
    return lo


def minimal_feasible_n(S, M):
    """Smallest n whose schedule satisfies 16 M P^2 <= Q <= n.

    Within a run of n sharing the same P the constraint only improves as n
    grows, so it suffices to find the first P whose run ends feasibly and
    then bisect inside that run.
    """
    def P_of(n):
        return math.floor(math.log(n) ** (3 * S))

    def last_n_with(P):
        # largest n with P_of(n) <= P
        lo, hi = 3, 4
        while P_of(hi) <= P:
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if P_of(mid) <= P:
                lo = mid
            else:
                hi = mid
        return lo

    def ok(P):
        if P < 1:
            return False
        return _feasible(last_n_with(P), S, M)

    if ok(1):
        Pstar = 1
    else:
        hi = 2
        while not ok(hi):
            hi *= 2
            if hi > 2**80:
                raise ResourceError("no feasible n found")
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        Pstar = hi
    start = last_n_with(Pstar - 1) + 1 if Pstar > 1 else 3
    end = last_n_with(Pstar)
    lo, hi = start - 1, end
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(mid, S, M):
            hi = mid
        else:
            lo = mid
    return hi


def default_parameters(n, S=2.0, tau=0.9, M=4, relax=False):
    """P_n = floor((log n)^{3S}), Q_n = floor(n/(log n)^{2S}).

    Without ``relax`` an infeasible schedule raises ArcConstraintError
    reporting the smallest feasible n.  With ``relax`` S is lowered to the
    largest value for which the constraint holds and the result is marked
    relaxed.
    """
    n = int(n)
    if n < 3:
        raise ParameterError("n must be >= 3")
    if S <= 1:
        raise ParameterError("S must exceed 1")
    if _feasible(n, S, M):
        P, Q = schedule(n, S)
        return ArcParameters(n, S, tau, M, P, Q)
    if relax:
        S_eff = largest_feasible_S(n, S, M)
        if S_eff is None:
            raise ArcConstraintError(
                f"no S > 0 gives a feasible schedule at n={n} (need n >= {16 * M})")
        P, Q = schedule(n, S_eff)
        return ArcParameters(n, S_eff, tau, M, P, Q, relaxed=True, S_requested=S)
    nmin = minimal_feasible_n(S, M)
    P, Q = schedule(n, S)
    raise ArcConstraintError(
        f"16*M*P^2 <= Q <= n fails at n={n} (P={P}, Q={Q}); "
        f"the smallest feasible n for S={S}, M={M} is {nmin}", minimal_n=nmin)


@dataclass(frozen=True)
class ArcLocation:
    x: Fraction
    center: Rational
    distance: Fraction
    is_major: bool


def classify(x, params):
    """Major if |x - a/q| <= 1/Q for the best a/q with q <= P.

    For minor points the best approximation with q <= Q is recorded.
    """
    X = to_fraction(x)
    if X < 0 or X > 1:
        raise ParameterError("x must lie in [0, 1]")
    c = best_rational(X, params.P)
    dist = abs(X - c.fraction)
    if dist <= Fraction(1, params.Q):
        return ArcLocation(X, c, dist, True)
    c = best_rational(X, params.Q)
    return ArcLocation(X, c, abs(X - c.fraction), False)


def major_centers(P):
    """All a/q in [0, 1] with q <= P, as (a, q) pairs."""
    out = [(0, 1), (1, 1)]
    for q in range(2, P + 1):
        out.extend((a, q) for a in range(1, q) if math.gcd(a, q) == 1)
    return out


@dataclass(frozen=True)
class GridClassification:
    G: int
    is_major: np.ndarray
    a: np.ndarray
    q: np.ndarray
    distance: np.ndarray


def classify_grid(G, params):
    """Classify x = j/G for j = 0..G-1 in one pass over the major centers."""
    if G < 1:
        raise ParameterError("G must be >= 1")
    is_major = np.zeros(G, dtype=bool)
    A = np.full(G, -1, dtype=np.int64)
    Qa = np.full(G, -1, dtype=np.int64)
    dist = np.full(G, np.inf)
    Qn = params.Q
    for a, q in major_centers(params.P):
        c = a * G / q
        r = G / Qn
        lo = max(math.floor(c - r) - 1, 0)
        hi = min(math.ceil(c + r) + 1, G - 1)
        if hi < lo:
            continue
        j = np.arange(lo, hi + 1, dtype=np.int64)
        num = np.abs(j * q - a * G)
        inside = num * Qn <= G * q
        d = num / (G * q)
        # keep the closest center; equal distance goes to the smaller q
        better = inside & ((d < dist[j]) | ((d == dist[j]) & (q < Qa[j])))
        jj = j[better]
        is_major[jj] = True
        A[jj] = a
        Qa[jj] = q
        dist[jj] = d[better]
    return GridClassification(G, is_major, A, Qa, dist)


def farey_band(s):
    """Reduced a/q in (0, 1] with 2^{s-1} <= q < 2^s (s = 1 gives 1/1)."""
    if s < 1:
        raise ParameterError("band index s must be >= 1")
    lo, hi = 2 ** (s - 1), 2**s
    est = 3 / math.pi**2 * (hi * hi - lo * lo)
    if est > MAX_BAND_CENTERS:
        raise ResourceError(f"band {s} has about {est:.3g} centers")
    out = []
    for q in range(lo, hi):
        out.extend(Rational(a, q) for a in range(1, q + 1) if math.gcd(a, q) == 1)
    return out


@dataclass(frozen=True)
class DisjointnessAudit:
    s: int
    M: int
    ok: bool
    min_gap: Fraction | None
    required: Fraction
    witness: tuple | None

    def __bool__(self):
        return self.ok


def disjointness_audit(s, M):
    """Check that the supports of the scaled bumps in band s do not overlap.

    Each bump has half-width 1/(2 4^s M); gaps are measured on the circle.
    """
    centers = sorted(farey_band(s), key=lambda r: r.fraction)
    required = Fraction(1, 4**s * M)
    if len(centers) < 2:
        return DisjointnessAudit(s, M, True, None, required, None)
    best_gap, witness = None, None
    for i, c in enumerate(centers):
        nxt = centers[(i + 1) % len(centers)]
        gap = nxt.fraction - c.fraction
        if i == len(centers) - 1:
            gap += 1
        if best_gap is None or gap < best_gap:
            best_gap, witness = gap, (c, nxt)
    ok = best_gap > required
    return DisjointnessAudit(s, M, ok, best_gap, required, None if ok else witness)
