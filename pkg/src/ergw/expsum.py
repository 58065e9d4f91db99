"""Divisor and Mobius exponential sums D_n(x) = sum_{k<=n} d(k) e(kx).

Three routes for the divisor sum:

* ``direct``: compensated summation over a precomputed d table, O(n);
* ``hyperbola``: the Dirichlet hyperbola split into O(sqrt n) closed-form
  geometric sums E_L(y) = sum_{l<=L} e(l y);
* ``batch``: all x = j/G at once by folding d(k) modulo G and one FFT.

Rational arguments passed as ``Fraction`` are reduced exactly before any
trigonometric call.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import EULER_GAMMA, divisor_summatory, sieve
from .errors import ParameterError, PreconditionError, ResourceError

TWO_PI = 2.0 * math.pi
MAX_DIRECT = 10**8
MAX_GRID = 2**26
_TAYLOR_CUT = 1e-8


@dataclass(frozen=True)
class ExpSumResult:
    n: int
    x: object
    value: complex
    method: str

    @property
    def modulus(self):
        return abs(self.value)


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer")
    return int(n)


def _as_exact(x):
    """Return (a, q) if x is an exact rational, else None."""
    if isinstance(x, Fraction):
        return x.numerator, x.denominator
    if isinstance(x, (int, np.integer)):
        return int(x), 1
    return None


def _centered(theta):
    """Reduce real theta to [-1/2, 1/2)."""
    return theta - np.floor(theta + 0.5)


def geometric_sum(L, theta):
    """E_L(theta) = sum_{l=1}^{L} e(l theta), vectorized in L and theta.

    Uses e^{i pi theta (L+1)} sin(pi L theta)/sin(pi theta), switching to a
    second-order Taylor expansion where |sin(pi theta)| < 1e-8.
    """
    L = np.asarray(L, dtype=float)
    th = _centered(np.asarray(theta, dtype=float))
    s = np.sin(np.pi * th)
    phase = np.exp(1j * np.pi * th * (L + 1))
    small = np.abs(s) < _TAYLOR_CUT
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(small, 0.0, np.sin(np.pi * L * th) / np.where(small, 1.0, s))
    u = (np.pi * th) ** 2
    taylor = L * (1.0 - u * (L * L - 1.0) / 6.0)
    return phase * np.where(small, taylor, ratio)


def _geometric_exact(L, r, q):
    """E_L(r/q) for integer residues r, with the phase reduced exactly."""
    L = np.asarray(L, dtype=np.int64)
    r = np.asarray(r, dtype=np.int64) % q
    # centered numerator u with u/q in [-1/2, 1/2)
    u = np.where(2 * r >= q, r - q, r)
    th = u / q
    s = np.sin(np.pi * th)
    ang = (u * ((L + 1) % (2 * q))) % (2 * q)
    phase = np.exp(1j * np.pi * ang / q)
    zero = u == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        Lt = (L * u) % (2 * q)
        ratio = np.sin(np.pi * Lt / q) / np.where(zero, 1.0, s)
    return phase * np.where(zero, L.astype(float), ratio)


def _fsum_complex(values):
    v = np.asarray(values)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def _phases(n, x):
    """e(kx) for k = 1..n."""
    k = np.arange(1, n + 1, dtype=np.int64)
    ex = _as_exact(x)
    if ex is not None:
        a, q = ex
        r = (k * (a % q)) % q
        return np.exp(1j * TWO_PI * r / q)
    t = np.mod(k * float(x), 1.0)
    return np.exp(1j * TWO_PI * t)


def divisor_table(n):
    if n > MAX_DIRECT:
        raise ResourceError(f"n={n} exceeds the direct-sum guard {MAX_DIRECT}")
    return sieve("d", n)


def direct(n, x, table=None):
    """D_n(x) by compensated summation over d(1..n)."""
    n = _check_n(n)
    if table is None:
        table = divisor_table(n)
    if table.N < n:
        raise ResourceError(f"divisor table reaches {table.N} < n={n}")
    d = table.values[:n].astype(float)
    return ExpSumResult(n, x, _fsum_complex(d * _phases(n, x)), "direct")


def hyperbola(n, x):
    """D_n(x) = 2 sum_{k<=m} E_{n//k}(kx) - sum_{k<=m} E_m(kx), m = isqrt(n)."""
    n = _check_n(n)
    m = math.isqrt(n)
    k = np.arange(1, m + 1, dtype=np.int64)
    ex = _as_exact(x)
    if ex is not None:
        a, q = ex
        r = k * (a % q)
        first = _geometric_exact(n // k, r, q)
        second = _geometric_exact(np.full(m, m), r, q)
    else:
        th = np.mod(k * float(x), 1.0)
        first = geometric_sum(n // k, th)
        second = geometric_sum(np.full(m, m), th)
    val = 2.0 * _fsum_complex(first) - _fsum_complex(second)
    return ExpSumResult(n, x, val, "hyperbola")


def evaluate(n, x, method="hyperbola", table=None):
    if method == "direct":
        return direct(n, x, table)
    if method == "hyperbola":
        return hyperbola(n, x)
    if method == "batch":
        ex = _as_exact(x)
        if ex is None:
            raise ParameterError("batch evaluation needs x = j/G")
        a, q = ex
        return batch(n, q, table)[a % q]
    raise ParameterError(f"unknown method {method!r}")


class ExpSumBatch:
    """D_n(j/G) for j = 0..G-1, stored as one complex array."""

    def __init__(self, n, G, values, label="divisor"):
        self.n = n
        self.G = G
        self.values = values
        self.label = label

    def __len__(self):
        return self.G

    def __getitem__(self, j):
        return ExpSumResult(self.n, Fraction(j, self.G), complex(self.values[j]), "batch")

    def __iter__(self):
        for j in range(self.G):
            yield self[j]


def fold(weights, G):
    """c_r = sum_{k = r mod G} w_k for weights indexed k = 1..len(weights)."""
    w = np.asarray(weights)
    dt = complex if np.iscomplexobj(w) else float
    # slot k of the padded array holds w_k, so rows of length G are residues
    rows = (len(w) + 1 + G - 1) // G
    buf = np.zeros(rows * G, dtype=dt)
    buf[1:len(w) + 1] = w
    return buf.reshape(rows, G).sum(axis=0)


def grid_transform(weights, G):
    """sum_k w_k e(k j / G) for all j, from the folded weights."""
    if G < 1 or G > MAX_GRID:
        raise ResourceError(f"grid size {G} outside 1..{MAX_GRID}")
    return G * np.fft.ifft(fold(weights, G))


def batch(n, G, table=None):
    """D_n(j/G) for every j by one FFT of the residues of d mod G."""
    n = _check_n(n)
    if G < 1 or G > MAX_GRID:
        raise ResourceError(f"grid size {G} outside 1..{MAX_GRID}")
    if table is None:
        table = divisor_table(n)
    if table.N < n:
        raise ResourceError(f"divisor table reaches {table.N} < n={n}")
    return ExpSumBatch(n, G, grid_transform(table.values[:n], G))


def rational_main_term(n, q):
    """(n/q) (log n - 2 log q + 2 gamma - 1)."""
    return n / q * (math.log(n) - 2 * math.log(q) + 2 * EULER_GAMMA - 1)


def residue_sums(n, q, table=None):
    """S_r = sum_{k<=n, k = r mod q} d(k), exact integers."""
    if table is None:
        table = divisor_table(n)
    k = np.arange(1, n + 1) % q
    return np.bincount(k, weights=table.values[:n], minlength=q)


@dataclass(frozen=True)
class RationalDiagnostic:
    n: int
    a: int
    q: int
    value: complex
    main: float
    defect: float

    @property
    def normalized(self):
        return self.defect / ((math.sqrt(self.n) + self.q) * math.log(self.q + 1))


def rational_diagnostic(n, a, q, table=None, sums=None):
    """Compare D_n(a/q) with the rational main term."""
    n = _check_n(n)
    if q < 1 or not 0 <= a <= q or math.gcd(a, q) != 1:
        raise ParameterError("need q >= 1, 0 <= a <= q and gcd(a, q) = 1")
    if sums is None:
        sums = residue_sums(n, q, table)
    r = np.arange(q)
    val = _fsum_complex(sums * np.exp(1j * TWO_PI * ((r * a) % q) / q))
    main = rational_main_term(n, q)
    return RationalDiagnostic(n, a, q, val, main, abs(val - main))


def rational_scan(n_values, q_max, table=None):
    """All rational diagnostics for q <= q_max and each n, as a list."""
    n_values = [_check_n(n) for n in n_values]
    if table is None:
        table = divisor_table(max(n_values))
    out = []
    for n in n_values:
        for q in range(1, q_max + 1):
            sums = residue_sums(n, q, table)
            for a in range(0 if q == 1 else 1, q):
                if math.gcd(a, q) == 1:
                    out.append(rational_diagnostic(n, a, q, sums=sums))
    return out


def minor_arc_bound(n, P, Q):
    """n log n / P + sqrt(n) log n + Q log n + n^2 log n / (P Q)."""
    L = math.log(n)
    return n * L / P + math.sqrt(n) * L + Q * L + n * n * L / (P * Q)


def minor_arc_diagnostic(n, x, P, Q):
    """|D_n(x)| divided by the minor-arc bound; x must be on a minor arc."""
    from .arcs import best_rational, to_fraction
    n = _check_n(n)
    if P < 1 or Q < 1:
        raise ParameterError("P and Q must be positive")
    X = to_fraction(x)
    c = best_rational(X, P)
    if abs(X - c.fraction) <= Fraction(1, Q):
        raise PreconditionError(
            f"x lies within 1/Q of {c.a}/{c.q} with q <= P (a major arc)")
    return abs(hyperbola(n, x).value) / minor_arc_bound(n, P, Q)


def mobius_expsum(n, x, table=None):
    """M_n(x) = sum_{k<=n} mu(k) e(kx), by compensated direct summation."""
    n = _check_n(n)
    if table is None:
        if n > MAX_DIRECT:
            raise ResourceError(f"n={n} exceeds the direct-sum guard")
        table = sieve("mu", n)
    mu = table.values[:n].astype(float)
    return ExpSumResult(n, x, _fsum_complex(mu * _phases(n, x)), "direct")


def mobius_sup(n, G):
    """max_j |M_n(j/G)| over the grid, via fold and FFT."""
    n = _check_n(n)
    mu = sieve("mu", n).values.astype(float)
    return float(np.max(np.abs(grid_transform(mu, G))))


def mobius_decay(n, G, h):
    """(log n)^h / n * max_j |M_n(j/G)|."""
    return math.log(n) ** h / n * mobius_sup(n, G)


def harmonic_gamma(n):
    """sum_{k<=n} 1/k - log n, which decreases to Euler's constant."""
    n = _check_n(n)
    return math.fsum(1.0 / np.arange(1, n + 1, dtype=float)) - math.log(n)


def divisor_sum(n):
    """D_n = D_n(0), exact."""
    return divisor_summatory(n)
