"""Arithmetic weights on 1..N, Dirichlet convolution and related averages.

Tables are built from a smallest-prime-factor sieve.  Every value is
stored 1-based in the sense that ``table[n]`` is the weight at ``n`` while
``table.values[n - 1]`` is the raw array slot.
"""

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, ParameterError, ResourceError

MAX_SIEVE = 2 * 10**8

# canonical ascii names; unicode spellings are accepted as aliases
WEIGHT_NAMES = (
    "d", "mu", "mu_tilde", "mu2", "lambda", "omega", "Omega",
    "theta", "delta", "one", "sigma", "J", "power",
)
PARAM_WEIGHTS = ("sigma", "J", "power")
MULTIPLICATIVE = ("d", "mu", "mu2", "lambda", "theta", "delta", "one",
                  "sigma", "J", "power")
ADDITIVE = ("omega", "Omega")

ALIASES = {
    "tau": "d", "divisor": "d",
    "μ": "mu", "mobius": "mu", "moebius": "mu",
    "μ̃": "mu_tilde", "mutilde": "mu_tilde", "mu~": "mu_tilde",
    "μ²": "mu2", "mu^2": "mu2", "abs_mu": "mu2", "squarefree": "mu2",
    "λ": "lambda", "liouville": "lambda",
    "ω": "omega", "Ω": "Omega", "bigomega": "Omega",
    "θ": "theta", "2^omega": "theta",
    "δ": "delta", "identity": "delta",
    "𝟙": "one", "1": "one", "ones": "one",
    "σ": "sigma", "sigma_s": "sigma",
    "J_s": "J", "jordan": "J",
    "ς": "power", "varsigma": "power", "id_s": "power",
}


def canonical_name(name):
    if name in WEIGHT_NAMES:
        return name
    key = ALIASES.get(name)
    if key is None:
        key = ALIASES.get(name.lower())
    if key is None and name.lower() in WEIGHT_NAMES:
        key = name.lower()
    if key is None:
        raise ParameterError(f"unknown arithmetic weight {name!r}")
    return key


def _harmonic_gamma_richardson(kmin=4, kmax=13):
    # a_k = H_n - log n at n = 2**k; the error expands in powers of 1/n
    col = []
    for k in range(kmin, kmax + 1):
        n = 2**k
        col.append(math.fsum(1.0 / m for m in range(1, n + 1)) - math.log(n))
    table = [col]
    for j in range(1, len(col)):
        prev = table[-1]
        f = 2.0**j - 1.0
        table.append([prev[i + 1] + (prev[i + 1] - prev[i]) / f
                      for i in range(len(prev) - 1)])
    return table[-1][0]


EULER_GAMMA = _harmonic_gamma_richardson()
if abs(EULER_GAMMA - 0.5772156649) > 1e-9:
    raise RuntimeError("Euler-Mascheroni extrapolation failed its self-check")


@dataclass(eq=False, frozen=True)
class Factorization:
    """Per-n smallest prime p, its exponent e, p**e and the cofactor n // p**e."""

    N: int
    spf: np.ndarray
    exp: np.ndarray
    ppow: np.ndarray
    cofactor: np.ndarray


@lru_cache(maxsize=4)
def factorization(N):
    if N < 1:
        raise ParameterError("N must be >= 1")
    if N > MAX_SIEVE:
        raise ResourceError(f"sieve size {N} exceeds the guard {MAX_SIEVE}")
    idt = np.int32 if N < 2**31 - 1 else np.int64
    spf = np.zeros(N + 1, dtype=idt)
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            seg = spf[p * p::p]
            seg[seg == 0] = p
    n = np.arange(N + 1, dtype=idt)
    zero = spf == 0
    spf[zero] = n[zero]
    spf[:2] = 1

    e = np.zeros(N + 1, dtype=np.int8)
    pe = np.ones(N + 1, dtype=idt)
    idx = np.arange(2, N + 1)
    rest = n[2:].copy()
    p = spf[2:]
    e[2:] = 1
    pe[2:] = p
    rest //= p
    live = np.nonzero(rest % p == 0)[0]
    while live.size:
        gi = idx[live]
        e[gi] += 1
        pe[gi] *= spf[gi]
        rest[live] //= spf[gi]
        live = live[rest[live] % spf[gi] == 0]
    cof = n // pe
    for a in (spf, e, pe, cof):
        a.setflags(write=False)
    return Factorization(N, spf, e, pe, cof)


def _multiplicative(N, fpp, dtype):
    """Evaluate f(n) = prod f(p**e) from a vectorized prime-power rule."""
    fz = factorization(N)
    out = np.ones(N + 1, dtype=dtype)
    if N >= 2:
        out[2:] = fpp(fz.spf[2:].astype(np.int64), fz.exp[2:].astype(np.int64))
        c = fz.cofactor.astype(np.int64)
        live = np.nonzero(c[2:] > 1)[0] + 2
        while live.size:
            cc = c[live]
            out[live] *= fpp(fz.spf[cc].astype(np.int64), fz.exp[cc].astype(np.int64))
            c[live] = cc // fz.ppow[cc]
            live = live[c[live] > 1]
    return out[1:]


def _additive(N, gpp, dtype):
    fz = factorization(N)
    out = np.zeros(N + 1, dtype=dtype)
    if N >= 2:
        out[2:] = gpp(fz.spf[2:].astype(np.int64), fz.exp[2:].astype(np.int64))
        c = fz.cofactor.astype(np.int64)
        live = np.nonzero(c[2:] > 1)[0] + 2
        while live.size:
            cc = c[live]
            out[live] += gpp(fz.spf[cc].astype(np.int64), fz.exp[cc].astype(np.int64))
            c[live] = cc // fz.ppow[cc]
            live = live[c[live] > 1]
    return out[1:]


def _exact_power_ok(N, s):
    """True when n**s stays an exact int64 on 1..N (with headroom for sums)."""
    if s < 0 or float(s) != int(s):
        return False
    return (N ** int(s)) * 64 < 2**62


def _sigma_pp(s, exact):
    if exact:
        si = int(s)

        def f(p, e):
            ps = p**si
            acc = np.ones_like(p)
            term = np.ones_like(p)
            for j in range(1, int(e.max()) + 1):
                term = np.where(e >= j, term * ps, term)
                acc = acc + np.where(e >= j, term, 0)
            return acc
        return f

    def f(p, e):
        lp = np.log(p.astype(float))
        return np.expm1((e + 1) * s * lp) / np.expm1(s * lp)
    return f


def _jordan_pp(s, exact):
    if exact:
        si = int(s)

        def f(p, e):
            return p ** (si * e) - p ** (si * (e - 1))
        return f

    def f(p, e):
        lp = np.log(p.astype(float))
        return -np.exp(s * e * lp) * np.expm1(-s * lp)
    return f


def _compute(name, N, s):
    if name == "d":
        return _multiplicative(N, lambda p, e: e + 1, np.int64)
    if name == "mu":
        return _multiplicative(N, lambda p, e: np.where(e == 1, -1, 0), np.int64)
    if name == "mu2":
        return _multiplicative(N, lambda p, e: np.where(e == 1, 1, 0), np.int64)
    if name == "lambda":
        return _multiplicative(N, lambda p, e: 1 - 2 * (e % 2), np.int64)
    if name == "theta":
        return _multiplicative(N, lambda p, e: np.full_like(e, 2), np.int64)
    if name == "omega":
        return _additive(N, lambda p, e: np.ones_like(e), np.int64)
    if name == "Omega":
        return _additive(N, lambda p, e: e, np.int64)
    if name == "one":
        return np.ones(N, dtype=np.int64)
    if name == "delta":
        out = np.zeros(N, dtype=np.int64)
        out[0] = 1
        return out
    if name == "mu_tilde":
        out = np.zeros(N, dtype=np.int64)
        r = math.isqrt(N)
        mu = _compute("mu", max(r, 1), None)
        out[np.arange(1, r + 1) ** 2 - 1] = mu[:r]
        return out
    if s is None:
        raise ParameterError(f"weight {name!r} needs the parameter s")
    exact = _exact_power_ok(N, s)
    if name == "power":
        n = np.arange(1, N + 1, dtype=np.int64)
        if exact:
            return n ** int(s)
        return np.exp(s * np.log(n.astype(float)))
    if name == "sigma":
        if s == 0:
            return _compute("d", N, None)
        return _multiplicative(N, _sigma_pp(s, exact), np.int64 if exact else float)
    if name == "J":
        if s == 0:
            return _compute("delta", N, None)
        return _multiplicative(N, _jordan_pp(s, exact), np.int64 if exact else float)
    raise ParameterError(f"unknown arithmetic weight {name!r}")


@dataclass(eq=False, frozen=True)
class ArithmeticTable:
    """Values a(1..N) of an arithmetic weight, with cached partial sums."""

    name: str
    N: int
    values: np.ndarray
    s: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.shape[0] != self.N:
            raise ParameterError("values must be a vector of length N")
        if v.flags.writeable:
            v = v.copy()
            v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.N

    def __getitem__(self, n):
        if isinstance(n, slice):
            raise TypeError("use .values for slicing")
        if not 1 <= n <= self.N:
            raise IndexError(f"index {n} outside 1..{self.N}")
        return self.values[n - 1].item()

    @property
    def is_exact(self):
        return np.issubdtype(self.values.dtype, np.integer)

    @property
    def summatory(self):
        """Partial sums A(n) = sum_{k<=n} a(k) for n = 1..N."""
        got = self.__dict__.get("_summatory")
        if got is None:
            got = np.cumsum(self.values)
            got.setflags(write=False)
            object.__setattr__(self, "_summatory", got)
        return got

    @property
    def abs_summatory(self):
        """W(n) = sum_{k<=n} |a(k)|, the normalizer of weighted averages."""
        got = self.__dict__.get("_abs_summatory")
        if got is None:
            got = np.cumsum(np.abs(self.values))
            got.setflags(write=False)
            object.__setattr__(self, "_abs_summatory", got)
        return got

    def A(self, n):
        return self.summatory[n - 1].item() if n >= 1 else 0

    def W(self, n):
        return self.abs_summatory[n - 1].item() if n >= 1 else 0

    def truncate(self, N):
        if N > self.N:
            raise ResourceError(f"table {self.name} only reaches {self.N}")
        return ArithmeticTable(self.name, N, self.values[:N], self.s)

    def rows(self):
        S = self.summatory
        for n in range(1, self.N + 1):
            yield n, self.values[n - 1].item(), S[n - 1].item()

    def to_csv(self, stream):
        from .io import write_csv
        write_csv(stream, ["n", "value", "summatory"], self.rows())

    @classmethod
    def from_csv(cls, stream, name="table", s=None):
        import csv
        rd = csv.reader(stream)
        head = next(rd)
        if head[:2] != ["n", "value"]:
            raise ParameterError("expected a CSV with columns n,value")
        raw = [r[1] for r in rd]
        try:
            vals = np.array([int(x) for x in raw], dtype=np.int64)
        except ValueError:
            vals = np.array([float(x) for x in raw])
        return cls(name, len(vals), vals, s)


def _cache_path(name, N, s):
    root = os.environ.get("ERGW_CACHE_DIR")
    if not root:
        return None
    tag = "none" if s is None else format(float(s), ".17g")
    return Path(root) / f"{name}-{N}-{tag}.npy"


@lru_cache(maxsize=32)
def _sieve_cached(name, N, s):
    path = _cache_path(name, N, s)
    if path is not None and path.exists():
        vals = np.load(path, allow_pickle=False)
        if vals.shape == (N,):
            return ArithmeticTable(name, N, vals, s)
    vals = _compute(name, N, s)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, vals, allow_pickle=False)
        os.replace(tmp, path)
    return ArithmeticTable(name, N, vals, s)


def sieve(name, N, s=None):
    """Tabulate the named weight on 1..N.

    Names: d, mu, mu_tilde, mu2, lambda, omega, Omega, theta, delta, one,
    and the one-parameter families sigma (sum of s-th powers of divisors),
    J (Jordan totient) and power (n**s).  Integer s that cannot overflow is
    kept exact in int64; other s use float64.
    """
    key = canonical_name(name)
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    N = int(N)
    if N > MAX_SIEVE:
        raise ResourceError(f"sieve size {N} exceeds the guard {MAX_SIEVE}")
    if key in PARAM_WEIGHTS:
        if s is None:
            raise ParameterError(f"weight {key!r} needs the parameter s")
        s = float(s)
        if not math.isfinite(s):
            raise ParameterError("s must be finite")
    else:
        s = None
    return _sieve_cached(key, N, s)


def dirichlet_convolve(a, b):
    """(a * b)(n) = sum_{d | n} a(d) b(n/d) on the common range 1..N.

    The divisor lattice is walked from the sparser operand, so the cost is
    O(N log N) at worst and much less when one side is supported on squares.
    """
    if a.N != b.N:
        raise ParameterError("operands must share the same N")
    N = a.N
    exact = a.is_exact and b.is_exact
    dtype = np.int64 if exact else np.result_type(a.values.dtype, b.values.dtype, float)
    out = np.zeros(N, dtype=dtype)
    sa = np.flatnonzero(a.values)
    sb = np.flatnonzero(b.values)
    if sa.size <= sb.size:
        lead, other, support = a.values, b.values, sa
    else:
        lead, other, support = b.values, a.values, sb
    for i in support:
        d = int(i) + 1
        out[d - 1::d] += lead[i] * other[: N // d]
    s = a.s if a.s is not None else b.s
    return ArithmeticTable(f"{a.name}*{b.name}", N, out, s)


def _mobius_int(n):
    if n < 1:
        raise ParameterError("mobius needs n >= 1")
    res = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            res = -res
        p += 1
    if n > 1:
        res = -res
    return res


def _divisors(n):
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


@dataclass(frozen=True)
class SeriesTarget:
    """Truncated value of sum_m b(m) / m**alpha with an explicit tail bound."""

    value: float
    terms: int
    tail_bound: float
    rigorous: bool
    tol_met: bool


def series_target(b, alpha, tol=1e-6, max_terms=10**7):
    """Evaluate sum_m b(m)/m**alpha to absolute accuracy ``tol`` when possible.

    Named weights with a known majorant get a rigorous tail bound; for other
    tables a power envelope |b(m)| <= C m**beta is fitted from the data and
    the resulting bound is flagged as heuristic.
    """
    name = b.name
    if name == "delta":
        return SeriesTarget(float(b.values[0]), 1, 0.0, True, True)
    if name == "mu_tilde":
        # b(r^2) = mu(r), so the series is sum_r mu(r) / r**(2 alpha)
        if 2 * alpha <= 1:
            raise ParameterError("series diverges for alpha <= 1/2")
        R = math.ceil((tol * (2 * alpha - 1)) ** (1.0 / (1 - 2 * alpha)))
        R = max(R, 2)
        capped = R > max_terms
        R = min(R, max_terms)
        mu = sieve("mu", R).values.astype(float)
        r = np.arange(1, R + 1, dtype=float)
        val = math.fsum(mu * r ** (-2 * alpha))
        tail = R ** (1 - 2 * alpha) / (2 * alpha - 1)
        return SeriesTarget(val, R * R, tail, True, not capped and tail <= tol)
    if name in ("mu", "lambda", "mu2", "one", "power"):
        beta = 0.0 if name != "power" else float(b.s)
        if alpha <= beta + 1:
            raise ParameterError("series diverges for this alpha")
        M = math.ceil((tol * (alpha - beta - 1)) ** (1.0 / (1 + beta - alpha)))
        M = max(M, 2)
        capped = M > max_terms
        M = min(M, max_terms)
        vals = sieve(name, M, b.s).values.astype(float)
        m = np.arange(1, M + 1, dtype=float)
        val = math.fsum(vals * m ** (-alpha))
        tail = M ** (1 + beta - alpha) / (alpha - beta - 1)
        return SeriesTarget(val, M, tail, True, not capped and tail <= tol)
    # generic table: empirical envelope from the available data
    vals = np.abs(b.values.astype(float))
    m = np.arange(1, b.N + 1, dtype=float)
    nz = (vals > 0) & (m > 1)
    C = max(1.0, float(vals[0]))
    beta = float(np.max(np.log(vals[nz] / C) / np.log(m[nz]))) if nz.any() else 0.0
    beta = max(beta, 0.0)
    if alpha <= beta + 1:
        raise ParameterError("series appears divergent for this alpha")
    val = math.fsum(b.values.astype(float) * m ** (-alpha))
    tail = C * b.N ** (1 + beta - alpha) / (alpha - beta - 1)
    return SeriesTarget(val, b.N, tail, False, tail <= tol)


@dataclass(frozen=True)
class ConvolutionLimit:
    """Ratios C(n)/A(n) for c = a * b against the series target."""

    alpha: float
    n_grid: tuple
    ratios: tuple
    target: SeriesTarget

    @property
    def gaps(self):
        return tuple(abs(r - self.target.value) for r in self.ratios)

    @property
    def final_gap(self):
        return self.gaps[-1]


def _tail_ratio(b, alpha):
    """Ratio of the last two dyadic blocks of sum |b(m)| / m**alpha."""
    N = b.N
    if N < 8:
        return 0.0
    m = np.arange(1, N + 1, dtype=float)
    t = np.abs(b.values.astype(float)) * m ** (-alpha)
    hi = t[N // 2:].sum()
    lo = t[N // 4: N // 2].sum()
    if lo == 0:
        return 0.0 if hi == 0 else math.inf
    return hi / lo


def convolution_limit(a, b, alpha, n_grid=None, tol=1e-6, max_terms=10**7):
    """Compare (sum_{n<=x} (a*b)(n)) / (sum_{n<=x} a(n)) with sum b(m)/m**alpha.

    ``a`` must be non-negative; the caller asserts that A(x) is regularly
    varying of index alpha.  A crude dyadic tail test rejects series that
    visibly diverge.
    """
    if a.N != b.N:
        raise ParameterError("operands must share the same N")
    if np.any(a.values < 0):
        raise ParameterError("the averaging weight must be non-negative")
    if _tail_ratio(b, alpha) > 0.9:
        raise ParameterError("sum |b(m)|/m**alpha appears divergent")
    N = a.N
    if n_grid is None:
        n_grid = [2**k for k in range(1, N.bit_length()) if 2**k <= N]
        if not n_grid or n_grid[-1] != N:
            n_grid.append(N)
    n_grid = [int(n) for n in n_grid]
    if any(n < 1 or n > N for n in n_grid):
        raise ParameterError("grid points must lie in 1..N")
    c = dirichlet_convolve(a, b)
    A = a.summatory
    C = c.summatory
    ratios = []
    for n in n_grid:
        if A[n - 1] == 0:
            raise DegenerateInputError(f"sum of the weight vanishes at n={n}")
        ratios.append(float(C[n - 1]) / float(A[n - 1]))
    target = series_target(b, alpha, tol, max_terms)
    return ConvolutionLimit(float(alpha), tuple(n_grid), tuple(ratios), target)


def moment_ratio(table, m, n):
    """(sum_{k<=n} a(k)**m) / (n * (A(n)/n)**m)."""
    if n < 1 or n > table.N:
        raise ParameterError("n outside the table range")
    v = table.values[:n].astype(float)
    A = float(table.summatory[n - 1])
    if A == 0:
        raise DegenerateInputError("A(n) vanishes")
    num = math.fsum(v**m)
    return num / (n * (A / n) ** m)


@dataclass(frozen=True)
class TuranKubilius:
    """Both sides of the Turan-Kubilius variance inequality."""

    n: int
    lhs: float
    rhs: float
    mean: float

    @property
    def degenerate(self):
        return self.rhs == 0

    @property
    def ratio(self):
        if self.rhs == 0:
            raise DegenerateInputError("sum of g(p^a)^2/p^a vanishes")
        return self.lhs / self.rhs


def turan_kubilius_defect(g, n):
    """Variance of an additive g about E(n) = sum g(p^a)/(p^a (1 - 1/p)).

    Returns lhs = (1/n) sum_{k<=n} |g(k) - E(n)|**2 and
    rhs = sum_{p^a <= n} |g(p^a)|**2 / p^a.
    """
    if n < 1 or n > g.N:
        raise ParameterError("n outside the table range")
    fz = factorization(n)
    k = np.arange(2, n + 1)
    is_pp = fz.ppow[2:] == k
    pp = k[is_pp]
    p = fz.spf[2:][is_pp].astype(float)
    gv = g.values.astype(float)
    gp = gv[pp - 1]
    E = math.fsum(gp / (pp * (1 - 1 / p)))
    lhs = math.fsum((gv[:n] - E) ** 2) / n
    rhs = math.fsum(gp**2 / pp)
    return TuranKubilius(int(n), lhs, rhs, E)


def delange_ratio(g, m, x):
    """(sum_{n<=x} g(n)**m) / (x (log log x)**m), with log log x read as log log(2 + x)."""
    x = int(x)
    if x < 1 or x > g.N:
        raise ParameterError("x outside the table range")
    ll = math.log(math.log(2 + x))
    return math.fsum(g.values[:x].astype(float) ** m) / (x * ll**m)


def coprime_sum_inversion(F, q):
    """Both sides of sum_{(a,q)=1} F(a/q) = sum_{d|q} mu(q/d) sum_{m<=d} F(m/d).

    F is called with exact ``Fraction`` arguments in [0, 1].
    """
    if q < 1:
        raise ParameterError("q must be >= 1")
    lhs = sum(F(Fraction(a, q)) for a in range(1, q + 1) if math.gcd(a, q) == 1)
    rhs = 0
    for d in _divisors(q):
        mu = _mobius_int(q // d)
        if mu:
            rhs += mu * sum(F(Fraction(m, d)) for m in range(1, d + 1))
    return lhs, rhs


def divisor_summatory(n):
    """Exact D(n) = sum_{k<=n} d(k) by the hyperbola identity."""
    n = int(n)
    if n < 1:
        return 0
    r = math.isqrt(n)
    return 2 * sum(n // k for k in range(1, r + 1)) - r * r


def zeta2(terms=10**5):
    """zeta(2) from partial sums of 1/m^2 plus the Euler-Maclaurin tail.

    With M terms the neglected remainder is of order 1/(30 M^5).
    """
    M = int(terms)
    m = np.arange(1, M + 1, dtype=float)
    head = math.fsum(1.0 / (m * m))
    tail = 1.0 / M - 1.0 / (2.0 * M * M) + 1.0 / (6.0 * M**3)
    return head + tail
