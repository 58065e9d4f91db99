"""Finitely supported signals on Z, kernel families and maximal inequalities.

Convolution follows (K * g)(j) = sum_k K(k) g(j - k).  With that convention
the ergodic average along an orbit equals the convolution of the orbit
sequence with the reflected kernel, which is what ``transference_check``
verifies.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .arith import divisor_summatory, sieve
from .errors import DegenerateInputError, ParameterError, ResourceError

MAX_WINDOW = 2**28
FFT_THRESHOLD = 2**14


@dataclass(eq=False, frozen=True)
class LatticeSignal:
    """values[i] is the value at position offset + i; zero elsewhere."""

    offset: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1:
            raise ParameterError("signal values must be one-dimensional")
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "values", v)

    @classmethod
    def delta(cls, j=0):
        return cls(j, np.ones(1))

    def __len__(self):
        return len(self.values)

    @property
    def start(self):
        return self.offset

    @property
    def stop(self):
        return self.offset + len(self.values)

    def at(self, j):
        i = j - self.offset
        if 0 <= i < len(self.values):
            return self.values[i]
        return 0.0

    def norm(self, p=2):
        a = np.abs(self.values)
        if p == math.inf or p == "inf":
            return float(a.max()) if a.size else 0.0
        if p <= 0:
            raise ParameterError("p must be positive")
        if not a.size:
            return 0.0
        m = a.max()
        if m == 0:
            return 0.0
        return float(m * np.sum((a / m) ** p) ** (1.0 / p))

    def window(self, start, stop):
        """Values on start..stop-1 as a dense array."""
        out = np.zeros(stop - start, dtype=self.values.dtype)
        lo = max(start, self.start)
        hi = min(stop, self.stop)
        if hi > lo:
            out[lo - start:hi - start] = self.values[lo - self.offset:hi - self.offset]
        return out

    def _combine(self, other, op):
        lo = min(self.start, other.start)
        hi = max(self.stop, other.stop)
        return LatticeSignal(lo, op(self.window(lo, hi), other.window(lo, hi)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return LatticeSignal(self.offset, self.values * c)

    __rmul__ = __mul__

    def reflected(self):
        """The signal j -> g(-j)."""
        return LatticeSignal(-(self.stop - 1), self.values[::-1].copy())

    def to_json(self):
        v = self.values
        if np.iscomplexobj(v):
            vals = [[float(z.real), float(z.imag)] for z in v]
        else:
            vals = [float(z) for z in v]
        return json.dumps({"offset": self.offset, "values": vals})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        vals = obj["values"]
        if vals and isinstance(vals[0], list):
            arr = np.array([complex(a, b) for a, b in vals])
        else:
            arr = np.array(vals, dtype=float)
        return cls(int(obj["offset"]), arr)


def _fft_convolve(a, b):
    size = len(a) + len(b) - 1
    nfft = 1 << (size - 1).bit_length()
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return np.fft.ifft(np.fft.fft(a, nfft) * np.fft.fft(b, nfft))[:size]
    return np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:size]


def convolve(kernel, signal, method="auto"):
    """(K * g)(j) = sum_k K(k) g(j - k) on the full output window."""
    size = len(kernel) + len(signal) - 1
    if size > MAX_WINDOW:
        raise ResourceError(f"output window of {size} points exceeds {MAX_WINDOW}")
    if len(kernel) == 0 or len(signal) == 0:
        return LatticeSignal(kernel.offset + signal.offset, np.zeros(0))
    if method == "auto":
        method = "fft" if min(len(kernel), len(signal)) > 64 and size > FFT_THRESHOLD else "direct"
    if method == "direct":
        vals = np.convolve(kernel.values, signal.values)
    elif method == "fft":
        vals = _fft_convolve(kernel.values, signal.values)
    else:
        raise ParameterError(f"unknown convolution method {method!r}")
    return LatticeSignal(kernel.offset + signal.offset, vals)


class KernelFamily:
    """A map n -> K_n of finitely supported kernels."""

    name = "kernel"

    def __call__(self, n):
        raise NotImplementedError


class WeightedFamily(KernelFamily):
    """K_n = (1/W_n) sum_{k<=n} w(k) delta_k with W_n = sum_{k<=n} |w(k)|."""

    def __init__(self, table):
        self.table = table
        self.name = table.name

    def __call__(self, n):
        n = int(n)
        if n < 1:
            raise ParameterError("n must be >= 1")
        if n > self.table.N:
            raise ResourceError(f"weight table reaches {self.table.N} < n={n}")
        W = float(self.table.abs_summatory[n - 1])
        if W == 0:
            raise DegenerateInputError(f"weights vanish on 1..{n}")
        return LatticeSignal(1, self.table.values[:n].astype(float) / W)


class DivisorFamily(WeightedFamily):
    """Divisor averages; also supplies an l2 bound for kernel differences."""

    def __init__(self, N):
        super().__init__(sieve("d", N))
        self.name = "d"

    @staticmethod
    def square_sum_bound(x):
        """sum_{k<=x} d(k)^2 <= x (1 + log x)^3, since d^2 <= d_4."""
        if x < 1:
            return 0.0
        return x * (1 + math.log(x)) ** 3

    def diff_l2_bound(self, N, M):
        """Upper bound for ||K_N - K_M||_2^2 with M < N, without a table.

        ||K_N - K_M||^2 = (1/D_M - 1/D_N)^2 sum_{k<=M} d^2
                          + (1/D_N^2) sum_{M<k<=N} d^2.
        """
        if M > N:
            N, M = M, N
        DN, DM = divisor_summatory(N), divisor_summatory(M)
        head = (1.0 / DM - 1.0 / DN) ** 2 * self.square_sum_bound(M)
        return head + self.square_sum_bound(N) / DN**2


class CesaroFamily(KernelFamily):
    """kappa_n = (1/n) sum_{k<=n} delta_k."""

    name = "one"

    def __call__(self, n):
        n = int(n)
        if n < 1:
            raise ParameterError("n must be >= 1")
        return LatticeSignal(1, np.full(n, 1.0 / n))


class ConstantFamily(KernelFamily):
    """The same kernel for every n."""

    def __init__(self, kernel, name="constant"):
        self.kernel = kernel
        self.name = name

    def __call__(self, n):
        return self.kernel


class FunctionFamily(KernelFamily):
    def __init__(self, fn, name="custom"):
        self.fn = fn
        self.name = name

    def __call__(self, n):
        return self.fn(n)


def family(name, N=None, s=None):
    """Kernel family by weight name; ``one`` gives Cesaro averages."""
    from .arith import canonical_name
    key = canonical_name(name)
    if key == "one":
        return CesaroFamily()
    if N is None:
        raise ParameterError("a table size N is needed for weighted families")
    if key == "d":
        return DivisorFamily(N)
    return WeightedFamily(sieve(key, N, s))


def _accumulate_max(acc_lo, acc, sig):
    """Pointwise max of |sig| into the dense accumulator starting at acc_lo."""
    i = sig.offset - acc_lo
    np.maximum(acc[i:i + len(sig)], np.abs(sig.values), out=acc[i:i + len(sig)])


@dataclass(frozen=True)
class MaximalReport:
    p: float
    kmax: int
    input_norm: float
    output_norm: float
    maximal: LatticeSignal
    square_sum: float | None = None

    @property
    def ratio(self):
        if self.input_norm == 0:
            raise DegenerateInputError("input signal is zero")
        return self.output_norm / self.input_norm

    @property
    def witness_index(self):
        """Lattice position where the maximal function is largest."""
        return self.maximal.offset + int(np.argmax(self.maximal.values))


def dyadic_maximal(fam, g, kmax, p=2, second=None):
    """sup_{0<=k<=kmax} |K_{2^k} * g| and its l^p ratio.

    With ``second`` also returns sum_k ||(K_{2^k} - L_{2^k}) * g||_2^2.
    """
    if kmax < 0:
        raise ParameterError("kmax must be >= 0")
    convs = [convolve(fam(2**k), g) for k in range(kmax + 1)]
    lo = min(c.start for c in convs)
    hi = max(c.stop for c in convs)
    if hi - lo > MAX_WINDOW:
        raise ResourceError("maximal function window too large")
    acc = np.zeros(hi - lo)
    for c in convs:
        _accumulate_max(lo, acc, c)
    sq = None
    if second is not None:
        sq = 0.0
        for k, c in enumerate(convs):
            diff = c - convolve(second(2**k), g)
            sq += diff.norm(2) ** 2
    mx = LatticeSignal(lo, acc)
    return MaximalReport(float(p), int(kmax), g.norm(p), mx.norm(p), mx, sq)


def hardy_littlewood_bound(p):
    """(p/(p-1))^p, the sharp constant for the one-sided discrete inequality."""
    if p <= 1:
        raise ParameterError("p must exceed 1")
    return (p / (p - 1)) ** p


@dataclass(frozen=True)
class CesaroMaximal:
    p: float
    lhs_lower: float
    lhs_upper: float
    rhs: float

    @property
    def ratio(self):
        """Conservative (upper) estimate of ||M g||_p^p / ||g||_p^p."""
        return self.lhs_upper / self.rhs if self.rhs else 0.0

    @property
    def ratio_lower(self):
        return self.lhs_lower / self.rhs if self.rhs else 0.0


def cesaro_maximal_ratio(g, p, pad=None):
    """sum_i sup_{j>=i} ((1/(j-i+1)) sum_{l=i}^{j} g(l))^p  /  sum g^p.

    g must be non-negative.  Positions i up to ``pad`` left of the support are
    evaluated exactly; the remaining left tail is squeezed between
    Gtot^p zeta(p, m + pad + 1) and Gtot^p zeta(p, pad + 2), where m is the
    support length and Gtot the total mass.
    """
    if p <= 1:
        raise ParameterError("p must exceed 1")
    v = np.asarray(g.values if isinstance(g, LatticeSignal) else g, dtype=float)
    if np.any(v < 0):
        raise ParameterError("the signal must be non-negative")
    m = len(v)
    rhs = float(np.sum(v**p))
    if rhs == 0:
        return CesaroMaximal(float(p), 0.0, 0.0, 0.0)
    pad = max(8 * m, 64) if pad is None else int(pad)
    P = np.concatenate([[0.0], np.cumsum(v)])
    total = P[-1]
    # rows: start positions i = -pad..m-1 ; columns: end positions j = 0..m-1
    vals = np.empty(pad + m)
    j = np.arange(m)
    rows = max(1, 2**22 // max(m, 1))
    starts = np.arange(-pad, m)
    for c in range(0, len(starts), rows):
        i = starts[c:c + rows, None]
        num = P[j + 1][None, :] - P[np.clip(i, 0, m)]
        den = (j[None, :] - i + 1).astype(float)
        avg = np.where(den > 0, num / np.maximum(den, 1.0), 0.0)
        vals[c:c + rows] = avg.max(axis=1)
    core = float(np.sum(vals**p))
    tail_hi = total**p * float(hurwitz_zeta(p, pad + 2))
    tail_lo = total**p * float(hurwitz_zeta(p, m + pad + 1))
    return CesaroMaximal(float(p), core + tail_lo, core + tail_hi, rhs)


def _lacunary_times(rho, lo, hi):
    """Distinct floor(rho^k) in [lo, hi)."""
    out = set()
    k = 0
    while True:
        t = math.floor(rho**k)
        if t >= hi:
            break
        if t >= lo:
            out.add(t)
        k += 1
    return sorted(out)


@dataclass(frozen=True)
class OscillationReport:
    rho: float
    blocks: tuple
    values: tuple
    exact: tuple

    def normalized(self, J):
        """(1/J) sum_{j<=J} X_j with X_j the squared block oscillation."""
        return math.fsum(self.values[:J]) / J

    def normalized_root(self, J):
        """(1/J) sum_{j<=J} sqrt(X_j)."""
        return math.fsum(math.sqrt(x) for x in self.values[:J]) / J


def oscillation_sum(fam, g, blocks, rho, exact_limit=2**21):
    """Block oscillations X_j = ||sup_{N in I_rho, N_j<=N<N_{j+1}} |(K_N - K_{N_j}) * g| ||_2^2 / ||g||_2^2.

    Blocks must satisfy N_{j+1} >= 2 N_j.  When a block reaches beyond
    ``exact_limit`` the value is replaced by the upper bound
    (||g||_1^2/||g||_2^2) sum_N ||K_N - K_{N_j}||_2^2, which the family must
    provide through ``diff_l2_bound``; such entries are flagged inexact.
    """
    if rho <= 1:
        raise ParameterError("rho must exceed 1")
    blocks = [int(b) for b in blocks]
    if len(blocks) < 2:
        raise ParameterError("need at least two block endpoints")
    for a, b in zip(blocks, blocks[1:]):
        if b < 2 * a:
            raise ParameterError("blocks must satisfy N_{j+1} >= 2 N_j")
    g2 = g.norm(2) ** 2
    if g2 == 0:
        raise DegenerateInputError("input signal is zero")
    g1 = g.norm(1)
    values, exact = [], []
    for a, b in zip(blocks, blocks[1:]):
        times = [t for t in _lacunary_times(rho, a, b) if t != a]
        if not times:
            values.append(0.0)
            exact.append(True)
            continue
        if max(times) <= exact_limit:
            base = convolve(fam(a), g)
            lo, hi = base.start, base.stop
            convs = []
            for t in times:
                c = convolve(fam(t), g)
                convs.append(c)
                lo, hi = min(lo, c.start), max(hi, c.stop)
            acc = np.zeros(hi - lo)
            b_dense = base.window(lo, hi)
            for c in convs:
                np.maximum(acc, np.abs(c.window(lo, hi) - b_dense), out=acc)
            values.append(float(np.sum(acc**2)) / g2)
            exact.append(True)
        else:
            if not hasattr(fam, "diff_l2_bound"):
                raise ResourceError(
                    f"block [{a}, {b}) exceeds the exact limit and the family has no bound")
            bound = math.fsum(fam.diff_l2_bound(t, a) for t in times)
            values.append(g1**2 / g2 * bound)
            exact.append(False)
    return OscillationReport(float(rho), tuple(blocks), tuple(values), tuple(exact))


@dataclass(frozen=True)
class TransferenceCheck:
    n_values: tuple
    J: int
    N: int
    max_deviation: float
    orbit_averages: np.ndarray
    lattice_averages: np.ndarray


def transference_check(system, weights, f, x0, J, N, n_values=None, index_offset=0):
    """Compare orbit averages with their lattice model.

    lhs(n, j) runs the system afresh from tau^j x0 and averages f over
    k = 1..n with the given weights.  rhs(n, j) convolves the reflected
    kernel with the sampled orbit phi(j) = f(tau^j x0).  ``index_offset``
    shifts the lattice index and exists to exercise the negative case.
    """
    if J < 4 * N:
        raise ParameterError("J must be at least 4N")
    n_values = tuple(range(1, N + 1)) if n_values is None else tuple(int(n) for n in n_values)
    if any(n < 1 or n > N for n in n_values):
        raise ParameterError("averaging lengths must lie in 1..N")
    orbit = system.orbit(x0, J)
    phi = LatticeSignal(0, np.asarray(f(orbit)))
    w = weights.values[:N]
    span = J - N
    lhs = np.zeros((len(n_values), span), dtype=complex)
    rhs = np.zeros((len(n_values), span), dtype=complex)
    for j in range(span):
        y = system.shift(x0, j)
        fy = np.asarray(f(system.orbit(y, N)[1:]))
        for r, n in enumerate(n_values):
            W = float(np.sum(np.abs(w[:n])))
            lhs[r, j] = np.dot(w[:n], fy[:n]) / W
    for r, n in enumerate(n_values):
        W = float(np.sum(np.abs(w[:n])))
        kern = LatticeSignal(1, w[:n] / W).reflected()
        conv = convolve(kern, phi, method="direct")
        idx = np.arange(span) + index_offset
        rhs[r] = np.array([conv.at(int(i)) for i in idx])
    dev = float(np.max(np.abs(lhs - rhs))) if span else 0.0
    return TransferenceCheck(n_values, int(J), int(N), dev, lhs, rhs)
