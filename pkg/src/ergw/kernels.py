"""Bump functions, major-arc model kernels and the approximant phi_n.

The divisor kernel K_n = (1/D_n) sum_{k<=n} d(k) delta_k has Fourier
transform T_n(x) = D_n(x)/D_n.  Near a/q with q small, d(k) e(ka/q)
averages to (log k + 2 gamma - 2 log q)/q, which gives the model kernel
psi_{n,q}.  phi_n glues the models together with scaled bumps centered on
the Farey fractions of each dyadic band.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arcs import classify_grid, convergents, to_fraction
from .arith import EULER_GAMMA, divisor_summatory, sieve
from .errors import ParameterError, ResolutionError, ResourceError
from .expsum import batch, geometric_sum, grid_transform

TWO_PI = 2.0 * math.pi


def _g(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def smooth_step(t):
    """g(t)/(g(t)+g(1-t)) with g(t) = exp(-1/t): 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a, b = _g(t), _g(1.0 - t)
    return a / (a + b)


def bump(x):
    """Smooth even bump: 1 on [-1/4, 1/4], 0 outside (-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    out = smooth_step(4.0 * (0.5 - np.abs(x)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BumpFunction:
    """eta and its scalings eta_s(x) = eta(4^s M x)."""

    M: int = 4

    def __call__(self, x):
        return bump(x)

    def scaled(self, s, x):
        return bump(4.0**s * self.M * np.asarray(x, dtype=float))

    def half_width(self, s):
        return 1.0 / (2 * 4**s * self.M)

    def plateau(self, s):
        return 1.0 / (4 * 4**s * self.M)


VARIANTS = ("matched", "printed")


def model_coefficients(n, q, variant="matched", D=None):
    """(alpha, beta) with psi_{n,q}(x) = sum_k (alpha log k + beta) e(kx).

    ``matched`` uses the exact major-arc mean of d(k) e(ka/q), normalized by
    q D_n; ``printed`` keeps a common 1/(n log n) factor with no 1/q on the
    constant term.  q = 0 is read as q = 1.
    """
    q = max(int(q), 1)
    if variant == "matched":
        D = divisor_summatory(n) if D is None else D
        return 1.0 / (q * D), (2 * EULER_GAMMA - 2 * math.log(q)) / (q * D)
    if variant == "printed":
        if n < 2:
            raise ParameterError("the printed normalization needs n >= 2")
        nl = n * math.log(n)
        return 1.0 / (q * nl), 2 * (EULER_GAMMA - 1 - math.log(q)) / nl
    raise ParameterError(f"unknown kernel variant {variant!r}")


def _phase_matrix(k, beta):
    return np.exp(1j * TWO_PI * np.mod(np.outer(beta, k), 1.0))


def _direct_sum(w, beta, chunk=2**22):
    """sum_k w_k e(k beta) for each beta, in memory-bounded chunks."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    k = np.arange(1, len(w) + 1, dtype=float)
    out = np.empty(beta.shape, dtype=complex)
    rows = max(1, chunk // max(len(w), 1))
    for i in range(0, len(beta), rows):
        out[i:i + rows] = _phase_matrix(k, beta[i:i + rows]) @ w
    return out


@dataclass(frozen=True)
class ModelKernel:
    """psi_{n,q}, the major-arc model of T_n near a/q, as a lattice kernel."""

    n: int
    q: int
    variant: str = "matched"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown kernel variant {self.variant!r}")

    @property
    def coefficients(self):
        return model_coefficients(self.n, self.q, self.variant)

    @property
    def weights(self):
        al, be = self.coefficients
        return al * np.log(np.arange(1, self.n + 1, dtype=float)) + be

    def psi(self, x):
        """Direct evaluation of sum_k w_k e(kx)."""
        out = _direct_sum(self.weights, x)
        return out if np.ndim(x) else complex(out[0])

    def psi_closed(self, x):
        """Closed form via Abel summation of log k against geometric sums:
        sum_k log k e(kx) = log n E_n(x) - sum_{k<n} log(1 + 1/k) E_k(x).
        """
        al, be = self.coefficients
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.n
        k = np.arange(1, n, dtype=float)
        dl = np.log1p(1.0 / k)
        out = np.empty(xs.shape, dtype=complex)
        for i, xv in enumerate(xs):
            En = geometric_sum(n, xv)
            Ek = geometric_sum(k, np.full(k.shape, xv))
            lam = math.log(n) * En - np.dot(dl, Ek)
            out[i] = al * lam + be * En
        return out if np.ndim(x) else complex(out[0])

    def signal(self):
        from .shiftmodel import LatticeSignal
        return LatticeSignal(1, self.weights.astype(complex))


@dataclass(frozen=True)
class DivisorKernel:
    """K_n = (1/D_n) sum_{k<=n} d(k) delta_k and its transform T_n."""

    n: int

    @property
    def weights(self):
        return sieve("d", self.n).values.astype(float) / divisor_summatory(self.n)

    def fourier(self, x):
        from .expsum import hyperbola
        return hyperbola(self.n, x).value / divisor_summatory(self.n)

    def fourier_grid(self, G):
        return batch(self.n, G).values / divisor_summatory(self.n)

    def signal(self):
        from .shiftmodel import LatticeSignal
        return LatticeSignal(1, self.weights)


def _centered(t):
    return t - np.floor(t + 0.5)


class ApproximantKernel:
    """phi_n(x) = sum over bands s, centers a/q, of psi_{n,q}(x - a/q) eta_s(x - a/q).

    Band 0 is the center 0 with eta_0 = eta(M x); band s >= 2 holds the
    reduced a/q with 2^{s-1} <= q < 2^s and uses eta(4^s M x).  Band 1 only
    contains 1/1, which is the point 0 on the circle and is already covered.
    Bands run up to ceil(log2 P) + 1, optionally extended to ``s_hi``;
    ``t`` truncates the sum to bands s <= t.
    """

    def __init__(self, n, params, variant="matched", s_hi=None, t=None):
        if variant not in VARIANTS:
            raise ParameterError(f"unknown kernel variant {variant!r}")
        self.n = int(n)
        self.params = params
        self.variant = variant
        self.bump = BumpFunction(params.M)
        self.s_max = math.ceil(math.log2(params.P)) + 1 if params.P > 1 else 1
        top = max(self.s_max, s_hi or 0)
        if t is not None:
            if t < 0:
                raise ParameterError("truncation level must be >= 0")
            top = min(top, t)
        self.top = top
        self.D = divisor_summatory(self.n)
        self._k = np.arange(1, self.n + 1, dtype=np.int64)
        self._logk = np.log(self._k.astype(float))

    def bands(self):
        return [0] + list(range(2, self.top + 1))

    def centers(self, s):
        if s == 0:
            return [(0, 1)]
        if s == 1:
            return []
        out = []
        for q in range(2 ** (s - 1), 2**s):
            out.extend((a, q) for a in range(1, q) if math.gcd(a, q) == 1)
        return out

    def _coef(self, q):
        return model_coefficients(self.n, q, self.variant, self.D)

    def _psi_direct(self, q, beta):
        al, be = self._coef(q)
        lam = _direct_sum(self._logk, beta)
        En = geometric_sum(self.n, beta)
        return al * lam + be * En

    def _psi_fft(self, a, q, G, j):
        al, be = self._coef(q)
        roots = np.exp(-1j * TWO_PI * np.arange(q) / q)
        tw = roots[(self._k * a) % q]
        lam = grid_transform(self._logk * tw, G)[j]
        beta = j / G - a / q
        return al * lam + be * geometric_sum(self.n, beta)

    def active_centers(self, x):
        """(s, a, q, beta, eta) for every bump containing x."""
        X = to_fraction(x) % 1
        out = []
        b0 = float(_centered(float(X)))
        e0 = float(self.bump.scaled(0, b0))
        if e0 > 0:
            out.append((0, 0, 1, b0, e0))
        for p, q in convergents(X):
            if q < 2:
                continue
            s = q.bit_length()
            if s > self.top:
                break
            beta = float(X - Fraction(p, q))
            e = float(self.bump.scaled(s, beta))
            if e > 0:
                out.append((s, p, q, beta, e))
        return out

    def __call__(self, x):
        total = 0j
        for s, a, q, beta, e in self.active_centers(x):
            total += complex(self._psi_direct(q, np.array([beta]))[0]) * e
        return total

    def _center_contrib(self, s, a, q, G):
        hw = self.bump.half_width(s) * G
        if s == 0:
            j = np.arange(-math.floor(hw), math.floor(hw) + 1)
            jj = j % G
            beta = j / G
        else:
            c = a * G / q
            j = np.arange(math.ceil(c - hw), math.floor(c + hw) + 1)
            j = j[(j >= 0) & (j < G)]
            jj = j
            beta = (j * q - a * G) / (G * q)
        if j.size == 0:
            return jj, None
        e = self.bump.scaled(s, beta)
        keep = e > 0
        jj, beta, e = jj[keep], beta[keep], e[keep]
        if jj.size == 0:
            return jj, None
        # one FFT costs about as much as two direct evaluations
        if jj.size >= 2 and self.n > 64:
            vals = self._psi_fft(a, q, G, jj)
        else:
            vals = self._psi_direct(q, beta)
        return jj, vals * e

    def grid(self, G, threads=1):
        """phi_n(j/G) for j = 0..G-1."""
        if G < 1:
            raise ParameterError("G must be >= 1")
        jobs = [(s, a, q) for s in self.bands() for a, q in self.centers(s)]
        phi = np.zeros(G, dtype=complex)
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda t: self._center_contrib(*t, G), jobs))
        else:
            parts = [self._center_contrib(s, a, q, G) for s, a, q in jobs]
        for jj, vals in parts:
            if vals is not None:
                np.add.at(phi, jj, vals)
        return phi


def truncated_kernel(n, params, t, variant="matched", s_hi=None):
    """phi_{n,t}: the approximant restricted to bands s <= t."""
    return ApproximantKernel(n, params, variant=variant, s_hi=s_hi, t=t)


@dataclass(frozen=True)
class ApproxErrorReport:
    n: int
    G: int
    S: float
    variant: str
    sup_major: float
    sup_minor: float
    sup_total: float
    errors: np.ndarray
    transform: np.ndarray
    approximant: np.ndarray
    is_major: np.ndarray

    @property
    def normalized(self):
        return math.log(self.n) ** self.S * self.sup_total

    def summary(self):
        return {"n": self.n, "G": self.G, "S": self.S, "variant": self.variant,
                "sup_major": self.sup_major, "sup_minor": self.sup_minor,
                "sup_total": self.sup_total, "normalized": self.normalized}

    def rows(self):
        for j in range(self.G):
            T, P = self.transform[j], self.approximant[j]
            yield (self.n, Fraction(j, self.G), T.real, T.imag, P.real, P.imag,
                   "major" if self.is_major[j] else "minor", self.errors[j])


def approx_error(n, params, G, variant="matched", s_hi=None, threads=1):
    """sup over x = j/G of |T_n(x) - phi_n(x)|, split by arc class."""
    if G > 2**24:
        raise ResourceError("grid too large for the approximation report")
    T = batch(n, G).values / divisor_summatory(n)
    phi = ApproximantKernel(n, params, variant=variant, s_hi=s_hi).grid(G, threads)
    err = np.abs(T - phi)
    cls = classify_grid(G, params)
    maj = cls.is_major
    sup_major = float(err[maj].max()) if maj.any() else 0.0
    sup_minor = float(err[~maj].max()) if (~maj).any() else 0.0
    return ApproxErrorReport(int(n), int(G), float(params.S), variant, sup_major,
                             sup_minor, float(err.max()), err, T, phi, maj)


@dataclass(frozen=True)
class InverseTransform:
    """Lattice coefficients c_k, |k| <= B, recovered from samples on the circle."""

    B: int
    grid_size: int
    coefficients: np.ndarray
    reconstruction_error: float
    tail_mass: float

    @property
    def signal(self):
        from .shiftmodel import LatticeSignal
        return LatticeSignal(-self.B, self.coefficients)


def inverse_transform(evaluator, B, grid_size=None, tol=1e-10):
    """Sample a 1-periodic function on G >= 4B points and read off its
    Fourier coefficients for |k| <= B.

    Raises ResolutionError when the energy outside |k| <= B exceeds ``tol``
    relative to the total, which signals aliasing or a too small B.
    """
    if B < 0:
        raise ParameterError("B must be >= 0")
    G = grid_size if grid_size is not None else 1 << max(2, (4 * B).bit_length())
    if G < 4 * B:
        raise ParameterError("grid_size must be at least 4B")
    x = np.arange(G) / G
    vals = np.asarray(evaluator(x), dtype=complex)
    c = np.fft.fft(vals) / G
    k = np.fft.fftfreq(G, 1.0 / G).astype(np.int64)
    inside = np.abs(k) <= B
    total = float(np.sum(np.abs(c) ** 2))
    tail = float(np.sum(np.abs(c[~inside]) ** 2))
    tail_mass = tail / total if total > 0 else 0.0
    if tail_mass > tol:
        raise ResolutionError(
            f"{tail_mass:.3g} of the energy lies outside |k| <= {B}; raise B or the grid size")
    coeffs = np.zeros(2 * B + 1, dtype=complex)
    coeffs[k[inside] + B] = c[inside]
    trunc = np.where(inside, c, 0)
    recon = np.fft.ifft(trunc) * G
    err = float(np.max(np.abs(recon - vals))) if G else 0.0
    return InverseTransform(int(B), int(G), coeffs, err, tail_mass)
