"""Measure-preserving systems, observables and weighted ergodic averages.

Points of the doubling map are carried as exact bit streams so that orbits
do not collapse after 53 iterations; an orbit point is reported as the
float built from the next 53 bits.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import sieve
from .errors import ParameterError, ResourceError
from .expsum import hyperbola, mobius_expsum

MAX_ORBIT = 2**27
_MANTISSA = 53
_WEIGHTS53 = 2.0 ** -np.arange(1, _MANTISSA + 1)


@dataclass(frozen=True)
class BinaryPoint:
    """x = sum_i b_i 2^{-i-1}, bits drawn from a seeded stream, read from ``start``."""

    seed: int
    start: int = 0

    def bits(self, count):
        rng = np.random.default_rng(self.seed)
        return rng.integers(0, 2, size=self.start + count, dtype=np.uint8)[self.start:]


@dataclass(frozen=True)
class FiniteBinaryPoint:
    """A dyadic or float starting point, expanded exactly in binary."""

    value: Fraction
    start: int = 0

    def bits(self, count):
        total = self.start + count
        v = int(self.value * 2**total) % 2**total
        s = format(v, f"0{total}b")[self.start:]
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


@dataclass(frozen=True)
class SequencePoint:
    """A point of the one-sided Bernoulli shift: an i.i.d. uniform sequence."""

    seed: int
    start: int = 0

    def coords(self, count):
        rng = np.random.default_rng(self.seed)
        return rng.random(self.start + count)[self.start:]


@dataclass(frozen=True)
class System:
    """kind is 'rotation', 'doubling' or 'bernoulli'."""

    kind: str
    alpha: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("rotation", "doubling", "bernoulli"):
            raise ParameterError(f"unknown system {self.kind!r}")
        if self.kind == "rotation":
            if self.alpha is None or not math.isfinite(self.alpha):
                raise ParameterError("rotation needs a finite alpha")

    def point(self, x0=None):
        """Normalize a starting point for this system."""
        if self.kind == "rotation":
            return float(x0 if x0 is not None else 0.0) % 1.0
        if self.kind == "doubling":
            if x0 is None:
                return BinaryPoint(0 if self.seed is None else self.seed)
            if isinstance(x0, (BinaryPoint, FiniteBinaryPoint)):
                return x0
            return FiniteBinaryPoint(Fraction(x0) % 1)
        if x0 is None:
            return SequencePoint(0 if self.seed is None else self.seed)
        if isinstance(x0, SequencePoint):
            return x0
        raise ParameterError("bernoulli points are SequencePoint instances")

    def orbit(self, x0, n):
        """tau^k x0 for k = 0..n, as floats in [0, 1)."""
        if n < 0:
            raise ParameterError("orbit length must be >= 0")
        if n + 1 > MAX_ORBIT:
            raise ResourceError(f"orbit of length {n + 1} exceeds {MAX_ORBIT}")
        x = self.point(x0)
        if self.kind == "rotation":
            k = np.arange(n + 1, dtype=float)
            return np.mod(x + k * self.alpha, 1.0)
        if self.kind == "doubling":
            b = x.bits(n + _MANTISSA).astype(float)
            win = np.lib.stride_tricks.sliding_window_view(b, _MANTISSA)
            return win @ _WEIGHTS53
        # the shift reads off the first coordinate of each shifted sequence
        return x.coords(n + 1)

    def shift(self, x0, j):
        """tau^j x0 as a point of the system."""
        x = self.point(x0)
        if self.kind == "rotation":
            return (x + j * self.alpha) % 1.0
        return type(x)(x.seed if hasattr(x, "seed") else x.value, x.start + j)


def rotation(alpha):
    return System("rotation", alpha=float(alpha))


def doubling(seed=0):
    return System("doubling", seed=seed)


def bernoulli(seed=0):
    return System("bernoulli", seed=seed)


def make_system(kind, alpha=None, seed=None):
    if kind == "rotation":
        return rotation(alpha)
    if kind == "doubling":
        return doubling(0 if seed is None else seed)
    if kind == "bernoulli":
        return bernoulli(0 if seed is None else seed)
    raise ParameterError(f"unknown system {kind!r}")


class Observable:
    spec = {}

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class Character(Observable):
    m: int = 1

    @property
    def spec(self):
        return {"type": "character", "m": self.m}

    def __call__(self, x):
        return np.exp(2j * np.pi * self.m * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Indicator(Observable):
    a: float = 0.0
    b: float = 0.5

    @property
    def spec(self):
        return {"type": "indicator", "a": self.a, "b": self.b}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.a) & (x < self.b)).astype(float)


@dataclass(frozen=True)
class HaarStep(Observable):
    """+1 on [0, 1/2), -1 on [1/2, 1)."""

    @property
    def spec(self):
        return {"type": "haar"}

    def __call__(self, x):
        return np.where(np.asarray(x, dtype=float) < 0.5, 1.0, -1.0)


@dataclass(frozen=True)
class Constant(Observable):
    c: float = 1.0

    @property
    def spec(self):
        return {"type": "constant", "c": self.c}

    def __call__(self, x):
        return np.full(np.shape(x), self.c, dtype=float)


@dataclass(frozen=True)
class Tabulated(Observable):
    """Piecewise constant on len(values) equal subintervals of [0, 1)."""

    values: tuple = field(default=(0.0,))

    @property
    def spec(self):
        return {"type": "tabulated", "values": list(self.values)}

    def __call__(self, x):
        v = np.asarray(self.values, dtype=float)
        i = np.minimum((np.asarray(x, dtype=float) * len(v)).astype(np.int64), len(v) - 1)
        return v[i]


def observable_from_spec(spec):
    t = spec.get("type")
    if t == "character":
        return Character(int(spec.get("m", 1)))
    if t == "indicator":
        return Indicator(float(spec.get("a", 0.0)), float(spec.get("b", 0.5)))
    if t == "haar":
        return HaarStep()
    if t == "constant":
        return Constant(float(spec.get("c", 1.0)))
    if t == "tabulated":
        return Tabulated(tuple(float(v) for v in spec["values"]))
    raise ParameterError(f"unknown observable type {t!r}")


@dataclass(frozen=True)
class AverageSeries:
    weights: str
    n_grid: tuple
    values: np.ndarray


def weighted_average(system, weights, f, x0, n_grid):
    """A_n f(x0) = (1/W_n) sum_{k<=n} w(k) f(tau^k x0) for each n in the grid."""
    n_grid = tuple(int(n) for n in n_grid)
    if not n_grid or min(n_grid) < 1:
        raise ParameterError("grid points must be >= 1")
    nmax = max(n_grid)
    if nmax > weights.N:
        raise ResourceError(f"weight table reaches {weights.N} < {nmax}")
    orbit = system.orbit(x0, nmax)
    fx = np.asarray(f(orbit[1:]))
    w = weights.values[:nmax]
    run = np.cumsum(w * fx)
    W = weights.abs_summatory
    idx = np.array(n_grid) - 1
    if np.any(W[idx] == 0):
        raise ParameterError("weights vanish on an initial segment")
    return AverageSeries(weights.name, n_grid, run[idx] / W[idx])


def rotation_character_limit(alpha, n_grid):
    """|D_n(alpha)| / D_n, the modulus of the divisor average of e(x) under rotation."""
    from .arith import divisor_summatory
    return np.array([abs(hyperbola(n, alpha).value) / divisor_summatory(n) for n in n_grid])


@dataclass(frozen=True)
class MobiusSeries:
    h: float
    n_grid: tuple
    values: np.ndarray
    tail_sup: np.ndarray


def mobius_weighted(system, h, f, x0, n_grid):
    """M_n f(x0) = ((log n)^h / n) sum_{k<=n} mu(k) f(tau^k x0).

    ``tail_sup[i]`` is the largest modulus over grid points at or beyond
    ``n_grid[i]``.
    """
    n_grid = tuple(sorted(int(n) for n in n_grid))
    if not n_grid or n_grid[0] < 1:
        raise ParameterError("grid points must be >= 1")
    nmax = n_grid[-1]
    mu = sieve("mu", nmax).values.astype(float)
    fx = np.asarray(f(system.orbit(x0, nmax)[1:]))
    run = np.cumsum(mu * fx)
    idx = np.array(n_grid) - 1
    n = np.array(n_grid, dtype=float)
    vals = np.log(n) ** h / n * run[idx]
    tail = np.maximum.accumulate(np.abs(vals)[::-1])[::-1]
    return MobiusSeries(float(h), n_grid, vals, tail)


def mobius_rotation_value(n, alpha, h, x0=0.0):
    """M_n e(x0) under rotation, via the Mobius exponential sum."""
    m = mobius_expsum(n, alpha).value
    return math.log(n) ** h / n * np.exp(2j * np.pi * x0) * m


def convergence_diagnostic(values, tail_fraction=0.25):
    """Diameter max |v_i - v_j| of the last ceil(len * tail_fraction) values (at least 2)."""
    v = np.asarray(values)
    if v.size == 0:
        raise ParameterError("empty series")
    if not 0 < tail_fraction <= 1:
        raise ParameterError("tail_fraction must lie in (0, 1]")
    k = min(v.size, max(2, math.ceil(v.size * tail_fraction)))
    tail = v[-k:]
    if not np.iscomplexobj(tail):
        return float(tail.max() - tail.min())
    best = 0.0
    for i in range(0, k, 1024):
        block = tail[i:i + 1024, None]
        best = max(best, float(np.max(np.abs(block - tail[None, :]))))
    return best
