"""Long closed horocycles on the modular surface and vertical approaches to cusps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NumericalError, ValidationError
from .halfplane import DOMAIN, Box, domain_area, horocycle_points, reduce_arrays
from .modfun import Exponential, ModularFunctionSpec

BATCH = 1 << 18
NOISE_FACTOR = 3.0      # deviations below NOISE_FACTOR / n are discretisation, not signal
CUSP_Y_FLOOR = 1e-6     # below this the reduction of a/c + iy loses the cusp geometry


# -- Farey fractions ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class FareyFraction:
    """Reduced a/c with c > 0 and |a| < c; 0/1 stands for the cusp at 0."""

    a: int
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValidationError("denominator must be positive")
        if math.gcd(self.a, self.c) != 1:
            raise ValidationError(f"{self.a}/{self.c} is not reduced")
        if abs(self.a) >= self.c and not (self.a == 0 and self.c == 1):
            raise ValidationError("need |a| < c")

    @property
    def value(self) -> float:
        return self.a / self.c

    @property
    def partner(self) -> int:
        """d with a d = 1 mod c, the lower-right entry of a matrix sending i*inf to a/c."""
        if self.c == 1:
            return 0
        return pow(self.a, -1, self.c)

    def matrix(self) -> tuple[int, int, int, int]:
        """(a, b, c, d) in SL2(Z) with first column (a, c)."""
        d = self.partner
        b = (self.a * d - 1) // self.c
        return self.a, b, self.c, d


def farey_sequence(q_max: int) -> list[FareyFraction]:
    """Reduced fractions in [0, 1) with denominator <= q_max, in increasing order.

    Built from Stern-Brocot mediants between 0/1 and 1/1.
    """
    if q_max < 1:
        raise ValidationError("q_max must be >= 1")
    found = [(0, 1)]
    stack = [((0, 1), (1, 1))]
    while stack:
        (p0, q0), (p1, q1) = stack.pop()
        q = q0 + q1
        if q > q_max:
            continue
        m = (p0 + p1, q)
        found.append(m)
        stack.append(((p0, q0), m))
        stack.append((m, (p1, q1)))
    found.sort(key=lambda pq: Fraction(*pq))
    return [FareyFraction(p, q) for p, q in found]


# -- equidistribution --------------------------------------------------------------

def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("HOROLAB_THREADS", "1") or 1)
    return max(1, int(threads))


def _check_region(u):
    if u is DOMAIN:
        return
    if not isinstance(u, Box):
        raise ValidationError("region must be a Box or the fundamental domain")
    if not u.inside_domain():
        raise ValidationError("box is not inside the fundamental domain")


def equidist_ratio(y: float, u, n: int, threads=None) -> float:
    """Fraction of the n midpoints (k + 1/2)/n + iy whose reduction lands in u.

    Deterministic; batches are counted independently and summed in order, so the
    thread count cannot change the result.
    """
    if not y > 0:
        raise ValidationError("y must be positive")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError("n must be a positive integer")
    _check_region(u)
    xs = horocycle_points(y, int(n))

    def count(lo):
        xb = xs[lo:lo + BATCH]
        xr, yr = reduce_arrays(xb, np.full(xb.size, float(y)))[:2]
        return int(np.count_nonzero(u.contains(xr, yr)))

    starts = range(0, xs.size, BATCH)
    workers = _threads(threads)
    if workers == 1:
        hits = sum(count(s) for s in starts)
    else:
        with ThreadPoolExecutor(workers) as ex:
            hits = sum(ex.map(count, starts))
    return hits / n


@dataclass(frozen=True)
class EquidistFit:
    exponent: float
    intercept: float
    ys: tuple
    ratios: tuple
    target: float
    flags: tuple = field(default_factory=tuple)

    @property
    def reliable(self) -> bool:
        return not self.flags


def fit_exponent(ys, deviations, n=None) -> EquidistFit:
    """Least-squares slope of log|deviation| against log y."""
    ys = np.asarray(ys, dtype=float)
    dev = np.abs(np.asarray(deviations, dtype=float))
    if ys.size < 2:
        raise ValidationError("need at least two y values")
    flags = []
    if n is not None and np.any(dev < NOISE_FACTOR / n):
        flags.append("deviation below discretisation floor")
    if np.any(dev == 0):
        raise NumericalError("zero deviation; exponent undefined")
    slope, icpt = np.polyfit(np.log(ys), np.log(dev), 1)
    return EquidistFit(float(slope), float(icpt), tuple(ys), (), 0.0, tuple(flags))


def equidist_exponent(u, y_list, n: int, threads=None) -> EquidistFit:
    """Rate at which the horocycle ratio approaches A(u)/A(D) as y -> 0."""
    ys = np.sort(np.asarray(y_list, dtype=float))
    if ys.size < 2 or ys[-1] / ys[0] < 10 ** 1.99:
        raise ValidationError("y values must span at least two decades")
    target = u.area / domain_area()
    ratios = np.array([equidist_ratio(y, u, n, threads) for y in ys])
    fit = fit_exponent(ys, ratios - target, n)
    flags = list(fit.flags)
    if ys[-1] / ys[0] < 10 ** 3.99:
        flags.append("fewer than four decades in y")
    return EquidistFit(fit.exponent, fit.intercept, tuple(ys), tuple(ratios), target, tuple(flags))


# -- cusp probes --------------------------------------------------------------------

@dataclass(frozen=True)
class CuspProbe:
    cusp: FareyFraction
    samples: tuple          # (y, f(a/c + iy), e(-kappa d/c) e^{pi beta/(c^2 y)})
    slope: float            # fitted d log|f| / d(1/y)
    slope_transport: float  # pi beta / c^2
    slope_printed: float    # 2 pi beta c^2
    flags: tuple = ()


def cusp_probe(f: ModularFunctionSpec, cusp: FareyFraction, y_list) -> CuspProbe:
    """Evaluate f straight down onto the cusp a/c and fit the growth in 1/y.

    Two candidate rates are reported: the transported one e^{pi beta/(c^2 y)}
    (Im of the cusp-opening matrix applied to a/c + iy is 1/(c^2 y)) and the
    alternative e^{2 pi beta c^2 / y}. Neither is taken as given.
    """
    if not isinstance(f.growth, Exponential):
        raise ValidationError("cusp probes need an exponential-growth function")
    ys = np.sort(np.asarray(y_list, dtype=float))
    if ys.size < 2:
        raise ValidationError("need at least two y values")
    if ys[0] < CUSP_Y_FLOOR * cusp.c ** -2:
        raise NumericalError(f"y={ys[0]:.3g} below the precision floor for c={cusp.c}")
    flags = []
    if f.outside_class:
        flags.append("outside the bounded class; exploratory")
    beta = f.growth.beta
    c2 = cusp.c ** 2
    vals = f.values(np.full(ys.size, cusp.value), ys)
    if not np.all(np.isfinite(vals)) or np.any(vals == 0):
        raise NumericalError("function value overflowed or vanished along the probe")
    phase = np.exp(-2j * math.pi * f.growth.kappa * cusp.partner / cusp.c)
    pred = phase * np.exp(math.pi * beta / (c2 * ys))
    slope = float(np.polyfit(1 / ys, np.log(np.abs(vals)), 1)[0])
    samples = tuple((float(y), complex(v), complex(p)) for y, v, p in zip(ys, vals, pred))
    return CuspProbe(cusp, samples, slope, math.pi * beta / c2, 2 * math.pi * beta * c2, tuple(flags))


def fourier_resum(f: ModularFunctionSpec, x: float, y: float, r_max: int = 24, n: int = 256) -> complex:
    """sum_{|r|<=r_max} a_r(y) e(r x), with a_r by the trapezoid rule in x."""
    xs = (np.arange(n) + 0.5) / n
    vals = f.values(xs, np.full(n, float(y)))
    r = np.arange(-r_max, r_max + 1)
    coef = (vals[None, :] * np.exp(-2j * math.pi * r[:, None] * xs[None, :])).mean(axis=1)
    return complex(np.sum(coef * np.exp(2j * math.pi * r * x)))
