"""Scalar special functions: Gamma, zeta, completed zeta, incomplete gamma, zeta zeros."""

from __future__ import annotations

import cmath
import math
import threading
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from .errors import BracketError, ConvergenceError, PoleError, ValidationError

EULER_GAMMA = 0.57721566490153286061


def _scalar(s):
    if isinstance(s, (complex, np.complexfloating)):
        return complex(s), True
    try:
        return complex(float(s)), False
    except TypeError:
        return complex(s), True


def _out(v: complex, is_complex: bool):
    return complex(v) if is_complex else float(v.real)


def _nonpositive_integer(s: complex) -> bool:
    return s.imag == 0 and s.real <= 0 and s.real == math.floor(s.real)


# -- Gamma -------------------------------------------------------------------

def gamma_fn(s):
    """Gamma function (scipy's complex gamma: Stirling series with reflection)."""
    z, cplx = _scalar(s)
    if _nonpositive_integer(z):
        raise PoleError("gamma pole at nonpositive integer", location=z)
    if not cplx:
        return float(_sp.gamma(z.real))
    return complex(_sp.gamma(z))


def loggamma(s):
    z, cplx = _scalar(s)
    if _nonpositive_integer(z):
        raise PoleError("gamma pole at nonpositive integer", location=z)
    return complex(_sp.loggamma(z)) if cplx or z.real <= 0 else float(_sp.gammaln(z.real))


# -- Hurwitz zeta by Euler-Maclaurin ------------------------------------------

_EM_TERMS = 14


@lru_cache(maxsize=None)
def _bernoulli_over_factorial():
    # B_{2j}/(2j)! for j = 1.._EM_TERMS, from exact rationals
    b = _sp.bernoulli(2 * _EM_TERMS)
    return tuple(b[2 * j] / math.factorial(2 * j) for j in range(1, _EM_TERMS + 1))


def hurwitz_zeta(a, q):
    """zeta(a, q) = sum_{k>=0} (q+k)^-a for array q > 0, any complex a != 1.

    Direct summation until q+N >= |a|+20, then Euler-Maclaurin with 14
    Bernoulli corrections. Returns complex array (or scalar for scalar q).
    """
    a = complex(a)
    if a == 1:
        raise PoleError("Hurwitz zeta pole at a=1", location=a, residue=1.0)
    qa = np.asarray(q, dtype=float)
    if np.any(qa <= 0):
        raise ValidationError("Hurwitz zeta needs q > 0")
    scalar = qa.ndim == 0
    qa = np.atleast_1d(qa)
    target = max(25.0, abs(a) + 20.0)
    n_direct = int(max(0, math.ceil(target - float(qa.min()))))
    total = np.zeros(qa.shape, dtype=complex)
    for k in range(n_direct):
        total += np.exp(-a * np.log(qa + k))
    w = qa + n_direct
    lw = np.log(w)
    wa = np.exp(-a * lw)
    total += w * wa / (a - 1) + 0.5 * wa
    poch = a  # (a)_{2j-1}
    wpow = wa / w
    coeffs = _bernoulli_over_factorial()
    for j in range(1, _EM_TERMS + 1):
        total += coeffs[j - 1] * poch * wpow
        poch *= (a + 2 * j - 1) * (a + 2 * j)
        wpow = wpow / (w * w)
    return complex(total[0]) if scalar else total


# -- Riemann zeta ---------------------------------------------------------------

@lru_cache(maxsize=32)
def _borwein_weights(n: int):
    d = []
    acc = Fraction(0)
    for i in range(n + 1):
        acc += Fraction(math.factorial(n + i - 1) * 4**i,
                        math.factorial(n - i) * math.factorial(2 * i))
        d.append(n * acc)
    dn = d[n]
    return np.array([float((d[k] - dn) / dn) for k in range(n)])


def _eta_borwein(s: complex) -> complex:
    t = abs(s.imag)
    # error ~ 3(1+2|t|) e^{pi|t|/2} / (3+sqrt 8)^n, aim for 1e-16 after the 1/|Gamma| growth
    n = int(math.ceil((math.pi * t / 2 + math.log(3 * (1 + 2 * t)) + 37) / math.log(3 + math.sqrt(8))))
    n = min(max(n, 20), 400)
    w = _borwein_weights(n)
    k = np.arange(1, n + 1, dtype=float)
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    terms = signs * w * np.exp(-s * np.log(k))
    return -complex(np.sum(terms))


def _zeta_core(s: complex) -> complex:
    if s == 1:
        raise PoleError("zeta pole at s=1", location=s, residue=1.0)
    if s == 0:
        return -0.5 + 0j
    if s.real > 1 or abs(s) < 0.1:
        # Euler-Maclaurin also continues analytically; near 0 it avoids forming (1-s)-1
        return hurwitz_zeta(s, 1.0)
    if s.real >= 0.5:
        fac = 1 - 2 ** (1 - s)
        if abs(fac) < 0.1:
            return hurwitz_zeta(s, 1.0)
        return _eta_borwein(s) / fac
    # reflection
    r = 1 - s
    return (2 ** s) * (math.pi ** (s - 1)) * cmath.sin(math.pi * s / 2) * complex(_sp.gamma(r)) \
        * _zeta_core(r)


def zeta_fn(s):
    z, cplx = _scalar(s)
    return _out(_zeta_core(z), cplx)


def zeta_star(s):
    """Completed zeta pi^{-s/2} Gamma(s/2) zeta(s); simple poles at 0 (res -1) and 1 (res +1)."""
    z, cplx = _scalar(s)
    if z == 0:
        raise PoleError("zeta* pole at s=0", location=0.0, residue=-1.0)
    if z == 1:
        raise PoleError("zeta* pole at s=1", location=1.0, residue=1.0)
    if z.real < 0.5:
        z = 1 - z
    v = cmath.exp(-z / 2 * math.log(math.pi)) * complex(_sp.gamma(z / 2)) * _zeta_core(z)
    return _out(v, cplx)


# -- incomplete gamma -----------------------------------------------------------

_TINY = 1e-300


def _gamma_cf(s: complex, x: np.ndarray) -> np.ndarray:
    b = x + 1 - s
    c = np.full(x.shape, 1 / _TINY, dtype=complex)
    d = 1 / b
    h = d.copy()
    for i in range(1, 5000):
        an = -i * (i - s)
        b = b + 2
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1) < 4e-16):
            break
    else:
        raise ConvergenceError("incomplete gamma continued fraction did not converge")
    return np.exp(-x + s * np.log(x)) * h


def lower_incomplete_gamma(s, x) -> np.ndarray:
    """gamma(s, x) = x^s e^-x sum_k x^k / (s)_{k+1}; s must avoid nonpositive integers."""
    s = complex(s)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    term = np.full(xa.shape, 1 / s, dtype=complex)
    total = term.copy()
    for k in range(1, 10000):
        term = term * xa / (s + k)
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise ConvergenceError("lower incomplete gamma series did not converge")
    return np.exp(-xa + s * np.log(xa)) * total


def _expm1_over(delta: complex, a: np.ndarray) -> np.ndarray:
    """(exp(delta*a) - 1)/delta, stable as delta -> 0."""
    z = delta * a
    out = np.empty(np.shape(a), dtype=complex)
    small = np.abs(z) < 0.1
    if np.any(small):
        zs = z[small]
        acc = np.zeros(zs.shape, dtype=complex)
        term = np.ones(zs.shape, dtype=complex)
        for j in range(1, 18):
            acc += term / math.factorial(j)
            term = term * zs
        out[small] = a[small] * acc
    if np.any(~small):
        out[~small] = (np.exp(z[~small]) - 1) / delta
    return out


def _near_pole_upper(s: complex, k0: int, x: np.ndarray) -> np.ndarray:
    """Gamma(s, x) for s = -k0 + delta with |delta| small, via the alternating series.

    Gamma(s) and the k0-th series term each blow up like 1/delta; their
    difference is ((-1)^k0/k0!) [ (h(delta)-1)/delta - (x^delta - 1)/delta ].
    """
    delta = s + k0
    # log h(delta) = sum_m c_m delta^m
    cm = [0.0, -EULER_GAMMA + sum(1 / j for j in range(1, k0 + 1))]
    for m in range(2, 8):
        hm = sum(j ** -m for j in range(1, k0 + 1))
        cm.append(((-1) ** m * zeta_fn(m) + hm) / m)
    l_over = sum(cm[m] * delta ** (m - 1) for m in range(1, 8))
    big_l = l_over * delta
    q1 = l_over * sum(big_l ** j / math.factorial(j + 1) for j in range(0, 8))
    q2 = _expm1_over(delta, np.log(x))
    res = ((-1) ** k0 / math.factorial(k0)) * (q1 - q2)
    lx = np.log(x)
    for k in range(0, 10000):
        if k == k0:
            continue
        term = (-1) ** k * np.exp((s + k) * lx) / (math.factorial(k) * (s + k)) if k < 170 else 0
        res = res - term
        if k > k0 + 2 and k > 2 * float(np.max(x)) and np.all(np.abs(term) < 1e-17 * np.abs(res)):
            break
    return res


def upper_incomplete_gamma(s, x):
    """Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt for complex s, x > 0 (array-friendly).

    Lentz continued fraction for x >= |s|+1, series complement below, with a
    pole-cancelling rearrangement when s is within 1e-3 of a nonpositive integer.
    """
    sc, cplx = _scalar(s)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(~(xa > 0)):
        raise ValidationError("incomplete gamma needs x > 0")
    out = np.empty(xa.shape, dtype=complex)
    cf = xa >= max(abs(sc) + 1.0, 1.0)
    if np.any(cf):
        out[cf] = _gamma_cf(sc, xa[cf])
    if np.any(~cf):
        xs = xa[~cf]
        k0 = int(round(-sc.real))
        if sc.real < 0.5 and k0 >= 0 and abs(sc + k0) < 1e-3:
            out[~cf] = _near_pole_upper(sc, k0, xs)
        else:
            out[~cf] = complex(_sp.gamma(sc)) - lower_incomplete_gamma(sc, xs)
    if not cplx:
        out = out.real
    return out[0] if scalar else out


# -- zeta zeros -----------------------------------------------------------------

def riemann_siegel_theta(t: float) -> float:
    return float(np.imag(_sp.loggamma(0.25 + 0.5j * t))) - 0.5 * t * math.log(math.pi)


def hardy_z(t: float) -> float:
    """Real rotation e^{i theta(t)} zeta(1/2 + it); its sign changes mark zeros."""
    return float((cmath.exp(1j * riemann_siegel_theta(t)) * _zeta_core(complex(0.5, t))).real)


class ZetaZeroTable:
    """Imaginary parts of the first nontrivial zeros, found by sign-change bisection.

    Built lazily under a lock; reads after construction are lock-free.
    """

    T_START = 10.0
    T_MAX = 100.0
    STEP = 0.1

    def __init__(self):
        self._lock = threading.Lock()
        self._zeros: tuple[float, ...] | None = None

    def _build(self) -> tuple[float, ...]:
        zeros = []
        t0 = self.T_START
        z0 = hardy_z(t0)
        n = int(round((self.T_MAX - self.T_START) / self.STEP))
        for i in range(1, n + 1):
            t1 = self.T_START + i * self.STEP
            z1 = hardy_z(t1)
            if z0 == 0.0:
                zeros.append(t0)
            elif z0 * z1 < 0:
                zeros.append(self._bisect(t0, t1, z0))
            t0, z0 = t1, z1
        return tuple(zeros)

    @staticmethod
    def _bisect(lo: float, hi: float, zlo: float) -> float:
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            zm = hardy_z(mid)
            if zm == 0.0:
                return mid
            if (zm < 0) == (zlo < 0):
                lo, zlo = mid, zm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    @property
    def zeros(self) -> tuple[float, ...]:
        if self._zeros is None:
            with self._lock:
                if self._zeros is None:
                    self._zeros = self._build()
        return self._zeros

    @property
    def capacity(self) -> int:
        return len(self.zeros)


ZERO_TABLE = ZetaZeroTable()


def zeta_zero_find(k: int) -> float:
    if k < 1:
        raise ValidationError("k must be a positive integer")
    zs = ZERO_TABLE.zeros
    if k > len(zs):
        raise BracketError(f"only {len(zs)} zeros bracketed below t={ZetaZeroTable.T_MAX}")
    return zs[k - 1]
