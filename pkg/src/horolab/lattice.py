"""Lattice series: the one-dimensional theta, the lattice theta, E_s and E*_s.

Every series reduces its point to the fundamental domain first, where the
quadratic form |mz+n|^2/y has its largest minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PoleError, ValidationError
from .halfplane import HPoint, reduce_arrays, reduce_to_fundamental
from .specialfn import gamma_fn, hurwitz_zeta, upper_incomplete_gamma, zeta_fn

MAX_TERMS = 50_000_000
SIGMA_MARGIN = 0.05


@dataclass(frozen=True)
class TruncationBudget:
    """Target absolute error; each series derives its own cutoff radius from it."""

    eps: float = 1e-12

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValidationError("eps must be positive and finite")

    def halved(self) -> "TruncationBudget":
        return TruncationBudget(self.eps / 2)


DEFAULT_BUDGET = TruncationBudget()


def _budget(b) -> TruncationBudget:
    if b is None:
        return DEFAULT_BUDGET
    if isinstance(b, TruncationBudget):
        return b
    return TruncationBudget(float(b))


def gauss_radius(a: float, eps: float, prefactor: float = 1.0) -> float:
    """Radius R with prefactor * sum_{|k+c|>R} exp(-a (k+c)^2) <= eps for any shift c.

    One side is bounded by exp(-aR^2) + int_R^inf exp(-a u^2) du
    <= exp(-aR^2) (1 + sqrt(pi/a)/2), using erfc(v) <= exp(-v^2).
    """
    k = prefactor * (2.0 + math.sqrt(math.pi / a)) / eps
    return math.sqrt(max(0.0, math.log(max(k, 1.0))) / a)


# -- one-dimensional theta ----------------------------------------------------

def theta1(u: float, budget=None) -> float:
    """sum_{n>=1} exp(-pi u n^2) within budget.eps (direct summation)."""
    if not u > 0:
        raise ValidationError("theta1 needs u > 0")
    eps = _budget(budget).eps
    a = math.pi * u
    # keep the leading term even when it is already below eps
    n_max = max(1, int(math.floor(gauss_radius(a, eps))))
    if n_max > MAX_TERMS:
        raise NumericalError(f"theta1 cutoff {n_max} exceeds term cap")
    n = np.arange(n_max, 0, -1, dtype=float)  # smallest terms first
    return math.fsum(np.exp(-a * n * n))


def theta1_array(u) -> np.ndarray:
    """Vectorized theta1 to ~1e-16 relative; Poisson dual for u < 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    big = u >= 1
    if np.any(big):
        ub = u[big]
        acc = np.zeros(ub.shape)
        for n in range(6, 0, -1):
            acc += np.exp(-math.pi * ub * n * n)
        out[big] = acc
    if np.any(~big):
        us = u[~big]
        r = 1 / np.sqrt(us)
        dual = np.zeros(us.shape)
        for k in range(6, 0, -1):
            dual += np.exp(-math.pi * k * k / us)
        out[~big] = 0.5 * (r - 1) + r * dual
    return out


# -- lattice theta ------------------------------------------------------------

def _theta2_reduced(t: float, x: np.ndarray, y: np.ndarray, eps: float, skip_m0: bool):
    a_n = math.pi * t / y  # per point
    ymin = float(y.min())
    # rows: sum_{|m|>M} exp(-pi t m^2 y) (1 + sqrt(y/t)) <= eps/2
    pref = 1 + math.sqrt(float(y.max()) / t)
    m_max = int(math.floor(gauss_radius(math.pi * t * ymin, eps / 2, pref)))
    r_n = np.array([gauss_radius(float(a), eps / (4 * (m_max + 1))) for a in np.atleast_1d(a_n.min())])[0]
    if (2 * m_max + 1) * (2 * r_n + 2) * x.size > MAX_TERMS * 10:
        raise NumericalError("theta2 budget unreachable: cutoff overflow")
    total = np.zeros(x.shape)
    if not skip_m0:
        n = np.arange(int(r_n), 0, -1, dtype=float)
        total += 2 * np.exp(-np.multiply.outer(a_n, n * n)).sum(axis=-1)
    for m in range(m_max, 0, -1):
        c = m * x
        lo = int(math.floor(float((-c).min()) - r_n))
        hi = int(math.ceil(float((-c).max()) + r_n))
        n = np.arange(lo, hi + 1, dtype=float)
        v = np.add.outer(c, n)
        row = np.exp(-a_n[..., None] * v * v).sum(axis=-1)
        total += 2 * np.exp(-math.pi * t * m * m * y) * row
    return total


def theta2(t: float, z: HPoint, budget=None) -> float:
    """Theta_t(z) = sum_{(m,n) != 0} exp(-pi t |mz+n|^2 / y), within budget.eps."""
    if not t > 0:
        raise ValidationError("theta2 needs t > 0")
    p = reduce_to_fundamental(z).point
    return float(_theta2_reduced(float(t), np.array([p.x]), np.array([p.y]),
                                 _budget(budget).eps, False)[0])


def theta2_array(t: float, x, y, eps: float = 1e-14, skip_m0: bool = False,
                 reduced: bool = False) -> np.ndarray:
    """Vectorized lattice theta. With skip_m0 the m=0 row (2*theta1(t/y)) is left out."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not reduced:
        x, y, *_ = reduce_arrays(x, y)
    if skip_m0 and not reduced:
        raise ValidationError("skip_m0 refers to the rows of the given point; pass reduced points")
    return _theta2_reduced(float(t), x.ravel(), y.ravel(), eps, skip_m0).reshape(x.shape)


# -- Eisenstein series E_s ------------------------------------------------------

_BIG_ROW = 7.0     # rows with m*y >= this use the closed form (error ~ exp(-2 pi m y))
_WINDOW = 3.0      # direct n-window half width, in units of b = m*y
_BINOM_TERMS = 22  # (1/3)^(2j) tail of the binomial expansion


def _row_sums(s: complex, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_{m>=1} sum_{n in Z} |mz+n|^{-2s} for reduced points (Re s > 1)."""
    amp = math.sqrt(math.pi) * complex(gamma_fn(s - 0.5)) / complex(gamma_fn(s))
    m_dir = np.floor(_BIG_ROW / y).astype(int)
    total = amp * np.exp((1 - 2 * s) * np.log(y)) * hurwitz_zeta(2 * s - 1, m_dir + 1.0)
    jj = range(_BINOM_TERMS)
    coef = np.array([_cbinom(-s, j) for j in jj])
    for m in range(1, int(m_dir.max()) + 1):
        sel = m_dir >= m
        xs, ys = x[sel], y[sel]
        b = m * ys
        c = m * xs
        v_half = np.maximum(_WINDOW * b, 10.0)
        lo = np.ceil(-c - v_half)
        hi = np.floor(-c + v_half)
        width = int((hi - lo).max()) + 1
        k = np.arange(width)
        n = lo[:, None] + k[None, :]
        ok = n <= hi[:, None]
        v2 = (n + c[:, None]) ** 2 + (b * b)[:, None]
        direct = np.where(ok, np.exp(-s * np.log(v2)), 0).sum(axis=1)
        v_pos = hi + 1 + c          # first |v| beyond the window, each side
        v_neg = -(lo - 1 + c)
        tail = np.zeros(xs.shape, dtype=complex)
        b2 = b * b
        bpow = np.ones(xs.shape)
        for j in range(_BINOM_TERMS):
            a_j = 2 * s + 2 * j
            tail += coef[j] * bpow * (hurwitz_zeta(a_j, v_pos) + hurwitz_zeta(a_j, v_neg))
            bpow = bpow * b2
        total[sel] += direct + tail
    return total


def _cbinom(a: complex, j: int) -> complex:
    out = 1 + 0j
    for i in range(j):
        out *= (a - i) / (i + 1)
    return out


def eisenstein_array(s, x, y, reduced: bool = False, minus_leading: bool = False) -> np.ndarray:
    """Vectorized E_s for Re s > 1 + margin. With minus_leading returns E_s - y^s at
    the reduced point (the non-identity cosets), avoiding cancellation."""
    s = complex(s)
    if not s.real > 1 + SIGMA_MARGIN:
        raise ValidationError(f"eisenstein_direct needs Re s > {1 + SIGMA_MARGIN}; use eisenstein_star")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = x.shape
    if not reduced:
        x, y, *_ = reduce_arrays(x, y)
    x, y = x.ravel(), y.ravel()
    ys = np.exp(s * np.log(y))
    rest = ys * _row_sums(s, x, y) / complex(zeta_fn(2 * s))
    out = rest if minus_leading else ys + rest
    return out.reshape(shape)


def eisenstein_direct(s, z: HPoint, budget=None):
    """E_s(z) = (1/2) sum_{gcd(c,d)=1} y^s |cz+d|^{-2s}, Re s > 1.05.

    Computed as y^s * (full lattice Epstein sum) / (2 zeta(2s)): rows m are
    summed directly in a window |n+mx| <= 3my, the n-tails by a binomial
    expansion into Hurwitz zetas, and rows with my >= 7 in closed form.
    """
    _budget(budget)
    sc = complex(s)
    v = complex(eisenstein_array(sc, np.array([z.x]), np.array([z.y]))[0])
    return v if isinstance(s, complex) else v.real


# -- completed Eisenstein series --------------------------------------------------

def _estar_cutoff(s: complex, eps: float) -> float:
    sig = max(abs(s.real), abs(1 - s.real)) - 1
    big_l = math.log(4 / eps) + 5
    for _ in range(20):
        big_l = math.log(4 / eps) + max(sig, 0) * math.log(big_l) + 3
    return max(big_l, 2 * abs(s) + 5)


def eisenstein_star(s, z: HPoint, budget=None):
    """E*_s = zeta*(2s) E_s, continued to all s != 0, 1 by the split Mellin formula

        E*_s = 1/2 [ -1/s + 1/(s-1) + sum' ((piQ)^{-s} G(s, piQ) + (piQ)^{s-1} G(1-s, piQ)) ]

    with Q = |mz+n|^2 / y and G the upper incomplete gamma.
    """
    sc = complex(s)
    if sc == 0:
        raise PoleError("E*_s pole at s=0", location=0.0, residue=-0.5)
    if sc == 1:
        raise PoleError("E*_s pole at s=1", location=1.0, residue=0.5)
    eps = _budget(budget).eps
    p = reduce_to_fundamental(z).point
    x, y = p.x, p.y
    big_l = _estar_cutoff(sc, eps)
    qmax = big_l / math.pi
    xs = []
    m = 0
    while m * m * y <= qmax:
        w = math.sqrt(max(0.0, qmax * y - (m * y) ** 2))
        lo = math.ceil(-m * x - w)
        hi = math.floor(-m * x + w)
        n = np.arange(lo, hi + 1, dtype=float)
        if m == 0:
            n = n[n > 0]
        q = ((n + m * x) ** 2 + (m * y) ** 2) / y
        xs.append(math.pi * q)
        m += 1
    big_x = np.sort(np.concatenate(xs))[::-1]
    terms = np.exp(-sc * np.log(big_x)) * upper_incomplete_gamma(sc, big_x) \
        + np.exp((sc - 1) * np.log(big_x)) * upper_incomplete_gamma(1 - sc, big_x)
    # (m,n) and (-m,-n) give equal terms
    v = 0.5 * (-1 / sc + 1 / (sc - 1) + 2 * complex(np.sum(terms)))
    return v if isinstance(s, complex) else v.real
