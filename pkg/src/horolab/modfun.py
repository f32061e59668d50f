"""Modular-invariant test functions, horocycle averages and integrals over the domain."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import mpmath as mp
import numpy as np
from scipy.special import j0 as _bessel_j0

from . import arith
from .errors import ConvergenceError, PrecisionWarning, ValidationError
from .halfplane import HPoint, reduce_arrays
from .lattice import TruncationBudget, eisenstein_array
from .specialfn import zeta_fn, zeta_star


# -- growth classes -------------------------------------------------------------

@dataclass(frozen=True)
class PolyTerm:
    c: complex
    alpha: complex
    n: int = 0

    def value(self, y):
        y = np.asarray(y, dtype=float)
        ly = np.log(y)
        return self.c / math.factorial(self.n) * np.exp(self.alpha * ly) * ly ** self.n


@dataclass(frozen=True)
class RapidDecay:
    kind = "rapid"


@dataclass(frozen=True)
class Polynomial:
    terms: tuple
    validate: bool = True
    kind = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(t if isinstance(t, PolyTerm) else PolyTerm(*t)
                                                for t in self.terms))
        for t in self.terms:
            if not (isinstance(t.n, int) and t.n >= 0):
                raise ValidationError("log power n must be a nonnegative integer")
            if self.validate and not complex(t.alpha).real < 0.5:
                raise ValidationError(f"polynomial growth needs Re(alpha) < 1/2, got {t.alpha}")

    def value(self, y):
        return sum(t.value(y) for t in self.terms)


@dataclass(frozen=True)
class Exponential:
    alpha: complex
    beta: float
    kappa: int
    validate: bool = True
    kind = "exponential"

    def __post_init__(self):
        if self.kappa == 0 or int(self.kappa) != self.kappa:
            raise ValidationError("exponential growth needs an integer kappa != 0")
        if self.validate:
            if not self.beta < 1:
                raise ValidationError(f"exponential growth needs beta < 1, got {self.beta}")
            if not complex(self.alpha).real < 0.5:
                raise ValidationError("exponential growth needs Re(alpha) < 1/2")

    @property
    def in_class(self) -> bool:
        return self.beta < 1 and complex(self.alpha).real < 0.5


GrowthProfile = Union[RapidDecay, Polynomial, Exponential]


# -- seeds ----------------------------------------------------------------------

U_LO, U_HI = 0.5, 2.0


@dataclass(frozen=True)
class SeedProfile:
    """phi(u) = u^2 below U_LO, target above U_HI, quintic smoothstep in log u between.

    target(u) = u^alpha log(u)^n / n! * exp(pi beta u).
    """

    alpha: complex = 0.3
    beta: float = 0.0
    kappa: int = 0
    n: int = 0
    u_lo: float = U_LO
    u_hi: float = U_HI

    def target(self, u):
        u = np.asarray(u, dtype=float)
        lu = np.log(u)
        v = np.exp(self.alpha * lu + math.pi * self.beta * u)
        if self.n:
            v = v * lu ** self.n / math.factorial(self.n)
        return v

    def weight(self, u):
        s = (np.log(u) - math.log(self.u_lo)) / math.log(self.u_hi / self.u_lo)
        s = np.clip(s, 0.0, 1.0)
        return s * s * s * (10 - 15 * s + 6 * s * s)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = (u * u).astype(complex)
        mid = u > self.u_lo
        if np.any(mid):
            w = self.weight(u[mid])
            out[mid] = (1 - w) * u[mid] ** 2 + w * self.target(u[mid])
        return out


# -- function specs -------------------------------------------------------------

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModularFunctionSpec:
    """A modular function with its growth class and optional exact oracles.

    evaluator(x, y) is vectorized over arrays of arbitrary points; builtins
    reduce internally. cusp_mode/remainder split f at points of the domain
    into the identity-coset term and the rest (Exponential class only).
    a0_tail lists PolyTerms describing a0(y) for large y.
    """

    name: str
    evaluator: Evaluator
    growth: GrowthProfile
    exact_a0: Optional[Callable] = None
    exact_C0: Optional[complex] = None
    prefer_exact_a0: bool = False
    oracle_only: bool = False
    params: dict = field(default_factory=dict)
    cusp_mode: Optional[Evaluator] = None
    remainder: Optional[Evaluator] = None
    a0_tail: tuple = ()
    note: str = ""
    exact_a0_ymin: float = 0.0  # exact_a0 is trusted only at y >= this

    def __call__(self, z: HPoint) -> complex:
        return complex(self.evaluator(np.array([z.x]), np.array([z.y]))[0])

    def values(self, x, y) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    @property
    def outside_class(self) -> bool:
        return isinstance(self.growth, Exponential) and not self.growth.in_class


def constant_function(value: complex = 1.0) -> ModularFunctionSpec:
    v = complex(value)
    return ModularFunctionSpec(
        name="constant", evaluator=lambda x, y: np.full(np.shape(x), v),
        growth=Polynomial(((v, 0.0, 0),)), exact_a0=lambda y: v + 0 * np.asarray(y, dtype=float),
        exact_C0=v * math.pi / 3, params={"value": v}, a0_tail=(PolyTerm(v, 0.0, 0),))


def _reduced(x, y):
    xr, yr, *_ = reduce_arrays(x, y)
    return xr, yr


# delta ------------------------------------------------------------------------

_Q_TERMS = 24


def _delta_values(x, y):
    xr, yr = _reduced(x, y)
    tau = np.array(arith.tau_list(_Q_TERMS)[1:], dtype=float)
    q = np.exp(2j * math.pi * (xr + 1j * yr))
    acc = np.zeros(q.shape, dtype=complex)
    for c in tau[::-1]:
        acc = (acc + c) * q
    # y^12 |Delta|^2, with the y^12 folded in before squaring to stay in range
    return (np.abs(acc * yr ** 6) ** 2).astype(complex)


DELTA_A0_YMIN = 1e-3  # below this the tau^2 sum would need more than 6000 terms


def _delta_a0(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < DELTA_A0_YMIN):
        raise ValidationError(f"delta exact a0 is tabulated for y >= {DELTA_A0_YMIN}; sample below")
    ymin = float(np.min(y))
    # e^{-4 pi n y} n^11 negligible beyond n ~ (40 + 11 log n)/(4 pi y)
    n_max = int(min(6000, max(30, (60 + 11 * math.log(1 / ymin + 10)) / (4 * math.pi * ymin) * 1.5)))
    tau = np.array(arith.tau_list(n_max)[1:], dtype=float)
    n = np.arange(1, n_max + 1, dtype=float)
    ly = np.log(y)
    # log-space terms avoid overflow of tau^2 y^12
    t = 2 * np.log(np.abs(tau)) + 12 * ly[..., None] - 4 * math.pi * np.multiply.outer(y, n)
    out = np.exp(t).sum(axis=-1) + 0j
    return out if y.ndim else complex(out)


def delta_cusp() -> ModularFunctionSpec:
    return ModularFunctionSpec(
        name="delta_cusp", evaluator=_delta_values, growth=RapidDecay(), exact_a0=_delta_a0,
        a0_tail=(), exact_a0_ymin=DELTA_A0_YMIN, note="y^12 |Delta|^2, rapid decay")


# Eisenstein -----------------------------------------------------------------------

def eisenstein_fixed(s0: float) -> ModularFunctionSpec:
    s0 = float(s0)
    if not s0 > 1.05:
        raise ValidationError("eisenstein_fixed needs real s0 > 1.05")
    ratio = zeta_star(2 * s0 - 1) / zeta_star(2 * s0)

    def ev(x, y):
        return eisenstein_array(s0, x, y)

    def a0(y):
        y = np.asarray(y, dtype=float)
        return y ** s0 + ratio * y ** (1 - s0) + 0j

    terms = (PolyTerm(1.0, s0, 0), PolyTerm(ratio, 1 - s0, 0))
    return ModularFunctionSpec(
        name="eisenstein_fixed", evaluator=ev, growth=Polynomial(terms, validate=False),
        exact_a0=a0, oracle_only=True, params={"s0": s0}, a0_tail=terms,
        note="oracle-only: growth exponent exceeds 1/2")


# Poincare series -----------------------------------------------------------------

# E_2 = P[y^2]; its constant term is y^2 + K/y with K = zeta*(3)/zeta*(4)
K_E2 = None


def _k_e2() -> float:
    global K_E2
    if K_E2 is None:
        K_E2 = zeta_star(3) / zeta_star(4)
    return K_E2


@lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gl_panels(f, breaks, n=24):
    """Composite Gauss-Legendre of vectorized f over consecutive breakpoints."""
    xg, wg = _gl(n)
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * xg[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return np.sum(vals * (half[:, None] * wg[None, :]))


def _theta_breaks(lo, hi, freq):
    """Panel breakpoints on [lo, hi]: geometric (ratio 1.5) plus at most ~1/3 period wide."""
    pts = {lo, hi}
    if lo > 0:
        g = lo
        while g < hi:
            pts.add(g)
            g *= 1.5
    step = min(hi - lo, 2.0 / max(freq, 1e-300)) if freq > 0 else hi - lo
    k = int(math.ceil((hi - lo) / step))
    pts.update(np.linspace(lo, hi, k + 1).tolist())
    return np.array(sorted(p for p in pts if lo <= p <= hi))


def _unfold_kernel(seed: SeedProfile, kappa: int, c: int, y: float) -> float:
    """K(c,y) = int_R phi(u) e(-kappa xi/(c^2(xi^2+y^2))) dxi, u = y/(c^2(xi^2+y^2)).

    With xi = y cot(theta/2): u = sin^2(theta/2)/Y, Y = c^2 y, and
    K = (1/c^2) int_0^pi (phi(u)/u) cos(a sin theta) dtheta, a = pi kappa / Y.
    """
    big_y = c * c * y
    a = math.pi * kappa / big_y
    if big_y >= 1 / seed.u_lo:
        return math.pi * float(_bessel_j0(a)) / (2 * c * c * big_y)

    def u_of(th):
        return np.sin(0.5 * th) ** 2 / big_y

    def integrand(th):
        u = u_of(th)
        v = seed(u) / u
        if kappa:
            v = v * np.cos(a * np.sin(th))
        return v

    th1 = 2 * math.asin(math.sqrt(seed.u_lo * big_y))
    th2 = 2 * math.asin(math.sqrt(seed.u_hi * big_y)) if seed.u_hi * big_y < 1 else math.pi
    total = _kernel_head(integrand, kappa, big_y, a, th1, th2)
    if th2 < math.pi:
        total += _kernel_log_panels(integrand, kappa, a, th2, math.pi)
    return total / (c * c)


def _kernel_log_panels(integrand, kappa, a, lo, hi):
    breaks = np.log(_theta_breaks(lo, hi, a)) if kappa else np.linspace(math.log(lo), math.log(hi), 5)
    return _gl_panels(lambda tau: (integrand(np.exp(tau)) * np.exp(tau)).real, breaks, 24)


def _kernel_head(integrand, kappa, big_y, a, th1, th2):
    """The theta in [0, th2] part of the kernel, where phi is u^2 or the blend."""
    if kappa == 0:
        total = (th1 - math.sin(th1)) / (2 * big_y) if th1 > 0.1 else \
            th1 ** 3 / 6 * (1 - th1 ** 2 / 20 + th1 ** 4 / 840) / (2 * big_y)
    else:
        total = _gl_panels(lambda t: integrand(t).real, _theta_breaks(0.0, th1, a), 16)
    if th2 > th1:
        total += _kernel_log_panels(integrand, kappa, a, th1, th2)
    return total


def _unfold_kernel_contour(seed: SeedProfile, kappa: int, c: int, y: float) -> mp.mpf:
    """K(c,y) for the heterotic seed at small c^2 y, without cancellation.

    Over the full period the target piece is (1/2) int phi(u)/u e^{i a sin theta},
    analytic in theta on [th2, 2 pi - th2]. The path drops to Im theta = eta with
    tanh(eta) = -beta/(2 kappa): there |integrand| is exactly e^{pi beta/(2Y)} times
    u^(alpha-1), so doubles suffice once that factor is pulled out.
    """
    big_y = c * c * y
    a = math.pi * kappa / big_y
    if seed.u_hi * big_y >= 1 or kappa == 0 or not 0 <= seed.beta < 2 * kappa:
        raise ValidationError("contour kernel covers oscillatory seeds with u_hi c^2 y < 1 only")

    def integrand(th):
        u = np.sin(0.5 * th) ** 2 / big_y
        return seed(u) / u * np.cos(a * np.sin(th))

    th1 = 2 * math.asin(math.sqrt(seed.u_lo * big_y))
    th2 = 2 * math.asin(math.sqrt(seed.u_hi * big_y))
    head = _kernel_head(integrand, kappa, big_y, a, th1, th2)
    eta = -math.atanh(seed.beta / (2 * kappa))
    scale = math.pi * seed.beta / (2 * big_y)
    log_y, alpha, n = math.log(big_y), complex(seed.alpha), seed.n

    def h(th):
        logu = 2 * np.log(np.sin(0.5 * th)) - log_y
        v = np.exp((alpha - 1) * logu + math.pi * seed.beta * np.exp(logu) + 1j * a * np.sin(th) - scale)
        return v * logu ** n / math.factorial(n) if n else v

    th3 = 2 * math.pi - th2
    vert = np.linspace(0.0, 1.0, 9)
    side = (_gl_panels(lambda t: h(th2 + 1j * eta * t) * 1j * eta, vert, 24)
            - _gl_panels(lambda t: h(th3 + 1j * eta * t) * 1j * eta, vert, 24))
    # along the line the phase is (pi/Y)(kappa cosh eta + beta sinh eta / 2) sin x
    freq = a * (math.cosh(eta) + seed.beta * math.sinh(eta) / (2 * kappa))
    k = max(8, int(math.ceil((th3 - th2) * freq / 2.0)))
    flat = _gl_panels(lambda x: h(x + 1j * eta), np.linspace(th2, th3, k + 1), 24)
    part = complex(0.5 * (side + flat))
    if alpha.imag == 0:
        part = part.real  # the conjugate half-paths cancel the imaginary part
    with mp.workdps(30):
        return (mp.mpf(head) + mp.mpmathify(part) * mp.exp(scale)) / c ** 2


def _unfold_kernel_mp(seed: SeedProfile, kappa: int, c: int, y: float, dps: int) -> mp.mpf:
    """K(c,y) on the real theta line at working precision dps (reference for the contour route)."""
    with mp.workdps(dps):
        big_y = mp.mpf(c) ** 2 * mp.mpf(y)
        a = mp.pi * kappa / big_y
        lo, hi = mp.mpf(seed.u_lo), mp.mpf(seed.u_hi)
        alpha = mp.mpmathify(seed.alpha)
        beta = mp.mpf(seed.beta)
        span = mp.log(hi / lo)

        def phi_over_u(u):
            if u <= lo:
                return u
            tgt = mp.exp(alpha * mp.log(u) + mp.pi * beta * u)
            if seed.n:
                tgt *= mp.log(u) ** seed.n / mp.factorial(seed.n)
            if u >= hi:
                return tgt / u
            s = (mp.log(u) - mp.log(lo)) / span
            w = s ** 3 * (10 - 15 * s + 6 * s * s)
            return ((1 - w) * u * u + w * tgt) / u

        def f(th):
            u = mp.sin(th / 2) ** 2 / big_y
            return phi_over_u(u) * mp.cos(a * mp.sin(th))

        th1 = 2 * mp.asin(mp.sqrt(lo * big_y))
        th2 = 2 * mp.asin(mp.sqrt(hi * big_y)) if hi * big_y < 1 else mp.pi
        pts = sorted(set([mp.mpf(0), th1, th2, mp.pi] +
                         [mp.mpf(v) for v in np.linspace(0, math.pi, int(float(a) / 1.5) + 2)]))
        val = mp.quad(f, pts, method="gauss-legendre")
        return mp.re(val) / c ** 2


def _c_split(y: float, seed: SeedProfile) -> int:
    # cosets with c^2 y < 1/u_lo need the numerical kernel
    return int(math.floor(math.sqrt(1 / (seed.u_lo * y)) + 1e-12))


_C_TAIL = 20000


@lru_cache(maxsize=4096)
def _poincare_a0_scalar(seed: SeedProfile, kappa: int, y: float) -> complex:
    c_num = _c_split(y, seed)
    ident = complex(seed(np.array([y]))[0]) if kappa == 0 else 0.0
    rs = arith.ramanujan_sums(kappa, max(c_num, 1))
    head = sum(int(rs[c]) * _unfold_kernel(seed, kappa, c, y) for c in range(1, c_num + 1)
               if rs[c] != 0)
    if kappa == 0:
        # closed form for all larger c: (pi/2y) (zeta(3)/zeta(4) - partial)
        phi = arith.totients(max(c_num, 1))
        partial = math.fsum(phi[c] / c ** 4 for c in range(1, c_num + 1))
        tail = math.pi / (2 * y) * (zeta_fn(3) / zeta_fn(4) - partial)
    else:
        c = np.arange(c_num + 1, _C_TAIL + 1, dtype=float)
        r = arith.ramanujan_sums(kappa, _C_TAIL)[c_num + 1:].astype(float)
        tail = float(np.sum(r * math.pi * _bessel_j0(math.pi * kappa / (c * c * y)) / (2 * c ** 4 * y)))
    return ident + head + tail


def _poincare_a0_big(seed: SeedProfile, kappa: int, y: float) -> mp.mpf:
    """Heterotic a0 at small y: strongly oscillating kernels go through the shifted contour
    and are summed in mpmath, since a0 can pass the double range."""
    c_num = _c_split(y, seed)
    rs = arith.ramanujan_sums(kappa, max(c_num, 1))
    total = mp.mpf(0)
    for c in range(1, c_num + 1):
        if rs[c] == 0:
            continue
        big_y = c * c * y
        lost = math.pi * seed.beta / big_y / math.log(10)
        if lost > 6:
            k = _unfold_kernel_contour(seed, kappa, c, y)
        else:
            k = mp.mpf(_unfold_kernel(seed, kappa, c, y))
        total += int(rs[c]) * k
    c = np.arange(c_num + 1, _C_TAIL + 1, dtype=float)
    r = arith.ramanujan_sums(kappa, _C_TAIL)[c_num + 1:].astype(float)
    total += float(np.sum(r * math.pi * _bessel_j0(math.pi * kappa / (c * c * y)) / (2 * c ** 4 * y)))
    return total


def _kernel0_vec(seed: SeedProfile, big_y: np.ndarray) -> np.ndarray:
    """k(Y) = int_0^pi (phi(u)/u) dtheta, u = sin^2(theta/2)/Y, for an array of Y < 1/u_lo.

    The kappa = 0 kernel depends on c and y only through Y = c^2 y: K(c,y) = k(c^2 y)/c^2.
    """
    big_y = np.asarray(big_y, dtype=float)
    th1 = 2 * np.arcsin(np.sqrt(seed.u_lo * big_y))
    th2 = np.where(seed.u_hi * big_y < 1, 2 * np.arcsin(np.sqrt(np.minimum(seed.u_hi * big_y, 1.0))), math.pi)
    small = th1 < 0.1
    t2 = th1 * th1
    low = np.where(small, th1 * t2 / 6 * (1 - t2 / 20 + t2 * t2 / 840), th1 - np.sin(th1)) / (2 * big_y)
    xg, wg = _gl(24)

    def piece(lo, hi, yy, panels):
        # Gauss-Legendre in log(theta), `panels` equal panels per Y
        a, b = np.log(lo), np.log(hi)
        width = (b - a) / panels
        k = np.arange(panels)
        left = a[:, None] + width[:, None] * k[None, :]
        tau = left[..., None] + 0.5 * width[:, None, None] * (xg + 1)[None, None, :]
        th = np.exp(tau)
        u = np.sin(0.5 * th) ** 2 / yy[:, None, None]
        vals = seed(u.ravel()).reshape(u.shape) / u * th
        return np.sum(vals.real * wg, axis=(1, 2)) * 0.5 * width

    mid = piece(th1, th2, big_y, 4)
    has_top = th2 < math.pi
    top = np.zeros(big_y.shape)
    if np.any(has_top):
        top[has_top] = piece(th2[has_top], np.full(int(has_top.sum()), math.pi), big_y[has_top], 16)
    return low + mid + top


def typeii_a0_array(seed: SeedProfile, y) -> np.ndarray:
    """Unfolded a0 of P[phi] at many heights at once (kappa = 0)."""
    y = np.asarray(y, dtype=float)
    flat = y.ravel()
    out = seed(flat).astype(complex)
    c_num = np.floor(np.sqrt(1 / (seed.u_lo * flat)) + 1e-12).astype(int)
    phi_tab = arith.totients(int(max(c_num.max(), 1)))
    idx = np.repeat(np.arange(flat.size), c_num)
    cs = np.concatenate([np.arange(1, k + 1) for k in c_num]) if idx.size else np.zeros(0, int)
    if idx.size:
        kern = _kernel0_vec(seed, cs * cs * flat[idx]) / (cs * cs)
        np.add.at(out, idx, phi_tab[cs] * kern)
    phi = arith.totients(int(max(c_num.max(), 1)))
    cum = np.cumsum(phi / np.arange(phi.size, dtype=float).clip(1) ** 4 * (np.arange(phi.size) > 0))
    ratio = zeta_fn(3) / zeta_fn(4)
    out += math.pi / (2 * flat) * (ratio - cum[c_num])
    return out.reshape(y.shape)


def _vectorize_a0(fn):
    def a0(y):
        ya = np.asarray(y, dtype=float)
        out = np.array([fn(float(v)) for v in ya.ravel()], dtype=complex).reshape(ya.shape)
        return out if ya.ndim else complex(out)
    return a0


def _poincare_exact_c0(seed: SeedProfile) -> complex:
    """int_0^inf phi(y) y^-2 dy: 1/2 below, Gauss-Legendre on the blend, closed form above."""
    lo, hi = math.log(seed.u_lo), math.log(seed.u_hi)
    xg, wg = _gl(80)
    v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
    blend = np.sum(wg * seed(np.exp(v)) * np.exp(-v)) * 0.5 * (hi - lo)
    # int_{u_hi}^inf y^{alpha-2} log^n y / n! dy = Gamma(n+1, z)/(n! (1-alpha)^{n+1}), z=(1-alpha) log u_hi
    one_m = 1 - complex(seed.alpha)
    z = one_m * hi
    upper = cmath.exp(-z) * sum(z ** k / math.factorial(k) for k in range(seed.n + 1)) / one_m ** (seed.n + 1)
    return seed.u_lo + complex(blend) + upper


_NEAR_D = (-2, -1, 0, 1, 2)


def _typeii_values(seed: SeedProfile):
    def ev(x, y):
        xr, yr = _reduced(x, y)
        out = eisenstein_array(2.0, xr, yr, reduced=True, minus_leading=True)
        out = out + seed(yr)
        # cosets (1, d) are the only ones with Im(gamma z) > 1/2 at reduced points
        for d in _NEAR_D:
            u = yr / ((xr + d) ** 2 + yr ** 2)
            big = u > seed.u_lo
            if np.any(big):
                out[big] += seed(u[big]) - u[big] ** 2
        return out
    return ev


def poincare_typeii(alpha: complex = 0.3, n: int = 0) -> ModularFunctionSpec:
    alpha = complex(alpha) if isinstance(alpha, complex) else float(alpha)
    if not complex(alpha).real < 0.5:
        raise ValidationError(f"poincare_typeII needs Re(alpha) < 1/2, got {alpha}")
    if not (isinstance(n, int) and n >= 0):
        raise ValidationError("n must be a nonnegative integer")
    seed = SeedProfile(alpha=alpha, n=n)
    k = _k_e2()
    terms = (PolyTerm(1.0, alpha, n), PolyTerm(k, -1.0, 0))
    def a0(y):
        out = typeii_a0_array(seed, y)
        return out if np.ndim(y) else complex(out)
    return ModularFunctionSpec(
        name="poincare_typeII", evaluator=_typeii_values(seed), growth=Polynomial(terms),
        exact_a0=a0, exact_C0=_poincare_exact_c0(seed), params={"alpha": alpha, "n": n},
        a0_tail=terms, note="P[phi] = E_2 + near-coset seed corrections")


# heterotic ---------------------------------------------------------------------

_KL_CMAX = 1000


def _poisson_coeffs(kappa: int, n_max: int) -> np.ndarray:
    """T_n = sum_c S(kappa, n; c)/c^4 for |n| <= n_max."""
    return np.array([arith.kloosterman_series(kappa, n, _KL_CMAX, 4) for n in range(-n_max, n_max + 1)])


def _heterotic_parts(seed: SeedProfile, radius: float):
    kappa = seed.kappa

    def rest(xr, yr):
        """Non-identity cosets at arbitrary (x, y)."""
        ymin = float(np.min(yr))
        n_max = int(math.ceil(40 / (2 * math.pi * ymin))) + 1
        tn = _poisson_coeffs(kappa, n_max)
        # all c >= 1 cosets with seed u^2 and phase e(kappa a/c), by Poisson in each class
        out = np.zeros(xr.shape, dtype=complex)
        for i, n in enumerate(range(-n_max, n_max + 1)):
            w = 2 * math.pi * abs(n) * yr
            out += tn[i] * (1 + w) * np.exp(-w) * np.exp(2j * math.pi * n * xr)
        out *= math.pi / (2 * yr)
        # near cosets: replace u^2 e(kappa a/c) by phi(u) e(kappa Re gamma z).
        # The x-averaged error of the far phase is ~ 8 (kappa y)^2 / R^5, so R grows with y.
        rad = np.maximum(radius, 80.0 * (abs(kappa) * yr) ** 0.4)
        rad2 = rad * rad
        c_max = int(float(np.max(rad / yr)))
        for c in range(1, c_max + 1):
            live = rad > c * yr
            if not np.any(live):
                continue
            xl, yl, r2 = xr[live], yr[live], rad2[live]
            rmax = float(np.sqrt(r2.max()))
            d = np.arange(int(math.floor(-c * float(xl.max()) - rmax)),
                          int(math.ceil(-c * float(xl.min()) + rmax)) + 1)
            d = d[np.gcd(d, c) == 1]
            a = np.array([pow(int(v), -1, c) for v in d]) if c > 1 else np.zeros(d.size)
            base = np.exp(2j * math.pi * kappa * a / c)
            acc = np.zeros(xl.shape, dtype=complex)
            step = max(8, (1 << 21) // xl.size)
            for lo in range(0, d.size, step):
                dd, bb = d[lo:lo + step], base[lo:lo + step]
                v = c * xl[:, None] + dd[None, :]
                q = v * v + (c * yl[:, None]) ** 2
                inside = q <= r2[:, None]
                if not np.any(inside):
                    continue
                qi, vi = q[inside], v[inside]
                u = np.broadcast_to(yl[:, None], q.shape)[inside] / qi
                bi = np.broadcast_to(bb[None, :], q.shape)[inside]
                term = np.zeros(q.shape, dtype=complex)
                term[inside] = seed(u) * bi * np.exp(-2j * math.pi * kappa * vi / (c * qi)) - u * u * bi
                acc += term.sum(axis=1)
            out[live] += acc
        return out

    def mode(xr, yr):
        return seed(yr) * np.exp(2j * math.pi * kappa * xr)

    return mode, rest


def poincare_heterotic(alpha: complex = 0.0, beta: float = 0.5, kappa: int = 1,
                       radius: float = 60.0) -> ModularFunctionSpec:
    growth = Exponential(alpha, beta, kappa)  # validates the class
    seed = SeedProfile(alpha=alpha, beta=float(beta), kappa=int(kappa))
    mode, rest = _heterotic_parts(seed, radius)

    def ev(x, y):
        xr, yr = _reduced(x, y)
        return mode(xr, yr) + rest(xr, yr)

    def a0_one(y):
        if math.pi * seed.beta / y / math.log(10) > 6:
            return complex(_poincare_a0_big(seed, seed.kappa, y))
        return _poincare_a0_scalar(seed, seed.kappa, y)

    # y >> 1: a0 = (pi/2y) sum_c c_c(kappa) J0(pi kappa/(c^2 y)) / c^4, expanded to y^-5
    amp = math.pi / 2 * arith.kloosterman_series(kappa, 0, _KL_CMAX, 4)
    amp3 = -math.pi / 2 * (math.pi * kappa) ** 2 / 4 * arith.kloosterman_series(kappa, 0, _KL_CMAX, 8)
    amp5 = math.pi / 2 * (math.pi * kappa) ** 4 / 64 * arith.kloosterman_series(kappa, 0, _KL_CMAX, 12)
    return ModularFunctionSpec(
        name="poincare_heterotic", evaluator=ev, growth=growth, exact_a0=_vectorize_a0(a0_one),
        params={"alpha": alpha, "beta": beta, "kappa": kappa},
        cusp_mode=mode, remainder=rest, a0_tail=(PolyTerm(amp, -1.0, 0), PolyTerm(amp3, -3.0, 0),
                                                   PolyTerm(amp5, -5.0, 0)),
        note="P[phi e(kappa x)]; far cosets via Kloosterman-Poisson sums")


def raw_coset_sum(spec: ModularFunctionSpec, x: float, y: float, radius: float) -> complex:
    """Slow oracle: direct sum of phi(Im gamma z) e(kappa Re gamma z) over cosets with
    |cz+d| <= radius, at the given (unreduced) point. Poincare builtins only."""
    p = spec.params
    seed = SeedProfile(alpha=p.get("alpha", 0.3), beta=p.get("beta", 0.0), kappa=p.get("kappa", 0),
                       n=p.get("n", 0))
    kappa = seed.kappa
    total = complex(seed(np.array([y]))[0]) * cmath.exp(2j * math.pi * kappa * x)
    for c in range(1, int(radius / y) + 1):
        for d in range(int(math.floor(-c * x - radius)), int(math.ceil(-c * x + radius)) + 1):
            if math.gcd(c, d) != 1:
                continue
            v = c * x + d
            q = v * v + (c * y) ** 2
            if q > radius * radius:
                continue
            a = pow(d, -1, c) if c > 1 else 0
            u = y / q
            total += complex(seed(np.array([u]))[0]) * cmath.exp(2j * math.pi * kappa * (a / c - v / (c * q)))
    return total


# j ------------------------------------------------------------------------------

_J_TERMS = 60


def _j_values(x, y):
    xr, yr = _reduced(x, y)
    coeffs = np.array(arith.j_coefficients(_J_TERMS), dtype=float)  # c(-1)..c(N)
    q = np.exp(2j * math.pi * (xr + 1j * yr))
    acc = np.zeros(q.shape, dtype=complex)
    for c in coeffs[:0:-1]:
        acc = acc * q + c
    return acc + coeffs[0] / q


def j_invariant() -> ModularFunctionSpec:
    return ModularFunctionSpec(
        name="j_invariant", evaluator=_j_values, growth=Exponential(0.0, 2.0, -1, validate=False),
        exact_a0=lambda y: 744.0 + 0 * np.asarray(y, dtype=float) + 0j, prefer_exact_a0=True,
        note="outside the heterotic class (beta = 2)")


# registry ----------------------------------------------------------------------

BUILTINS = ("delta_cusp", "eisenstein_fixed", "poincare_typeII", "poincare_heterotic", "j_invariant")


def builtin(name: str, **params) -> ModularFunctionSpec:
    if name == "delta_cusp":
        return delta_cusp()
    if name == "eisenstein_fixed":
        return eisenstein_fixed(params.get("s0", 1.25))
    if name == "poincare_typeII":
        return poincare_typeii(params.get("alpha", 0.3), int(params.get("n", 0)))
    if name == "poincare_heterotic":
        return poincare_heterotic(params.get("alpha", 0.0), params.get("beta", 0.5),
                                  int(params.get("kappa", 1)))
    if name == "j_invariant":
        return j_invariant()
    raise ValidationError(f"unknown builtin {name!r}; expected one of {', '.join(BUILTINS)}")


def evaluate(f: ModularFunctionSpec, z: HPoint, budget=None) -> complex:
    return f(z)


# horocycle average ------------------------------------------------------------

MAX_DOUBLINGS = 22


def constant_term(f: ModularFunctionSpec, y: float, budget=None, use_exact: Optional[bool] = None) -> complex:
    """a0(y) = int_0^1 f(x+iy) dx by periodic trapezoid with node doubling.

    Uses exact_a0 instead when use_exact is True, or when it is None and the
    function prefers its oracle.
    """
    if not y > 0:
        raise ValidationError("y must be positive")
    eps = (budget.eps if isinstance(budget, TruncationBudget) else float(budget)) if budget else 1e-10
    if f.exact_a0 is not None and y >= f.exact_a0_ymin and \
            (use_exact or (use_exact is None and f.prefer_exact_a0)):
        return complex(f.exact_a0(y))
    g = f.values
    if f.remainder is not None and y >= 1:
        # every x + iy is reduced up to translation; the e(kappa x) mode averages to 0
        g = f.remainder
    n = 8
    while n < 4 / y:
        n *= 2
    xs = np.arange(n) / n
    vals = g(xs, np.full(n, float(y)))
    total = vals.sum()
    scale = float(np.max(np.abs(vals)))
    est = total / n
    for _ in range(MAX_DOUBLINGS):
        xs = (np.arange(n) + 0.5) / n
        vals = g(xs, np.full(n, float(y)))
        total = total + vals.sum()
        scale = max(scale, float(np.max(np.abs(vals))))
        n *= 2
        new = total / n
        # below the round-off floor of the samples further doubling cannot help
        if abs(new - est) <= max(eps * abs(new), 4e-16 * scale) or abs(new - est) < 1e-300:
            return complex(new)
        est = new
    raise ConvergenceError(f"constant term at y={y} not converged after {n} nodes", last=complex(est))


# integrals over the domain -------------------------------------------------------

def _power_log_tail(alpha: complex, n: int, big_y: float) -> complex:
    """int_Y^inf y^{alpha-2} log^n y / n! dy for Re alpha < 1, Y > 1."""
    one_m = 1 - complex(alpha)
    z = one_m * math.log(big_y)
    return cmath.exp(-z) * sum(z ** k / math.factorial(k) for k in range(n + 1)) / one_m ** (n + 1)


def domain_quadrature(g, big_y: float, nx_low: int = 40, ny_low: int = 40, nx_up: int = 64) -> complex:
    """int over {z in D, y <= Y} of g(x, y) dx dy / y^2, x integrated first above y = 1.

    Below y = 1 the region is {|x| <= 1/2, sqrt(1-x^2) <= y <= 1}; above it is
    the full period, trapezoid in x and Gauss-Legendre on log-y panels.
    """
    xg, wg = _gl(nx_low)
    yg, wyg = _gl(ny_low)
    total = 0j
    for a, b in ((-0.5, 0.0), (0.0, 0.5)):
        xs = 0.5 * (a + b) + 0.5 * (b - a) * xg
        wx = 0.5 * (b - a) * wg
        ylo = np.sqrt(1 - xs * xs)
        ys = 0.5 * (ylo[:, None] + 1) + 0.5 * (1 - ylo[:, None]) * yg[None, :]
        wy = 0.5 * (1 - ylo[:, None]) * wyg[None, :]
        xx = np.broadcast_to(xs[:, None], ys.shape)
        vals = g(xx.ravel(), ys.ravel()).reshape(ys.shape) / ys ** 2
        total += np.sum(wx[:, None] * wy * vals)
    if big_y > 1:
        lg = math.log(big_y)
        panels = max(2, int(math.ceil(lg / math.log(1.6))))
        breaks = np.linspace(0.0, lg, panels + 1)
        tg, wt = _gl(20)
        xs = (np.arange(nx_up) + 0.5) / nx_up - 0.5
        for a, b in zip(breaks[:-1], breaks[1:]):
            v = 0.5 * (a + b) + 0.5 * (b - a) * tg
            ys = np.exp(v)
            xx, yy = np.meshgrid(xs, ys, indexing="ij")
            vals = g(xx.ravel(), yy.ravel()).reshape(xx.shape)
            row = vals.mean(axis=0)  # x first
            total += np.sum(row / ys * wt) * 0.5 * (b - a)
    return complex(total)


def tail_integral(f: ModularFunctionSpec, big_y: float, weight=None, y_far: float = 400.0) -> complex:
    """int_Y^inf a0(y) w(y) y^-2 dy using exact_a0 up to y_far and a0_tail beyond.

    Without weight the a0_tail terms are integrated in closed form from the
    point where the numerical part stops.
    """
    if isinstance(f.growth, RapidDecay) and f.exact_a0 is None:
        return 0j
    total = 0j
    start = big_y
    if f.exact_a0 is not None and not (f.a0_tail and weight is None and _tail_is_exact(f, big_y)):
        stop = y_far if f.a0_tail else max(4 * big_y, big_y + 10)
        lg0, lg1 = math.log(big_y), math.log(stop)
        breaks = np.linspace(lg0, lg1, max(2, int((lg1 - lg0) / 0.4)) + 1)
        tg, wt = _gl(24)
        for a, b in zip(breaks[:-1], breaks[1:]):
            v = 0.5 * (a + b) + 0.5 * (b - a) * tg
            ys = np.exp(v)
            vals = np.asarray(f.exact_a0(ys), dtype=complex)
            if weight is not None:
                vals = vals * weight(ys)
            total += np.sum(vals / ys * wt) * 0.5 * (b - a)
        start = stop
    if weight is None:
        total += sum(t.c * _power_log_tail(t.alpha, t.n, start) for t in f.a0_tail)
    return complex(total)


def _tail_is_exact(f: ModularFunctionSpec, big_y: float) -> bool:
    # a0 equals its tail terms exactly above the seed join for the type II Poincare builtin
    return f.name in ("poincare_typeII", "constant", "eisenstein_fixed") and big_y >= U_HI


def petersson_integral(f: ModularFunctionSpec, budget=None, big_y: float = 4.0) -> complex:
    """C0 = int_D f dmu: domain quadrature up to Y plus the constant-term tail.

    Warns (PrecisionWarning) when the sampled horocycle average at Y disagrees
    with the a0 used for the tail.
    """
    if isinstance(f.growth, Polynomial) and any(complex(t.alpha).real >= 1 for t in f.growth.terms):
        raise ValidationError("int_D f diverges for growth exponents with Re >= 1")
    body = domain_quadrature(f.values, big_y)
    tail = tail_integral(f, big_y)
    if f.exact_a0 is not None or f.a0_tail:
        sampled = constant_term(f, big_y, budget=1e-9, use_exact=False)
        if f.exact_a0 is not None:
            model = complex(f.exact_a0(big_y))
        else:
            model = complex(sum(t.value(big_y) for t in f.a0_tail))
        if abs(sampled - model) > 1e-6 * max(1.0, abs(model)):
            warnings.warn(f"{f.name}: tail profile disagrees with sampled a0 at y={big_y} "
                          f"({model} vs {sampled})", PrecisionWarning, stacklevel=2)
    return body + tail
