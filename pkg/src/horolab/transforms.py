"""The horocycle-side transforms: i(t), the theta pairing, R*(f,s) and small-y fits.

Conventions used throughout:

    theta_t(y)  = sum_{n>=1} exp(-pi t n^2 / y)                 (theta1(t/y))
    i(t)        = int_0^inf a0(y) theta_t(y) dy / y^2
    Theta*_t(z) = sum over cosets of theta_t(Im gamma z) = Theta_t(z) / 2

where Theta_t is the lattice theta over (m, n) != 0. Unfolding gives
<Theta*_t, f> = i(t), and the lattice inversion Theta_t = -1 + 1/t + Theta_{1/t}/t
turns into

    i(t) = i(1/t)/t + C (1/t - 1),   C = (1/2) int_D f dmu.

That C is what governs the small-t behaviour of i(t) and the s = 0, 1 poles of R*.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import PoleError, ValidationError
from .lattice import theta1_array, theta2_array
from .modfun import (
    Exponential, ModularFunctionSpec, Polynomial, PolyTerm, RapidDecay, _gl, constant_term,
    domain_quadrature, petersson_integral,
)
from .specialfn import zeta_star, zeta_zero_find

PANEL = 0.25       # width of Gauss-Legendre panels in log y / log t
NODES = 20
Y_HI_MIN = 50.0
EXP_CUT = 60.0     # theta_t(y) < e^-60 below y = pi t / 60


# -- growth bookkeeping --------------------------------------------------------

def growth_terms(f: ModularFunctionSpec) -> tuple:
    """PolyTerms of the large-y constant term (empty for rapid decay)."""
    if isinstance(f.growth, RapidDecay):
        return ()
    return tuple(f.a0_tail)


def integral_C(f: ModularFunctionSpec) -> complex:
    """int_D f dmu, from the exact value when the function carries one."""
    if f.exact_C0 is not None:
        return complex(f.exact_C0)
    return petersson_integral(f)


def _dalpha(g, alpha: complex, n: int, avoid: Sequence[complex] = ()) -> complex:
    """n-th derivative of the analytic function g at alpha (Cauchy integral on a circle)."""
    if n == 0:
        return complex(g(alpha))
    r = 0.1
    for p in avoid:
        r = min(r, 0.5 * abs(alpha - p))
    m = 48
    th = 2 * math.pi * np.arange(m) / m
    vals = np.array([complex(g(alpha + r * cmath.exp(1j * a))) for a in th])
    return complex(np.mean(vals * np.exp(-1j * n * th)) * math.factorial(n) / r ** n)


def _term_avoid(alpha):
    # zeta*(2 - 2 alpha) has poles at alpha = 1/2 and alpha = 1
    return (0.5, 1.0)


def large_t_law(terms, t) -> np.ndarray:
    """sum c/n! d^n/dalpha^n [zeta*(2 - 2 alpha) t^(alpha - 1)]: i(t) up to e^{-O(t)}."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    lt = np.log(t)
    for term in terms:
        a0, n = complex(term.alpha), term.n
        if n == 0:
            out += term.c * zeta_star(2 - 2 * a0) * np.exp((a0 - 1) * lt)
            continue
        # expand t^(alpha-1) log^k t around alpha: Leibniz on the two factors
        acc = np.zeros(t.shape, dtype=complex)
        for k in range(n + 1):
            dz = _dalpha(lambda a: zeta_star(2 - 2 * a), a0, n - k, _term_avoid(a0))
            acc += math.comb(n, k) * dz * lt ** k
        out += term.c / math.factorial(n) * np.exp((a0 - 1) * lt) * acc
    return out


def small_t_law(terms, C: complex, t) -> np.ndarray:
    """C/t - C + large_t_law(1/t)/t: i(t) up to e^{-O(1/t)} as t -> 0."""
    t = np.asarray(t, dtype=float)
    return C / t - C + large_t_law(terms, 1 / t) / t


# -- y-quadrature ------------------------------------------------------------------

def _log_grid(lo: float, hi: float, width: Optional[float] = None, nodes: Optional[int] = None):
    width = width or PANEL
    nodes = nodes or NODES
    a, b = math.log(lo), math.log(hi)
    k = max(1, int(math.ceil((b - a) / width)))
    breaks = np.linspace(a, b, k + 1)
    xg, wg = _gl(nodes)
    half = 0.5 * np.diff(breaks)
    v = (0.5 * (breaks[:-1] + breaks[1:]))[:, None] + half[:, None] * xg[None, :]
    w = half[:, None] * wg[None, :]
    return np.exp(v.ravel()), w.ravel()


def a0_values(f: ModularFunctionSpec, ys, sampled: bool = False, budget: float = 1e-11) -> np.ndarray:
    """a0 at many heights: the exact oracle when present, else horocycle sampling."""
    ys = np.asarray(ys, dtype=float)
    out = np.empty(ys.shape, dtype=complex)
    exact = np.zeros(ys.shape, dtype=bool)
    if f.exact_a0 is not None and not sampled:
        exact = ys >= f.exact_a0_ymin
        if np.any(exact):
            out[exact] = np.asarray(f.exact_a0(ys[exact]), dtype=complex)
    for idx in zip(*np.nonzero(~exact)):
        out[idx] = constant_term(f, float(ys[idx]), budget=budget, use_exact=False)
    return out


def _tail_T(p: complex, n: int, big_y: float) -> complex:
    """int_Y^inf y^(p-1) log^n y / n! dy, Re p < 0."""
    q = -complex(p)
    z = q * math.log(big_y)
    return cmath.exp(-z) * sum(z ** k / math.factorial(k) for k in range(n + 1)) / q ** (n + 1)


def _theta_tail(terms, t: float, big_y: float) -> complex:
    """int_Y^inf G(y) theta_t(y) dy/y^2 with theta_t(y) = (sqrt(y/t) - 1)/2 for y >> t."""
    tot = 0j
    for term in terms:
        a = complex(term.alpha)
        tot += 0.5 * term.c * (_tail_T(a - 0.5, term.n, big_y) / math.sqrt(t) - _tail_T(a - 1, term.n, big_y))
    return tot


class _IGrid:
    """i(t) for many t from one table of a0 on a log-y grid."""

    def __init__(self, f: ModularFunctionSpec, t_min: float, t_max: float, sampled: bool = False):
        self.f = f
        self.terms = growth_terms(f)
        self.y_lo = min(1e-2, math.pi * t_min / EXP_CUT)
        if isinstance(f.growth, Exponential):
            # a0 grows at most like e^{pi beta/y}; theta_t decays like e^{-pi t/y}
            self.y_lo = math.pi * (t_min - f.growth.beta) / EXP_CUT
        self.y_hi = max(Y_HI_MIN, 20.0 * t_max)
        self.ys, self.w = _log_grid(self.y_lo, self.y_hi)
        self.a0 = a0_values(f, self.ys, sampled=sampled)
        if isinstance(f.growth, RapidDecay) and abs(self.a0[-1]) > 1e-20:
            raise ValidationError("rapid-decay constant term not negligible at the grid top")

    def __call__(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.empty(ts.shape, dtype=complex)
        for k, t in enumerate(ts):
            th = theta1_array(t / self.ys)
            body = np.sum(self.w * self.a0 * th / self.ys)
            out[k] = body + _theta_tail(self.terms, t, self.y_hi)
        return out


def _check_t(f: ModularFunctionSpec, t: float):
    if not t > 0:
        raise ValidationError("t must be positive")
    if isinstance(f.growth, Exponential) and not t > 1:
        raise ValidationError("for exponential growth the unfolding needs t > 1 "
                              "(the theta kernel must beat the e^{pi beta y} cusp growth)")


def i_of_t(f: ModularFunctionSpec, t: float, budget=None) -> complex:
    """i(t) = int_0^inf a0(y) theta_t(y) dy / y^2 by Gauss-Legendre in log y."""
    _check_t(f, t)
    return complex(_IGrid(f, t, t)(t)[0])


def i_of_t_many(f: ModularFunctionSpec, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    for t in ts:
        _check_t(f, float(t))
    return _IGrid(f, float(ts.min()), float(ts.max()))(ts)


# -- theta pairing --------------------------------------------------------------------

def theta_pairing(f: ModularFunctionSpec, t: float, budget=None, lattice: bool = False) -> complex:
    """<Theta*_t, f> = int_D f Theta_t / 2 dmu, x integrated first.

    With lattice=True the full lattice theta is used, which is twice the
    coset sum and so pairs to 2 i(t).

    The domain part runs to a height Y where the m != 0 lattice rows are below
    e^-45; above it Theta_t reduces to 2 theta_t(y) and the x-integral of f is
    the horocycle average, which is sampled (not taken from exact_a0) up to
    3Y and replaced by the growth expansion beyond.
    """
    _check_t(f, t)
    big_y = max(4.0, 45.0 / (math.pi * t))
    def g(x, y):
        return f.values(x, y) * theta2_array(t, x, y) / 2
    body = domain_quadrature(g, big_y)
    # sampled horocycle averages only up to y_hi; the growth expansion closes the rest
    y_hi = max(3 * big_y, 12.0 * t)
    ys, w = _log_grid(big_y, y_hi, width=0.55, nodes=12)
    a0 = a0_values(f, ys, sampled=True)
    tail = np.sum(w * a0 * theta1_array(t / ys) / ys) + _theta_tail(growth_terms(f), t, y_hi)
    val = complex(body + tail)
    return 2 * val if lattice else val


# -- inversion identity --------------------------------------------------------------

@dataclass(frozen=True)
class InversionCheck:
    t: float
    lhs: complex
    rhs: complex
    constant: complex

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs) / max(abs(self.lhs), 1e-300)


def inversion_check(f: ModularFunctionSpec, ts, constant: str = "integral") -> list:
    """Compare i(t) with i(1/t)/t + C/t - C.

    constant="integral" takes C = int_D f (the literal statement);
    constant="half" takes C = int_D f / 2, what the lattice inversion gives.
    """
    if constant not in ("integral", "half"):
        raise ValidationError("constant must be 'integral' or 'half'")
    ts = np.asarray(ts, dtype=float)
    c_int = integral_C(f)
    c = c_int if constant == "integral" else c_int / 2
    allt = np.concatenate([ts, 1 / ts])
    vals = i_of_t_many(f, allt)
    k = ts.size
    return [InversionCheck(float(t), vals[j], vals[k + j] / t + c / t - c, c) for j, t in enumerate(ts)]


# -- Rankin-Selberg transform ----------------------------------------------------------

T_REMAINDER = 40.0   # i(t) - laws is below e^{-pi T/2} ~ 1e-27 beyond this


def _poles(terms, C):
    """(location, residue) for every pole of R*(f, s) from the subtraction terms (n = 0 only)."""
    out = [(1.0, C), (0.0, -C)]
    for term in terms:
        a = complex(term.alpha)
        if term.n == 0:
            out.append((a, term.c * zeta_star(2 * a - 1)))
            out.append((1 - a, -term.c * zeta_star(2 - 2 * a)))
        else:
            out.append((a, None))
            out.append((1 - a, None))
    return out


def _analytic_part(terms, C, s: complex) -> complex:
    tot = C / (s - 1) - C / s
    for term in terms:
        a = complex(term.alpha)
        def g(al, s=s):
            return zeta_star(2 - 2 * al) * (1 / (s - al) - 1 / (s + al - 1))
        avoid = (0.5, 1.0, s, 1 - s)
        tot += term.c / math.factorial(term.n) * _dalpha(g, a, term.n, avoid)
    return tot


@dataclass
class RSContext:
    """Cached pieces of R*(f, s) that do not depend on s."""

    f: ModularFunctionSpec
    C: complex
    terms: tuple
    v_lo: np.ndarray = field(repr=False, default=None)
    w_lo: np.ndarray = field(repr=False, default=None)
    r_lo: np.ndarray = field(repr=False, default=None)
    v_hi: np.ndarray = field(repr=False, default=None)
    w_hi: np.ndarray = field(repr=False, default=None)
    r_hi: np.ndarray = field(repr=False, default=None)


def rs_context(f: ModularFunctionSpec, C: Optional[complex] = None) -> RSContext:
    if isinstance(f.growth, Exponential):
        raise ValidationError("R*(f,s) is defined here for rapid-decay and polynomial growth only")
    terms = growth_terms(f)
    if C is None:
        C = integral_C(f) / 2
    t_lo, t_hi = 1 / T_REMAINDER, T_REMAINDER
    ts_lo, w_lo = _log_grid(t_lo, 1.0, 0.25, 16)
    ts_hi, w_hi = _log_grid(1.0, t_hi, 0.25, 16)
    grid = _IGrid(f, t_lo, t_hi)
    i_lo, i_hi = grid(ts_lo), grid(ts_hi)
    ctx = RSContext(f, complex(C), terms)
    ctx.v_lo, ctx.w_lo = np.log(ts_lo), w_lo
    ctx.r_lo = i_lo - small_t_law(terms, C, ts_lo)
    ctx.v_hi, ctx.w_hi = np.log(ts_hi), w_hi
    ctx.r_hi = i_hi - large_t_law(terms, ts_hi)
    return ctx


def rs_transform(f: ModularFunctionSpec, s: complex, budget=None, context: Optional[RSContext] = None) -> complex:
    """R*(f,s) continued to all s off the pole set, as the Mellin transform of i(t).

    The small- and large-t laws of i(t) are subtracted on (0,1] and [1,inf);
    the remainders are exponentially small at both ends, and the subtracted
    laws integrate in closed form to the pole terms.
    """
    ctx = context or rs_context(f)
    s = complex(s)
    for loc, res in _poles(ctx.terms, ctx.C):
        if abs(s - loc) < 1e-3 * (1 - 1e-9):
            raise PoleError(f"R*(f,s) pole at s={loc}", location=loc, residue=res)
    body = np.sum(ctx.w_lo * np.exp(s * ctx.v_lo) * ctx.r_lo) + np.sum(ctx.w_hi * np.exp(s * ctx.v_hi) * ctx.r_hi)
    return complex(body + _analytic_part(ctx.terms, ctx.C, s))


def rs_direct(f: ModularFunctionSpec, s: complex, y_lo: float = 1e-4, y_hi: float = Y_HI_MIN,
              C0: Optional[complex] = None) -> complex:
    """zeta*(2s) int_0^inf y^(s-2) (a0(y) - G(y)) dy by quadrature in log y.

    Valid where the integral converges. Below y_lo, a0 is replaced by the
    small-y model C0' + sum c zeta*(2a-1)/zeta*(2a) y^(1-a) (log-free terms),
    above y_hi the difference a0 - G is taken as zero.
    """
    s = complex(s)
    terms = growth_terms(f)
    ys, w = _log_grid(y_lo, y_hi)
    a0 = a0_values(f, ys)
    g = sum(t.value(ys) for t in terms) if terms else 0
    body = np.sum(w * np.exp((s - 1) * np.log(ys)) * (a0 - g))
    if C0 is None:
        C0 = 3 / math.pi * integral_C(f)
    low = C0 * y_lo ** (s - 1) / (s - 1)
    for t in terms:
        if t.n:
            raise ValidationError("small-y model of rs_direct covers log-free growth terms only")
        a = complex(t.alpha)
        refl = t.c * zeta_star(2 * a - 1) / zeta_star(2 * a)
        low += refl * y_lo ** (s - a) / (s - a) - t.c * y_lo ** (s + a - 1) / (s + a - 1)
    return complex(zeta_star(2 * s) * (body + low))


# -- asymptotic fit ----------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFitResult:
    C0_hat: complex
    term_coeffs: list
    residual_exponent: float
    condition_number: float
    y_window: tuple
    flags: tuple = ()

    @property
    def reliable(self) -> bool:
        return not self.flags


def fit_basis(model, zero_terms: int = 0):
    """Labels and callables: 1, y^(1-a) log^n y per growth term, zero oscillations."""
    basis = [("1", lambda y: np.ones_like(y))]
    terms = model.terms if isinstance(model, Polynomial) else tuple(model)
    for t in terms:
        a, n = complex(t.alpha), t.n
        label = f"y^(1-({a.real:g}{a.imag:+g}j))" + (f" log^{n} y" if n else "")
        basis.append((label, lambda y, a=a, n=n: np.exp((1 - a) * np.log(y)) * np.log(y) ** n))
    if zero_terms:
        zeros = [zeta_zero_find(k) for k in range(1, zero_terms + 1)]
        for t_k in zeros:
            basis.append((f"y^0.75 cos({t_k / 2:.6f} log y)", lambda y, t_k=t_k: y ** 0.75 * np.cos(t_k / 2 * np.log(y))))
            basis.append((f"y^0.75 sin({t_k / 2:.6f} log y)", lambda y, t_k=t_k: y ** 0.75 * np.sin(t_k / 2 * np.log(y))))
    return basis


def asymptotic_fit(samples, model, zero_terms: int = 0) -> AsymptoticFitResult:
    """Least squares of a0 on the small-y basis; model is a Polynomial profile or PolyTerms."""
    ys = np.array([float(p[0]) for p in samples])
    vals = np.array([complex(p[1]) for p in samples])
    if np.any(ys <= 0) or ys.max() > 0.2:
        raise ValidationError("samples must lie in (0, 0.2]")
    basis = fit_basis(model, zero_terms)
    if ys.size < 3 * len(basis):
        raise ValidationError(f"need at least {3 * len(basis)} samples for {len(basis)} basis functions")
    a = np.column_stack([fn(ys) for _, fn in basis]).astype(complex)
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0] = 1
    an = a / scale
    coef, _, rank, sv = np.linalg.lstsq(an, vals, rcond=None)
    coef = coef / scale
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    flags = []
    if rank < len(basis):
        flags.append("rank deficient")
    if cond > 1e10:
        flags.append("ill conditioned")
    resid = np.abs(vals - a @ coef)
    ok = resid > 0
    if ok.sum() >= 3:
        slope = float(np.polyfit(np.log(ys[ok]), np.log(resid[ok]), 1)[0])
    else:
        slope = math.inf
        flags.append("residual at machine zero")
    coeffs = [(label, complex(c)) for (label, _), c in zip(basis[1:], coef[1:])]
    return AsymptoticFitResult(complex(coef[0]), coeffs, slope, cond, (float(ys.min()), float(ys.max())),
                               tuple(flags))


# -- exponential-class probe ---------------------------------------------------------------

@dataclass(frozen=True)
class ExpBoundProbe:
    values: list
    outside_class: bool

    @property
    def flag(self) -> str:
        return "outside the heterotic class" if self.outside_class else ""


def exp_bound_probe(f: ModularFunctionSpec, y_grid) -> ExpBoundProbe:
    """(y, y log(1 + |a0(y)|)) along y_grid; the bound says this tends to 0."""
    if not isinstance(f.growth, Exponential):
        raise ValidationError("exp_bound_probe needs an exponential-growth function")
    out = []
    for y in y_grid:
        a0 = constant_term(f, float(y), use_exact=True if f.exact_a0 is not None else None)
        out.append((float(y), float(y) * math.log1p(abs(a0))))
    return ExpBoundProbe(out, f.outside_class)
