"""Upper half-plane geometry: Mobius action, Gauss reduction, boxes, horocycles."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dd import DD, two_prod
from .errors import ConvergenceError, PrecisionWarning, ValidationError

TOL = 1e-12
DD_THRESHOLD = 1e-6
PRECISION_FLOOR = 1e-14
MAX_STEPS = 10_000


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"non-finite point ({x}, {y})")
        if not y > 0:
            raise ValidationError(f"y must be positive, got {y}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(z.real, z.imag)

    def __complex__(self):
        return complex(self.x, self.y)


@dataclass(frozen=True)
class UniMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValidationError(f"entry {name}={v!r} is not an integer")
            object.__setattr__(self, name, int(v))
        if self.a * self.d - self.b * self.c != 1:
            raise ValidationError(f"determinant {self.a * self.d - self.b * self.c} != 1")

    @classmethod
    def identity(cls) -> "UniMatrix":
        return cls(1, 0, 0, 1)

    def __matmul__(self, o: "UniMatrix") -> "UniMatrix":
        return UniMatrix(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                         self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inverse(self) -> "UniMatrix":
        return UniMatrix(self.d, -self.b, -self.c, self.a)

    def is_identity(self) -> bool:
        # +-I act identically on H
        return self.b == 0 and self.c == 0 and self.a == self.d

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


S = UniMatrix(0, -1, 1, 0)
T = UniMatrix(1, 1, 0, 1)


def translation(n: int) -> UniMatrix:
    return UniMatrix(1, int(n), 0, 1)


@dataclass(frozen=True)
class ReductionResult:
    point: HPoint
    matrix: UniMatrix
    steps: int


@dataclass(frozen=True)
class Box:
    """Half-open coordinate box [x_lo, x_hi) x [y_lo, y_hi)."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float = math.inf

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValidationError("need x_lo < x_hi")
        if not self.y_lo > 0:
            raise ValidationError("need y_lo > 0")
        if not self.y_lo < self.y_hi:
            raise ValidationError("need y_lo < y_hi")

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x_lo) & (x < self.x_hi) & (y >= self.y_lo) & (y < self.y_hi)

    @property
    def area(self) -> float:
        return box_area(self)

    def inside_domain(self) -> bool:
        if self.x_lo < -0.5 - TOL or self.x_hi > 0.5 + TOL:
            return False
        if self.x_lo <= 0.0 <= self.x_hi:
            m = 0.0
        else:
            m = min(self.x_lo * self.x_lo, self.x_hi * self.x_hi)
        return m + self.y_lo * self.y_lo >= 1.0 - TOL


class FundamentalDomain:
    """The closed standard domain, as a region usable wherever a Box is."""

    x_lo, x_hi, y_lo, y_hi = -0.5, 0.5, math.sqrt(3) / 2, math.inf

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (np.abs(x) <= 0.5 + TOL) & (x * x + y * y >= 1 - TOL)

    @property
    def area(self) -> float:
        return domain_area()

    def inside_domain(self) -> bool:
        return True


DOMAIN = FundamentalDomain()


def domain_area() -> float:
    # integral over |x|<=1/2 of dx/sqrt(1-x^2)
    return 2.0 * math.asin(0.5)


def box_area(u: Box) -> float:
    inv_hi = 0.0 if math.isinf(u.y_hi) else 1.0 / u.y_hi
    return (u.x_hi - u.x_lo) * (1.0 / u.y_lo - inv_hi)


def _as_matrix(m) -> UniMatrix:
    if isinstance(m, UniMatrix):
        return m
    return UniMatrix(*m)


def mobius_apply(m, z: HPoint) -> HPoint:
    m = _as_matrix(m)
    a, b, c, d = m.a, m.b, m.c, m.d
    x, y = z.x, z.y
    if y < PRECISION_FLOOR and c != 0:
        warnings.warn(f"y={y:.3g} below precision floor {PRECISION_FLOOR:g}; "
                      "result limited by the input's last bits", PrecisionWarning, stacklevel=2)
    if c == 0:
        # d = a = +-1
        return HPoint((a * x + b) / d, y)
    if y < DD_THRESHOLD:
        u = DD(*two_prod(float(c), x)) + float(d)
        cy = c * y
        den = u * u + DD(*two_prod(cy, cy))
        yy = y / float(den)
        xx = a / c - float(u / den) / c
        if abs(a) > 2**52:
            xx = float(DD(a) / DD(c) - (u / den) / DD(c))
        return HPoint(xx, yy)
    u = c * x + d
    den = u * u + (c * y) ** 2
    return HPoint(a / c - u / (c * den), y / den)


def _canonical_ties(x, y, mat, steps):
    if abs(x - 0.5) <= TOL:
        x -= 1.0
        mat = translation(-1) @ mat
        steps += 1
    if abs(x * x + y * y - 1.0) <= TOL and x > 0:
        x = -x
        mat = S @ mat
        steps += 1
    return x, y, mat, steps


def reduce_to_fundamental(z: HPoint) -> ReductionResult:
    """Gauss reduction: translate x into [-1/2, 1/2), invert while |z| < 1."""
    x, y = z.x, z.y
    mat = UniMatrix.identity()
    steps = 0
    precise = z.y < DD_THRESHOLD
    for _ in range(MAX_STEPS):
        n = math.floor(x + 0.5)
        if n:
            mat = translation(-n) @ mat
            x -= n
            steps += 1
        r2 = x * x + y * y
        if r2 >= 1.0 - TOL:
            break
        mat = S @ mat
        steps += 1
        if precise:
            p = mobius_apply(mat, z)
            x, y = p.x, p.y
        else:
            x, y = -x / r2, y / r2
    else:
        raise ConvergenceError(f"reduction exceeded {MAX_STEPS} steps", last=(x, y, mat))
    x, y, mat, steps = _canonical_ties(x, y, mat, steps)
    return ReductionResult(HPoint(x, y), mat, steps)


def reduce_arrays(x, y, return_steps=False):
    """Vectorized reduction. Returns (xr, yr, a, b, c, d) with int64 matrices.

    Points with y < DD_THRESHOLD go through the scalar compensated path.
    With return_steps, a seventh array holds the per-point step counts.
    """
    x0 = np.array(x, dtype=float, copy=True).ravel()
    y0 = np.array(y, dtype=float, copy=True).ravel()
    if np.any(~(y0 > 0)) or not np.all(np.isfinite(x0)):
        raise ValidationError("points must be finite with y > 0")
    xs, ys = x0.copy(), y0.copy()
    k = xs.size
    a = np.ones(k, dtype=np.int64)
    b = np.zeros(k, dtype=np.int64)
    c = np.zeros(k, dtype=np.int64)
    d = np.ones(k, dtype=np.int64)
    steps = np.zeros(k, dtype=np.int64)
    active = np.nonzero(y0 >= DD_THRESHOLD)[0]
    for _ in range(MAX_STEPS):
        if active.size == 0:
            break
        xa = xs[active]
        ya = ys[active]
        n = np.floor(xa + 0.5)
        xa = xa - n
        ni = n.astype(np.int64)
        a[active] -= ni * c[active]
        b[active] -= ni * d[active]
        steps[active] += ni != 0
        r2 = xa * xa + ya * ya
        inv = r2 < 1.0 - TOL
        xs[active] = xa
        ys[active] = ya
        idx = active[inv]
        if idx.size:
            r = r2[inv]
            xs[idx] = -xa[inv] / r
            ys[idx] = ya[inv] / r
            a[idx], c[idx] = -c[idx], a[idx].copy()
            b[idx], d[idx] = -d[idx], b[idx].copy()
            steps[idx] += 1
        active = idx
    else:
        raise ConvergenceError("vectorized reduction exceeded step cap")
    # ties, same conventions as the scalar path
    t1 = np.abs(xs - 0.5) <= TOL
    xs[t1] -= 1.0
    a[t1] -= c[t1]
    b[t1] -= d[t1]
    steps[t1] += 1
    t2 = (np.abs(xs * xs + ys * ys - 1.0) <= TOL) & (xs > 0)
    xs[t2] = -xs[t2]
    a[t2], c[t2] = -c[t2], a[t2].copy()
    b[t2], d[t2] = -d[t2], b[t2].copy()
    steps[t2] += 1
    for i in np.nonzero(y0 < DD_THRESHOLD)[0]:
        r = reduce_to_fundamental(HPoint(x0[i], y0[i]))
        xs[i], ys[i] = r.point.x, r.point.y
        a[i], b[i], c[i], d[i] = r.matrix.as_tuple()
        steps[i] = r.steps
    shape = np.shape(x)
    out = (xs.reshape(shape), ys.reshape(shape), a.reshape(shape), b.reshape(shape),
           c.reshape(shape), d.reshape(shape))
    if return_steps:
        return out + (steps.reshape(shape),)
    return out


def horocycle_points(y: float, n: int) -> np.ndarray:
    if not n >= 1:
        raise ValidationError("n must be >= 1")
    return (np.arange(n, dtype=float) + 0.5) / n


def horocycle_image(y: float, n: int) -> list[ReductionResult]:
    """Reduce the n midpoints (k + 1/2)/n + iy of the closed horocycle, in order."""
    if not y > 0:
        raise ValidationError("y must be positive")
    xk = horocycle_points(y, n)
    if y < DD_THRESHOLD:
        return [reduce_to_fundamental(HPoint(xv, y)) for xv in xk]
    xr, yr, a, b, c, d, st = reduce_arrays(xk, np.full(n, float(y)), return_steps=True)
    return [ReductionResult(HPoint(xr[i], yr[i]),
                            UniMatrix(int(a[i]), int(b[i]), int(c[i]), int(d[i])), int(st[i]))
            for i in range(n)]

