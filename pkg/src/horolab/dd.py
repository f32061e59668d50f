"""Minimal double-double arithmetic (Dekker/Knuth error-free transforms).

Only what the Mobius action needs near rational cusps: exact products of
a double by a small integer, sums, and a square.
"""

from __future__ import annotations

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> tuple[float, float]:
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


class DD:
    """Unevaluated sum hi + lo with |lo| <= ulp(hi)/2."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float, lo: float = 0.0):
        s, e = two_sum(float(hi), float(lo))
        self.hi = s
        self.lo = e

    def __add__(self, other):
        if not isinstance(other, DD):
            other = DD(other)
        s, e = two_sum(self.hi, other.hi)
        e += self.lo + other.lo
        return DD(s, e)

    __radd__ = __add__

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, DD):
            other = DD(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, DD):
            other = DD(other)
        p, e = two_prod(self.hi, other.hi)
        e += self.hi * other.lo + self.lo * other.hi
        return DD(p, e)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, DD):
            other = DD(other)
        q1 = self.hi / other.hi
        r = self - other * q1
        q2 = r.hi / other.hi
        return DD(q1, q2)

    def __float__(self):
        return self.hi + self.lo

    def __repr__(self):
        return f"DD({self.hi!r}, {self.lo!r})"


def dd_sum(values) -> float:
    """Compensated sum of an iterable of floats."""
    acc = DD(0.0)
    for v in values:
        acc = acc + v
    return float(acc)
