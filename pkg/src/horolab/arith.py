"""Integer arithmetic: divisor sums, tau(n), j coefficients, Ramanujan and Kloosterman sums."""

from __future__ import annotations

import math
import threading
from functools import lru_cache

import numpy as np


def sigma(n: int, k: int = 1) -> int:
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


def sigma_table(n_max: int, k: int = 1) -> list[int]:
    out = [0] * (n_max + 1)
    for d in range(1, n_max + 1):
        dk = d ** k
        for m in range(d, n_max + 1, d):
            out[m] += dk
    return out


@lru_cache(maxsize=None)
def totients(c_max: int) -> np.ndarray:
    phi = np.arange(c_max + 1, dtype=np.int64)
    for p in range(2, c_max + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


@lru_cache(maxsize=None)
def mobius_table(c_max: int) -> np.ndarray:
    mu = np.ones(c_max + 1, dtype=np.int64)
    is_comp = np.zeros(c_max + 1, dtype=bool)
    for p in range(2, c_max + 1):
        if not is_comp[p]:
            is_comp[2 * p::p] = True
            mu[p::p] *= -1
            mu[p * p::p * p] = 0
    mu[0] = 0
    return mu


def ramanujan_sum(c: int, k: int) -> int:
    """c_c(k) = sum over units d mod c of e(dk/c) = sum_{d | gcd(c,k)} mu(c/d) d."""
    g = math.gcd(c, k)
    mu = mobius_table(c)
    return int(sum(int(mu[c // d]) * d for d in range(1, g + 1) if g % d == 0))


@lru_cache(maxsize=None)
def ramanujan_sums(k: int, c_max: int) -> np.ndarray:
    """Array r[c] = c_c(k) for c = 0..c_max (r[0] unused)."""
    mu = mobius_table(c_max)
    r = np.zeros(c_max + 1, dtype=np.int64)
    if k == 0:
        return totients(c_max).copy()
    k = abs(k)
    for d in range(1, min(k, c_max) + 1):
        if k % d:
            continue
        # c = d*m contributes mu(m) d
        m = np.arange(1, c_max // d + 1)
        r[d * m] += mu[m] * d
    return r


# -- Kloosterman sums ------------------------------------------------------------

_inv_lock = threading.Lock()
_inv_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _units_and_inverses(c: int):
    hit = _inv_cache.get(c)
    if hit is not None:
        return hit
    if c == 1:
        pair = (np.array([0]), np.array([0]))
    else:
        d = np.array([v for v in range(c) if math.gcd(v, c) == 1], dtype=np.int64)
        a = np.array([pow(int(v), -1, c) for v in d], dtype=np.int64)
        pair = (d, a)
    with _inv_lock:
        _inv_cache[c] = pair
    return pair


def kloosterman(m: int, n: int, c: int) -> float:
    """S(m, n; c) = sum over d mod c coprime of e((m a + n d)/c), a d = 1 mod c. Real."""
    d, a = _units_and_inverses(c)
    return float(np.cos(2 * math.pi * ((m * a + n * d) % c) / c).sum())


@lru_cache(maxsize=None)
def kloosterman_series(m: int, n: int, c_max: int, power: int = 4) -> float:
    """sum_{c=1}^{c_max} S(m, n; c) / c^power, summed from the small end up."""
    terms = [kloosterman(m, n, c) / c ** power for c in range(1, c_max + 1)]
    return math.fsum(terms)


# -- q-expansions -------------------------------------------------------------------

_tau_lock = threading.Lock()
_tau: list[int] = [0, 1]


def tau_list(n_max: int) -> list[int]:
    """[tau(0)=0, tau(1), ..., tau(n_max)] from Delta = q prod (1-q^n)^24.

    Uses the log-derivative form of the product, (n-1) tau(n) = -24 sum sigma(k) tau(n-k),
    in exact integers; cached and extended on demand.
    """
    global _tau
    if len(_tau) > n_max:
        return _tau[: n_max + 1]
    with _tau_lock:
        tau = list(_tau)
        if len(tau) <= n_max:
            sig = sigma_table(n_max, 1)
            for n in range(len(tau), n_max + 1):
                acc = sum(sig[k] * tau[n - k] for k in range(1, n))
                val, rem = divmod(-24 * acc, n - 1)
                assert rem == 0
                tau.append(val)
            _tau = tau
    return _tau[: n_max + 1]


def tau_by_product(n_max: int) -> list[int]:
    """Direct expansion of q prod_{n>=1} (1-q^n)^24; slow, used as a cross-check."""
    poly = [0] * (n_max + 1)
    poly[0] = 1
    for n in range(1, n_max + 1):
        for _ in range(24):
            for k in range(n_max, n - 1, -1):
                poly[k] -= poly[k - n]
    return [0] + poly[:n_max]


@lru_cache(maxsize=None)
def j_coefficients(n_max: int) -> tuple[int, ...]:
    """c(-1), c(0), ..., c(n_max) of j = E4^3 / Delta, exact integers."""
    size = n_max + 2
    s3 = sigma_table(size, 3)
    e4 = [1] + [240 * s3[n] for n in range(1, size)]
    e4sq = [sum(e4[i] * e4[k - i] for i in range(k + 1)) for k in range(size)]
    e4cube = [sum(e4sq[i] * e4[k - i] for i in range(k + 1)) for k in range(size)]
    tau = tau_list(size + 1)
    dq = [tau[k + 1] for k in range(size)]  # Delta/q, leading 1
    out = []
    for k in range(size):
        out.append(e4cube[k] - sum(out[i] * dq[k - i] for i in range(k)))
    return tuple(out)
