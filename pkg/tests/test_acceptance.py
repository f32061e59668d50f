"""Acceptance criteria, one verdict line each.

Lines read "C<nn> PASS|FAIL ...". Criteria the mathematics does not support
(5, 6b, 7a, 9) are still computed literally and marked strict xfail, so they
show as XFAIL while they fail and break the run if they ever pass. Companion
tests next to them check the corrected statement.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from horolab.dynamics import equidist_exponent, equidist_ratio
from horolab.halfplane import Box, HPoint, reduce_arrays
from horolab.lattice import eisenstein_direct, eisenstein_star, theta2
from horolab.modfun import (
    constant_term, delta_cusp, eisenstein_fixed, poincare_heterotic, poincare_typeii,
)
from horolab.specialfn import ZetaZeroTable, zeta_star
from horolab.transforms import (
    a0_values, asymptotic_fit, exp_bound_probe, i_of_t, integral_C, inversion_check, rs_context,
    rs_transform, theta_pairing,
)


def report(cid, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    ACCEPTANCE_LINES.append(f"C{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}; {elapsed:.1f}s (limit {limit:g}s)")
    print(ACCEPTANCE_LINES[-1])
    return ok


def reduced_points(k, seed):
    rng = np.random.default_rng(seed)
    xr, yr, *_ = reduce_arrays(rng.uniform(-2, 2, k), 10 ** rng.uniform(-1.5, 0.5, k))
    return [HPoint(a, b) for a, b in zip(xr, yr)]


@pytest.fixture(scope="module")
def typeii():
    return poincare_typeii(0.3, 0)


@pytest.fixture(scope="module")
def typeii_rs(typeii):
    t0 = time.perf_counter()
    ctx = rs_context(typeii)
    ctx.build_seconds = time.perf_counter() - t0  # charged to every criterion-7 line
    return ctx


def test_c01_theta_functional_equation():
    t0 = time.perf_counter()
    worst = 0.0
    pts = reduced_points(20, seed=1)
    for t in (0.1, 0.5, 1.0, 2.0, 10.0):
        for z in pts:
            worst = max(worst, abs(theta2(t, z) - (theta2(1 / t, z) / t + 1 / t - 1)))
    el = time.perf_counter() - t0
    assert report("01", worst < 1e-10, f"max residual {worst:.2e} (tol 1e-10)", el, 5)


def test_c02_eisenstein_coherence():
    t0 = time.perf_counter()
    pts = reduced_points(10, seed=2)
    coh = max(abs(zeta_star(2 * s) * eisenstein_direct(s, z) / eisenstein_star(s, z) - 1)
              for s in (1.2, 1.5, 2.0) for z in pts)
    sym = max(abs(eisenstein_star(s, z) - eisenstein_star(1 - s, z))
              for s in (0.3, 0.5 + 3j, 1.5) for z in pts)
    h = 1e-6
    res = abs(h * eisenstein_star(1 + h, HPoint(0.0, 1.0)) - 0.5)
    el = time.perf_counter() - t0
    ok = coh < 1e-9 and sym < 1e-10 and res < 1e-4
    assert report("02", ok, f"coherence {coh:.1e} (1e-9), symmetry {sym:.1e} (1e-10), "
                            f"residue error {res:.1e} (1e-4)", el, 30)


def test_c03_constant_term_oracle():
    t0 = time.perf_counter()
    e = eisenstein_fixed(1.25)
    worst = 0.0
    for y in np.geomspace(0.05, 30, 20):
        ref = y ** 1.25 + zeta_star(1.5) / zeta_star(2.5) * y ** -0.25
        worst = max(worst, abs(constant_term(e, y, use_exact=False) / ref - 1))
    el = time.perf_counter() - t0
    assert report("03", worst < 1e-8, f"max relative error {worst:.1e} (tol 1e-8)", el, 10)


def test_c04_theta_unfolding(typeii):
    t0 = time.perf_counter()
    worst = 0.0
    for f in (delta_cusp(), typeii):
        for t in (1.5, 2.0, 4.0):
            a, b = theta_pairing(f, t), i_of_t(f, t)
            worst = max(worst, abs(a - b) / abs(b))
    h = poincare_heterotic(0.0, 0.5, 1)
    a, b = theta_pairing(h, 2.0), i_of_t(h, 2.0)
    het = abs(a - b) / abs(b)
    el = time.perf_counter() - t0
    ok = worst < 1e-6 and het < 1e-4
    assert report("04", ok, f"delta/typeII worst {worst:.1e} (1e-6), heterotic t=2 {het:.1e} (1e-4)", el, 300)


@pytest.mark.xfail(strict=True, reason="with C = int_D f the identity misses by C(1/t-1)/2; C = int_D f / 2 holds")
def test_c05_inversion_identity_literal(typeii):
    t0 = time.perf_counter()
    worst = max(c.residual for c in inversion_check(typeii, np.geomspace(0.2, 5, 9), constant="integral"))
    el = time.perf_counter() - t0
    assert report("05", worst <= 1e-6, f"literal constant: max residual {worst:.2e} (tol 1e-6)", el, 120)


def test_c05_companion_half_constant(typeii):
    t0 = time.perf_counter()
    worst = max(c.residual for c in inversion_check(typeii, np.geomspace(0.2, 5, 9), constant="half"))
    el = time.perf_counter() - t0
    assert report("05c", worst <= 1e-6, f"companion, C = half integral: max residual {worst:.2e}", el, 120)


def test_c06a_large_t(typeii):
    t0 = time.perf_counter()
    r = (i_of_t(typeii, 100.0) * 100 ** 0.7 / zeta_star(-0.4)).real
    el = time.perf_counter() - t0
    assert report("06a", 0.98 <= r <= 1.02, f"i(100) 100^0.7 / zeta*(-0.4) = {r:.5f} (in [0.98, 1.02])", el, 120)


@pytest.mark.xfail(strict=True, reason="t i(t) tends to C0/2: the lattice theta double counts the cosets")
def test_c06b_small_t_literal(typeii):
    t0 = time.perf_counter()
    r = (1e-3 * i_of_t(typeii, 1e-3) / typeii.exact_C0).real
    el = time.perf_counter() - t0
    assert report("06b", abs(r - 1) < 0.02, f"t i(t) / C0 at t=1e-3 = {r:.4f} (target 1 +- 2%)", el, 120)


def test_c06b_companion_half(typeii):
    t0 = time.perf_counter()
    r = (1e-3 * i_of_t(typeii, 1e-3) / (typeii.exact_C0 / 2)).real
    el = time.perf_counter() - t0
    assert report("06bc", abs(r - 1) < 0.02, f"companion, t i(t) / (C0/2) = {r:.4f}", el, 120)


@pytest.mark.xfail(strict=True, reason="the residue at 1 - alpha is -zeta*(2 - 2 alpha); the magnitude matches")
def test_c07a_pole_at_one_minus_alpha(typeii, typeii_rs):
    t0 = time.perf_counter()
    s = 0.7 + 1e-3
    r = ((s - 0.7) * rs_transform(typeii, s, context=typeii_rs) / zeta_star(1.4)).real
    el = time.perf_counter() - t0 + typeii_rs.build_seconds
    assert report("07a", abs(r - 1) < 0.03, f"(s-0.7) R* / zeta*(1.4) = {r:.4f} (target 1 +- 3%)", el, 300)


def test_c07a_companion_magnitude(typeii, typeii_rs):
    t0 = time.perf_counter()
    s = 0.7 + 1e-3
    r = ((s - 0.7) * rs_transform(typeii, s, context=typeii_rs) / -zeta_star(1.4)).real
    el = time.perf_counter() - t0 + typeii_rs.build_seconds
    assert report("07ac", abs(r - 1) < 0.03, f"companion, (s-0.7) R* / -zeta*(1.4) = {r:.4f}", el, 300)


def test_c07b_pole_at_alpha(typeii, typeii_rs):
    t0 = time.perf_counter()
    s = 0.3 + 1e-3
    r = ((s - 0.3) * rs_transform(typeii, s, context=typeii_rs) / zeta_star(-0.4)).real
    el = time.perf_counter() - t0 + typeii_rs.build_seconds
    assert report("07b", abs(r - 1) < 0.03, f"(s-0.3) R* / zeta*(-0.4) = {r:.4f} (target 1 +- 3%)", el, 300)


def test_c08_horocycle_average_fit(typeii):
    t0 = time.perf_counter()
    ys = np.geomspace(1e-3, 5e-2, 24)
    a0 = a0_values(typeii, ys, sampled=True, budget=1e-8)
    fit = asymptotic_fit(list(zip(ys, a0)), typeii.growth)
    c0 = (fit.C0_hat / (3 / math.pi * typeii.exact_C0)).real
    refl = (fit.term_coeffs[0][1] / (zeta_star(-0.4) / zeta_star(0.6))).real
    el = time.perf_counter() - t0
    ok = abs(c0 - 1) < 0.01 and abs(refl - 1) < 0.05
    assert report("08", ok, f"C0_hat ratio {c0:.5f} (1%), reflection ratio {refl:.4f} (5%), "
                            "sampled horocycle averages", el, 300)


@pytest.mark.xfail(strict=True, reason="a0 grows like exp(pi beta / 2y) through a complex saddle; y log a0 -> pi beta/2")
def test_c09_bound_probe():
    t0 = time.perf_counter()
    vals = [v for _, v in exp_bound_probe(poincare_heterotic(0.0, 0.5, 1),
                                          [0.1 * 2 ** -k for k in range(7)]).values]
    el = time.perf_counter() - t0
    mono = all(b <= a for a, b in zip(vals, vals[1:]))
    ok = mono and vals[-1] < 0.05
    assert report("09", ok, f"y log(1+|a0|) = {', '.join(f'{v:.3f}' for v in vals)} "
                            f"(non-increasing, last < 0.05)", el, 300)


def test_c10_equidistribution():
    t0 = time.perf_counter()
    u = Box(0.1, 0.4, 1.2, 2.0)
    r = equidist_ratio(1e-4, u, 10 ** 6) / (0.1 / (math.pi / 3))
    fit = equidist_exponent(u, [1e-4, 3e-4, 1e-3, 3e-3, 1e-2], 10 ** 6)
    el = time.perf_counter() - t0
    ok = abs(r - 1) < 0.02 and 0.35 <= fit.exponent <= 0.65
    assert report("10", ok, f"ratio / target {r:.4f} (2%), exponent {fit.exponent:.3f} (in [0.35, 0.65])",
                  el, 180)


def test_c11_zeta_zeros():
    t0 = time.perf_counter()
    zs = ZetaZeroTable().zeros[:3]  # fresh scan and bisection, no cached table
    err = max(abs(a - b) for a, b in zip(zs, (14.134725, 21.022040, 25.010858)))
    el = time.perf_counter() - t0
    assert report("11", err < 1e-3, f"zeros {', '.join(f'{z:.6f}' for z in zs)}, max error {err:.1e}", el, 30)


def test_c12_exploratory_rapid_decay_residual():
    # reported only: the amplitudes of the zero terms are not controlled at this scale
    t0 = time.perf_counter()
    d = delta_cusp()
    ys = np.geomspace(1e-3, 1e-1, 48)
    c0 = 3 / math.pi * integral_C(d)
    r = np.abs(a0_values(d, ys) - c0)
    slope = float(np.polyfit(np.log(ys), np.log(r), 1)[0])
    v = np.log(ys)
    w = (a0_values(d, ys) - c0).real / ys ** 0.75
    w = w - w.mean()
    freqs = np.linspace(1, 15, 281)
    power = np.abs(np.exp(-1j * freqs[:, None] * v[None, :]) @ w) ** 2
    peak = float(freqs[np.argmax(power)])
    el = time.perf_counter() - t0
    in_band = 0.5 <= slope <= 1.0
    ACCEPTANCE_LINES.append(f"C12   INFO  residual log-log slope {slope:.3f} ({'inside' if in_band else 'outside'} "
                            f"[0.5, 1.0]), periodogram peak at {peak:.2f} (t1/2 = 7.067); non-gating; {el:.1f}s")
    assert math.isfinite(slope) and math.isfinite(peak)
