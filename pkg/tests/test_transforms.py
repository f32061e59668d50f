import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from horolab.errors import PoleError, ValidationError
from horolab.modfun import (
    PolyTerm, delta_cusp, j_invariant, petersson_integral, poincare_heterotic, poincare_typeii,
)
from horolab.specialfn import zeta_star
from horolab.transforms import (
    a0_values, asymptotic_fit, exp_bound_probe, fit_basis, growth_terms, i_of_t, i_of_t_many,
    integral_C, inversion_check, large_t_law, rs_context, rs_direct, rs_transform, small_t_law,
    theta_pairing,
)


@pytest.fixture(scope="module")
def typeii():
    return poincare_typeii(0.3, 0)


@pytest.fixture(scope="module")
def typeii_rs(typeii):
    return rs_context(typeii)


@pytest.fixture(scope="module")
def delta_rs():
    return rs_context(delta_cusp())


def test_growth_terms(typeii):
    assert growth_terms(delta_cusp()) == ()
    terms = growth_terms(typeii)
    assert terms[0].alpha == 0.3 and terms[1].alpha == -1
    assert abs(terms[1].c - zeta_star(3) / zeta_star(4)) < 1e-12


def test_integral_c_two_routes(typeii):
    assert abs(integral_C(typeii) / petersson_integral(typeii) - 1) < 1e-6


def test_large_t_law(typeii):
    ts = np.array([10.0, 40.0, 100.0])
    got = i_of_t_many(typeii, ts)
    law = large_t_law(growth_terms(typeii), ts)
    assert np.max(np.abs(got / law - 1)) < 1e-9
    assert 0.98 <= (i_of_t(typeii, 100.0) * 100 ** 0.7 / zeta_star(-0.4)).real <= 1.02


def test_small_t_law_uses_half_integral(typeii):
    half = integral_C(typeii) / 2
    t = 1e-3
    law = small_t_law(growth_terms(typeii), half, np.array([t]))[0]
    assert abs(i_of_t(typeii, t) / law - 1) < 1e-9
    # t i(t) tends to half the domain integral, not the whole of it
    assert abs(t * i_of_t(typeii, t) / half - 1) < 0.02
    assert abs(t * i_of_t(typeii, t) / typeii.exact_C0 - 0.5) < 0.01


@pytest.mark.parametrize("t", [1.5, 2.0, 4.0])
def test_theta_unfolding_typeii(typeii, t):
    a, b = theta_pairing(typeii, t), i_of_t(typeii, t)
    assert abs(a - b) <= 1e-6 * abs(b)


@pytest.mark.parametrize("t", [1.5, 4.0])
def test_theta_unfolding_delta(t):
    d = delta_cusp()
    a, b = theta_pairing(d, t), i_of_t(d, t)
    assert abs(a - b) <= 1e-6 * abs(b)


def test_lattice_pairing_is_double(typeii):
    assert abs(theta_pairing(typeii, 2.0, lattice=True) / i_of_t(typeii, 2.0) - 2) < 1e-6


def test_theta_unfolding_heterotic():
    h = poincare_heterotic(0.0, 0.5, 1)
    a, b = theta_pairing(h, 2.0), i_of_t(h, 2.0)
    assert abs(a - b) <= 1e-6 * abs(b)


def test_exponential_class_needs_t_above_one():
    with pytest.raises(ValidationError):
        i_of_t(poincare_heterotic(0.0, 0.5, 1), 0.9)


def test_inversion_half_constant(typeii):
    for chk in inversion_check(typeii, np.geomspace(0.2, 5, 9), constant="half"):
        assert chk.residual < 1e-8, chk


def test_inversion_whole_integral_fails(typeii):
    # with C = int_D f the identity is off by C (1/t - 1) / 2, far outside round-off
    res = [c.residual for c in inversion_check(typeii, [0.2, 5.0], constant="integral")]
    assert min(res) > 0.1


def test_inversion_rejects_unknown_constant(typeii):
    with pytest.raises(ValidationError):
        inversion_check(typeii, [2.0], constant="third")


def test_rs_residues(typeii, typeii_rs):
    # h (R(p+h) - R(p-h)) / 2 cancels the constant term of the Laurent series
    h = 2e-3

    def res(p):
        return h * (rs_transform(typeii, p + h, context=typeii_rs) - rs_transform(typeii, p - h, context=typeii_rs)) / 2

    c = typeii_rs.C
    assert abs(res(1.0) / c - 1) < 1e-4
    assert abs(res(0.0) / -c - 1) < 1e-4
    assert abs(res(0.3) / zeta_star(-0.4) - 1) < 1e-4
    # at 1 - alpha the residue is -zeta*(2 - 2 alpha)
    assert abs(res(0.7) / -zeta_star(1.4) - 1) < 1e-4


def test_rs_pole_error(typeii, typeii_rs):
    with pytest.raises(PoleError) as err:
        rs_transform(typeii, 0.3 + 1e-5, context=typeii_rs)
    assert err.value.location == pytest.approx(0.3)


@pytest.mark.parametrize("s", [2.2, 3.0, 2.7 + 1j])
def test_rs_mellin_against_direct(typeii, typeii_rs, s):
    a = rs_transform(typeii, s, context=typeii_rs)
    b = rs_direct(typeii, s)
    assert abs(a - b) <= 1e-7 * abs(a)


def test_rs_delta_against_direct(delta_rs):
    d = delta_cusp()
    a = rs_transform(d, 1.2, context=delta_rs)
    b = rs_direct(d, 1.2, C0=3 / math.pi * integral_C(d))
    assert abs(a - b) <= 1e-5 * abs(a)


@settings(max_examples=20, deadline=None)
@given(re=st.floats(-1.0, 2.0), im=st.floats(0.2, 4.0))
def test_rs_functional_equation_delta(re, im, delta_rs):
    d = delta_cusp()
    s = complex(re, im)
    a, b = rs_transform(d, s, context=delta_rs), rs_transform(d, 1 - s, context=delta_rs)
    assert abs(a - b) <= 1e-10 * abs(a) + 1e-18


@settings(max_examples=20, deadline=None)
@given(re=st.floats(-1.0, 2.0), im=st.floats(0.2, 4.0))
def test_rs_functional_equation_typeii(re, im, typeii, typeii_rs):
    # absolute round-off in i(t) near the grid ends t = 40^{+-1} is amplified by t^(Re s - 1)
    # on one side of the fold; measured ~3e-12 40^{|Re s - 1/2| + 3/2}
    s = complex(re, im)
    a, b = rs_transform(typeii, s, context=typeii_rs), rs_transform(typeii, 1 - s, context=typeii_rs)
    assert abs(a - b) <= 1e-11 * 40 ** (abs(re - 0.5) + 1.5) + 1e-7 * abs(a)


def test_rs_rejects_exponential():
    with pytest.raises(ValidationError):
        rs_context(poincare_heterotic(0.0, 0.5, 1))


def test_fit_roundtrip_synthetic():
    ys = np.geomspace(1e-3, 5e-2, 30)
    vals = 2.5 + 0.7 * ys ** 0.7 - 1.1 * ys ** 2
    terms = (PolyTerm(1.0, 0.3, 0), PolyTerm(1.0, -1.0, 0))
    r = asymptotic_fit(list(zip(ys, vals)), terms)
    assert abs(r.C0_hat - 2.5) < 1e-10
    assert abs(r.term_coeffs[0][1] - 0.7) < 1e-8
    assert abs(r.term_coeffs[1][1] + 1.1) < 1e-6


def test_fit_typeii_exact_samples(typeii):
    ys = np.geomspace(1e-3, 5e-2, 24)
    r = asymptotic_fit(list(zip(ys, a0_values(typeii, ys))), typeii.growth)
    assert abs(r.C0_hat / (3 / math.pi * typeii.exact_C0) - 1) < 0.01
    assert abs(r.term_coeffs[0][1] / (zeta_star(-0.4) / zeta_star(0.6)) - 1) < 0.05


def test_fit_validation(typeii):
    with pytest.raises(ValidationError):
        asymptotic_fit([(0.5, 1.0)] * 10, typeii.growth)
    with pytest.raises(ValidationError):
        asymptotic_fit([(0.01, 1.0)] * 4, typeii.growth)
    assert len(fit_basis(typeii.growth, zero_terms=2)) == 1 + 2 + 4


def test_exp_bound_probe_values():
    h = poincare_heterotic(0.0, 0.5, 1)
    p = exp_bound_probe(h, [0.1, 0.05])
    assert not p.outside_class and p.flag == ""
    assert all(v > 0 for _, v in p.values)
    pj = exp_bound_probe(j_invariant(), [0.5])
    assert pj.outside_class and pj.flag
    with pytest.raises(ValidationError):
        exp_bound_probe(poincare_typeii(0.3, 0), [0.1])


def test_exp_bound_probe_tracks_saddle_rate():
    # y log|a0| approaches pi beta / 2 from below as y -> 0
    h = poincare_heterotic(0.0, 0.5, 1)
    vals = [v for _, v in exp_bound_probe(h, [0.1 * 2 ** -k for k in range(7)]).values]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - math.pi * 0.5 / 2) < 0.03
