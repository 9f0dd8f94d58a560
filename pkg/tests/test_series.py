import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wachsyn.errors import MalformedError, NotDivisibleError, NotInvariantError, NotUnitError
from wachsyn.series import (
    AFSeries,
    SSeries,
    af_ring,
    divide_exact,
    fpx_average,
    from_mu0,
    gamma,
    gamma0_S,
    gamma_act,
    identity_certificates,
    invert,
    is_unit_AF,
    phi,
    phi_S,
    ptilde_over_pq,
    special_elements,
    to_mu0,
    torsion_generator,
)

M3 = 3**8
M5 = 5**8


def af(p, coeffs, prec_mu=20, prec_p=8):
    c = list(coeffs) + [0] * (prec_mu - len(coeffs))
    return AFSeries(p, prec_p, c)


def alternating(n, start, mod):
    """start*(1 - mu + mu^2 - ...) shifted so that index start carries +1."""
    return [0] * start + [(-1) ** k % mod for k in range(n - start)]


def test_special_elements_p3():
    se = special_elements(3, 1, 8, 12)
    assert se.pq.to_list() == [3, 3, 1] + [0] * 9
    assert se.mu0.to_list() == alternating(12, 2, M3)
    assert se.ptilde.to_list() == [3] + alternating(12, 2, M3)[1:]
    assert se.q.to_list() == [1, 1] + [0] * 10


def test_special_elements_p5_frozen():
    # Values from the independent rational-series oracle, reduced mod 5^8.
    se = special_elements(5, 1, 8, 10)
    assert se.pq.to_list()[:5] == [5, 10, 10, 5, 1]
    assert se.mu0.to_list() == [0, 0, 0, 0, 325521, 130208, 336372, 227864, 91069, 308469]
    assert ptilde_over_pq(5, 8, 8).to_list() == [1, 390623, 2, 390624, 65104, 130209, 379774, 54253]


@pytest.mark.parametrize("p", [3, 5, 7])
def test_pq_is_p_mod_mu(p):
    assert special_elements(p, 1, 8, 20).pq.to_list()[0] == p


def test_phi_examples():
    mu = af(3, [0, 1])
    pq = af(3, [3, 3, 1])
    assert phi(mu) == mu * pq
    assert phi(mu * mu) == mu * mu * pq * pq


def test_gamma_examples():
    mu = af(3, [0, 1])
    assert gamma(mu).to_list()[:6] == [0, 4, 6, 4, 1, 0]
    assert gamma_act(4, mu) == gamma(mu)
    g_mu = torsion_generator(mu)
    assert g_mu.to_list() == [0] + [(-1) ** k % M3 for k in range(1, 20)]
    assert gamma_act(-1, mu) == g_mu


def test_gamma_act_rejects_non_units():
    with pytest.raises(MalformedError):
        gamma_act(3, af(3, [0, 1]))


def test_divide_exact_examples():
    mu = af(3, [0, 1])
    pq = af(3, [3, 3, 1])
    assert divide_exact(phi(mu), "mu") == pq.truncate(19)
    se = special_elements(3, 1, 8, 20)
    mu0_times_q = se.mu0 * af(3, [1, 1])
    assert mu0_times_q == mu * mu
    assert divide_exact(mu0_times_q, "mu") == mu.truncate(19)
    with pytest.raises(NotDivisibleError):
        divide_exact(af(3, [1, 1]), "mu")
    with pytest.raises(NotDivisibleError):
        divide_exact(af(3, [1]), "pq")


def test_divide_by_pq_and_ptilde():
    pq = af(3, [3, 3, 1])
    x = af(3, [2, 0, 5, 7])
    assert divide_exact(x * pq, "pq").to_list()[:5] == [2, 0, 5, 7, 0]
    se = special_elements(3, 1, 8, 20)
    quotient = divide_exact(se.ptilde, "ptilde", series=True)
    assert quotient.to_list() == [1] + [0] * (quotient.length - 1)


def test_invert_geometric_series():
    inv = invert(af(3, [1, 1]))
    assert inv.to_list() == [(-1) ** k % M3 for k in range(20)]
    with pytest.raises(NotUnitError):
        invert(af(3, [3, 1]))


def test_ptilde_over_pq_p3_is_inverse_of_q():
    w = ptilde_over_pq(3, 8, 20)
    assert is_unit_AF(w)
    assert w == invert(af(3, [1, 1]))


def test_is_unit_af():
    assert is_unit_AF(af(3, [0, 1]))
    assert not is_unit_AF(af(3, [3, 6]))


def test_fpx_average_of_mu():
    mu = af(5, [0, 1], prec_mu=24)
    se = special_elements(5, 1, 8, 24)
    assert fpx_average(mu) * 4 == se.mu0


def test_to_mu0_examples():
    se = special_elements(5, 1, 8, 24)
    assert to_mu0(se.ptilde).to_list() == [5, 1, 0, 0, 0, 0]
    with pytest.raises(NotInvariantError):
        to_mu0(af(5, [0, 1], prec_mu=24))


@pytest.mark.parametrize("p", [3, 5])
def test_identity_certificates(p):
    cert = identity_certificates(p, 1, 8, 40)
    assert cert.passed
    if p == 3:
        assert cert.frobenius_unit.to_list() == [1] + [0] * 19


def test_frobenius_unit_p5_frozen():
    cert = identity_certificates(5, 1, 8, 40)
    in_mu = af_ring(5, 8, 40).from_mu0(cert.frobenius_unit.coeffs)
    assert [int(c) for c in in_mu[:8]] == [1, 0, 0, 0, 74405, 241815, 145710, 325520]


@pytest.mark.parametrize("p", [3, 5])
def test_gamma_minus_one_of_mu0_divisible_by_ptilde_mu0(p):
    m0 = 12
    s = SSeries(p, 8, [0, 1] + [0] * (m0 - 2))
    diff = gamma0_S(s) - s
    q = divide_exact(divide_exact(diff, "mu0"), "ptilde", series=True)
    assert q.length > 0


def test_phi_s_matches_phi_on_a():
    p, m0 = 5, 8
    ring = af_ring(p, 8, (p - 1) * m0)
    s = SSeries(p, 8, [2, 3, 0, 1] + [0] * (m0 - 4))
    lhs = from_mu0(phi_S(s))
    rhs = phi(AFSeries(p, 8, ring.from_mu0(s.coeffs)))
    assert lhs == rhs


def test_large_modulus_agrees_with_small():
    # The object-dtype path (5^11 > 2^25) against the int64 path, mod 5^8.
    small = af_ring(5, 8, 60)
    large = af_ring(5, 11, 60)
    for name in ("mu0", "ptilde_over_pq", "pq"):
        a = getattr(small, name)
        b = np.array([int(c) % M5 for c in getattr(large, name)])
        assert np.array_equal(a % M5, b), name


coeff_lists = st.lists(st.integers(0, M3 - 1), min_size=1, max_size=16)


@settings(max_examples=40, deadline=None)
@given(coeff_lists, coeff_lists)
def test_phi_and_gamma_are_ring_homomorphisms(a, b):
    x, y = af(3, a, 16), af(3, b, 16)
    for op in (phi, gamma, torsion_generator):
        assert op(x * y) == op(x) * op(y)
        assert op(x + y) == op(x) + op(y)


@settings(max_examples=40, deadline=None)
@given(coeff_lists)
def test_phi_commutes_with_gamma(a):
    x = af(3, a, 16)
    assert phi(gamma(x)) == gamma(phi(x))
    assert phi(torsion_generator(x)) == torsion_generator(phi(x))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, M5 - 1), min_size=1, max_size=20))
def test_fpx_average_is_invariant_and_idempotent(a):
    x = af(5, a, 20)
    avg = fpx_average(x)
    assert torsion_generator(avg) == avg
    assert fpx_average(avg) == avg


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, M5 - 1), min_size=1, max_size=20))
def test_average_of_mu_multiple_lands_in_mu0_s(a):
    x = af(5, a, 20)
    mu = af(5, [0, 1], 20)
    assert to_mu0(fpx_average(mu * x)).to_list()[0] == 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, M5 - 1), min_size=1, max_size=6))
def test_to_mu0_inverts_from_mu0(a):
    s = SSeries(5, 8, list(a) + [0] * (6 - len(a)))
    assert to_mu0(from_mu0(s)) == s


@settings(max_examples=30, deadline=None)
@given(coeff_lists)
def test_invert_is_inverse(a):
    x = af(3, [1] + a, 17)
    assert x * invert(x) == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_mu0_is_unit_times_mu_power(p):
    q = special_elements(p, 1, 8, 30).mu0
    for _ in range(p - 1):
        q = divide_exact(q, "mu")
    assert q.to_list()[0] % p != 0
    with pytest.raises(NotDivisibleError):
        divide_exact(q, "mu")
