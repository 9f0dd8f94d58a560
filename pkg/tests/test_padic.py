from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wachsyn.errors import MalformedError, NotUnitError, PrecisionError
from wachsyn.padic import (
    OFElement,
    PadicScalar,
    UnramifiedRing,
    binomial,
    factorial_valuation,
    frobenius_of,
    smallest_primitive_root,
    teichmuller,
    valuation,
)

PRIMES = [3, 5, 7, 11]


def test_teichmuller_of_one_is_one():
    assert teichmuller(1, 3, 6).value == 1


def test_teichmuller_examples():
    assert teichmuller(2, 3, 4).value == 80
    assert teichmuller(2, 5, 2).value == 7


def test_teichmuller_of_zero():
    assert teichmuller(0, 5, 3).value == 0


@given(st.sampled_from(PRIMES), st.integers(1, 200), st.integers(1, 10))
def test_teichmuller_is_a_root_of_unity_lifting_a(p, a, n):
    if a % p == 0:
        return
    t = teichmuller(a, p, n)
    assert pow(t.value, p - 1, p**n) == 1
    assert t.value % p == a % p


def test_binomial_examples():
    c = PadicScalar(3, 6, 4)
    assert binomial(c, 0).value == 1
    assert binomial(c, 2).value == 6
    assert binomial(c, 3).value == 4


@given(st.sampled_from(PRIMES), st.integers(0, 10**6), st.integers(0, 30))
def test_binomial_matches_integer_binomial(p, n, k):
    c = PadicScalar(p, 12, n)
    loss = factorial_valuation(k, p)
    if loss >= 12:
        with pytest.raises(PrecisionError):
            binomial(c, k)
        return
    b = binomial(c, k)
    assert b.prec_p == 12 - loss
    assert b.value == comb(n, k) % p**b.prec_p


@given(st.integers(0, 3**8 - 1), st.integers(0, 30))
def test_binomial_depends_only_on_the_class(n, k):
    # Two representatives of the same class mod p^N agree at the reduced precision.
    a = binomial(PadicScalar(3, 8, n), k) if factorial_valuation(k, 3) < 8 else None
    if a is None:
        return
    b = binomial(PadicScalar(3, 8, n + 3**8), k)
    assert a == b


def test_binomial_precision_exhausted():
    with pytest.raises(PrecisionError):
        binomial(PadicScalar(3, 2, 5), 9)


def test_scalar_arithmetic_tracks_the_smaller_precision():
    a = PadicScalar(5, 6, 7)
    b = PadicScalar(5, 3, 11)
    assert (a + b).prec_p == 3
    assert (a * b).value == 77 % 125


def test_scalar_inverse_and_units():
    a = PadicScalar(3, 5, 2)
    assert (a * a.inverse()).value == 1
    with pytest.raises(NotUnitError):
        PadicScalar(3, 5, 6).inverse()


def test_valuation_and_primitive_root():
    assert valuation(54, 3) == 3
    assert PadicScalar(3, 4, 0).valuation() == 4
    assert smallest_primitive_root(3) == 2
    assert smallest_primitive_root(7) == 3


def test_non_prime_rejected():
    with pytest.raises((MalformedError, ValueError)):
        PadicScalar(9, 3, 1)


def test_frobenius_is_identity_for_f_one():
    x = OFElement.from_scalar(PadicScalar(5, 4, 17))
    assert frobenius_of(x) == x
    s = PadicScalar(5, 4, 17)
    assert frobenius_of(s) == s


@pytest.mark.parametrize("p,f", [(3, 2), (5, 2), (3, 3)])
def test_frobenius_on_unramified_ring(p, f):
    ring = UnramifiedRing(p, f, 5)
    x = ring.element([1, 2] + [0] * (f - 2))
    y = ring.element([3, 1] + [0] * (f - 2))
    # A ring automorphism of order f that reduces to x -> x^p mod p.
    assert frobenius_of(x * y) == frobenius_of(x) * frobenius_of(y)
    assert frobenius_of(x + y) == frobenius_of(x) + frobenius_of(y)
    z = x
    for _ in range(f):
        z = frobenius_of(z)
    assert z == x
    assert all((a - b) % p == 0 for a, b in zip(frobenius_of(x).coeffs, (x**p).coeffs))


def test_unramified_ring_rejects_reducible_polynomial():
    with pytest.raises(MalformedError):
        UnramifiedRing(3, 2, 4, defining_polynomial=(0, 0, 1))
