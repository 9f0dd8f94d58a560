"""Exact arithmetic in Z_p and in unramified extensions O_F = W(F_{p^f}) at finite precision.

Every value carries its p-adic precision ``prec_p`` (the exponent N of the
modulus p^N).  Binary operations return the smaller of the two precisions, so
a result never claims more accuracy than its inputs justify.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import MalformedError, NotUnitError, PrecisionError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % d for d in range(3, r + 1, 2))


def check_prime(p: int) -> int:
    """Validate that ``p`` is an odd prime and return it."""
    if not isinstance(p, int) or isinstance(p, bool) or not is_prime(p) or p < 3:
        raise MalformedError(f"p must be an odd prime >= 3, got {p!r}")
    return p


def valuation(n: int, p: int, cap: int | None = None) -> int:
    """p-adic valuation of an integer; zero maps to ``cap`` (or raises if no cap)."""
    if n == 0:
        if cap is None:
            raise ValueError("valuation of zero is infinite")
        return cap
    v = 0
    while n % p == 0:
        n //= p
        v += 1
        if cap is not None and v >= cap:
            return cap
    return v


def factorial_valuation(k: int, p: int) -> int:
    """Legendre's formula for v_p(k!)."""
    v, q = 0, p
    while q <= k:
        v += k // q
        q *= p
    return v


@lru_cache(maxsize=None)
def smallest_primitive_root(p: int) -> int:
    check_prime(p)
    order = p - 1
    prime_factors = [r for r in range(2, order + 1) if order % r == 0 and is_prime(r)]
    for w in range(2, p):
        if all(pow(w, order // r, p) != 1 for r in prime_factors):
            return w
    raise AssertionError("every prime has a primitive root")


@dataclass(frozen=True)
class PadicScalar:
    """An element of Z_p known modulo p^prec_p, stored as its residue in [0, p^N)."""

    p: int
    prec_p: int
    value: int

    def __post_init__(self):
        check_prime(self.p)
        if self.prec_p < 1:
            raise PrecisionError(f"precision must be positive, got {self.prec_p}")
        object.__setattr__(self, "value", int(self.value) % self.p**self.prec_p)

    @property
    def modulus(self) -> int:
        return self.p**self.prec_p

    def _coerce(self, other) -> PadicScalar:
        if isinstance(other, PadicScalar):
            if other.p != self.p:
                raise MalformedError("cannot mix scalars over different primes")
            return other
        if isinstance(other, int):
            return PadicScalar(self.p, self.prec_p, other)
        return NotImplemented

    def _binary(self, other, op):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = min(self.prec_p, other.prec_p)
        return PadicScalar(self.p, prec, op(self.value, other.value))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return PadicScalar(self.p, self.prec_p, -self.value)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return PadicScalar(self.p, self.prec_p, pow(self.value, e, self.modulus))

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prec = min(self.prec_p, other.prec_p)
        return (self.value - other.value) % self.p**prec == 0

    def __hash__(self):
        return hash((self.p, self.prec_p, self.value))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"PadicScalar({self.value} mod {self.p}^{self.prec_p})"

    def valuation(self) -> int:
        """p-adic valuation, equal to prec_p for the zero class."""
        return valuation(self.value, self.p, cap=self.prec_p)

    def is_unit(self) -> bool:
        return self.value % self.p != 0

    def inverse(self) -> PadicScalar:
        if not self.is_unit():
            raise NotUnitError(f"{self!r} is not a unit")
        return PadicScalar(self.p, self.prec_p, pow(self.value, -1, self.modulus))

    def with_prec(self, prec_p: int) -> PadicScalar:
        """Reduce to a lower precision (raising precision is not allowed)."""
        if prec_p > self.prec_p:
            raise PrecisionError(f"cannot raise precision from {self.prec_p} to {prec_p}")
        return PadicScalar(self.p, prec_p, self.value)


def teichmuller(a: int, p: int, prec_p: int) -> PadicScalar:
    """The root of unity congruent to ``a`` mod p, found by iterating x -> x^p."""
    check_prime(p)
    modulus = p**prec_p
    x = a % p
    if x == 0:
        return PadicScalar(p, prec_p, 0)
    while True:
        nxt = pow(x, p, modulus)
        if nxt == x:
            return PadicScalar(p, prec_p, x)
        x = nxt


def binomial(c: PadicScalar, k: int) -> PadicScalar:
    """C(c, k) for a p-adic integer c, at precision prec_p(c) - v_p(k!).

    Any integer representative of c gives the same answer modulo the reduced
    precision, so the value is computed with exact integer arithmetic.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    loss = factorial_valuation(k, c.p)
    prec = c.prec_p - loss
    if prec <= 0:
        raise PrecisionError(
            f"binomial({c!r}, {k}) loses {loss} digits of p-adic precision"
        )
    # math.comb returns 0 when the representative is below k, which is the correct value.
    return PadicScalar(c.p, prec, math.comb(c.value, k))


# --------------------------------------------------------------------------
# Unramified extensions W(F_{p^f}) presented as (Z/p^N)[x]/(G(x)).
# --------------------------------------------------------------------------


def _poly_divides_mod_p(g: tuple[int, ...], h: tuple[int, ...], p: int) -> bool:
    """Does monic g divide h over F_p?  Coefficients are listed low degree first."""
    rem = [c % p for c in h]
    dg = len(g) - 1
    for top in range(len(rem) - 1, dg - 1, -1):
        coef = rem[top]
        if coef:
            for i, gi in enumerate(g):
                rem[top - dg + i] = (rem[top - dg + i] - coef * gi) % p
    return not any(rem[:dg])


def is_irreducible_mod_p(poly: tuple[int, ...], p: int) -> bool:
    """Brute-force irreducibility of a monic polynomial over F_p (small degrees only)."""
    degree = len(poly) - 1
    if poly[-1] % p != 1:
        return False
    for d in range(1, degree // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            if _poly_divides_mod_p(tuple(tail) + (1,), poly, p):
                return False
    return True


@lru_cache(maxsize=None)
def default_defining_polynomial(p: int, f: int) -> tuple[int, ...]:
    """First monic irreducible polynomial of degree f over F_p in lexicographic order."""
    if f == 1:
        return (0, 1)
    for tail in itertools.product(range(p), repeat=f):
        poly = tuple(tail) + (1,)
        if poly[0] and is_irreducible_mod_p(poly, p):
            return poly
    raise AssertionError("irreducible polynomials exist in every degree")


class UnramifiedRing:
    """O_F / p^N for F unramified of degree f over Q_p, with basis 1, x, ..., x^{f-1}."""

    def __init__(self, p: int, f: int, prec_p: int, defining_polynomial=None):
        check_prime(p)
        if f < 1:
            raise MalformedError("degree f must be at least 1")
        if prec_p < 1:
            raise PrecisionError("precision must be positive")
        poly = tuple(defining_polynomial) if defining_polynomial else default_defining_polynomial(p, f)
        if len(poly) != f + 1 or poly[-1] != 1 or not is_irreducible_mod_p(poly, p):
            raise MalformedError(f"defining polynomial {poly} is not monic irreducible of degree {f} mod {p}")
        self.p, self.f, self.prec_p = p, f, prec_p
        self.modulus = p**prec_p
        self.defining_polynomial = poly
        self._frobenius_image_of_x = None

    def __eq__(self, other):
        return isinstance(other, UnramifiedRing) and (self.p, self.f, self.prec_p, self.defining_polynomial) == (
            other.p,
            other.f,
            other.prec_p,
            other.defining_polynomial,
        )

    def __hash__(self):
        return hash((self.p, self.f, self.prec_p, self.defining_polynomial))

    def element(self, coeffs) -> OFElement:
        coeffs = [int(c) for c in coeffs] + [0] * (self.f - len(coeffs))
        if len(coeffs) != self.f:
            raise MalformedError(f"expected {self.f} coefficients, got {len(coeffs)}")
        return OFElement(self, tuple(c % self.modulus for c in coeffs))

    def one(self) -> OFElement:
        return self.element([1])

    def generator(self) -> OFElement:
        """The class of x (only meaningful for f > 1)."""
        if self.f == 1:
            return self.element([0])
        return self.element([0, 1])

    def _reduce(self, prod: list[int]) -> tuple[int, ...]:
        poly, f, m = self.defining_polynomial, self.f, self.modulus
        prod = [c % m for c in prod]
        for top in range(len(prod) - 1, f - 1, -1):
            coef = prod[top]
            if coef:
                for i in range(f + 1):
                    prod[top - f + i] = (prod[top - f + i] - coef * poly[i]) % m
        prod = prod[:f] + [0] * (f - len(prod[:f]))
        return tuple(prod)

    def mul(self, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        prod = [0] * (2 * self.f - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] += ai * bj
        return self._reduce(prod)

    def power(self, a: tuple[int, ...], e: int) -> tuple[int, ...]:
        result = self.one().coeffs
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def teichmuller_of_generator(self) -> OFElement:
        """The (p^f - 1)-th root of unity congruent to x mod p."""
        x = self.generator().coeffs
        q = self.p**self.f
        while True:
            nxt = self.power(x, q)
            if nxt == x:
                return OFElement(self, x)
            x = nxt

    def frobenius_image_of_generator(self) -> tuple[int, ...]:
        """sigma(x), determined by sigma(t) = t^p on the Teichmuller lift t of x."""
        if self._frobenius_image_of_x is not None:
            return self._frobenius_image_of_x
        f, m = self.f, self.modulus
        t = self.teichmuller_of_generator().coeffs
        powers = [self.one().coeffs]
        for _ in range(1, f):
            powers.append(self.mul(powers[-1], t))
        # Columns of T are t^i in the x-basis; T = I mod p, so T^{-1} = sum (I - T)^k.
        T = [[powers[j][i] for j in range(f)] for i in range(f)]
        nil = [[((1 if i == j else 0) - T[i][j]) % m for j in range(f)] for i in range(f)]
        target = [0] * f
        target[1] = 1
        coords = list(target)
        term = list(target)
        for _ in range(self.prec_p):
            term = [sum(nil[i][j] * term[j] for j in range(f)) % m for i in range(f)]
            coords = [(c + s) % m for c, s in zip(coords, term)]
        # x = sum coords[i] t^i, hence sigma(x) = sum coords[i] t^{p i}.
        tp = self.power(t, self.p)
        image = [0] * f
        acc = self.one().coeffs
        for c in coords:
            image = [(u + c * v) % m for u, v in zip(image, acc)]
            acc = self.mul(acc, tp)
        self._frobenius_image_of_x = tuple(image)
        return self._frobenius_image_of_x


@dataclass(frozen=True)
class OFElement:
    """An element of W(F_{p^f}) / p^N in the polynomial basis of its ring."""

    ring: UnramifiedRing
    coeffs: tuple[int, ...]

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def prec_p(self) -> int:
        return self.ring.prec_p

    @classmethod
    def from_scalar(cls, x: PadicScalar) -> OFElement:
        return UnramifiedRing(x.p, 1, x.prec_p).element([x.value])

    def to_scalar(self) -> PadicScalar:
        if self.ring.f != 1:
            raise MalformedError("only f = 1 elements identify with Z_p scalars")
        return PadicScalar(self.p, self.prec_p, self.coeffs[0])

    def _check(self, other) -> OFElement:
        if isinstance(other, int):
            return self.ring.element([other])
        if not isinstance(other, OFElement) or other.ring != self.ring:
            raise MalformedError("elements belong to different rings")
        return other

    def __add__(self, other):
        other = self._check(other)
        return self.ring.element([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return self.ring.element([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return self.ring.element([-a for a in self.coeffs])

    def __mul__(self, other):
        other = self._check(other)
        return OFElement(self.ring, self.ring.mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return OFElement(self.ring, self.ring.power(self.coeffs, e))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.element([other])
        return isinstance(other, OFElement) and self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def is_unit(self) -> bool:
        """Units of W(F_{p^f}) are exactly the elements that are nonzero mod p."""
        return any(c % self.p for c in self.coeffs)


def frobenius_of(x):
    """Arithmetic Frobenius: the identity on Z_p, and t -> t^p on Teichmuller lifts for f > 1."""
    if isinstance(x, PadicScalar) or x.ring.f == 1:
        return x
    ring = x.ring
    sigma_x = ring.frobenius_image_of_generator()
    result = [0] * ring.f
    acc = ring.one().coeffs
    for c in x.coeffs:
        result = [(u + c * v) % ring.modulus for u, v in zip(result, acc)]
        acc = ring.mul(acc, sigma_x)
    return OFElement(ring, tuple(result))
