"""Truncated power series over Z_p in the variables mu (ring A) and mu0 (ring S).

Coefficients are stored coefficient-first in numpy arrays: a series is an
array of shape (M,), a vector of series has shape (M, d) and a matrix of
series has shape (M, r, c).  The helpers at the top of the module operate on
such arrays; :class:`AFSeries` and :class:`SSeries` wrap them for the public API.

Only the case O_F = Z_p (residue degree f = 1) is implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import MalformedError, NotDivisibleError, NotInvariantError, NotUnitError, PrecisionError
from .padic import (
    PadicScalar,
    binomial,
    check_prime,
    factorial_valuation,
    smallest_primitive_root,
    teichmuller,
)

# Keep modulus^2 times the longest accumulation well inside int64.
_INT64_MODULUS_LIMIT = 2**25


def coeff_dtype(modulus: int):
    return np.int64 if modulus < _INT64_MODULUS_LIMIT else object


def zeros(shape, modulus: int) -> np.ndarray:
    return np.zeros(shape, dtype=coeff_dtype(modulus))


def as_coeffs(values, modulus: int) -> np.ndarray:
    arr = np.array(values, dtype=object) % modulus
    return arr.astype(coeff_dtype(modulus))


# --------------------------------------------------------------------------
# Array-level arithmetic
# --------------------------------------------------------------------------


def series_mul(a: np.ndarray, b: np.ndarray, modulus: int) -> np.ndarray:
    """Truncated product of series arrays; trailing axes multiply elementwise."""
    length = min(a.shape[0], b.shape[0])
    out = np.zeros((length,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=a.dtype)
    for j in range(length):
        if np.any(a[j]):
            out[j:] = (out[j:] + a[j] * b[: length - j]) % modulus
    return out


def series_matmul(a: np.ndarray, b: np.ndarray, modulus: int) -> np.ndarray:
    """Product of series matrices, shapes (M, r, k) @ (M, k, c)."""
    length = min(a.shape[0], b.shape[0])
    out = np.zeros((length, a.shape[1], b.shape[2]), dtype=a.dtype)
    for j in range(length):
        if np.any(a[j]):
            out[j:] = (out[j:] + np.matmul(a[j], b[: length - j])) % modulus
    return out


def series_matvec(a: np.ndarray, v: np.ndarray, modulus: int) -> np.ndarray:
    """Matrix (M, r, k) applied to a vector (M, k)."""
    return series_matmul(a, v[:, :, None], modulus)[:, :, 0]


def substitute(sub: np.ndarray, a: np.ndarray, modulus: int) -> np.ndarray:
    """Apply a substitution matrix (columns are powers of the image of the variable)."""
    length = min(sub.shape[0], a.shape[0])
    flat = a[:length].reshape(length, -1)
    out = np.matmul(sub[:length, :length], flat) % modulus
    return out.reshape(a[:length].shape)


def modular_matrix_inverse(m: np.ndarray, modulus: int, p: int) -> np.ndarray:
    """Inverse of a square integer matrix that is invertible mod p."""
    n = m.shape[0]
    work = np.concatenate([m.astype(object) % modulus, np.eye(n, dtype=object)], axis=1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r, col] % p), None)
        if pivot is None:
            raise NotUnitError("matrix is singular mod p")
        work[[col, pivot]] = work[[pivot, col]]
        work[col] = (work[col] * pow(int(work[col, col]), -1, modulus)) % modulus
        for r in range(n):
            if r != col and work[r, col]:
                work[r] = (work[r] - work[r, col] * work[col]) % modulus
    return work[:, n:].astype(m.dtype if m.dtype != object else object)


def series_inverse(a: np.ndarray, modulus: int, p: int) -> np.ndarray:
    """Inverse of a scalar series with unit constant term."""
    if int(a[0]) % p == 0:
        raise NotUnitError("constant term is not a unit")
    length = a.shape[0]
    inv0 = pow(int(a[0]), -1, modulus)
    out = [0] * length
    out[0] = inv0
    coeffs = [int(c) for c in a]
    for n in range(1, length):
        acc = sum(coeffs[j] * out[n - j] for j in range(1, n + 1))
        out[n] = (-inv0 * acc) % modulus
    return as_coeffs(out, modulus)


def series_matinv(a: np.ndarray, modulus: int, p: int) -> np.ndarray:
    """Inverse of a series matrix whose constant matrix is invertible mod p."""
    length, n, _ = a.shape
    inv0 = modular_matrix_inverse(a[0], modulus, p)
    out = np.zeros_like(a)
    out[0] = inv0
    for k in range(1, length):
        acc = np.zeros((n, n), dtype=a.dtype)
        for j in range(1, k + 1):
            acc = (acc + np.matmul(a[j], out[k - j])) % modulus
        out[k] = (-np.matmul(inv0, acc)) % modulus
    return out


def series_det(a: np.ndarray, modulus: int) -> np.ndarray:
    """Determinant of a small series matrix (M, d, d) by cofactor expansion."""
    n = a.shape[1]
    if n == 1:
        return a[:, 0, 0].copy()
    total = np.zeros(a.shape[0], dtype=a.dtype)
    for j in range(n):
        if not np.any(a[:, 0, j]):
            continue
        minor = np.delete(np.delete(a, 0, axis=1), j, axis=2)
        term = series_mul(a[:, 0, j], series_det(minor, modulus), modulus)
        total = (total + term) % modulus if j % 2 == 0 else (total - term) % modulus
    return total


def poly_divmod(v: np.ndarray, divisor: np.ndarray, modulus: int):
    """Long division of a coefficient array by a monic polynomial, from the top degree down.

    Returns (quotient, remainder) where the remainder has length deg(divisor).
    Trailing axes of ``v`` are divided independently.
    """
    degree = divisor.shape[0] - 1
    if int(divisor[-1]) % modulus != 1:
        raise MalformedError("divisor must be monic")
    rem = v.copy() % modulus
    length = rem.shape[0]
    if length <= degree:
        return np.zeros((0,) + v.shape[1:], dtype=v.dtype), rem
    quot = np.zeros((length - degree,) + v.shape[1:], dtype=v.dtype)
    div = divisor.reshape((degree + 1,) + (1,) * (v.ndim - 1))
    for top in range(length - 1, degree - 1, -1):
        c = rem[top].copy()
        if np.any(c):
            quot[top - degree] = c
            rem[top - degree : top + 1] = (rem[top - degree : top + 1] - c * div) % modulus
    return quot, rem[:degree]


def division_precision(p: int, prec_p: int, length: int, e: int, *, over_s: bool) -> tuple[int, int]:
    """(quotient length, remainder p-adic precision) when dividing a truncated series by D^e.

    D is ptilde = mu0 + p over S and [p]_q over A.  Over S the unknown tail
    mu0^L = (ptilde - p)^L contributes p^{L-e-m} to the quotient in degree m
    and p^{L-e+1} to the remainder.  Over A the same holds with L replaced by
    floor(L/(p-1)) and degrees measured in steps of p - 1, because
    mu^{p-1} = [p]_q - p c(mu) for a polynomial c.
    """
    if over_s:
        return length - e - prec_p + 1, min(prec_p, length - e + 1)
    step = p - 1
    blocks = length // step
    return step * (blocks - e - prec_p + 1), min(prec_p, blocks - e + 1)


def poly_power(poly: np.ndarray, e: int, modulus: int) -> np.ndarray:
    """Exact power of a polynomial coefficient array (no truncation)."""
    out = np.zeros(1, dtype=poly.dtype)
    out[0] = 1
    for _ in range(e):
        res = np.zeros(out.shape[0] + poly.shape[0] - 1, dtype=poly.dtype)
        for i, c in enumerate(poly):
            if c:
                res[i : i + out.shape[0]] = (res[i : i + out.shape[0]] + c * out) % modulus
        out = res
    return out


def p_adic_valuations(arr: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Elementwise valuation of an integer array, with zero mapping to ``cap``."""
    val = np.zeros(arr.shape, dtype=np.int64)
    work = arr.copy()
    for _ in range(cap):
        divisible = (work % p == 0)
        if not np.any(divisible):
            break
        val += divisible
        work = np.where(divisible, work // p, work)
    return np.minimum(val, cap)


# --------------------------------------------------------------------------
# Ring contexts
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def af_ring(p: int, prec_p: int, prec_mu: int) -> AFRing:
    return AFRing(p, prec_p, prec_mu)


@lru_cache(maxsize=None)
def s_ring(p: int, prec_p: int, prec_mu0: int) -> SRing:
    return SRing(p, prec_p, prec_mu0)


class AFRing:
    """Cached constants and operator matrices for A = Z_p[[mu]] modulo (p^N, mu^M)."""

    def __init__(self, p: int, prec_p: int, prec_mu: int):
        check_prime(p)
        if prec_p < 1 or prec_mu < 1:
            raise PrecisionError("precisions must be positive")
        self.p, self.prec_p, self.prec_mu = p, prec_p, prec_mu
        self.modulus = p**prec_p
        self.dtype = coeff_dtype(self.modulus)
        self.primitive_root = smallest_primitive_root(p)
        self.chi_gamma = 1 + p
        # Extra p-adic digits so that binomial coefficients up to mu^M stay exact mod p^N.
        self.exponent_prec = prec_p + factorial_valuation(prec_mu + 1, p) + 1

    # ---- exponents in Z_p -------------------------------------------------

    def teichmuller_exponent(self, a: int) -> PadicScalar:
        return teichmuller(a, self.p, self.exponent_prec)

    @cached_property
    def chi_torsion(self) -> PadicScalar:
        """chi(g) for the torsion generator g, the Teichmuller lift of the primitive root."""
        return self.teichmuller_exponent(self.primitive_root)

    def power_minus_one(self, c, length: int | None = None) -> np.ndarray:
        """Coefficients of (1 + mu)^c - 1 for c in Z_p (an int is taken as exact)."""
        length = self.prec_mu if length is None else length
        if isinstance(c, int):
            c = PadicScalar(self.p, self.exponent_prec + factorial_valuation(length, self.p), c)
        coeffs = [0] * length
        for k in range(1, length):
            b = binomial(c, k)
            if b.prec_p < self.prec_p:
                raise PrecisionError(f"exponent {c!r} is too imprecise for mu^{k}")
            coeffs[k] = b.value
        return as_coeffs(coeffs, self.modulus)

    # ---- substitution matrices -------------------------------------------

    def substitution_matrix(self, image: np.ndarray) -> np.ndarray:
        """Columns are image^k mod mu^M, so that a(mu) -> a(image) is a matrix product."""
        m = self.prec_mu
        cols = np.zeros((m, m), dtype=self.dtype)
        col = np.zeros(m, dtype=self.dtype)
        col[0] = 1
        for k in range(m):
            cols[:, k] = col
            col = series_mul(col, image[:m], self.modulus)
        return cols

    @cached_property
    def phi_image(self) -> np.ndarray:
        return self.power_minus_one(self.p)

    @cached_property
    def phi_matrix(self) -> np.ndarray:
        return self.substitution_matrix(self.phi_image)

    @cached_property
    def gamma_matrix(self) -> np.ndarray:
        return self.substitution_matrix(self.power_minus_one(self.chi_gamma))

    @cached_property
    def torsion_matrix(self) -> np.ndarray:
        return self.substitution_matrix(self.power_minus_one(self.chi_torsion))

    def action_matrix(self, c) -> np.ndarray:
        return self.substitution_matrix(self.power_minus_one(c))

    # ---- special elements -------------------------------------------------

    @cached_property
    def one(self) -> np.ndarray:
        out = np.zeros(self.prec_mu, dtype=self.dtype)
        out[0] = 1
        return out

    @cached_property
    def mu(self) -> np.ndarray:
        out = np.zeros(self.prec_mu, dtype=self.dtype)
        if self.prec_mu > 1:
            out[1] = 1
        return out

    @cached_property
    def pq_polynomial(self) -> np.ndarray:
        """[p]_q = ((1+mu)^p - 1)/mu as an exact monic polynomial of degree p - 1."""
        return as_coeffs([binomial(PadicScalar(self.p, self.prec_p + 2, self.p), k + 1).value for k in range(self.p)], self.modulus)

    @cached_property
    def pq(self) -> np.ndarray:
        out = np.zeros(self.prec_mu, dtype=self.dtype)
        n = min(self.p, self.prec_mu)
        out[:n] = self.pq_polynomial[:n]
        return out

    def pq_power(self, e: int) -> np.ndarray:
        out = np.zeros(self.prec_mu, dtype=self.dtype)
        poly = poly_power(self.pq_polynomial, e, self.modulus)
        n = min(poly.shape[0], self.prec_mu)
        out[:n] = poly[:n]
        return out

    @cached_property
    def mu0(self) -> np.ndarray:
        total = np.zeros(self.prec_mu, dtype=self.dtype)
        for a in range(1, self.p):
            total = (total + self.power_minus_one(self.teichmuller_exponent(a))) % self.modulus
        return total

    @cached_property
    def ptilde(self) -> np.ndarray:
        out = self.mu0.copy()
        out[0] = (out[0] + self.p) % self.modulus
        return out

    @cached_property
    def ptilde_over_pq(self) -> np.ndarray:
        """The unit ptilde/[p]_q, from a closed form that needs no division.

        Writing [a] = a + p t_a, one has q^[a] = q^a phi(q)^{t_a} and
        phi(q)^t - 1 = mu [p]_q sum_{k>=1} C(t, k) phi(mu)^{k-1}; summing over a
        gives ptilde = [p]_q (1 + mu sum_a q^a sum_k C(t_a, k) phi(mu)^{k-1}).
        """
        m, mod, p = self.prec_mu, self.modulus, self.p
        phi_mu = self.phi_image
        inner = np.zeros(m, dtype=self.dtype)
        for a in range(p):
            lift = self.teichmuller_exponent(a)
            t_a = PadicScalar(p, lift.prec_p - 1, (lift.value - a) // p)
            acc = np.zeros(m, dtype=self.dtype)
            power = self.one.copy()
            for k in range(1, m + 1):
                b = binomial(t_a, k)
                if b.prec_p < self.prec_p:
                    raise PrecisionError("insufficient exponent precision for the closed form")
                acc = (acc + (b.value % mod) * power) % mod
                power = series_mul(power, phi_mu, mod)
                if not np.any(power):
                    break
            q_to_a = self.one_plus_mu_power(a)
            inner = (inner + series_mul(q_to_a, acc, mod)) % mod
        out = self.one.copy()
        out[1:] = (out[1:] + inner[: m - 1]) % mod
        return out

    def one_plus_mu_power(self, a: int) -> np.ndarray:
        """(1 + mu)^a for a non-negative integer a."""
        out = self.power_minus_one(a)
        out[0] = (out[0] + 1) % self.modulus
        return out

    @cached_property
    def mu0_over_mu_power(self) -> np.ndarray:
        """The unit mu0 / mu^{p-1}, at mu-precision M - (p - 1)."""
        return self.mu0[self.p - 1 :].copy()

    def action_ratio(self, c) -> np.ndarray:
        """The unit ((1+mu)^c - 1)/mu at full mu-precision M."""
        return self.power_minus_one(c, self.prec_mu + 1)[1:]

    @cached_property
    def gamma_ratio(self) -> np.ndarray:
        return self.action_ratio(self.chi_gamma)

    @cached_property
    def torsion_ratio(self) -> np.ndarray:
        return self.action_ratio(self.chi_torsion)

    @cached_property
    def mu0_powers(self) -> np.ndarray:
        """mu0^k for k < floor(M/(p-1)), as columns of a (M, M0) array."""
        m0 = self.prec_mu // (self.p - 1)
        cols = np.zeros((self.prec_mu, m0), dtype=self.dtype)
        col = self.one.copy()
        for k in range(m0):
            cols[:, k] = col
            col = series_mul(col, self.mu0, self.modulus)
        return cols

    @cached_property
    def mu0_leading_inverses(self) -> list[int]:
        step = self.p - 1
        return [pow(int(self.mu0_powers[step * k, k]), -1, self.modulus) for k in range(self.mu0_powers.shape[1])]

    # ---- operators on arrays ---------------------------------------------

    def phi(self, a: np.ndarray) -> np.ndarray:
        return substitute(self.phi_matrix, a, self.modulus)

    def gamma(self, a: np.ndarray) -> np.ndarray:
        return substitute(self.gamma_matrix, a, self.modulus)

    def torsion(self, a: np.ndarray) -> np.ndarray:
        return substitute(self.torsion_matrix, a, self.modulus)

    def fpx_average(self, a: np.ndarray) -> np.ndarray:
        total = a.copy() % self.modulus
        term = a
        for _ in range(1, self.p - 1):
            term = self.torsion(term)
            total = (total + term) % self.modulus
        return (total * pow(self.p - 1, -1, self.modulus)) % self.modulus

    def to_mu0(self, a: np.ndarray, prec_mu0: int | None = None) -> np.ndarray:
        """Coordinates in powers of mu0 of an invariant array (trailing axes allowed)."""
        step = self.p - 1
        m0 = self.prec_mu // step if prec_mu0 is None else prec_mu0
        if m0 * step > a.shape[0]:
            raise PrecisionError(f"need mu-precision {m0 * step}, have {a.shape[0]}")
        rem = a[: m0 * step].copy() % self.modulus
        out = np.zeros((m0,) + a.shape[1:], dtype=self.dtype)
        powers = self.mu0_powers
        tail = (1,) * (a.ndim - 1)
        for k in range(m0):
            c = (rem[step * k] * self.mu0_leading_inverses[k]) % self.modulus
            out[k] = c
            if np.any(c):
                rem = (rem - powers[: m0 * step, k].reshape((-1,) + tail) * c) % self.modulus
        if np.any(rem):
            first = int(np.argmax(np.any(rem.reshape(rem.shape[0], -1) != 0, axis=1)))
            raise NotInvariantError(f"series is not fixed by the torsion subgroup (mu^{first})")
        return out

    def from_mu0(self, s: np.ndarray) -> np.ndarray:
        """Substitute mu0 = mu0(mu); the result has mu-precision (p-1) * len(s)."""
        length = s.shape[0] * (self.p - 1)
        if length > self.prec_mu:
            raise PrecisionError("mu-precision too small for this mu0-precision")
        flat = s.reshape(s.shape[0], -1)
        out = np.matmul(self.mu0_powers[:length, : s.shape[0]], flat) % self.modulus
        return out.reshape((length,) + s.shape[1:])

    def divide_by_pq_power(self, v: np.ndarray, e: int, *, series: bool = False) -> np.ndarray:
        """Exact division by [p]_q^e along axis 0.

        For a polynomial (``series=False``) the quotient is exact and the
        remainder must vanish.  For a truncated power series the quotient is
        only determined to the length given by :func:`division_precision`.
        """
        if e == 0:
            return v.copy()
        divisor = poly_power(self.pq_polynomial, e, self.modulus)
        quot, rem = poly_divmod(v, divisor, self.modulus)
        if series:
            keep, check_prec = division_precision(self.p, self.prec_p, v.shape[0], e, over_s=False)
            if keep <= 0 or check_prec < 1:
                raise PrecisionError("not enough mu-precision to divide a series by [p]_q")
            check_mod = self.p**check_prec
            if np.any(rem % check_mod):
                raise NotDivisibleError("not divisible by [p]_q power", _first_nonzero(rem % check_mod))
            return quot[:keep]
        if np.any(rem):
            raise NotDivisibleError("not divisible by [p]_q power", _first_nonzero(rem))
        return quot


def _first_nonzero(arr: np.ndarray) -> int:
    flat = np.any(arr.reshape(arr.shape[0], -1) != 0, axis=1)
    return int(np.argmax(flat))


class SRing:
    """Cached operator matrices for S = Z_p[[mu0]] modulo (p^N, mu0^{M0})."""

    def __init__(self, p: int, prec_p: int, prec_mu0: int):
        check_prime(p)
        self.p, self.prec_p, self.prec_mu0 = p, prec_p, prec_mu0
        self.modulus = p**prec_p
        self.dtype = coeff_dtype(self.modulus)
        self.af = af_ring(p, prec_p, (p - 1) * prec_mu0)

    def _conjugated(self, op) -> np.ndarray:
        basis = np.eye(self.prec_mu0, dtype=self.dtype)
        return self.af.to_mu0(op(self.af.from_mu0(basis)), self.prec_mu0)

    @cached_property
    def phi_matrix(self) -> np.ndarray:
        return self._conjugated(self.af.phi)

    @cached_property
    def gamma_matrix(self) -> np.ndarray:
        return self._conjugated(self.af.gamma)

    @cached_property
    def one(self) -> np.ndarray:
        out = np.zeros(self.prec_mu0, dtype=self.dtype)
        out[0] = 1
        return out

    @cached_property
    def mu0(self) -> np.ndarray:
        out = np.zeros(self.prec_mu0, dtype=self.dtype)
        if self.prec_mu0 > 1:
            out[1] = 1
        return out

    @cached_property
    def ptilde(self) -> np.ndarray:
        out = self.mu0.copy()
        out[0] = self.p % self.modulus
        return out

    def ptilde_power(self, e: int) -> np.ndarray:
        poly = poly_power(as_coeffs([self.p, 1], self.modulus), e, self.modulus)
        out = np.zeros(self.prec_mu0, dtype=self.dtype)
        n = min(poly.shape[0], self.prec_mu0)
        out[:n] = poly[:n]
        return out

    def phi(self, s: np.ndarray) -> np.ndarray:
        return substitute(self.phi_matrix, s, self.modulus)

    def gamma(self, s: np.ndarray) -> np.ndarray:
        return substitute(self.gamma_matrix, s, self.modulus)

    @cached_property
    def phi_mu0_ratio(self) -> np.ndarray:
        """phi(mu0)/mu0, read off one coefficient further out."""
        longer = s_ring(self.p, self.prec_p, self.prec_mu0 + 1)
        return longer.phi(longer.mu0)[1:].copy()

    @cached_property
    def gamma_mu0_ratio(self) -> np.ndarray:
        """gamma(mu0)/mu0 at full precision."""
        longer = s_ring(self.p, self.prec_p, self.prec_mu0 + 1)
        return longer.gamma(longer.mu0)[1:].copy()

    @cached_property
    def frobenius_unit(self) -> np.ndarray:
        """The unit u with phi(mu0) = u mu0 ptilde^{p-1}; u = 1 exactly when p = 3."""
        extra = self.prec_p + self.p - 1
        longer = s_ring(self.p, self.prec_p, self.prec_mu0 + extra)
        quot = longer.divide_by_ptilde_power(longer.phi_mu0_ratio, self.p - 1, series=True)
        return quot[: self.prec_mu0].copy()

    def divide_by_ptilde_power(self, v: np.ndarray, e: int, *, series: bool = False) -> np.ndarray:
        """Division by ptilde^e = (mu0 + p)^e, with the same conventions as the [p]_q version."""
        if e == 0:
            return v.copy()
        divisor = poly_power(as_coeffs([self.p, 1], self.modulus), e, self.modulus)
        quot, rem = poly_divmod(v, divisor, self.modulus)
        if series:
            keep, check_prec = division_precision(self.p, self.prec_p, v.shape[0], e, over_s=True)
            if keep <= 0 or check_prec < 1:
                raise PrecisionError("not enough mu0-precision to divide a series by ptilde")
            if np.any(rem % self.p**check_prec):
                raise NotDivisibleError("not divisible by ptilde power", _first_nonzero(rem % self.p**check_prec))
            return quot[:keep]
        if np.any(rem):
            raise NotDivisibleError("not divisible by ptilde power", _first_nonzero(rem))
        return quot


# --------------------------------------------------------------------------
# Public series types
# --------------------------------------------------------------------------


class _Series:
    """Shared behaviour of the two truncated series types."""

    __slots__ = ("p", "prec_p", "coeffs")

    def __init__(self, p: int, prec_p: int, coeffs):
        check_prime(p)
        modulus = p**prec_p
        arr = coeffs if isinstance(coeffs, np.ndarray) else as_coeffs(list(coeffs), modulus)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise MalformedError("coefficients must be a non-empty 1-d sequence")
        self.p, self.prec_p = p, prec_p
        self.coeffs = (arr % modulus).astype(coeff_dtype(modulus))

    @property
    def modulus(self) -> int:
        return self.p**self.prec_p

    @property
    def length(self) -> int:
        return self.coeffs.shape[0]

    def _like(self, coeffs, prec_p=None):
        return type(self)(self.p, self.prec_p if prec_p is None else prec_p, coeffs)

    def _align(self, other):
        if isinstance(other, int):
            arr = np.zeros(self.length, dtype=self.coeffs.dtype)
            arr[0] = other % self.modulus
            return self.coeffs, arr, self.prec_p
        if type(other) is not type(self) or other.p != self.p:
            raise MalformedError("series belong to different rings")
        prec = min(self.prec_p, other.prec_p)
        length = min(self.length, other.length)
        mod = self.p**prec
        dtype = coeff_dtype(mod)
        return (self.coeffs[:length] % mod).astype(dtype), (other.coeffs[:length] % mod).astype(dtype), prec

    def __add__(self, other):
        a, b, prec = self._align(other)
        return self._like(a + b, prec)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, prec = self._align(other)
        return self._like(a - b, prec)

    def __rsub__(self, other):
        a, b, prec = self._align(other)
        return self._like(b - a, prec)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, PadicScalar):
            return self._like(self.coeffs * (other.value % self.modulus), min(self.prec_p, other.prec_p))
        if isinstance(other, int):
            return self._like(self.coeffs * (other % self.modulus))
        a, b, prec = self._align(other)
        return self._like(series_mul(a, b, self.p**prec), prec)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.invert() ** (-e)
        result = self._like(np.eye(1, self.length, dtype=self.coeffs.dtype)[0])
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self._like(np.eye(1, self.length, dtype=self.coeffs.dtype)[0] * other)
        if type(other) is not type(self):
            return NotImplemented
        a, b, _ = self._align(other)
        return bool(np.all(a == b))

    def __hash__(self):
        return hash((type(self).__name__, self.p, self.prec_p, tuple(int(c) for c in self.coeffs)))

    def __getitem__(self, k: int) -> PadicScalar:
        return PadicScalar(self.p, self.prec_p, int(self.coeffs[k]))

    def to_list(self) -> list[int]:
        return [int(c) for c in self.coeffs]

    def constant(self) -> PadicScalar:
        return self[0]

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def order(self) -> int:
        """Index of the first nonzero coefficient (the length if the series is zero)."""
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[0]) if nz.size else self.length

    def truncate(self, length: int):
        if length > self.length:
            raise PrecisionError(f"cannot extend precision from {self.length} to {length}")
        return self._like(self.coeffs[:length])

    def invert(self):
        return self._like(series_inverse(self.coeffs, self.modulus, self.p))

    def _terms(self, var: str) -> str:
        parts = []
        for k, c in enumerate(self.to_list()):
            if c:
                parts.append(f"{c}" if k == 0 else f"{c}*{var}^{k}")
        return " + ".join(parts) or "0"


class AFSeries(_Series):
    """A truncated element of A = Z_p[[mu]], known modulo (p^prec_p, mu^prec_mu)."""

    __slots__ = ()

    @property
    def prec_mu(self) -> int:
        return self.length

    @property
    def ring(self) -> AFRing:
        return af_ring(self.p, self.prec_p, self.prec_mu)

    def __repr__(self):
        return f"AFSeries({self._terms('mu')}; p={self.p}, N={self.prec_p}, M={self.prec_mu})"


class SSeries(_Series):
    """A truncated element of S = Z_p[[mu0]], known modulo (p^prec_p, mu0^prec_mu0)."""

    __slots__ = ()

    @property
    def prec_mu0(self) -> int:
        return self.length

    @property
    def ring(self) -> SRing:
        return s_ring(self.p, self.prec_p, self.prec_mu0)

    def __repr__(self):
        return f"SSeries({self._terms('mu0')}; p={self.p}, N={self.prec_p}, M0={self.prec_mu0})"


@dataclass(frozen=True)
class SpecialElements:
    q: AFSeries
    mu: AFSeries
    pq: AFSeries
    mu0: AFSeries
    ptilde: AFSeries


def _require_f_one(f: int):
    if f != 1:
        raise MalformedError("series arithmetic is implemented for residue degree f = 1 only")


def special_elements(p: int, f: int, prec_p: int, prec_mu: int) -> SpecialElements:
    """q, mu, [p]_q, mu0 and ptilde in A modulo (p^N, mu^M)."""
    _require_f_one(f)
    if prec_mu < p:
        raise PrecisionError(f"mu-precision must be at least p = {p}")
    ring = af_ring(p, prec_p, prec_mu)

    def wrap(arr):
        return AFSeries(p, prec_p, arr)

    q = ring.one.copy() + ring.mu
    return SpecialElements(q=wrap(q), mu=wrap(ring.mu), pq=wrap(ring.pq), mu0=wrap(ring.mu0), ptilde=wrap(ring.ptilde))


def af_constant(p: int, prec_p: int, prec_mu: int, value: int) -> AFSeries:
    coeffs = [0] * prec_mu
    coeffs[0] = value
    return AFSeries(p, prec_p, coeffs)


def s_constant(p: int, prec_p: int, prec_mu0: int, value: int) -> SSeries:
    coeffs = [0] * prec_mu0
    coeffs[0] = value
    return SSeries(p, prec_p, coeffs)


def phi(a):
    """Frobenius: mu -> (1+mu)^p - 1 on A, transported to S for SSeries inputs."""
    if isinstance(a, SSeries):
        return phi_S(a)
    return AFSeries(a.p, a.prec_p, a.ring.phi(a.coeffs))


def gamma_act(c, a: AFSeries) -> AFSeries:
    """The action of the element of Gamma with cyclotomic character c: mu -> (1+mu)^c - 1."""
    if isinstance(c, PadicScalar):
        if not c.is_unit():
            raise MalformedError("the character value must be a p-adic unit")
    elif c % a.p == 0:
        raise MalformedError("the character value must be a p-adic unit")
    ring = a.ring
    return AFSeries(a.p, a.prec_p, substitute(ring.action_matrix(c), a.coeffs, ring.modulus))


def gamma(a: AFSeries) -> AFSeries:
    """The topological generator of Gamma_0, with character 1 + p."""
    return AFSeries(a.p, a.prec_p, a.ring.gamma(a.coeffs))


def torsion_generator(a: AFSeries) -> AFSeries:
    """The generator g of the torsion subgroup, with character [omega]."""
    return AFSeries(a.p, a.prec_p, a.ring.torsion(a.coeffs))


def divide_exact(a, by: str, *, series: bool = False):
    """Exact division by one of ``"mu"``, ``"pq"``, ``"mu0"``, ``"ptilde"``.

    Dividing by mu (resp. mu0) costs 1 (resp. p - 1) coefficients of
    mu-precision.  Division by [p]_q or ptilde treats the input as an exact
    polynomial and costs p - 1 coefficients; pass ``series=True`` when the
    input is a genuinely truncated power series, in which case the quotient
    is returned only to the mu-precision it is actually determined to.
    """
    if isinstance(a, SSeries):
        return _divide_exact_s(a, by, series=series)
    ring, p, mod = a.ring, a.p, a.modulus
    coeffs = a.coeffs
    if by == "mu":
        if coeffs[0] != 0:
            raise NotDivisibleError("not divisible by mu", 0)
        return AFSeries(p, a.prec_p, coeffs[1:]) if a.length > 1 else _empty_error()
    if by == "mu0":
        step = p - 1
        if np.any(coeffs[:step]):
            raise NotDivisibleError("not divisible by mu0", _first_nonzero(coeffs[:step]))
        if a.length <= step:
            _empty_error()
        shifted = coeffs[step:]
        unit_inv = series_inverse(ring.mu0_over_mu_power[: shifted.shape[0]], mod, p)
        return AFSeries(p, a.prec_p, series_mul(shifted, unit_inv, mod))
    if by == "pq":
        return AFSeries(p, a.prec_p, ring.divide_by_pq_power(coeffs, 1, series=series))
    if by == "ptilde":
        quot = ring.divide_by_pq_power(coeffs, 1, series=series)
        w_inv = series_inverse(ring.ptilde_over_pq[: quot.shape[0]], mod, p)
        return AFSeries(p, a.prec_p, series_mul(quot, w_inv, mod))
    raise MalformedError(f"unknown divisor {by!r}")


def _empty_error():
    raise PrecisionError("division would leave no coefficients")


def _divide_exact_s(s: SSeries, by: str, *, series: bool) -> SSeries:
    if by == "mu0":
        if s.coeffs[0] != 0:
            raise NotDivisibleError("not divisible by mu0", 0)
        if s.length <= 1:
            _empty_error()
        return SSeries(s.p, s.prec_p, s.coeffs[1:])
    if by == "ptilde":
        return SSeries(s.p, s.prec_p, s.ring.divide_by_ptilde_power(s.coeffs, 1, series=series))
    raise MalformedError(f"cannot divide an S-series by {by!r}")


def invert(a):
    """Multiplicative inverse of a series whose constant term is a unit."""
    return a.invert()


def is_unit_AF(a: AFSeries) -> bool:
    """Certificate that ``a`` is a unit of the p-adically completed Laurent ring A_F.

    An element is a unit there exactly when its reduction mod p is nonzero,
    since F_p((mu)) is a field.  Only the coefficients visible at the
    working precision are inspected.
    """
    return bool(np.any(a.coeffs % a.p))


def fpx_average(a: AFSeries) -> AFSeries:
    """Projection (p-1)^{-1} sum_{j=0}^{p-2} g^j(a) onto the torsion-invariant part."""
    return AFSeries(a.p, a.prec_p, a.ring.fpx_average(a.coeffs))


def to_mu0(a: AFSeries) -> SSeries:
    """Rewrite a torsion-invariant series in powers of mu0."""
    ring = a.ring
    m0 = a.prec_mu // (a.p - 1)
    if m0 < 1:
        raise PrecisionError("mu-precision is below p - 1")
    return SSeries(a.p, a.prec_p, ring.to_mu0(a.coeffs, m0))


def from_mu0(s: SSeries) -> AFSeries:
    ring = af_ring(s.p, s.prec_p, (s.p - 1) * s.prec_mu0)
    return AFSeries(s.p, s.prec_p, ring.from_mu0(s.coeffs))


def phi_S(s: SSeries) -> SSeries:
    return SSeries(s.p, s.prec_p, s.ring.phi(s.coeffs))


def gamma0_S(s: SSeries) -> SSeries:
    return SSeries(s.p, s.prec_p, s.ring.gamma(s.coeffs))


def ptilde_over_pq(p: int, prec_p: int, prec_mu: int) -> AFSeries:
    """The unit ptilde/[p]_q at full mu-precision."""
    return AFSeries(p, prec_p, af_ring(p, prec_p, prec_mu).ptilde_over_pq)


@dataclass
class IdentityCertificates:
    """Checks relating the special elements, each with the witnessing unit."""

    pq_constant_term: bool
    ptilde_is_mu0_plus_p: bool
    mu0_leading_unit: bool
    ptilde_over_pq_unit: bool
    frobenius_unit_is_unit: bool
    frobenius_identity: bool
    mu0_over_mu_power: AFSeries
    ptilde_over_pq: AFSeries
    frobenius_unit: SSeries

    @property
    def passed(self) -> bool:
        return all(
            (
                self.pq_constant_term,
                self.ptilde_is_mu0_plus_p,
                self.mu0_leading_unit,
                self.ptilde_over_pq_unit,
                self.frobenius_unit_is_unit,
                self.frobenius_identity,
            )
        )


def identity_certificates(p: int, f: int, prec_p: int, prec_mu: int) -> IdentityCertificates:
    """[p]_q = p mod mu, ptilde = mu0 + p, mu0 = mu^{p-1} unit, ptilde = [p]_q unit, phi(mu0) = u mu0 ptilde^{p-1}."""
    _require_f_one(f)
    ring = af_ring(p, prec_p, prec_mu)
    mod = ring.modulus
    step = p - 1
    mu0_unit = ring.mu0[step:]
    pq_unit = ring.ptilde_over_pq
    product = series_mul(ring.pq, pq_unit, mod)

    m0 = prec_mu // step
    sring = s_ring(p, prec_p, m0)
    u = sring.frobenius_unit
    n = step * m0
    u_in_a = np.zeros(prec_mu, dtype=ring.dtype)
    u_in_a[:n] = ring.from_mu0(u)
    rhs = series_mul(u_in_a, ring.mu0, mod)
    for _ in range(step):
        rhs = series_mul(rhs, ring.ptilde, mod)
    lhs = ring.phi(ring.mu0)
    return IdentityCertificates(
        pq_constant_term=int(ring.pq[0]) == p % mod,
        ptilde_is_mu0_plus_p=bool(np.array_equal(ring.ptilde, (ring.mu0 + ring.one * p) % mod)),
        mu0_leading_unit=not np.any(ring.mu0[:step]) and int(mu0_unit[0]) % p != 0,
        ptilde_over_pq_unit=bool(np.array_equal(product, ring.ptilde)) and int(pq_unit[0]) % p != 0,
        frobenius_unit_is_unit=int(u[0]) % p != 0,
        frobenius_identity=bool(np.array_equal(lhs[:n], rhs[:n])),
        mu0_over_mu_power=AFSeries(p, prec_p, mu0_unit),
        ptilde_over_pq=AFSeries(p, prec_p, pq_unit),
        frobenius_unit=SSeries(p, prec_p, u),
    )
