"""Wach modules over A = Z_p[[mu]] and S = Z_p[[mu0]] as matrix data.

A module of rank d is stored by three (or two, over S) matrices of series in
the coefficient-first layout of :mod:`wachsyn.series`:

* ``phi_num`` with denominator exponent ``h``: phi(x) = D^{-h} PhiNum phi(x coords),
  where D is [p]_q over A and ptilde over S;
* ``g_gamma``: gamma(x) = Ggamma gamma(x coords);
* ``g_tor`` (A only): g(x) = Gtor g(x coords) for the torsion generator g.

Column j of each matrix is the image of the basis vector e_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedError, NotDivisibleError, PrecisionError
from .padic import check_prime
from .series import (
    AFSeries,
    SSeries,
    af_ring,
    as_coeffs,
    coeff_dtype,
    division_precision,
    poly_divmod,
    poly_power,
    s_ring,
    series_det,
    series_inverse,
    series_matinv,
    series_matmul,
    series_matvec,
    series_mul,
)

RING_A = "A"
RING_S = "S"


# --------------------------------------------------------------------------
# Module data
# --------------------------------------------------------------------------


@dataclass
class ModuleElement:
    """An element of N[1/D]: coordinates (length, d) divided by D^pq_exponent."""

    p: int
    prec_p: int
    coords: np.ndarray
    pq_exponent: int = 0

    @property
    def length(self) -> int:
        return self.coords.shape[0]


class WachModule:
    """Shared storage and operator plumbing for both base rings."""

    ring_tag = ""

    def __init__(self, p, prec_p, prec, h, phi_num, g_gamma, g_tor=None, label="", expected_galois=None, phi_degree=None):
        check_prime(p)
        if h < 0:
            raise MalformedError("the denominator exponent h must be non-negative")
        self.p, self.prec_p, self.prec, self.h = p, prec_p, prec, h
        self.modulus = p**prec_p
        dtype = coeff_dtype(self.modulus)
        mats = [phi_num, g_gamma] + ([g_tor] if g_tor is not None else [])
        d = None
        for m in mats:
            if m.ndim != 3 or m.shape[1] != m.shape[2]:
                raise MalformedError("matrices must be square series matrices")
            if m.shape[0] < prec:
                raise PrecisionError("matrix shorter than the declared precision")
            if d is None:
                d = m.shape[1]
            elif m.shape[1] != d:
                raise MalformedError("all matrices must have the same size")
        self.rank = d
        self.phi_num = (phi_num[:prec] % self.modulus).astype(dtype)
        self.g_gamma = (g_gamma[:prec] % self.modulus).astype(dtype)
        self.g_tor = None if g_tor is None else (g_tor[:prec] % self.modulus).astype(dtype)
        self.label = label
        self.expected_galois = expected_galois
        # Degree bound when phi_num is an exact polynomial; None for genuine series.
        self.phi_degree = phi_degree if phi_degree is not None and phi_degree < prec else None

    # ---- ring-specific hooks, overridden below ------------------------------

    @property
    def ring(self):
        raise NotImplementedError

    def denominator_polynomial(self) -> np.ndarray:
        raise NotImplementedError

    def phi_var_ratio_exponent(self, m: int) -> int:
        """Exponent of D in phi(var)^m / var^m (times a unit over S)."""
        raise NotImplementedError

    # ---- generic helpers --------------------------------------------------

    def identity(self, length=None) -> np.ndarray:
        length = self.prec if length is None else length
        out = np.zeros((length, self.rank, self.rank), dtype=coeff_dtype(self.modulus))
        out[0] = np.eye(self.rank, dtype=out.dtype)
        return out

    def denominator_power(self, e: int, length=None) -> np.ndarray:
        length = self.prec if length is None else length
        poly = poly_power(self.denominator_polynomial(), e, self.modulus)
        out = np.zeros(length, dtype=coeff_dtype(self.modulus))
        n = min(length, poly.shape[0])
        out[:n] = poly[:n]
        return out

    def phi_coords(self, v: np.ndarray) -> np.ndarray:
        return self.ring.phi(v)

    def gamma_coords(self, v: np.ndarray) -> np.ndarray:
        return self.ring.gamma(v)

    def apply_gamma(self, v: np.ndarray) -> np.ndarray:
        """gamma on a vector (L, d) of coordinates."""
        return series_matvec(self.g_gamma, self.gamma_coords(v), self.modulus)

    def apply_phi_numerator(self, v: np.ndarray) -> np.ndarray:
        """PhiNum phi(v); the Frobenius itself is this divided by D^h."""
        return series_matvec(self.phi_num, self.phi_coords(v), self.modulus)

    def divide_by_denominator(self, v: np.ndarray, e: int, exact: bool | None = None) -> np.ndarray:
        """Divide a numerator by D^e, exactly when phi_num is a polynomial."""
        return _divide_numerator(self, v, e, exact)

    def summary(self) -> dict:
        return {"ring": self.ring_tag, "label": self.label, "p": self.p, "prec_p": self.prec_p, "prec": self.prec, "rank": self.rank, "h": self.h}

    def __repr__(self):
        return f"{type(self).__name__}(label={self.label!r}, rank={self.rank}, h={self.h}, p={self.p}, N={self.prec_p}, prec={self.prec})"


class WachModuleA(WachModule):
    """A Wach module over A = Z_p[[mu]] with Frobenius, Gamma_0- and torsion actions."""

    ring_tag = RING_A

    def __init__(self, p, prec_p, prec_mu, h, phi_num, g_gamma, g_tor, label="", expected_galois=None, phi_degree=None):
        if g_tor is None:
            raise MalformedError("a module over A needs the torsion action matrix")
        super().__init__(p, prec_p, prec_mu, h, phi_num, g_gamma, g_tor, label, expected_galois, phi_degree)

    @property
    def prec_mu(self) -> int:
        return self.prec

    @property
    def ring(self):
        return af_ring(self.p, self.prec_p, self.prec)

    def denominator_polynomial(self) -> np.ndarray:
        return self.ring.pq_polynomial

    def apply_torsion(self, v: np.ndarray) -> np.ndarray:
        return series_matvec(self.g_tor, self.ring.torsion(v), self.modulus)

    def entry(self, which: str, i: int, j: int) -> AFSeries:
        return AFSeries(self.p, self.prec_p, getattr(self, which)[:, i, j])

    def with_precision(self, prec_p: int, prec_mu: int) -> WachModuleA:
        """Restrict to lower precision."""
        if prec_p > self.prec_p or prec_mu > self.prec:
            raise PrecisionError("cannot raise precision of stored data")
        mod = self.p**prec_p
        return WachModuleA(self.p, prec_p, prec_mu, self.h, self.phi_num[:prec_mu] % mod, self.g_gamma[:prec_mu] % mod, self.g_tor[:prec_mu] % mod, self.label, self.expected_galois, self.phi_degree)


class WachModuleS(WachModule):
    """A Wach module over S = Z_p[[mu0]] with Frobenius and Gamma_0-action."""

    ring_tag = RING_S

    def __init__(self, p, prec_p, prec_mu0, h, phi_num, g_gamma, label="", expected_galois=None, phi_degree=None):
        super().__init__(p, prec_p, prec_mu0, h, phi_num, g_gamma, None, label, expected_galois, phi_degree)

    @property
    def prec_mu0(self) -> int:
        return self.prec

    @property
    def ring(self):
        return s_ring(self.p, self.prec_p, self.prec)

    def denominator_polynomial(self) -> np.ndarray:
        return as_coeffs([self.p, 1], self.modulus)

    def entry(self, which: str, i: int, j: int) -> SSeries:
        return SSeries(self.p, self.prec_p, getattr(self, which)[:, i, j])

    def with_precision(self, prec_p: int, prec_mu0: int) -> WachModuleS:
        if prec_p > self.prec_p or prec_mu0 > self.prec:
            raise PrecisionError("cannot raise precision of stored data")
        mod = self.p**prec_p
        return WachModuleS(self.p, prec_p, prec_mu0, self.h, self.phi_num[:prec_mu0] % mod, self.g_gamma[:prec_mu0] % mod, self.label, self.expected_galois, self.phi_degree)


def division_limits(module: WachModule, length: int, e: int) -> tuple[int, int]:
    """(quotient length, remainder precision) for a truncated series divided by D^e."""
    return division_precision(module.p, module.prec_p, length, e, over_s=module.ring_tag == RING_S)


def _divide_numerator(module: WachModule, v: np.ndarray, e: int, exact: bool | None = None) -> np.ndarray:
    """v / D^e.

    With ``exact`` (the default when phi_num is a polynomial) v is taken to be
    a polynomial of degree below its length, and the quotient is returned at
    the same length.  Otherwise v is a truncated series and only the
    determined part of the quotient is kept.
    """
    if e <= 0:
        if e == 0:
            return v.copy()
        factor = module.denominator_power(-e, v.shape[0])
        return series_mul(factor, v, module.modulus)
    exact = module.phi_degree is not None if exact is None else exact
    divisor = poly_power(module.denominator_polynomial(), e, module.modulus)
    quot, rem = poly_divmod(v, divisor, module.modulus)
    if exact:
        if np.any(rem):
            raise NotDivisibleError("numerator not divisible by the denominator power")
        out = np.zeros_like(v)
        out[: quot.shape[0]] = quot
        return out
    keep, check_prec = division_limits(module, v.shape[0], e)
    if keep <= 0 or check_prec < 1:
        raise PrecisionError("not enough precision to divide by the denominator")
    check = module.p**check_prec
    if np.any(rem % check):
        raise NotDivisibleError("numerator not divisible by the denominator power")
    return quot[:keep]


def element_to_module(module: WachModule, x) -> np.ndarray:
    """Coordinates (L, d) from a ModuleElement or an array."""
    if isinstance(x, ModuleElement):
        if x.pq_exponent:
            raise MalformedError("element has a denominator")
        return x.coords
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr.reshape(-1, module.rank)
    return arr


# --------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------

AXIOM_GAMMA_TRIVIAL = "Gamma trivial mod mu"
AXIOM_TORSION_TRIVIAL = "torsion trivial mod mu"
AXIOM_DETERMINANT = "determinant is a unit times a denominator power"
AXIOM_PHI_GAMMA = "phi and gamma commute"
AXIOM_PHI_TORSION = "phi and g commute"
AXIOM_GAMMA_TORSION = "gamma and g commute"
AXIOM_TORSION_ORDER = "g has order p - 1"


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    detail: str = ""
    first_offending_coefficient: int | None = None

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "first_offending_coefficient": self.first_offending_coefficient}


@dataclass
class VerificationReport:
    label: str
    checks: list[AxiomCheck] = field(default_factory=list)
    determinant_exponent: int | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> AxiomCheck:
        return next(c for c in self.checks if c.name == name)

    def as_dict(self) -> dict:
        return {"label": self.label, "passed": self.passed, "determinant_exponent": self.determinant_exponent, "checks": [c.as_dict() for c in self.checks]}


def _first_mismatch(a: np.ndarray, b: np.ndarray) -> int | None:
    diff = np.any((a - b).reshape(a.shape[0], -1) != 0, axis=1)
    idx = np.nonzero(diff)[0]
    return int(idx[0]) if idx.size else None


def _equal_check(name: str, lhs: np.ndarray, rhs: np.ndarray, mod: int) -> AxiomCheck:
    n = min(lhs.shape[0], rhs.shape[0])
    bad = _first_mismatch(lhs[:n] % mod, rhs[:n] % mod)
    if bad is None:
        return AxiomCheck(name, True)
    return AxiomCheck(name, False, f"matrices differ at coefficient {bad}", bad)


def _trivial_mod_var_check(name: str, mat: np.ndarray) -> AxiomCheck:
    if np.array_equal(mat[0], np.eye(mat.shape[1], dtype=mat.dtype)):
        return AxiomCheck(name, True)
    return AxiomCheck(name, False, "constant matrix is not the identity", 0)


def determinant_certificate(module: WachModule) -> tuple[AxiomCheck, int | None]:
    """Find s with det(PhiNum) = unit * D^s, via v_p(det(0)) and a Weierstrass remainder."""
    det = series_det(module.phi_num, module.modulus)
    c0 = int(det[0])
    if c0 == 0:
        return AxiomCheck(AXIOM_DETERMINANT, False, "det(PhiNum) vanishes mod the variable", 0), None
    s = 0
    while c0 % module.p == 0:
        c0 //= module.p
        s += 1
    if s == 0:
        return AxiomCheck(AXIOM_DETERMINANT, True, "s = 0"), 0
    divisor = poly_power(module.denominator_polynomial(), s, module.modulus)
    if divisor.shape[0] - 1 >= det.shape[0]:
        return AxiomCheck(AXIOM_DETERMINANT, False, f"precision too small to certify s = {s}"), None
    _, rem = poly_divmod(det, divisor, module.modulus)
    if module.phi_degree is not None:
        check_prec = module.prec_p
    else:
        check_prec = division_limits(module, det.shape[0], s)[1]
        if check_prec < 1:
            return AxiomCheck(AXIOM_DETERMINANT, False, f"precision too small to certify s = {s}"), None
    rem = rem % module.p**check_prec
    if np.any(rem):
        idx = int(np.nonzero(rem)[0][0])
        return AxiomCheck(AXIOM_DETERMINANT, False, f"remainder mod D^{s} is nonzero", idx), None
    return AxiomCheck(AXIOM_DETERMINANT, True, f"s = {s} (certified mod p^{check_prec})"), s


def verify(module: WachModule) -> VerificationReport:
    """Check every Wach-module axiom that is testable at the stored precision."""
    report = VerificationReport(module.label)
    mod = module.modulus
    ring = module.ring
    report.checks.append(_trivial_mod_var_check(AXIOM_GAMMA_TRIVIAL, module.g_gamma))
    if module.ring_tag == RING_A:
        report.checks.append(_trivial_mod_var_check(AXIOM_TORSION_TRIVIAL, module.g_tor))
    det_check, s = determinant_certificate(module)
    report.checks.append(det_check)
    report.determinant_exponent = s

    denom_h = module.denominator_power(module.h)

    def commute(name, act_coords, act_matrix):
        # D^h G act(PhiNum) == act(D)^h PhiNum phi(G)
        lhs = series_mul(denom_h[:, None, None], series_matmul(act_matrix, act_coords(module.phi_num), mod), mod)
        rhs = series_mul(act_coords(denom_h)[:, None, None], series_matmul(module.phi_num, ring.phi(act_matrix), mod), mod)
        return _equal_check(name, lhs, rhs, mod)

    report.checks.append(commute(AXIOM_PHI_GAMMA, ring.gamma, module.g_gamma))
    if module.ring_tag == RING_A:
        report.checks.append(commute(AXIOM_PHI_TORSION, ring.torsion, module.g_tor))
        lhs = series_matmul(module.g_gamma, ring.gamma(module.g_tor), mod)
        rhs = series_matmul(module.g_tor, ring.torsion(module.g_gamma), mod)
        report.checks.append(_equal_check(AXIOM_GAMMA_TORSION, lhs, rhs, mod))
        report.checks.append(_equal_check(AXIOM_TORSION_ORDER, torsion_power_matrix(module, module.p - 1), module.identity(), mod))
    return report


def torsion_power_matrix(module: WachModuleA, n: int) -> np.ndarray:
    """Matrix of g^n: Gtor g(Gtor) ... g^{n-1}(Gtor)."""
    mod = module.modulus
    prod = module.identity()
    cur = module.g_tor
    for _ in range(n):
        prod = series_matmul(prod, cur, mod)
        cur = module.ring.torsion(cur)
    return prod


# --------------------------------------------------------------------------
# Catalog constructors
# --------------------------------------------------------------------------


def _scalar_matrix(series: np.ndarray) -> np.ndarray:
    return series.reshape(-1, 1, 1).copy()


def trivial(p: int = 3, prec_p: int = 8, prec_mu: int = 40) -> WachModuleA:
    """A with all operators acting through the ring."""
    ring = af_ring(p, prec_p, prec_mu)
    one = _scalar_matrix(ring.one)
    return WachModuleA(p, prec_p, prec_mu, 0, one, one.copy(), one.copy(), "trivial", {"h0_dim": 1, "h1f_dim": 1, "dcris_jumps": [0]}, phi_degree=0)


def unramified_char(u: int, p: int = 3, prec_p: int = 8, prec_mu: int = 40) -> WachModuleA:
    """Rank one with phi(e) = u e for a unit u of Z_p and trivial Gamma-action."""
    if u % p == 0:
        raise MalformedError("u must be a p-adic unit")
    ring = af_ring(p, prec_p, prec_mu)
    one = _scalar_matrix(ring.one)
    phi = one * (u % ring.modulus)
    expected = {"h0_dim": 1 if u == 1 else 0, "h1f_dim": 1 if u == 1 else 0, "dcris_jumps": [0]}
    return WachModuleA(p, prec_p, prec_mu, 0, phi, one.copy(), one.copy(), f"unramified({u})", expected, phi_degree=0)


def _twist_factor(ring, ratio: np.ndarray, chi: int, r: int) -> np.ndarray:
    """(chi mu / act(mu))^r = (chi * ratio^{-1})^r for the unit ratio = act(mu)/mu."""
    mod, p = ring.modulus, ring.p
    base = (series_inverse(ratio, mod, p) * chi) % mod if r > 0 else (ratio * pow(chi, -1, mod)) % mod
    out = ring.one.copy()
    for _ in range(abs(r)):
        out = series_mul(out, base, mod)
    return out


def tate_twist(module: WachModuleA, r: int) -> WachModuleA:
    """Twist by the r-th power of the cyclotomic character, in the basis mu^{-r} e (x) eps^r.

    The Frobenius picks up [p]_q^{-r}: a positive r raises h, a negative r
    multiplies PhiNum by [p]_q^{-r}.
    """
    ring = module.ring
    mod = module.modulus
    new_h = module.h + max(r, 0)
    phi_num = module.phi_num
    degree = module.phi_degree
    if r < 0:
        factor = module.denominator_power(-r)
        phi_num = series_mul(factor[:, None, None], phi_num, mod)
        degree = None if degree is None else degree + (module.p - 1) * (-r)
    gamma_factor = _twist_factor(ring, ring.gamma_ratio, ring.chi_gamma, r)
    tor_factor = _twist_factor(ring, ring.torsion_ratio, ring.chi_torsion.value % mod, r)
    g_gamma = series_mul(gamma_factor[:, None, None], module.g_gamma, mod)
    g_tor = series_mul(tor_factor[:, None, None], module.g_tor, mod)
    label = module.label if r == 0 else f"tate({r})" if module.label == "trivial" else f"{module.label}({r})"
    expected = _twist_expected(module.expected_galois, r)
    return WachModuleA(module.p, module.prec_p, module.prec, new_h, phi_num, g_gamma, g_tor, label, expected, degree)


def _twist_expected(expected, r):
    if expected is None or expected.get("dcris_jumps") is None:
        return None
    jumps = [j - r for j in expected["dcris_jumps"]]
    if expected.get("dcris_jumps") == [0] and expected.get("h0_dim") == 1:
        # Z_p(r): H^0 only for r = 0; H^1_f is a line exactly for r >= 0.
        return {"h0_dim": 1 if r == 0 else 0, "h1f_dim": 1 if r >= 0 else 0, "dcris_jumps": jumps}
    return {"dcris_jumps": jumps}


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    length = min(a.shape[0], b.shape[0])
    d1, d2 = a.shape[1], b.shape[1]
    out = np.zeros((length, d1 + d2, d1 + d2), dtype=a.dtype)
    out[:, :d1, :d1] = a[:length]
    out[:, d1:, d1:] = b[:length]
    return out


def _check_compatible(m1: WachModule, m2: WachModule):
    if type(m1) is not type(m2) or (m1.p, m1.prec_p, m1.prec) != (m2.p, m2.prec_p, m2.prec):
        raise PrecisionError("modules must share p, base ring and precision")


def direct_sum(m1: WachModule, m2: WachModule) -> WachModule:
    """Block-diagonal sum; the block with smaller h is rescaled by D^{difference}."""
    _check_compatible(m1, m2)
    mod = m1.modulus
    h = max(m1.h, m2.h)

    def rescaled(m):
        if m.h == h:
            return m.phi_num, m.phi_degree
        factor = m.denominator_power(h - m.h)
        step = (m.p - 1) if m.ring_tag == RING_A else 1
        deg = None if m.phi_degree is None else m.phi_degree + step * (h - m.h)
        return series_mul(factor[:, None, None], m.phi_num, mod), deg

    phi1, deg1 = rescaled(m1)
    phi2, deg2 = rescaled(m2)
    phi = _block_diag(phi1, phi2)
    degree = None if deg1 is None or deg2 is None else max(deg1, deg2)
    label = f"({m1.label} + {m2.label})"
    expected = _combine_expected(m1.expected_galois, m2.expected_galois, additive=True)
    gg = _block_diag(m1.g_gamma, m2.g_gamma)
    if isinstance(m1, WachModuleA):
        return WachModuleA(m1.p, m1.prec_p, m1.prec, h, phi, gg, _block_diag(m1.g_tor, m2.g_tor), label, expected, degree)
    return WachModuleS(m1.p, m1.prec_p, m1.prec, h, phi, gg, label, expected, degree)


def _combine_expected(e1, e2, additive: bool):
    if e1 is None or e2 is None:
        return None
    if additive and all(k in e1 and k in e2 for k in ("h0_dim", "h1f_dim")):
        return {"h0_dim": e1["h0_dim"] + e2["h0_dim"], "h1f_dim": e1["h1f_dim"] + e2["h1f_dim"], "dcris_jumps": sorted(e1["dcris_jumps"] + e2["dcris_jumps"])}
    if additive:
        return {"dcris_jumps": sorted(e1["dcris_jumps"] + e2["dcris_jumps"])}
    return {"dcris_jumps": sorted(a + b for a in e1["dcris_jumps"] for b in e2["dcris_jumps"])}


def _series_kron(a: np.ndarray, b: np.ndarray, mod: int) -> np.ndarray:
    length = min(a.shape[0], b.shape[0])
    d1, d2 = a.shape[1], b.shape[1]
    out = np.zeros((length, d1 * d2, d1 * d2), dtype=a.dtype)
    for i in range(length):
        if np.any(a[i]):
            block = np.einsum("ab,mcd->macbd", a[i], b[: length - i]).reshape(length - i, d1 * d2, d1 * d2)
            out[i:] = (out[i:] + block) % mod
    return out


def tensor(m1: WachModule, m2: WachModule) -> WachModule:
    """Tensor product: Kronecker products of all matrices, denominators add."""
    _check_compatible(m1, m2)
    mod = m1.modulus
    phi = _series_kron(m1.phi_num, m2.phi_num, mod)
    gg = _series_kron(m1.g_gamma, m2.g_gamma, mod)
    degree = None if m1.phi_degree is None or m2.phi_degree is None else m1.phi_degree + m2.phi_degree
    label = f"({m1.label} x {m2.label})"
    expected = _combine_expected(m1.expected_galois, m2.expected_galois, additive=False)
    if isinstance(m1, WachModuleA):
        gt = _series_kron(m1.g_tor, m2.g_tor, mod)
        return WachModuleA(m1.p, m1.prec_p, m1.prec, m1.h + m2.h, phi, gg, gt, label, expected, degree)
    return WachModuleS(m1.p, m1.prec_p, m1.prec, m1.h + m2.h, phi, gg, label, expected, degree)


# --------------------------------------------------------------------------
# Extensions
# --------------------------------------------------------------------------


def is_torsion_invariant(module: WachModuleA, v: np.ndarray) -> bool:
    n = v.shape[0]
    return bool(np.all(module.apply_torsion(v)[:n] % module.modulus == v[:n] % module.modulus))


def extension_from_cocycle(module: WachModuleA, x, y, *, check: bool = True, label: str | None = None) -> WachModuleA:
    """The extension E = N + A e with gamma(e) = mu x + e, phi(e) = e - y and g(e) = e.

    With this sign, reading the extension back gives nabla_q(e) = x and
    (1 - phi)(e) = y, the same pair.  The torsion generator fixes e, so both
    mu x and y must be torsion-invariant.
    """
    from .nygaard import is_in_filtration
    from .syntomic import is_cocycle

    x = element_to_module(module, x)
    y = element_to_module(module, y)
    length = min(module.prec, x.shape[0] + 1, y.shape[0])
    if length < 2:
        raise PrecisionError("cocycle components are too short")
    if length < module.prec:
        module = module.with_precision(module.prec_p, length)
    mod, d = module.modulus, module.rank
    x = x[: length - 1]
    y = y[:length]
    mu_x = np.zeros((length, d), dtype=x.dtype)
    mu_x[1:] = x
    if check:
        if not is_cocycle(module, x, y):
            raise MalformedError("not a cocycle: (1 - [p]_q phi) x != nabla_q(y)")
        if not is_in_filtration(module, x, -1):
            raise MalformedError("x is not in Fil^-1")
        if not (is_torsion_invariant(module, mu_x) and is_torsion_invariant(module, y)):
            raise MalformedError("cocycle is not invariant under the torsion subgroup")
    dtype = module.phi_num.dtype
    size = d + 1
    g_gamma = np.zeros((length, size, size), dtype=dtype)
    g_gamma[:, :d, :d] = module.g_gamma
    g_gamma[:, :d, d] = mu_x
    g_gamma[0, d, d] = 1
    denom_h = module.denominator_power(module.h)
    phi = np.zeros((length, size, size), dtype=dtype)
    phi[:, :d, :d] = module.phi_num
    phi[:, :d, d] = (-series_mul(denom_h[:, None], y, mod)) % mod
    phi[:, d, d] = denom_h
    g_tor = np.zeros((length, size, size), dtype=dtype)
    g_tor[:, :d, :d] = module.g_tor
    g_tor[0, d, d] = 1
    degree = None
    if not np.any(y) and module.phi_degree is not None:
        degree = max(module.phi_degree, (module.p - 1) * module.h)
    name = label or f"ext({module.label})"
    return WachModuleA(module.p, module.prec_p, length, module.h, phi, g_gamma, g_tor, name, None, degree)


# --------------------------------------------------------------------------
# Descent to S and ascent back to A
# --------------------------------------------------------------------------


def averaging_matrix(module: WachModuleA) -> np.ndarray:
    """Columns e0(e_i) = (p-1)^{-1} sum_j g^j(e_i) in the standard basis."""
    mod = module.modulus
    total = np.zeros_like(module.phi_num)
    prod = module.identity()
    cur = module.g_tor
    for _ in range(module.p - 1):
        total = (total + prod) % mod
        prod = series_matmul(prod, cur, mod)
        cur = module.ring.torsion(cur)
    return (total * pow(module.p - 1, -1, mod)) % mod


def transport(module: WachModuleA, basis: np.ndarray) -> dict:
    """Matrices of the operators in a new basis B (columns): B^{-1} M act(B)."""
    mod, ring = module.modulus, module.ring
    inv = series_matinv(basis, mod, module.p)
    return {
        "phi_num": series_matmul(inv, series_matmul(module.phi_num, ring.phi(basis), mod), mod),
        "g_gamma": series_matmul(inv, series_matmul(module.g_gamma, ring.gamma(basis), mod), mod),
        "g_tor": series_matmul(inv, series_matmul(module.g_tor, ring.torsion(basis), mod), mod),
    }


def descend(module: WachModuleA) -> WachModuleS:
    """The torsion-invariant sub-module, in the basis e0(e_i), written over S."""
    if module.prec < module.p - 1:
        raise PrecisionError("mu-precision is below p - 1")
    ring, mod = module.ring, module.modulus
    basis = averaging_matrix(module)
    mats = transport(module, basis)
    if not np.array_equal(mats["g_tor"] % mod, module.identity() % mod):
        from .errors import NotInvariantError

        raise NotInvariantError("averaged basis is not torsion-invariant; the input violates an axiom")
    # [p]_q^{-h} = (ptilde/[p]_q)^h ptilde^{-h}
    unit = ring.one.copy()
    for _ in range(module.h):
        unit = series_mul(unit, ring.ptilde_over_pq, mod)
    phi_s = ring.to_mu0(series_mul(unit[:, None, None], mats["phi_num"], mod))
    gamma_s = ring.to_mu0(mats["g_gamma"])
    label = f"descend({module.label})"
    return WachModuleS(module.p, module.prec_p, phi_s.shape[0], module.h, phi_s, gamma_s, label, module.expected_galois)


def ascend(module: WachModuleS) -> WachModuleA:
    """A tensor_S M: matrices through mu0 -> mu0(mu), torsion acting through the ring only."""
    p, mod = module.p, module.modulus
    prec_mu = (p - 1) * module.prec
    ring = af_ring(p, module.prec_p, prec_mu)
    phi = ring.from_mu0(module.phi_num)
    unit_inv = series_inverse(ring.ptilde_over_pq, mod, p)
    factor = ring.one.copy()
    for _ in range(module.h):
        factor = series_mul(factor, unit_inv, mod)
    phi = series_mul(factor[:, None, None], phi, mod)
    gamma = ring.from_mu0(module.g_gamma)
    ident = np.zeros_like(phi)
    ident[0] = np.eye(module.rank, dtype=phi.dtype)
    label = module.label[len("descend(") : -1] if module.label.startswith("descend(") else f"ascend({module.label})"
    return WachModuleA(p, module.prec_p, prec_mu, module.h, phi, gamma, ident, label, module.expected_galois)


@dataclass
class BaseChangeReport:
    congruent_to_identity: bool
    invertible: bool
    matrices_agree: bool
    first_mismatch: int | None = None

    @property
    def passed(self) -> bool:
        return self.congruent_to_identity and self.invertible and self.matrices_agree

    def as_dict(self) -> dict:
        return {"congruent_to_identity": self.congruent_to_identity, "invertible": self.invertible, "matrices_agree": self.matrices_agree, "first_mismatch": self.first_mismatch, "passed": self.passed}


def check_base_change(source: WachModuleA, target: WachModuleA, basis: np.ndarray) -> BaseChangeReport:
    """Does the basis B of ``source`` carry its operators to those of ``target``?"""
    length = min(source.prec, target.prec, basis.shape[0])
    src = source.with_precision(source.prec_p, length) if length < source.prec else source
    basis = basis[:length]
    mod = src.modulus
    ident = np.eye(src.rank, dtype=basis.dtype)
    congruent = bool(np.array_equal(basis[0] % mod, ident))
    try:
        mats = transport(src, basis)
        invertible = True
    except ArithmeticError:
        return BaseChangeReport(congruent, False, False)
    if source.h != target.h:
        return BaseChangeReport(congruent, invertible, False)
    first = None
    for key in ("phi_num", "g_gamma", "g_tor"):
        bad = _first_mismatch(mats[key][:length] % mod, getattr(target, key)[:length] % mod)
        if bad is not None:
            first = bad if first is None else min(first, bad)
    return BaseChangeReport(congruent, invertible, first is None, first)


def descent_round_trip(module: WachModuleA) -> BaseChangeReport:
    """ascend(descend(N)) compared with N through the averaging basis."""
    back = ascend(descend(module))
    return check_base_change(module, back, averaging_matrix(module))


def determinant_exponent(module: WachModule) -> int | None:
    return determinant_certificate(module)[1]


def hodge_bounds(module: WachModule) -> tuple[int, int]:
    """Range [-h, s - h] that contains every filtration jump."""
    s = determinant_exponent(module)
    s = module.rank * module.h if s is None else s
    return -module.h, max(s - module.h, -module.h)
