"""Syntomic complexes of Wach modules, their truncated cohomology and comparisons.

Over A the complex is

    Fil^0 N --(nabla_q, 1 - phi)--> Fil^-1 N + N --(1 - [p]_q phi, -nabla_q)--> N

and over S it is the same with mu0, nabla_0 = (gamma - 1)/mu0 and Fil^{-(p-1)}.
The second differential over S uses (phi(mu0)/mu0) phi, which equals
ptilde^{p-1} phi exactly when p = 3 and differs from it by the unit
u = phi(mu0)/(mu0 ptilde^{p-1}) in general; only this choice makes d1 d0 = 0.

Terms are truncated at variable-adic levels (L, L - 1, L - 2) so that every
map is well defined, and flattened to finite free Z/p^N-modules.  A filtered
term Fil^k / var^L has basis K_k (polynomials of degree < c) followed by
var^m e_i for c <= m < L; see :mod:`wachsyn.nygaard`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedError, NotDivisibleError, PrecisionError, WachsynError
from .linalg import (
    DEFAULT_GUARD,
    CohomologyReport,
    RingMatrix,
    complex_cohomology,
    matrix_rank,
    middle_cohomology_generators,
    smith_normal_form,
    solve,
)
from .nygaard import FiltrationBasis, FilteredPhiModule, cutoff, dcris, fil_basis, fil_intersection_check, is_in_filtration
from .series import af_ring, coeff_dtype, s_ring, series_matmul, series_mul
from .wach import (
    RING_A,
    RING_S,
    WachModule,
    WachModuleA,
    WachModuleS,
    ascend,
    division_limits,
    element_to_module,
    tate_twist,
)

# --------------------------------------------------------------------------
# Operators on coordinate arrays
# --------------------------------------------------------------------------


def _nabla_batch(module: WachModule, X: np.ndarray) -> np.ndarray:
    """(gamma - 1)/var on an array (L, d) or (L, d, n); the result is one shorter."""
    mod = module.modulus
    gx = module.gamma_coords(X)
    g = module.g_gamma[: X.shape[0]]
    img = series_matmul(g, gx if gx.ndim == 3 else gx[:, :, None], mod)
    if X.ndim == 2:
        img = img[:, :, 0]
    img = (img - X) % mod
    if np.any(img[0]):
        raise NotDivisibleError("(gamma - 1) v is not divisible by the variable; an axiom fails", 0)
    return img[1:]


def nabla_q(module: WachModuleA, v) -> np.ndarray:
    """(gamma - 1)/mu, losing one coefficient of mu-precision."""
    return _nabla_batch(module, element_to_module(module, v))


def nabla_0(module: WachModuleS, v) -> np.ndarray:
    """(gamma - 1)/mu0, losing one coefficient of mu0-precision."""
    return _nabla_batch(module, element_to_module(module, v))


def _frobenius_unit_power(module: WachModule, n: int, length: int) -> np.ndarray:
    ring = s_ring(module.p, module.prec_p, module.prec)
    u = ring.frobenius_unit
    out = ring.one.copy()
    for _ in range(n):
        out = series_mul(out, u, module.modulus)
    return out[:length]


def _rho_exponent(module: WachModule, n: int) -> int:
    """Exponent of D in rho^n D^{-h}, where rho = phi(var)/var (times u^n over S)."""
    step = 1 if module.ring_tag == RING_A else module.p - 1
    return step * n - module.h


def _frob_factor(module: WachModule, n: int, length: int) -> np.ndarray:
    """rho^n D^{-h} as a series, for n large enough that it is integral."""
    e = _rho_exponent(module, n)
    if e < 0:
        raise PrecisionError("negative denominator exponent in a monomial Frobenius image")
    out = module.denominator_power(e, length)
    if module.ring_tag == RING_S and n:
        out = series_mul(out, _frobenius_unit_power(module, n, length), module.modulus)
    return out


def frobenius_twisted(module: WachModule, X: np.ndarray, j: int, length: int) -> np.ndarray:
    """rho^j phi(X) for X in Fil^{-j step}, at least ``length`` coefficients.

    j = 0 gives phi itself; j = 1 gives [p]_q phi over A and (phi(mu0)/mu0) phi
    over S.  Monomials var^m with m at or above the Fil cutoff have integral
    closed-form images; the polynomial below the cutoff is divided by the
    denominator, exactly when PhiNum is a polynomial.
    """
    mod = module.modulus
    step = 1 if module.ring_tag == RING_A else module.p - 1
    c = min(cutoff(module, -j * step), module.prec)
    n = min(module.prec, X.shape[0])
    low = np.zeros((module.prec,) + X.shape[1:], dtype=coeff_dtype(mod))
    low[: min(c, n)] = X[: min(c, n)] % mod
    phx = module.phi_coords(low)
    if X.ndim == 2:
        num = series_matmul(module.phi_num, phx[:, :, None], mod)[:, :, 0]
    else:
        num = series_matmul(module.phi_num, phx, mod)
    exact = module.phi_degree is not None and module.phi_degree + module.p * max(c - 1, 0) < module.prec
    out = module.divide_by_denominator(num, -_rho_exponent(module, j), exact)
    if module.ring_tag == RING_S and j:
        out = series_mul(_frobenius_unit_power(module, j, out.shape[0]), out, mod)
    if out.shape[0] < length:
        raise PrecisionError(f"Frobenius image known to {out.shape[0]} coefficients, {length} needed")
    out = out[:length].copy()
    tail = (1,) * (X.ndim - 1)
    for m in range(c, min(n, length)):
        xm = X[m] % mod
        if not np.any(xm):
            continue
        factor = _frob_factor(module, m + j, length - m)
        vec = (module.phi_num[: length - m].astype(object) @ xm.astype(object)) % mod
        out[m:] = (out[m:] + series_mul(factor.reshape((-1,) + tail), vec.astype(out.dtype), mod)) % mod
    return out


def _frob_monomials(module: WachModule, c: int, level: int, j: int, length: int) -> np.ndarray:
    """rho^j phi(var^m e_i) for c <= m < level, as (length, d, (level - c) d), exactly."""
    d, mod = module.rank, module.modulus
    out = np.zeros((length, d, max(level - c, 0) * d), dtype=coeff_dtype(mod))
    for m in range(c, min(level, length)):
        factor = _frob_factor(module, m + j, length - m)
        block = series_mul(factor[:, None, None], module.phi_num[: length - m], mod)
        out[m:, :, (m - c) * d : (m - c + 1) * d] = block
    return out


# --------------------------------------------------------------------------
# Truncated terms
# --------------------------------------------------------------------------


@dataclass
class TruncatedTerm:
    """Fil^k / var^level (or N / var^level when ``fil`` is None) with its standard basis."""

    module: WachModule
    level: int
    fil: FiltrationBasis | None = None

    def __post_init__(self):
        if self.cutoff > self.level:
            raise PrecisionError(f"truncation level {self.level} is below the filtration cutoff {self.cutoff}")

    @property
    def cutoff(self) -> int:
        return 0 if self.fil is None else self.fil.cutoff

    @property
    def kernel_rank(self) -> int:
        return 0 if self.fil is None else self.fil.kernel_rank

    @property
    def size(self) -> int:
        return self.kernel_rank + (self.level - self.cutoff) * self.module.rank

    def basis_array(self) -> np.ndarray:
        d = self.module.rank
        out = np.zeros((self.level, d, self.size), dtype=coeff_dtype(self.module.modulus))
        r, c = self.kernel_rank, self.cutoff
        if r:
            out[:, :, :r] = self.fil.kernel_polynomials(self.level)
        for m in range(c, self.level):
            for i in range(d):
                out[m, i, r + (m - c) * d + i] = 1
        return out

    def frobenius_images(self, j: int, length: int) -> np.ndarray:
        r = self.kernel_rank
        parts = []
        if r:
            parts.append(frobenius_twisted(self.module, self.fil.kernel_polynomials(self.module.prec), j, length))
        parts.append(_frob_monomials(self.module, self.cutoff, self.level, j, length))
        return np.concatenate(parts, axis=2)

    def coords(self, X: np.ndarray) -> np.ndarray:
        """Coordinates (size, n) of columns of X (at least ``level`` long, shape (L, d, n))."""
        mod = self.module.modulus
        squeeze = X.ndim == 2
        if squeeze:
            X = X[:, :, None]
        if X.shape[0] < self.level:
            raise PrecisionError("array shorter than the truncation level")
        n = X.shape[2]
        c, d = self.cutoff, self.module.rank
        head = X[:c].reshape(c * d, n).astype(object) % mod
        parts = []
        if c:
            kcoords = (self.fil.coordinates.astype(object) @ head) % mod
            back = (self.fil.kernel.astype(object) @ kcoords) % mod
            if np.any(back != head):
                raise MalformedError(f"element is not in Fil^{self.fil.k} at the working precision")
            parts.append(kcoords)
        parts.append(X[c : self.level].reshape((self.level - c) * d, n).astype(object) % mod)
        out = np.concatenate(parts, axis=0).astype(coeff_dtype(mod))
        return out[:, 0] if squeeze else out

    def vector(self, coords: np.ndarray) -> np.ndarray:
        """The (level, d) array with the given coordinates."""
        basis = self.basis_array().astype(object)
        return (np.tensordot(basis, np.asarray(coords, dtype=object), axes=([2], [0])) % self.module.modulus).astype(coeff_dtype(self.module.modulus))


@dataclass
class ComplexPresentation:
    """T0 -d0-> T1 -d1-> T2 over Z/p^N with T1 = (filtered part) + (plain part)."""

    module: WachModule
    level: int
    t0: TruncatedTerm
    t1x: TruncatedTerm
    t1y: TruncatedTerm
    t2: TruncatedTerm
    d0: np.ndarray
    d1: np.ndarray

    @property
    def p(self) -> int:
        return self.module.p

    @property
    def prec_p(self) -> int:
        return self.module.prec_p

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.t0.size, self.t1x.size + self.t1y.size, self.t2.size

    @property
    def d0_matrix(self) -> RingMatrix:
        return RingMatrix(self.p, self.prec_p, self.d0)

    @property
    def d1_matrix(self) -> RingMatrix:
        return RingMatrix(self.p, self.prec_p, self.d1)

    def t1_coords(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.concatenate([self.t1x.coords(x), self.t1y.coords(y)])

    def t1_split(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.t1x.size
        return self.t1x.vector(coords[:n]), self.t1y.vector(coords[n:])

    def summary(self) -> dict:
        return {"ring": self.module.ring_tag, "level": self.level, "dims": list(self.dims)}


def default_level(module: WachModule) -> int:
    """Largest truncation level at which all Frobenius images are determined."""
    level = module.prec
    if module.phi_degree is not None:
        return level
    step = 1 if module.ring_tag == RING_A else module.p - 1
    for j, lag, k in ((0, 1, 0), (1, 2, -step)):
        e = -_rho_exponent(module, j)
        if e > 0 and fil_basis(module, k).kernel_rank:
            keep = division_limits(module, module.prec, e)[0]
            level = min(level, keep + lag)
    return level


def _build(module: WachModule, level: int | None) -> ComplexPresentation:
    step = 1 if module.ring_tag == RING_A else module.p - 1
    level = default_level(module) if level is None else level
    if level < 3:
        raise PrecisionError("truncation level must be at least 3")
    if level > module.prec:
        raise PrecisionError("truncation level exceeds the module precision")
    mod = module.modulus
    f0, f1 = fil_basis(module, 0), fil_basis(module, -step)
    for f in (f0, f1):
        if f.cutoff and f.prec_p_effective < module.prec_p:
            raise PrecisionError(f"Fil^{f.k} is only certified mod p^{f.prec_p_effective}; raise the variable precision")
    t0 = TruncatedTerm(module, level, f0)
    t1x = TruncatedTerm(module, level - 1, f1)
    t1y = TruncatedTerm(module, level - 1)
    t2 = TruncatedTerm(module, level - 2)

    b0 = t0.basis_array()
    nab0 = _nabla_batch(module, b0)
    one_minus_phi = (b0[: level - 1] - t0.frobenius_images(0, level - 1)) % mod
    d0 = np.concatenate([t1x.coords(nab0), t1y.coords(one_minus_phi)], axis=0)

    b1x = t1x.basis_array()
    top = (b1x[: level - 2] - t1x.frobenius_images(1, level - 2)) % mod
    bot = (-_nabla_batch(module, t1y.basis_array())[: level - 2]) % mod
    d1 = np.concatenate([t2.coords(top), t2.coords(bot)], axis=1)

    composite = (d1.astype(object) @ d0.astype(object)) % mod
    if np.any(composite):
        raise WachsynError("d1 d0 != 0: the module data violate the phi-gamma commutation")
    return ComplexPresentation(module, level, t0, t1x, t1y, t2, d0, d1)


def build_syntomic_A(module: WachModuleA, level: int | None = None) -> ComplexPresentation:
    """The syntomic complex of a Wach module over A, truncated at (L, L - 1, L - 2)."""
    if module.ring_tag != RING_A:
        raise MalformedError("expected a module over A")
    return _build(module, level)


def build_syntomic_S(module: WachModuleS, level: int | None = None) -> ComplexPresentation:
    """The syntomic complex of a Wach module over S, truncated at (L0, L0 - 1, L0 - 2)."""
    if module.ring_tag != RING_S:
        raise MalformedError("expected a module over S")
    return _build(module, level)


def build_syntomic(module: WachModule, level: int | None = None) -> ComplexPresentation:
    return _build(module, level)


# --------------------------------------------------------------------------
# Bloch-Kato complex
# --------------------------------------------------------------------------


@dataclass
class BlochKatoComplex:
    """Fil^0 D --(1 - phi)--> D, scaled by p^h to clear the Frobenius denominator."""

    p: int
    prec_p: int
    d0: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.d0.shape[1], self.d0.shape[0]


def build_bk(D: FilteredPhiModule) -> BlochKatoComplex:
    mod = D.p**D.prec_p
    scaled = (D.p**D.phi_denominator * np.eye(D.dim, dtype=object) - D.phi_numerator.astype(object)) % mod
    d0 = (scaled @ D.fil0.astype(object)) % mod if D.fil0.shape[1] else np.zeros((D.dim, 0), dtype=object)
    return BlochKatoComplex(D.p, D.prec_p, d0.astype(coeff_dtype(mod)))


def cohomology(C, guard: int = DEFAULT_GUARD) -> CohomologyReport:
    """Elementary divisors and rationalized ranks of each cohomology group."""
    if isinstance(C, BlochKatoComplex):
        return complex_cohomology(C.d0, None, C.p, C.prec_p, guard)
    return complex_cohomology(C.d0, C.d1, C.p, C.prec_p, guard, prec_mu=C.level)


def h0_direct(module: WachModule, level: int | None = None, guard: int = DEFAULT_GUARD):
    """Rank of {x in Fil^0 : nabla x = 0, phi x = x}, assembled apart from the complex.

    The conditions are imposed on raw coefficients rather than on filtered
    coordinates.  Restricting to Fil^0 matters: on all of N the truncated
    equation PhiNum phi(x) = D^h x acquires spurious solutions near the
    truncation, because multiplication by D has elementary divisors of size
    about p^{L/(p-1)} modulo var^L.
    """
    level = default_level(module) if level is None else level
    d = module.rank
    term = TruncatedTerm(module, level, fil_basis(module, 0))
    basis = term.basis_array()
    nab = _nabla_batch(module, basis)
    fixed = (basis[: level - 1] - term.frobenius_images(0, level - 1)) % module.modulus
    rows = np.concatenate([nab.reshape((level - 1) * d, -1), fixed.reshape((level - 1) * d, -1)], axis=0)
    report = complex_cohomology(rows, None, module.p, module.prec_p, guard, prec_mu=level)
    return report[0]


# --------------------------------------------------------------------------
# Cocycles and extensions
# --------------------------------------------------------------------------


@dataclass
class Cocycle:
    """A pair (x, y) with x in Fil^-1 and (1 - [p]_q phi) x = nabla(y)."""

    x: np.ndarray
    y: np.ndarray

    def __add__(self, other: Cocycle) -> Cocycle:
        return cocycle_sum(self, other)

    def as_dict(self) -> dict:
        return {"x": [[str(int(a)) for a in row] for row in self.x], "y": [[str(int(a)) for a in row] for row in self.y]}


def cocycle_sum(c1: Cocycle, c2: Cocycle, modulus: int | None = None) -> Cocycle:
    """Componentwise sum, which realizes the Baer sum of the extensions."""
    nx = min(c1.x.shape[0], c2.x.shape[0])
    ny = min(c1.y.shape[0], c2.y.shape[0])
    x = c1.x[:nx] + c2.x[:nx]
    y = c1.y[:ny] + c2.y[:ny]
    if modulus is not None:
        x, y = x % modulus, y % modulus
    return Cocycle(x, y)


def is_cocycle(module: WachModule, x, y) -> bool:
    """(1 - rho phi) x == nabla(y) on every coefficient determined by both sides."""
    x = element_to_module(module, x)
    y = element_to_module(module, y)
    n = min(x.shape[0], y.shape[0] - 1)
    if n < 1:
        raise PrecisionError("cocycle components are too short")
    mod = module.modulus
    try:
        lhs = (x[:n] - frobenius_twisted(module, x[:n], 1, n)) % mod
    except NotDivisibleError:
        return False
    rhs = _nabla_batch(module, y[: n + 1])
    return bool(np.array_equal(lhs, rhs % mod))


def invariant_part(module: WachModuleA, cocycle: Cocycle) -> Cocycle:
    """Project a cocycle onto the torsion-invariant part via e0.

    In the coordinates (mu x, y) the relation reads (1 - phi)(mu x) = (gamma - 1) y,
    which commutes with the torsion action, so the averaged pair is again a
    cocycle and represents the same rational class.
    """
    mod = module.modulus
    mu_x = np.zeros((cocycle.x.shape[0] + 1, module.rank), dtype=cocycle.x.dtype)
    mu_x[1:] = cocycle.x

    def average(v):
        total = v % mod
        cur = v
        for _ in range(module.p - 2):
            cur = module.apply_torsion(cur)
            total = (total + cur) % mod
        return (total * pow(module.p - 1, -1, mod)) % mod

    ax = average(mu_x)
    if np.any(ax[0]):
        raise NotDivisibleError("averaged mu x is not divisible by mu", 0)
    return Cocycle(ax[1:], average(cocycle.y))


def submodule(module: WachModuleA, d: int) -> WachModuleA:
    """The span of the first d basis vectors, assumed stable."""
    return WachModuleA(module.p, module.prec_p, module.prec, module.h, module.phi_num[:, :d, :d], module.g_gamma[:, :d, :d], module.g_tor[:, :d, :d], module.label, None, module.phi_degree)


def cocycle_from_extension(ext: WachModuleA, sub_rank: int | None = None) -> tuple[WachModuleA, Cocycle]:
    """Read (x, y) = (nabla_q e, (1 - phi) e) off an extension of A by its first sub_rank vectors."""
    d = ext.rank - 1 if sub_rank is None else sub_rank
    if d != ext.rank - 1:
        raise MalformedError("the quotient must have rank one")
    mod = ext.modulus
    one = np.zeros(ext.prec, dtype=ext.g_gamma.dtype)
    one[0] = 1
    denom_h = ext.denominator_power(ext.h)
    for name, mat in (("gamma", ext.g_gamma), ("phi", ext.phi_num), ("g", ext.g_tor)):
        if np.any(mat[:, d, :d] % mod):
            raise MalformedError(f"the sub-module is not stable under {name}")
    if not (np.array_equal(ext.g_gamma[:, d, d] % mod, one) and np.array_equal(ext.g_tor[:, d, d] % mod, one)):
        raise MalformedError("the quotient is not the trivial module")
    if not np.array_equal(ext.phi_num[:, d, d] % mod, denom_h % mod):
        raise MalformedError("the quotient is not the trivial module")
    col = ext.g_gamma[:, :d, d] % mod
    if np.any(col[0]):
        raise MalformedError("gamma(e) - e is not divisible by mu")
    x = col[1:]
    y = (-ext.divide_by_denominator(ext.phi_num[:, :d, d] % mod, ext.h)) % mod
    return submodule(ext, d), Cocycle(x, y)


def _coboundary_solution(C: ComplexPresentation, coords: np.ndarray):
    return solve(C.d0, coords, C.p, C.prec_p)


def cocycle_coords(C: ComplexPresentation, cocycle: Cocycle) -> np.ndarray:
    lx, ly = C.t1x.level, C.t1y.level
    if cocycle.x.shape[0] < lx or cocycle.y.shape[0] < ly:
        raise PrecisionError("cocycle is shorter than the complex truncation")
    return C.t1_coords(cocycle.x[:lx], cocycle.y[:ly])


def is_coboundary(C: ComplexPresentation, cocycle: Cocycle) -> bool:
    return _coboundary_solution(C, cocycle_coords(C, cocycle)) is not None


def class_order(C: ComplexPresentation, cocycle: Cocycle) -> int:
    """Smallest j with p^j (x, y) a coboundary; N means the class is p-adically free at this precision."""
    coords = cocycle_coords(C, cocycle)
    for j in range(C.prec_p + 1):
        if j == C.prec_p or _coboundary_solution(C, (coords.astype(object) * C.p**j) % C.module.modulus) is not None:
            return j
    return C.prec_p


def cohomologous(C: ComplexPresentation, c1: Cocycle, c2: Cocycle) -> bool:
    mod = C.module.modulus
    neg = Cocycle((-c2.x) % mod, (-c2.y) % mod)
    return is_coboundary(C, cocycle_sum(c1, neg, mod))


def h1_representatives(C: ComplexPresentation, guard: int = DEFAULT_GUARD) -> list[Cocycle]:
    """Cocycles spanning the rational part of H^1."""
    snf1 = smith_normal_form(C.d1, C.p, C.prec_p)
    gens = middle_cohomology_generators(C.d0, snf1, C.prec_p - guard)
    return [Cocycle(*C.t1_split(g)) for g in gens]


# --------------------------------------------------------------------------
# Neumann inverse and the splitting of H^2 classes
# --------------------------------------------------------------------------


def _pq_phi(module: WachModuleA, v: np.ndarray) -> np.ndarray:
    return frobenius_twisted(module, v, 1, v.shape[0])


def neumann_inverse(module: WachModuleA, y) -> np.ndarray:
    """z = sum_n ([p]_q phi)^n y, so that (1 - [p]_q phi) z = y.

    Needs phi(N) inside N (h = 0).  Each application of [p]_q phi raises the
    (p, mu)-adic order by one, so the sum stops after at most N + M terms.
    """
    if module.h != 0:
        raise MalformedError("the Neumann series needs an effective module (h = 0)")
    y = element_to_module(module, y) % module.modulus
    mod = module.modulus
    total = np.zeros_like(y)
    term = y.copy()
    for _ in range(module.prec_p + y.shape[0] + 1):
        if not np.any(term):
            return total
        total = (total + term) % mod
        term = _pq_phi(module, term)
    raise PrecisionError("Neumann series did not terminate")


@dataclass
class H2Splitting:
    """p^scale X = nabla_q(y) - (1 - [p]_q phi) z in the twisted module, mod p^N.

    Dividing by p^scale, the identity for X itself holds mod p^{N - scale}.
    """

    twisted: WachModuleA
    target: np.ndarray
    y: np.ndarray
    z: np.ndarray
    scale: int

    @property
    def surviving_precision(self) -> int:
        return self.twisted.prec_p - self.scale

    def residual(self) -> np.ndarray:
        mod = self.twisted.modulus
        n = min(self.y.shape[0] - 1, self.z.shape[0], self.target.shape[0])
        rhs = (_nabla_batch(self.twisted, self.y[: n + 1]) - (self.z[:n] - _pq_phi(self.twisted, self.z[:n]))) % mod
        return (self.target[:n] * self.twisted.p**self.scale - rhs) % mod

    def holds(self) -> bool:
        return not np.any(self.residual())

    def z_in_fil_minus_one(self) -> bool:
        return is_in_filtration(self.twisted, self.z, -1)


def _shift(v: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(v)
    if k < v.shape[0]:
        out[k:] = v[: v.shape[0] - k]
    return out


def split_h2_class(base: WachModuleA, r: int, x, k: int) -> H2Splitting:
    """Write x/mu^k (x) eps^r as nabla_q(y) - (1 - [p]_q phi) z in tate_twist(base, r).

    Coordinates are in the twisted basis mu^{-r} e (x) eps^r, where x/mu^k (x) eps^r
    is mu^{r-k} x.  Each step divides by chi(gamma)^j - 1; instead of dividing,
    the p-part is collected in ``scale``.
    """
    if base.h != 0:
        raise MalformedError("the base module must be effective (h = 0)")
    if r < 1 or not 0 <= k <= r:
        raise MalformedError("need r >= 1 and 0 <= k <= r")
    x = element_to_module(base, x) % base.modulus
    twisted = tate_twist(base, r)
    mod, p = base.modulus, base.p
    chi = twisted.ring.chi_gamma

    def step(level: int, target: np.ndarray):
        if level == 0:
            if np.any(target[:r]):
                raise NotDivisibleError("base-case element is not divisible by mu^r", 0)
            z0 = neumann_inverse(base.with_precision(base.prec_p, target.shape[0] - r), target[r:])
            z = (-_shift(np.concatenate([z0, np.zeros((r,) + z0.shape[1:], dtype=z0.dtype)]), r)) % mod
            return np.zeros_like(target), z, 0
        c = pow(chi, r - level + 1) - 1
        v = 0
        while c % p == 0:
            c //= p
            v += 1
        big_y = (_shift(target, 1) * pow(c, -1, mod)) % mod
        rest = (_nabla_batch(twisted, big_y) - target[:-1] * p**v) % mod
        y1, z1, s1 = step(level - 1, rest)
        n = y1.shape[0]
        y = (big_y[:n] * p**s1 - y1) % mod
        return y, (-z1) % mod, v + s1

    target = _shift(x, r - k)
    y, z, scale = step(k, target)
    if scale >= base.prec_p:
        raise PrecisionError("the p-adic losses exhaust the precision")
    return H2Splitting(twisted, target, y, z, scale)


# --------------------------------------------------------------------------
# Comparisons
# --------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    name: str
    checks: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": {k: bool(v) for k, v in self.checks.items()}, "ranks": self.ranks}


def compare_A_to_BK(module: WachModuleA, level: int | None = None, guard: int = DEFAULT_GUARD) -> ComparisonReport:
    """Syntomic cohomology over A against the Bloch-Kato complex of D_cris."""
    C = build_syntomic_A(module, level)
    syn = cohomology(C, guard)
    bk = cohomology(build_bk(dcris(module, guard)), guard)
    report = ComparisonReport("A vs Bloch-Kato")
    report.ranks = {"syntomic": list(syn.ranks), "bloch_kato": list(bk.ranks)}
    report.checks["Fil^0 meets mu N in mu Fil^-1"] = fil_intersection_check(module, 0)
    report.checks["Fil^-1 meets mu N in mu Fil^-2"] = fil_intersection_check(module, -1)
    report.checks["H^0 ranks agree"] = syn.ranks[0] == bk.ranks[0]
    report.checks["H^1 ranks agree"] = syn.ranks[1] == bk.ranks[1]
    report.checks["H^2 is torsion"] = syn.ranks[2] == 0
    return report


def _mu0_over_mu(p: int, prec_p: int, prec_mu: int) -> np.ndarray:
    ring = af_ring(p, prec_p, prec_mu + 1)
    return ring.mu0[1:].copy()


@dataclass
class ChainMap:
    f0: np.ndarray
    f1: np.ndarray
    f2: np.ndarray


def chain_map_S_to_A(CS: ComplexPresentation, CA: ComplexPresentation) -> ChainMap:
    """The inclusion M -> A (x) M on each term; the Fil-part of T1 and T2 are multiplied by mu0/mu."""
    p, n_prec, mod = CS.p, CS.prec_p, CS.module.modulus
    ring = af_ring(p, n_prec, CA.module.prec)
    ratio = _mu0_over_mu(p, n_prec, CA.module.prec)

    def lift(term_s, term_a, twist):
        arr = term_s.basis_array()
        flat = arr.reshape(arr.shape[0], -1)
        lifted = ring.from_mu0(flat)
        length = term_a.level
        out = np.zeros((length, flat.shape[1]), dtype=lifted.dtype)
        n = min(length, lifted.shape[0])
        out[:n] = lifted[:n]
        if twist:
            out = series_mul(ratio[:length], out, mod)
        return term_a.coords(out.reshape(length, arr.shape[1], arr.shape[2]))

    f0 = lift(CS.t0, CA.t0, False)
    f1x = lift(CS.t1x, CA.t1x, True)
    f1y = lift(CS.t1y, CA.t1y, False)
    f1 = np.zeros((CA.t1x.size + CA.t1y.size, CS.t1x.size + CS.t1y.size), dtype=f0.dtype)
    f1[: CA.t1x.size, : CS.t1x.size] = f1x
    f1[CA.t1x.size :, CS.t1x.size :] = f1y
    f2 = lift(CS.t2, CA.t2, True)
    return ChainMap(f0, f1, f2)


def compare_S_to_A(module: WachModuleS, level: int | None = None, guard: int = DEFAULT_GUARD) -> ComparisonReport:
    """Cohomology of the complex over S against that of its ascent to A."""
    p, n_prec, mod = module.p, module.prec_p, module.modulus
    up = ascend(module)
    level_s = default_level(module) if level is None else level
    cap_a = default_level(up)
    while (p - 1) * (level_s - 1) + 1 > cap_a and level_s > 3:
        level_s -= 1
    level_a = (p - 1) * (level_s - 1) + 1
    CS = build_syntomic_S(module, level_s)
    CA = build_syntomic_A(up, level_a)
    fmap = chain_map_S_to_A(CS, CA)

    def mm(a, b):
        return (a.astype(object) @ b.astype(object)) % mod

    hs, ha = cohomology(CS, guard), cohomology(CA, guard)
    report = ComparisonReport("S vs A")
    report.ranks = {"S": list(hs.ranks), "A": list(ha.ranks), "levels": [level_s, level_a]}
    report.checks["chain map commutes with d0"] = np.array_equal(mm(fmap.f1, CS.d0), mm(CA.d0, fmap.f0))
    report.checks["chain map commutes with d1"] = np.array_equal(mm(fmap.f2, CS.d1), mm(CA.d1, fmap.f1))
    report.checks["H^0 ranks agree"] = hs.ranks[0] == ha.ranks[0]
    report.checks["H^1 ranks agree"] = hs.ranks[1] == ha.ranks[1]
    h2_s = CS.d1.shape[0] - matrix_rank(CS.d1, p, n_prec, guard)
    joint = np.concatenate([fmap.f2, CA.d1], axis=1)
    image_in_h2_a = matrix_rank(joint, p, n_prec, guard) - matrix_rank(CA.d1, p, n_prec, guard)
    report.ranks["H2_kernel_rank"] = h2_s - image_in_h2_a
    report.checks["H^2 map is injective"] = h2_s - image_in_h2_a == 0
    return report
