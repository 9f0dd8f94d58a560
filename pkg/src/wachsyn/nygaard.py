"""The Nygaard filtration Fil^k = {x : phi(x) in D^k N} and the filtered phi-module D_cris.

For a module with denominator exponent h the condition reads
PhiNum phi(x) in D^{k+h} N.  Over A, phi(mu^c) = mu^c [p]_q^c, so every
multiple of mu^c with c = k + h lies in Fil^k; over S the same holds for
mu0^c with c = ceil((k + h)/(p - 1)).  Hence

    Fil^k = K_k + var^c N,

where K_k consists of polynomials of degree < c satisfying the condition.
K_k is the saturated kernel of a Z/p^N-linear map from coefficients to the
Weierstrass remainder of PhiNum phi(x) modulo D^{k+h}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PrecisionError
from .linalg import DEFAULT_GUARD, SmithForm, smith_normal_form
from .series import coeff_dtype, modular_matrix_inverse, poly_divmod, poly_power, series_matmul
from .wach import RING_A, WachModule, determinant_certificate, division_limits, element_to_module


def cutoff(module: WachModule, k: int) -> int:
    """Smallest c with var^c N contained in Fil^k."""
    e = k + module.h
    if e <= 0:
        return 0
    if module.ring_tag == RING_A:
        return e
    return -(-e // (module.p - 1))


def condition_precision(module: WachModule, k: int) -> int:
    """p-adic precision at which the Fil^k condition can be tested."""
    e = k + module.h
    if e <= 0 or module.phi_degree is not None:
        return module.prec_p
    return division_limits(module, module.prec, e)[1]


def constraint_matrix(module: WachModule, k: int, c: int | None = None) -> np.ndarray:
    """Columns: remainders mod D^{k+h} of PhiNum phi(var^m e_i), flattened; (m, i) in order."""
    e = k + module.h
    c = cutoff(module, k) if c is None else c
    d, length, mod = module.rank, module.prec, module.modulus
    divisor = poly_power(module.denominator_polynomial(), e, mod)
    degree = divisor.shape[0] - 1
    if degree >= length or c > length:
        raise PrecisionError(f"Fil^{k} needs more than {length} coefficients")
    dtype = coeff_dtype(mod)
    basis = np.zeros((length, d, c * d), dtype=dtype)
    for m in range(c):
        for i in range(d):
            basis[m, i, m * d + i] = 1
    images = series_matmul(module.phi_num, module.phi_coords(basis.reshape(length, -1)).reshape(length, d, c * d), mod)
    _, rem = poly_divmod(images, divisor, mod)
    return rem.reshape(degree * d, c * d)


@dataclass
class FiltrationBasis:
    """Fil^k as K + var^c N, where K has the given basis of polynomials of degree < c.

    ``kernel`` is the (c d, r) coefficient matrix of K, with row index m d + i
    for the coefficient of var^m e_i; ``coordinates`` is the (r, c d) matrix
    recovering K-coordinates of an element of K.
    """

    k: int
    cutoff: int
    kernel: np.ndarray
    coordinates: np.ndarray
    prec_p_effective: int
    module: WachModule

    @property
    def rank(self) -> int:
        return self.module.rank

    @property
    def kernel_rank(self) -> int:
        return self.kernel.shape[1]

    def kernel_polynomials(self, length: int | None = None) -> np.ndarray:
        """K basis as an array (length, d, r)."""
        length = self.module.prec if length is None else length
        c, d, r = self.cutoff, self.rank, self.kernel_rank
        out = np.zeros((length, d, r), dtype=self.kernel.dtype)
        out[:c] = self.kernel.reshape(c, d, r)
        return out

    @property
    def generators(self) -> list[np.ndarray]:
        """Generators over the base ring: the K basis together with var^c e_i."""
        polys = self.kernel_polynomials()
        gens = [polys[:, :, j] for j in range(self.kernel_rank)]
        for i in range(self.rank):
            v = np.zeros((self.module.prec, self.rank), dtype=self.kernel.dtype)
            if self.cutoff < self.module.prec:
                v[self.cutoff, i] = 1
            gens.append(v)
        return gens

    def contains(self, x) -> bool:
        return is_in_filtration(self.module, x, self.k)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "cutoff": self.cutoff,
            "kernel_rank": self.kernel_rank,
            "prec_p_effective": self.prec_p_effective,
            "generators": [[[str(int(a)) for a in row] for row in g[: self.cutoff + 1]] for g in self.generators],
        }


def fil_basis(module: WachModule, k: int) -> FiltrationBasis:
    """Fil^k of a Wach module at the stored precision."""
    c = cutoff(module, k)
    dtype = coeff_dtype(module.modulus)
    if c == 0:
        empty = np.zeros((0, 0), dtype=dtype)
        return FiltrationBasis(k, 0, empty, empty, module.prec_p, module)
    n_eff = condition_precision(module, k)
    if n_eff < 1:
        raise PrecisionError(f"no p-adic precision left to test Fil^{k}")
    snf = smith_normal_form(constraint_matrix(module, k, c), module.p, module.prec_p)
    cols = [j for j, e in enumerate(snf.col_exponents) if e >= n_eff]
    kernel = snf.V[:, cols].astype(dtype)
    coords = snf.V_inverse[cols, :].astype(dtype)
    return FiltrationBasis(k, c, kernel, coords, n_eff, module)


def is_in_filtration(module: WachModule, x, k: int) -> bool:
    """Membership of x (coordinates, at least ``cutoff`` long) in Fil^k."""
    x = element_to_module(module, x)
    c = cutoff(module, k)
    if c == 0:
        return True
    if x.shape[0] < c:
        raise PrecisionError("element is too short to decide membership")
    flat = x[:c].reshape(-1) % module.modulus
    mat = constraint_matrix(module, k, c)
    image = (mat.astype(object) @ flat.astype(object)) % module.p ** condition_precision(module, k)
    return not np.any(image)


def _constant_image(basis: FiltrationBasis) -> np.ndarray:
    """Columns: constant terms of the generators of Fil^k (the image in N/var N)."""
    d = basis.rank
    if basis.cutoff == 0:
        return np.eye(d, dtype=object)
    return basis.kernel[:d, :].astype(object)


def image_rank(module: WachModule, k: int, guard: int = DEFAULT_GUARD) -> int:
    """Rank of the saturated image of Fil^k in N/var N."""
    basis = fil_basis(module, k)
    img = _constant_image(basis)
    if img.shape[1] == 0:
        return 0
    threshold = basis.prec_p_effective - guard
    snf = smith_normal_form(img, module.p, module.prec_p)
    return sum(1 for e in snf.exponents if e < threshold)


def _jump_search_range(module: WachModule) -> tuple[int, int]:
    s = determinant_certificate(module)[1]
    top = module.rank * (module.h + 1) if s is None else s
    return -module.h, top - module.h + 1


def graded_dims(module: WachModule, k_range=None, guard: int = DEFAULT_GUARD) -> list[tuple[int, int]]:
    """(k, dim gr^k) for k in the range; default covers every possible jump."""
    if k_range is None:
        lo, hi = _jump_search_range(module)
        k_range = range(lo, hi + 1)
    ks = list(k_range)
    ranks = {k: image_rank(module, k, guard) for k in ks}
    out = []
    for k in ks:
        nxt = ranks[k + 1] if k + 1 in ranks else image_rank(module, k + 1, guard)
        out.append((k, ranks[k] - nxt))
    return out


def filtration_jumps(module: WachModule, guard: int = DEFAULT_GUARD) -> list[int]:
    lo, hi = _jump_search_range(module)
    jumps: list[int] = []
    prev = module.rank
    k = lo + 1
    while prev > 0 and k <= hi + 1:
        cur = image_rank(module, k, guard)
        jumps.extend([k - 1] * (prev - cur))
        prev = cur
        k += 1
    return jumps


def saturated_image(module: WachModule, k: int, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """A basis (columns) of the p-saturation of the image of Fil^k in N/var N."""
    basis = fil_basis(module, k)
    img = _constant_image(basis)
    d = module.rank
    if img.shape[1] == 0:
        return np.zeros((d, 0), dtype=object)
    snf: SmithForm = smith_normal_form(img, module.p, module.prec_p)
    threshold = basis.prec_p_effective - guard
    t = sum(1 for e in snf.exponents if e < threshold)
    u_inv = modular_matrix_inverse(snf.U.astype(object), module.modulus, module.p)
    return u_inv[:, :t]


@dataclass
class FilteredPhiModule:
    """D_cris data: phi = p^{-phi_denominator} phi_numerator and the filtration jumps.

    ``fil0`` holds a basis (columns) of the saturated lattice Fil^0 inside the
    lattice spanned by the reduction of the Wach module basis.
    """

    p: int
    prec_p: int
    phi_numerator: np.ndarray
    phi_denominator: int
    filtration_jumps: list[int]
    fil0: np.ndarray

    @property
    def dim(self) -> int:
        return self.phi_numerator.shape[0]

    def phi_scaled(self) -> np.ndarray:
        """p^{phi_denominator} phi as an integer matrix."""
        return self.phi_numerator % self.p**self.prec_p

    def as_dict(self) -> dict:
        v = self.phi_denominator
        return {
            "p": self.p,
            "prec_p": self.prec_p,
            "dim": self.dim,
            "phi_matrix": [[f"{int(a)}/p^{v}" if v else str(int(a)) for a in row] for row in self.phi_numerator],
            "filtration_jumps": list(self.filtration_jumps),
            "fil0_basis": [[str(int(a)) for a in row] for row in self.fil0],
        }


def dcris(module: WachModule, guard: int = DEFAULT_GUARD) -> FilteredPhiModule:
    """Reduction mod the variable: phi = p^{-h} PhiNum(0), filtration from the Nygaard images."""
    jumps = sorted(filtration_jumps(module, guard))
    fil0 = saturated_image(module, 0, guard)
    phi0 = module.phi_num[0].astype(object) % module.modulus
    return FilteredPhiModule(module.p, module.prec_p, phi0, module.h, jumps, fil0)


def fil_intersection_check(module: WachModule, k: int) -> bool:
    """Fil^k intersected with var N equals var Fil^{k - step}, step 1 over A and p - 1 over S."""
    step = 1 if module.ring_tag == RING_A else module.p - 1
    upper = fil_basis(module, k)
    lower = fil_basis(module, k - step)
    c = upper.cutoff
    if c == 0:
        return lower.cutoff == 0
    # Elements of K_k with zero constant term, shifted down, should be exactly K_{k-step}.
    d = module.rank
    snf = smith_normal_form(upper.kernel[:d, :].astype(object), module.p, module.prec_p)
    zero_const = [j for j, e in enumerate(snf.col_exponents) if e >= upper.prec_p_effective]
    shifted = (upper.kernel.astype(object) @ snf.V[:, zero_const].astype(object))[d:] % module.modulus
    for col in shifted.T:
        padded = np.zeros((module.prec, d), dtype=object)
        padded[: c - 1] = col.reshape(c - 1, d)
        if not is_in_filtration(module, padded, k - step):
            return False
    # Conversely, var times K_{k-step} lies in Fil^k.
    for g in lower.generators:
        shifted_g = np.zeros_like(g)
        shifted_g[1:] = g[:-1]
        if not is_in_filtration(module, shifted_g, k):
            return False
    return True
