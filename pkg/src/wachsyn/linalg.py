"""Dense linear algebra over the local ring Z/p^N.

Every finitely generated Z/p^N-module is a sum of cyclic modules Z/p^e, so
the Smith normal form is the workhorse for kernels, cokernels, solving and
cohomology.  The zero class is encoded by the exponent N throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedError
from .padic import PadicScalar, check_prime
from .series import coeff_dtype, modular_matrix_inverse, p_adic_valuations

DEFAULT_GUARD = 2


@dataclass
class RingMatrix:
    """A rectangular matrix over Z/p^N stored as residues in [0, p^N)."""

    p: int
    prec_p: int
    entries: np.ndarray

    def __post_init__(self):
        check_prime(self.p)
        arr = np.asarray(self.entries)
        if arr.ndim != 2:
            raise MalformedError("a RingMatrix must be two-dimensional")
        self.entries = (arr.astype(object) % self.modulus).astype(coeff_dtype(self.modulus))

    @property
    def modulus(self) -> int:
        return self.p**self.prec_p

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def from_rows(cls, p: int, prec_p: int, rows) -> RingMatrix:
        return cls(p, prec_p, np.array(rows, dtype=object).reshape(len(rows), -1))

    @classmethod
    def identity(cls, p: int, prec_p: int, n: int) -> RingMatrix:
        return cls(p, prec_p, np.eye(n, dtype=np.int64))

    def __matmul__(self, other: RingMatrix) -> RingMatrix:
        return RingMatrix(self.p, min(self.prec_p, other.prec_p), _matmul(self.entries, other.entries, self.modulus))

    def __eq__(self, other):
        return (
            isinstance(other, RingMatrix)
            and self.entries.shape == other.entries.shape
            and bool(np.all((self.entries - other.entries) % self.p ** min(self.prec_p, other.prec_p) == 0))
        )

    def entry(self, i: int, j: int) -> PadicScalar:
        return PadicScalar(self.p, self.prec_p, int(self.entries[i, j]))


def _as_ring_matrix(a, p=None, prec_p=None) -> RingMatrix:
    if isinstance(a, RingMatrix):
        return a
    if p is None or prec_p is None:
        raise MalformedError("raw arrays need explicit p and prec_p")
    return RingMatrix(p, prec_p, a)


def _matmul(a: np.ndarray, b: np.ndarray, modulus: int) -> np.ndarray:
    if a.dtype == object or b.dtype == object:
        return np.matmul(a.astype(object), b.astype(object)) % modulus
    # Chunk the inner dimension so partial sums stay inside int64.
    limit = max(1, (2**62) // max(1, (modulus - 1) ** 2))
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for start in range(0, a.shape[1], limit):
        out = (out + a[:, start : start + limit] @ b[start : start + limit]) % modulus
    return out


@dataclass
class SmithForm:
    """U A V = diag(p^e) with U, V invertible; ``exponents`` has length min(rows, cols)."""

    p: int
    prec_p: int
    U: np.ndarray
    V: np.ndarray
    V_inverse: np.ndarray
    exponents: list[int]
    shape: tuple[int, int]

    @property
    def row_exponents(self) -> list[int]:
        """Exponents indexed by rows, padded with N for rows beyond the diagonal."""
        return self.exponents + [self.prec_p] * (self.shape[0] - len(self.exponents))

    @property
    def col_exponents(self) -> list[int]:
        return self.exponents + [self.prec_p] * (self.shape[1] - len(self.exponents))

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.shape, dtype=object)
        for i, e in enumerate(self.exponents):
            d[i, i] = self.p**e % self.p**self.prec_p
        return d


def smith_normal_form(a, p: int | None = None, prec_p: int | None = None) -> SmithForm:
    """Smith form by pivoting on an entry of minimal valuation at every step."""
    mat = _as_ring_matrix(a, p, prec_p)
    p, n_prec, mod = mat.p, mat.prec_p, mat.modulus
    dtype = coeff_dtype(mod)
    work = mat.entries.astype(dtype).copy()
    rows, cols = work.shape
    U = np.eye(rows, dtype=dtype)
    V = np.eye(cols, dtype=dtype)
    V_inv = np.eye(cols, dtype=dtype)
    exponents: list[int] = []
    for t in range(min(rows, cols)):
        sub = work[t:, t:]
        units = np.argwhere(sub % p != 0)
        if units.size:
            i, j = units[0]
            e = 0
        else:
            if not np.any(sub):
                exponents.extend([n_prec] * (min(rows, cols) - t))
                break
            vals = p_adic_valuations(sub, p, n_prec)
            flat = int(np.argmin(vals))
            i, j = divmod(flat, sub.shape[1])
            e = int(vals[i, j])
        i, j = int(i) + t, int(j) + t
        if i != t:
            work[[t, i]] = work[[i, t]]
            U[[t, i]] = U[[i, t]]
        if j != t:
            work[:, [t, j]] = work[:, [j, t]]
            V[:, [t, j]] = V[:, [j, t]]
            V_inv[[t, j]] = V_inv[[j, t]]
        pe = p**e
        unit = int(work[t, t]) // pe
        unit_inv = pow(unit, -1, mod)
        work[t] = (work[t] * unit_inv) % mod
        U[t] = (U[t] * unit_inv) % mod
        below = work[t + 1 :, t] // pe
        if np.any(below):
            work[t + 1 :] = (work[t + 1 :] - np.outer(below, work[t])) % mod
            U[t + 1 :] = (U[t + 1 :] - np.outer(below, U[t])) % mod
        right = work[t, t + 1 :] // pe
        if np.any(right):
            work[t, t + 1 :] = 0
            V[:, t + 1 :] = (V[:, t + 1 :] - np.outer(V[:, t], right)) % mod
            V_inv[t] = (V_inv[t] + _matmul(right[None, :], V_inv[t + 1 :], mod)[0]) % mod
        exponents.append(e)
    return SmithForm(p, n_prec, U, V, V_inv, exponents, (rows, cols))


def kernel_exponents(a, p=None, prec_p=None) -> list[int]:
    """Exponents e > 0 with ker(A) isomorphic to the sum of Z/p^e."""
    snf = smith_normal_form(a, p, prec_p)
    return sorted(e for e in snf.col_exponents if e > 0)


def kernel_basis(a, p=None, prec_p=None) -> list[np.ndarray]:
    """Generators of ker(A): the columns V e_j scaled by p^{N - e_j}."""
    snf = smith_normal_form(a, p, prec_p)
    return _kernel_from_snf(snf)


def _kernel_from_snf(snf: SmithForm) -> list[np.ndarray]:
    mod = snf.p**snf.prec_p
    gens = []
    for j, e in enumerate(snf.col_exponents):
        if e > 0:
            gens.append((snf.V[:, j] * snf.p ** (snf.prec_p - e)) % mod)
    return gens


def saturated_kernel_basis(a, p=None, prec_p=None, threshold: int | None = None) -> list[np.ndarray]:
    """Kernel generators of exponent at least ``threshold`` (default N), unscaled.

    For a p-saturated submodule cut out by A, these columns form a basis of
    its reduction; torsion solutions with smaller exponents are discarded.
    """
    snf = smith_normal_form(a, p, prec_p)
    threshold = snf.prec_p if threshold is None else threshold
    return [snf.V[:, j].copy() for j, e in enumerate(snf.col_exponents) if e >= threshold]


def cokernel_divisors(a, p=None, prec_p=None) -> list[int]:
    """Exponents e (one per row, zeros included) with coker(A) = sum of Z/p^e."""
    snf = smith_normal_form(a, p, prec_p)
    return sorted(snf.row_exponents)


def solve(a, b, p=None, prec_p=None):
    """Some x with A x = b mod p^N, or None when no solution exists."""
    mat = _as_ring_matrix(a, p, prec_p)
    snf = smith_normal_form(mat)
    cols = _solve_with_snf(snf, np.asarray(b).reshape(-1, 1))
    return None if cols is None else cols[:, 0]


def solve_many(a, b, p=None, prec_p=None):
    """Solve A X = B column by column; None if any column is insoluble."""
    mat = _as_ring_matrix(a, p, prec_p)
    return _solve_with_snf(smith_normal_form(mat), np.asarray(b))


def _solve_with_snf(snf: SmithForm, b: np.ndarray):
    p, n_prec = snf.p, snf.prec_p
    mod = p**n_prec
    dtype = coeff_dtype(mod)
    rhs = _matmul(snf.U, (b.astype(object) % mod).astype(dtype), mod)
    rows, cols = snf.shape
    y = np.zeros((cols, rhs.shape[1]), dtype=dtype)
    for i, e in enumerate(snf.row_exponents):
        if e >= n_prec:
            if np.any(rhs[i] % mod):
                return None
            continue
        pe = p**e
        if np.any(rhs[i] % pe):
            return None
        if i < cols:
            y[i] = rhs[i] // pe
    return _matmul(snf.V, y, mod)


def rationalized_rank(exponents, prec_p: int, guard: int = DEFAULT_GUARD) -> int:
    """Count of exponents at the top of the precision window: the estimated Q_p-dimension."""
    if guard >= prec_p:
        raise MalformedError("guard must be smaller than the precision")
    return sum(1 for e in exponents if e >= prec_p - guard)


@dataclass
class DegreeReport:
    degree: int
    exponents: list[int]
    rationalized_rank: int
    torsion_exponents: list[int]

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "exponents": list(self.exponents),
            "rationalized_rank": self.rationalized_rank,
            "torsion_exponents": list(self.torsion_exponents),
        }


@dataclass
class CohomologyReport:
    """Elementary divisors of each cohomology group of a truncated complex."""

    p: int
    prec_p: int
    prec_mu: int | None
    guard: int
    degrees: list[DegreeReport] = field(default_factory=list)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(d.rationalized_rank for d in self.degrees)

    def __getitem__(self, k: int) -> DegreeReport:
        return self.degrees[k]

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "prec_p": self.prec_p,
            "prec_mu": self.prec_mu,
            "guard": self.guard,
            "ranks": list(self.ranks),
            "degrees": [d.as_dict() for d in self.degrees],
        }


def _degree_report(k: int, exponents: list[int], prec_p: int, guard: int) -> DegreeReport:
    exps = sorted(e for e in exponents if e > 0)
    rank = rationalized_rank(exps, prec_p, guard)
    return DegreeReport(k, exps, rank, [e for e in exps if e < prec_p - guard])


def middle_cohomology_exponents(d_in: np.ndarray, d_out_snf: SmithForm) -> list[int]:
    """Exponents of ker(d_out)/im(d_in), given the Smith form of d_out.

    ker(d_out) is V (sum p^{N-e_j} Z/p^N) which is isomorphic to sum Z/p^{e_j};
    the image columns are rewritten in those coordinates and the quotient is
    read off as a cokernel.
    """
    p, n_prec = d_out_snf.p, d_out_snf.prec_p
    mod = p**n_prec
    dtype = coeff_dtype(mod)
    coords = _matmul(d_out_snf.V_inverse, (d_in.astype(object) % mod).astype(dtype), mod)
    exps = d_out_snf.col_exponents
    keep = [j for j, e in enumerate(exps) if e > 0]
    if not keep:
        return []
    rel = np.zeros((len(keep), coords.shape[1] + len(keep)), dtype=dtype)
    for row, j in enumerate(keep):
        shift = p ** (n_prec - exps[j])
        if np.any(coords[j] % shift):
            raise MalformedError("image is not contained in the kernel (d1 d0 != 0)")
        rel[row, : coords.shape[1]] = coords[j] // shift
        rel[row, coords.shape[1] + row] = (p ** exps[j]) % mod
    return [e for e in cokernel_divisors(rel, p, n_prec) if e > 0]


def complex_cohomology(d0: np.ndarray, d1: np.ndarray | None, p: int, prec_p: int, guard: int = DEFAULT_GUARD, prec_mu=None) -> CohomologyReport:
    """Cohomology of T0 -d0-> T1 -d1-> T2 (or of the two-term complex when d1 is None)."""
    snf0 = smith_normal_form(d0, p, prec_p)
    report = CohomologyReport(p, prec_p, prec_mu, guard)
    report.degrees.append(_degree_report(0, snf0.col_exponents, prec_p, guard))
    if d1 is None:
        h1 = [e for e in snf0.row_exponents if e > 0]
        report.degrees.append(_degree_report(1, h1, prec_p, guard))
        return report
    snf1 = smith_normal_form(d1, p, prec_p)
    report.degrees.append(_degree_report(1, middle_cohomology_exponents(d0, snf1), prec_p, guard))
    report.degrees.append(_degree_report(2, snf1.row_exponents, prec_p, guard))
    return report


def middle_cohomology_generators(d_in: np.ndarray, d_out_snf: SmithForm, min_exponent: int) -> list[np.ndarray]:
    """Representatives in T1 of the classes of ker(d_out)/im(d_in) of order p^e, e >= min_exponent.

    Uses the same presentation as :func:`middle_cohomology_exponents`; the
    cyclic summands of the quotient come from the inverse of the row
    transform of the relation matrix.
    """
    p, n_prec = d_out_snf.p, d_out_snf.prec_p
    mod = p**n_prec
    dtype = coeff_dtype(mod)
    coords = _matmul(d_out_snf.V_inverse, (d_in.astype(object) % mod).astype(dtype), mod)
    exps = d_out_snf.col_exponents
    keep = [j for j, e in enumerate(exps) if e > 0]
    if not keep:
        return []
    rel = np.zeros((len(keep), coords.shape[1] + len(keep)), dtype=dtype)
    gens = np.zeros((d_out_snf.V.shape[0], len(keep)), dtype=object)
    for row, j in enumerate(keep):
        shift = p ** (n_prec - exps[j])
        rel[row, : coords.shape[1]] = coords[j] // shift
        rel[row, coords.shape[1] + row] = (p ** exps[j]) % mod
        gens[:, row] = (d_out_snf.V[:, j].astype(object) * shift) % mod
    snf = smith_normal_form(rel, p, n_prec)
    u_inv = modular_matrix_inverse(snf.U.astype(object), mod, p)
    out = []
    for i, e in enumerate(snf.row_exponents):
        if e >= min_exponent:
            out.append(((gens @ u_inv[:, i]) % mod).astype(dtype))
    return out


def matrix_rank(a, p: int, prec_p: int, guard: int = DEFAULT_GUARD) -> int:
    """Rank over Q_p estimated from elementary divisors below N - guard."""
    arr = np.asarray(a)
    if arr.size == 0:
        return 0
    snf = smith_normal_form(arr, p, prec_p)
    return sum(1 for e in snf.exponents if e < prec_p - guard)
