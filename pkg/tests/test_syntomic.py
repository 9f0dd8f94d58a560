import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cached_catalog
from wachsyn.cli import catalog_names
from wachsyn.errors import MalformedError
from wachsyn.nygaard import is_in_filtration
from wachsyn.syntomic import (
    Cocycle,
    build_bk,
    build_syntomic,
    class_order,
    cocycle_from_extension,
    cocycle_sum,
    cohomologous,
    cohomology,
    compare_A_to_BK,
    compare_S_to_A,
    default_level,
    frobenius_twisted,
    h0_direct,
    h1_representatives,
    invariant_part,
    is_coboundary,
    is_cocycle,
    nabla_0,
    nabla_q,
    neumann_inverse,
    split_h2_class,
)
from wachsyn.nygaard import dcris
from wachsyn.wach import descend, extension_from_cocycle, trivial

M3 = 3**8


def padded(length, d, coeffs):
    out = np.zeros((length, d), dtype=np.int64)
    flat = np.array(coeffs, dtype=np.int64).reshape(-1, d) % M3
    out[: flat.shape[0]] = flat
    return out


def test_nabla_q_examples():
    mu = padded(40, 1, [0, 1])
    assert nabla_q(trivial(), mu)[:5, 0].tolist() == [3, 6, 4, 1, 0]
    # Frozen from the rational-series oracle.
    basis = padded(40, 1, [1])
    assert nabla_q(cached_catalog("tate(-1)"), basis)[:6, 0].tolist() == [3282, 1, 4921, 0, 0, 0]
    assert not np.any(nabla_q(trivial(), basis))


def test_nabla_0_kills_constants():
    s = descend(trivial())
    assert not np.any(nabla_0(s, padded(s.prec, 1, [1])))


EXPECTED_RANKS = {
    "trivial": (1, 1, 0),
    "unramified(4)": (0, 0, 0),
    "tate(-1)": (0, 0, 0),
    "tate(1)": (0, 1, 0),
    "tate(2)": (0, 1, 0),
    "trivial+tate(1)": (1, 2, 0),
    "ext(tate(1))": (0, 1, 0),
}


@pytest.mark.parametrize("name", sorted(EXPECTED_RANKS))
def test_syntomic_ranks(name):
    C = build_syntomic(cached_catalog(name))
    assert cohomology(C).ranks == EXPECTED_RANKS[name]


@pytest.mark.parametrize("name", catalog_names(3))
def test_differentials_compose_to_zero(name):
    C = build_syntomic(cached_catalog(name))
    assert not np.any((C.d1.astype(object) @ C.d0.astype(object)) % M3)


def test_trivial_complex_dimensions():
    C = build_syntomic(trivial())
    assert C.level == default_level(trivial()) == 40
    assert C.dims == (40, 78, 38)


@pytest.mark.parametrize("name", ["trivial", "tate(-1)", "trivial+tate(-1)", "tate(1)"])
def test_h0_direct_matches_complex(name):
    module = cached_catalog(name)
    assert h0_direct(module).rationalized_rank == cohomology(build_syntomic(module)).ranks[0]


@pytest.mark.parametrize("name", catalog_names(3))
def test_matches_bloch_kato(name):
    assert compare_A_to_BK(cached_catalog(name)).passed


def test_bloch_kato_of_tate_minus_one():
    bk = build_bk(dcris(cached_catalog("tate(-1)")))
    assert bk.d0.tolist() == [[M3 - 2]]
    assert cohomology(bk).ranks == (0, 0)


@pytest.mark.parametrize("name", ["trivial", "tate(1)", "trivial+tate(-1)"])
def test_compare_over_s(name):
    report = compare_S_to_A(descend(cached_catalog(name)))
    assert report.passed, report.checks


@pytest.fixture(scope="module")
def tate1_invariant_cocycle():
    module = cached_catalog("tate(1)")
    C = build_syntomic(module)
    (rep,) = h1_representatives(C)
    return module, C, invariant_part(module, rep)


def test_h1_representative_is_a_cocycle(tate1_invariant_cocycle):
    module, C, cocycle = tate1_invariant_cocycle
    assert is_cocycle(module, cocycle.x, cocycle.y)
    assert is_in_filtration(module, cocycle.x, -1)
    assert class_order(C, cocycle) == 8
    assert not is_coboundary(C, cocycle)


def test_extension_round_trip(tate1_invariant_cocycle):
    module, C, cocycle = tate1_invariant_cocycle
    ext = extension_from_cocycle(module, cocycle.x, cocycle.y)
    sub, back = cocycle_from_extension(ext)
    assert sub.rank == 1
    n = back.x.shape[0]
    assert np.array_equal(back.x, cocycle.x[:n] % M3)
    assert np.array_equal(back.y, cocycle.y[: back.y.shape[0]] % M3)


def test_baer_sum(tate1_invariant_cocycle):
    module, C, cocycle = tate1_invariant_cocycle
    doubled = cocycle_sum(cocycle, cocycle, M3)
    assert is_cocycle(module, doubled.x, doubled.y)
    scaled = Cocycle(cocycle.x * 2 % M3, cocycle.y * 2 % M3)
    assert cohomologous(C, doubled, scaled)
    assert not cohomologous(C, doubled, cocycle)
    assert class_order(C, cocycle + cocycle) == 8


def test_coboundaries_are_trivial():
    module = trivial()
    C = build_syntomic(module)
    # d0 of f = mu: (nabla_q mu, (1 - phi) mu).
    f = padded(40, 1, [0, 1])
    x = nabla_q(module, f)
    y = (f - frobenius_twisted(module, f, 0, 40)) % M3
    assert is_cocycle(module, x, y)
    assert is_coboundary(C, Cocycle(x, y))
    assert class_order(C, Cocycle(x, y)) == 0


def test_cocycle_from_extension_rejects_unstable_sub():
    ext = cached_catalog("ext(tate(1))")
    broken = ext.phi_num.copy()
    broken[0, 1, 0] = 1
    from wachsyn.wach import WachModuleA

    bad = WachModuleA(ext.p, ext.prec_p, ext.prec, ext.h, broken, ext.g_gamma, ext.g_tor)
    with pytest.raises(MalformedError):
        cocycle_from_extension(bad)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["trivial", "tate(-1)"]), st.lists(st.integers(0, M3 - 1), min_size=1, max_size=40))
def test_neumann_inverse(name, coeffs):
    module = cached_catalog(name)
    y = padded(40, 1, coeffs)
    z = neumann_inverse(module, y)
    assert np.array_equal((z - frobenius_twisted(module, z, 1, 40)) % M3, y)


def test_neumann_needs_effective_module():
    with pytest.raises(MalformedError):
        neumann_inverse(cached_catalog("tate(1)"), padded(40, 1, [1]))


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("r,k", [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 2)])
def test_split_h2(p, r, k):
    base = trivial(p, 8, 40)
    x = padded(40, 1, [1, 2, 0, 1])
    split = split_h2_class(base, r, x, k)
    assert split.holds()
    # Each of the k steps divides by chi(gamma)^j - 1 for j = r - k + 1, ..., r.
    expected = 0
    for j in range(r - k + 1, r + 1):
        c = (1 + p) ** j - 1
        while c % p == 0:
            c //= p
            expected += 1
    assert split.scale == expected
    assert split.z_in_fil_minus_one()


def test_split_h2_scales_at_p3():
    base = trivial()
    x = padded(40, 1, [1])
    scales = [split_h2_class(base, r, x, k).scale for r, k in [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 2)]]
    assert scales == [0, 1, 0, 1, 2, 3]


def test_split_h2_rejects_bad_indices():
    with pytest.raises(MalformedError):
        split_h2_class(trivial(), 1, padded(40, 1, [1]), 2)
    with pytest.raises(MalformedError):
        split_h2_class(cached_catalog("tate(1)"), 1, padded(40, 1, [1]), 0)
