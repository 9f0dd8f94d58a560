"""Acceptance criteria, one check per criterion.

Each check returns (ok, detail) and is timed against its budget.  Under
pytest the PASS/FAIL lines go to the terminal summary; running this file
directly prints them as well.
"""

import random
import sys
import time

import numpy as np
import pytest

from wachsyn.cli import catalog_module, catalog_names
from wachsyn.linalg import DEFAULT_GUARD
from wachsyn.nygaard import fil_intersection_check, graded_dims, is_in_filtration
from wachsyn.series import identity_certificates
from wachsyn.syntomic import (
    build_bk,
    build_syntomic,
    class_order,
    cocycle_from_extension,
    cocycle_sum,
    cohomologous,
    cohomology,
    compare_S_to_A,
    frobenius_twisted,
    h1_representatives,
    invariant_part,
    is_cocycle,
    neumann_inverse,
    split_h2_class,
)
from wachsyn.nygaard import dcris
from wachsyn.wach import (
    AXIOM_DETERMINANT,
    AXIOM_PHI_GAMMA,
    WachModuleA,
    descend,
    descent_round_trip,
    extension_from_cocycle,
    tate_twist,
    trivial,
    verify,
)

SETTINGS = [(8, 40), (10, 50)]


def _modules(p=3, prec_p=8, prec_mu=40):
    return {name: catalog_module(name, p, prec_p, prec_mu) for name in catalog_names(p)}


def _scalar_variant(module, **coeffs):
    mats = {"phi_num": module.phi_num, "g_gamma": module.g_gamma, "g_tor": module.g_tor}
    for key, values in coeffs.items():
        arr = np.zeros_like(module.phi_num)
        arr[: len(values), 0, 0] = values
        mats[key] = arr
    return WachModuleA(module.p, module.prec_p, module.prec, module.h, mats["phi_num"], mats["g_gamma"], mats["g_tor"], "corrupted")


def special_element_identities():
    failed = [p for p in (3, 5) if not identity_certificates(p, 1, 8, 40).passed]
    cert = identity_certificates(3, 1, 8, 40)
    geometric = [(-1) ** k % 3**8 for k in range(cert.ptilde_over_pq.length)]
    if cert.ptilde_over_pq.to_list() != geometric:
        failed.append("ptilde/[p]_q at p=3")
    return not failed, f"failures: {failed}" if failed else "p = 3, 5 certified"


def axiom_suite():
    bad = [f"{name}@{s}" for s in SETTINGS for name, m in _modules(3, *s).items() if not verify(m).passed]
    base = trivial()
    by_q = verify(_scalar_variant(base, g_gamma=[1, 1]))
    by_det = verify(_scalar_variant(base, phi_num=[3, 1]))
    if by_q.passed or AXIOM_PHI_GAMMA not in by_q.failed():
        bad.append("Ggamma = q not caught")
    if by_det.passed or AXIOM_DETERMINANT not in by_det.failed():
        bad.append("bad determinant not caught")
    detail = f"Ggamma = q fails {by_q.failed()}; bad determinant fails {by_det.failed()}"
    return not bad, detail if not bad else f"failures: {bad}"


def descent_round_trip_suite():
    bad = []
    for name, m in _modules().items():
        if not descent_round_trip(m).passed or not verify(descend(m)).passed:
            bad.append(name)
    return not bad, f"failures: {bad}" if bad else "every catalog module"


def nygaard_suite():
    bad = []
    mods = _modules()
    for name, m in mods.items():
        s = descend(m)
        for k in range(-2, 3):
            if not fil_intersection_check(m, k):
                bad.append(f"{name}: A intersection at {k}")
            if not fil_intersection_check(s, k):
                bad.append(f"{name}: S intersection at {k}")
        dims = graded_dims(m)
        if sum(d for _, d in dims) != m.rank:
            bad.append(f"{name}: graded pieces do not add up")
        if graded_dims(s) != dims:
            bad.append(f"{name}: descent changes graded dims")
    rng = random.Random(7)
    base = trivial()
    mod = base.modulus
    for r in range(-2, 3):
        twisted = tate_twist(base, r)
        for _ in range(6):
            x = np.zeros((40, 1), dtype=np.int64)
            x[:6, 0] = [rng.randrange(mod) for _ in range(6)]
            x[: rng.randrange(3), 0] = 0
            for k in range(-2, 3):
                if is_in_filtration(twisted, x, k) != is_in_filtration(base, x, r + k):
                    bad.append(f"twist r={r} k={k}")
    return not bad, f"failures: {bad[:5]}" if bad else f"{len(mods)} modules, twists r in -2..2"


BK_TARGETS = {"trivial": (1, 1, 0), "tate(-1)": (0, 0, 0), "tate(1)": (0, 1, 0), "unramified(4)": (0, 0, 0)}


def _cohomology_runs():
    runs = {}
    for s in SETTINGS:
        for name, m in _modules(3, *s).items():
            runs[(name, s)] = (cohomology(build_syntomic(m)), cohomology(build_bk(dcris(m))))
    return runs


_RUNS = {}


def cohomology_runs():
    if not _RUNS:
        _RUNS.update(_cohomology_runs())
    return _RUNS


def bloch_kato_comparison():
    bad = []
    runs = cohomology_runs()
    for (name, s), (syn, bk) in runs.items():
        if syn.ranks != (bk.ranks[0], bk.ranks[1], 0):
            bad.append(f"{name}@{s}: {syn.ranks} vs {bk.ranks}")
        if name in BK_TARGETS and syn.ranks != BK_TARGETS[name]:
            bad.append(f"{name}@{s}: {syn.ranks}")
        if syn.ranks != runs[(name, SETTINGS[0])][0].ranks:
            bad.append(f"{name}: unstable")
    sums = {"trivial+tate(-1)": ("trivial", "tate(-1)"), "trivial+tate(1)": ("trivial", "tate(1)"), "tate(-1)+tate(1)": ("tate(-1)", "tate(1)")}
    for total, (a, b) in sums.items():
        lhs = runs[(total, SETTINGS[0])][0].ranks
        rhs = tuple(x + y for x, y in zip(runs[(a, SETTINGS[0])][0].ranks, runs[(b, SETTINGS[0])][0].ranks))
        if lhs != rhs:
            bad.append(f"{total} not additive")
    return not bad, f"failures: {bad}" if bad else f"{len(runs)} runs agree"


def h2_torsion():
    bad = []
    worst = 0
    for (name, s), (syn, _) in cohomology_runs().items():
        exps = syn[2].exponents
        worst = max([worst] + exps)
        if any(e > s[0] - DEFAULT_GUARD for e in exps):
            bad.append(f"{name}@{s}: {exps}")
    return not bad, f"failures: {bad}" if bad else f"largest H^2 exponent {worst}"


def extension_dictionary():
    base = catalog_module("tate(1)")
    C = build_syntomic(base)
    reps = [invariant_part(base, c) for c in h1_representatives(C)]
    if not reps:
        return False, "no H^1 class found"
    c = reps[0]
    ext = extension_from_cocycle(base, c.x, c.y)
    _, back = cocycle_from_extension(ext)
    # Reading y back divides a truncated series by [p]_q, which shortens it;
    # classes are compared in the complex truncated to what survives.
    C = build_syntomic(base, min(back.x.shape[0], back.y.shape[0]) + 1)
    ok = verify(ext).passed and cohomologous(C, back, c) and class_order(C, back) == base.prec_p
    two = cocycle_sum(c, c, base.modulus)
    ext2 = extension_from_cocycle(base, two.x, two.y)
    _, back2 = cocycle_from_extension(ext2)
    ok = ok and verify(ext2).passed and is_cocycle(base, two.x, two.y)
    ok = ok and cohomologous(C, back2, cocycle_sum(back, back, base.modulus))
    return ok, f"round trip and Baer sum through extensions, compared at level {C.level}"


def s_comparison():
    bad = [name for name, m in _modules().items() if not compare_S_to_A(descend(m)).passed]
    return not bad, f"failures: {bad}" if bad else "descend of every catalog module"


def h2_splitting():
    rng = np.random.default_rng(11)
    bad = []
    for name in ("trivial", "tate(-1)"):
        m = catalog_module(name)
        for _ in range(20):
            y = rng.integers(0, m.modulus, size=(40, 1))
            z = neumann_inverse(m, y)
            if not np.array_equal((z - frobenius_twisted(m, z, 1, 40)) % m.modulus, y):
                bad.append(name)
    base = trivial()
    scales = {}
    for r, k in [(1, 1), (2, 1), (2, 2)]:
        x = np.zeros((40, 1), dtype=np.int64)
        x[:4, 0] = rng.integers(0, base.modulus, size=4)
        split = split_h2_class(base, r, x, k)
        scales[(r, k)] = split.surviving_precision
        if not split.holds():
            bad.append(f"split {(r, k)}")
    return not bad, f"failures: {bad}" if bad else f"surviving precision {scales}"


CRITERIA = [
    (1, "special-element identities", special_element_identities, 1.0),
    (2, "axiom suite", axiom_suite, 5.0),
    (3, "descent round trip", descent_round_trip_suite, 10.0),
    (4, "Nygaard properties", nygaard_suite, 30.0),
    (5, "cohomology vs Bloch-Kato", bloch_kato_comparison, 60.0),
    (6, "H^2 torsion", h2_torsion, 60.0),
    (7, "extension dictionary", extension_dictionary, 10.0),
    (8, "S against A comparison", s_comparison, 30.0),
    (9, "H^2 splitting", h2_splitting, 10.0),
]


def run_criterion(number, title, check, budget):
    start = time.perf_counter()
    try:
        ok, detail = check()
    except Exception as exc:  # reported as a failure line, then re-raised by the test
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    in_time = elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} criterion {number} ({title}): {detail}; {elapsed:.2f}s of {budget:.0f}s"
    return ok and in_time, line


@pytest.fixture(scope="module")
def summary(request):
    lines = []
    yield lines
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_sep("-", "acceptance criteria")
        for line in lines:
            reporter.write_line(line)


@pytest.mark.parametrize("number,title,check,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(summary, number, title, check, budget):
    ok, line = run_criterion(number, title, check, budget)
    print(line)
    summary.append(line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
