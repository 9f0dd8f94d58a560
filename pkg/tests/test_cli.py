import json

import pytest
from click.testing import CliRunner

from wachsyn.cli import (
    EXIT_FAILED,
    EXIT_MALFORMED,
    EXIT_OK,
    EXIT_PRECISION,
    catalog_names,
    cli,
    dumps,
    expected_galois_checks,
    module_from_dict,
    module_to_dict,
)
from conftest import cached_catalog


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args, stdin=None):
        return runner.invoke(cli, list(args), input=stdin, catch_exceptions=False)

    return invoke


@pytest.fixture
def module_file(run, tmp_path):
    def make(name, *options):
        path = tmp_path / f"{name.replace('(', '_').replace(')', '').replace('+', '_plus_')}.json"
        result = run("catalog", "show", name, *options, "-o", str(path))
        assert result.exit_code == EXIT_OK, result.stderr
        return str(path)

    return make


def test_catalog_list(run):
    result = run("catalog", "list")
    assert result.exit_code == EXIT_OK
    assert result.stdout.split() == catalog_names(3)


@pytest.mark.parametrize("name", ["trivial", "tate(-1)", "ext(tate(1))", "tate(1)*tate(-1)"])
def test_module_file_round_trip_is_byte_identical(name):
    text = dumps(module_to_dict(cached_catalog(name)))
    assert dumps(module_to_dict(module_from_dict(json.loads(text)))) == text


def test_show_is_deterministic(run):
    assert run("catalog", "show", "tate(2)").stdout == run("catalog", "show", "tate(2)").stdout


def test_unknown_catalog_name(run):
    assert run("catalog", "show", "nonsense").exit_code == EXIT_MALFORMED


def test_verify_exit_codes(run, module_file, tmp_path):
    assert run("verify", module_file("tate(-1)")).exit_code == EXIT_OK
    data = json.loads(open(module_file("trivial")).read())
    data["g_gamma"][0][0][0] = "2"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    result = run("verify", str(bad))
    assert result.exit_code == EXIT_FAILED
    report = json.loads(result.stdout)
    assert "Gamma trivial mod mu" in [c["name"] for c in report["checks"] if not c["passed"]]


def test_malformed_files(run, module_file, tmp_path):
    data = json.loads(open(module_file("trivial")).read())
    del data["phi_num"]
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps(data))
    result = run("verify", str(missing))
    assert result.exit_code == EXIT_MALFORMED
    assert "phi_num" in result.stderr

    data = json.loads(open(module_file("trivial")).read())
    data["phi_num"][0][0][1] = "x"
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(data))
    result = run("verify", str(wrong))
    assert result.exit_code == EXIT_MALFORMED
    assert "phi_num[0][0][1]" in result.stderr

    garbage = tmp_path / "garbage.json"
    garbage.write_text("{")
    assert run("verify", str(garbage)).exit_code == EXIT_MALFORMED
    assert run("verify", str(tmp_path / "absent.json")).exit_code == EXIT_MALFORMED


def test_special_elements(run):
    result = run("special-elements", "--p", "5", "--prec-mu", "20")
    assert result.exit_code == EXIT_OK
    out = json.loads(result.stdout)
    assert out["pq"][:5] == ["5", "10", "10", "5", "1"]
    assert all(out["certificates"].values())
    assert run("special-elements", "--f", "2").exit_code == EXIT_MALFORMED


def test_syntomic_ranks(run, module_file):
    result = run("syntomic", module_file("trivial"))
    assert result.exit_code == EXIT_OK
    assert json.loads(result.stdout)["cohomology"]["ranks"] == [1, 1, 0]


def test_precision_exhausted(run, module_file):
    path = module_file("tate(-2)", "--prec-mu", "6")
    assert run("syntomic", path, "--level", "2").exit_code == EXIT_PRECISION


def test_fil_and_dcris(run, module_file):
    path = module_file("trivial+tate(-1)")
    result = run("fil", path, "--from", "-1", "--to", "2")
    assert result.exit_code == EXIT_OK
    out = json.loads(result.stdout)
    assert out["graded_dims"] == [[-1, 0], [0, 1], [1, 1], [2, 0]]
    assert out["stable_at_lower_precision"] is True
    result = run("dcris", path)
    assert json.loads(result.stdout)["dcris"]["filtration_jumps"] == [0, 1]
    assert run("fil", path, "--from", "2", "--to", "1").exit_code == EXIT_MALFORMED


def test_descend_ascend_pipe(run, module_file):
    path = module_file("tate(1)")
    down = run("descend", path)
    assert down.exit_code == EXIT_OK
    assert json.loads(down.stdout)["ring"] == "S"
    up = run("ascend", "-", stdin=down.stdout)
    assert up.exit_code == EXIT_OK
    back = json.loads(up.stdout)
    assert back["ring"] == "A" and back["label"] == "tate(1)"
    assert run("ascend", path).exit_code == EXIT_MALFORMED


def test_compare_reports(run, module_file, tmp_path):
    path = module_file("trivial")
    first = run("compare", path)
    assert first.exit_code == EXIT_OK
    assert run("compare", path).stdout == first.stdout
    s_path = tmp_path / "s.json"
    run("descend", path, "-o", str(s_path))
    result = run("compare", str(s_path))
    assert result.exit_code == EXIT_OK
    names = [r["name"] for r in json.loads(result.stdout)["reports"]]
    assert names == ["A vs Bloch-Kato", "S vs A"]


def test_h1_out_to_extension(run, module_file, tmp_path):
    base = module_file("tate(1)")
    reps = tmp_path / "h1.json"
    assert run("syntomic", base, "--h1-out", str(reps)).exit_code == EXIT_OK
    ext_path = tmp_path / "ext.json"
    result = run("ext", base, "--cocycle", str(reps), "-o", str(ext_path))
    assert result.exit_code == EXIT_OK
    assert run("verify", str(ext_path)).exit_code == EXIT_OK
    assert json.loads(ext_path.read_text())["rank"] == 2
    assert run("ext", base, "--cocycle", str(reps), "--index", "3").exit_code == EXIT_MALFORMED


@pytest.mark.parametrize("name", catalog_names(3))
def test_catalog_metadata_is_reproduced(name):
    checks = expected_galois_checks(cached_catalog(name))
    assert checks and all(checks.values()), checks


def test_version(run):
    assert "wachsyn" in run("--version").stdout
