import json
import subprocess
import sys
from fractions import Fraction

import pytest

from riphard.cli import main
from riphard.gadget import ReductionWitnessMap
from riphard.oracle import restricted_extremes
from riphard.rational import RationalMatrix, read_matrix, write_matrix
from riphard.sat import loads_e13, read_instance


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.cnf", tmp_path / "b.cnf"
    assert run(capsys, "gen", "--kind", "3sat5", "--n", 6, "--seed", 3, "--out", a)[0] == 0
    assert run(capsys, "gen", "--kind", "3sat5", "--n", 6, "--seed", 3, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_instance(a).is_3sat5


def test_gen_bad_n(capsys):
    code, _, err = run(capsys, "gen", "--kind", "3sat5", "--n", 4)
    assert code == 2 and "input error" in err


def test_reduce_with_sidecar(capsys, files, tmp_path):
    src = files("psi.cnf", "p cnf 3 1\n1 2 -3 0\n")
    out = tmp_path / "phi.e13"
    assert run(capsys, "reduce", "--input", src, "--out", out)[0] == 0
    phi = read_instance(out)
    assert phi.num_vars == 10 and phi.num_clauses == 6
    wmap = ReductionWitnessMap.from_dict(json.loads((tmp_path / "phi.e13.map.json").read_text()))
    assert wmap.z_index == ((7, 8, 9, 10),)


def test_reduce_rejects_e13(capsys, files):
    assert run(capsys, "reduce", "--input", files("x.e13", "p e13 1 1\n1 0\n"))[0] == 2


def test_build_and_rip(capsys, files, tmp_path):
    phi = files("phi.e13", "p e13 1 1\n1 0\n")
    mat = tmp_path / "x.mat"
    code, _, _ = run(capsys, "build", "--input", phi, "--epsilon", "1/5", "--xi", "1/4", "--allow-any-order", "--out", mat)
    assert code == 0
    X = read_matrix(mat)
    assert X.to_float().tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 0], [4, 4, -4], [0.2, 0, -0.2]]
    code, out, _ = run(capsys, "rip", "--matrix", mat, "--k", 1)
    assert code == 0 and json.loads(out)["k"] == 1


def test_rip_exit_codes(capsys, tmp_path):
    mat = tmp_path / "flat.mat"
    write_matrix(mat, RationalMatrix.from_rows([[1, 1], [0, 0]]))
    assert run(capsys, "rip", "--matrix", mat, "--k", 2, "--delta", "1")[0] == 0
    code, out, _ = run(capsys, "rip", "--matrix", mat, "--k", 2, "--delta", "1/2", "--format", "text")
    assert code == 1 and "is_rip: False" in out
    assert run(capsys, "rip", "--matrix", mat, "--k", 2, "--budget", 0)[0] == 3
    assert run(capsys, "rip", "--matrix", mat, "--k", 3)[0] == 2


def test_gap(capsys, tmp_path):
    mat = tmp_path / "flat.mat"
    write_matrix(mat, RationalMatrix.from_rows([[1, 1], [0, 0]]))
    base = ["gap", "--matrix", mat, "--k", 2, "--delta", "1/5", "--lambda1", 1, "--lambda2", 2]
    code, out, _ = run(capsys, *base)
    assert code == 0 and json.loads(out)["verdict"] == "FarFromRip"
    code, out, _ = run(capsys, *base, "--exact", "--format", "text")
    assert out == "FarFromRip\n"
    assert run(capsys, *base[:-1], "1/2")[0] == 2


def test_transform_ops(capsys, tmp_path):
    mat, mat2, out = tmp_path / "a.mat", tmp_path / "b.mat", tmp_path / "out.mat"
    write_matrix(mat, RationalMatrix.identity(2))
    write_matrix(mat2, RationalMatrix.identity(3))
    code, _, err = run(capsys, "transform", "--op", "shift-down", "--matrix", mat, "--delta", "1/2",
                       "--delta-prime", "1/4", "--lambda2", "3/2", "--out", out)
    assert code == 0 and read_matrix(out).shape == (4, 2)
    assert json.loads(err)["lambda2_prime"] == "5/4"
    assert run(capsys, "transform", "--op", "shift-up", "--matrix", mat, "--delta", "1/5",
               "--delta-prime", "2/5", "--lambda2", "2", "--out", out)[0] == 0
    assert run(capsys, "transform", "--op", "square", "--matrix", mat, "--out", out)[0] == 0
    assert run(capsys, "transform", "--op", "blockdiag", "--matrix", mat, "--matrix2", mat2, "--out", out)[0] == 0
    assert read_matrix(out).shape == (5, 5)
    cert = tmp_path / "cert.json"
    cert.write_text(restricted_extremes(RationalMatrix.identity(3), 2).to_json())
    code, _, err = run(capsys, "transform", "--op", "widen", "--matrix", mat, "--matrix2", mat2,
                       "--certificate", cert, "--k", 2, "--delta", "1/10", "--out", out)
    assert code == 0 and json.loads(err)["aspect_ratio"] == 1.0


def test_transform_errors(capsys, tmp_path):
    mat, out = tmp_path / "a.mat", tmp_path / "out.mat"
    write_matrix(mat, RationalMatrix.identity(2))
    assert run(capsys, "transform", "--op", "shift-down", "--matrix", mat, "--out", out)[0] == 2
    assert run(capsys, "transform", "--op", "square", "--matrix", mat)[0] == 2
    assert run(capsys, "transform", "--op", "square", "--matrix", tmp_path / "missing.mat", "--out", out)[0] == 2


def test_val(capsys, files):
    phi = files("phi.e13", "p e13 2 3\n1 0\n2 0\n1 2 0\n")
    code, out, _ = run(capsys, "val", "--input", phi, "--assignment", "TT")
    assert code == 0 and json.loads(out)["val"] == "2/3"
    code, out, _ = run(capsys, "val", "--input", phi, "--format", "text")
    assert out.startswith("max_val=2/3 ")
    cnf = files("psi.cnf", "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n")
    assert json.loads(run(capsys, "val", "--input", cnf)[1])["max_val"] == "1/2"
    assert run(capsys, "val", "--input", phi, "--max-vars", 1)[0] == 3


def test_verify(capsys, files, tmp_path):
    phi = files("phi.e13", "p e13 3 2\n1 2 0\n3 0\n")
    code, out, _ = run(capsys, "verify", "--input", phi, "--format", "text", "--artifacts", tmp_path / "art")
    assert code == 0 and "[PASS] scaled restricted minimum" in out
    assert (tmp_path / "art" / "reduction.mat").exists()
    code, out, _ = run(capsys, "verify", "--input", phi, "--preset", "hardness")
    assert code == 0 and json.loads(out)["summary"]["FAIL"] == 0
    big = files("big.e13", "p e13 7 1\n1 0\n")
    assert run(capsys, "verify", "--input", big)[0] == 3
    assert run(capsys, "verify", "--input", phi, "--xi", "1/2", "--epsilon", "1/5")[0] == 2


def test_verify_check_failure_exit(capsys, files, monkeypatch):
    import riphard.cli as cli
    from riphard.verify import VerificationReport

    def fake(*a, **k):
        rep = VerificationReport()
        rep.add("forced", "fabricated failure", 0, 1, False)
        return rep

    monkeypatch.setattr(cli, "run_pipeline", fake)
    phi = files("phi.e13", "p e13 1 1\n1 0\n")
    assert run(capsys, "verify", "--input", phi)[0] == 1


def test_module_entry_point(files):
    phi = files("phi.e13", "p e13 2 1\n1 2 0\n")
    res = subprocess.run([sys.executable, "-m", "riphard", "val", "--input", phi], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["max_val"] == "1"


def test_parse_error_exit(capsys, files):
    bad = files("bad.e13", "p e13 2 2\n1 0\n")
    code, _, err = run(capsys, "val", "--input", bad)
    assert code == 2 and "line" in err
