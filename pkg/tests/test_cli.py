import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qcjacobi import io
from qcjacobi.cli import main
from qcjacobi.model import model_to_dict, random_model
from qcjacobi.algebra import standard_structure

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def bad_model_file(tmp_path):
    p = tmp_path / "bad.json"
    T0 = np.diag([1.0, 1, 1, 1, -1, -1, -1, -1]).tolist()
    p.write_text(json.dumps({"kind": "custom", "n": 2, "S": 0.0, "T0": T0, "U": None}))
    return p


@pytest.fixture
def good_model_file(tmp_path):
    M = random_model(standard_structure(2), np.random.default_rng(5))
    p = tmp_path / "good.json"
    p.write_text(json.dumps(model_to_dict(M)))
    return p


def test_report_golden(capsys):
    code, out, _ = run(capsys, "report", "--model", "sasakian")
    assert code == 0
    assert out == (GOLDEN / "report_sasakian.json").read_text()


def test_geodesic_golden(capsys):
    code, out, _ = run(capsys, "geodesic", "--T", "0.003")
    assert code == 0
    assert out == (GOLDEN / "geodesic_flat_rest.csv").read_text()


def test_geodesic_json_parses(capsys):
    code, out, _ = run(capsys, "geodesic", "--v", "0.1,0.2,0.3", "--T", "0.01", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["samples"]) == 11
    assert doc["samples"][-1]["v"] == [0.1, 0.2, 0.3]


def test_conjugate_agree(capsys):
    code, out, _ = run(capsys, "conjugate", "--v", "1,0,0")
    doc = json.loads(out)
    assert code == 0 and doc["agree"]
    assert doc["exp_rank"]["first_conjugate_time"] == pytest.approx(np.pi, abs=1e-5)


def test_conjugate_at_rest_reports_note(capsys):
    code, out, _ = run(capsys, "conjugate")
    doc = json.loads(out)
    assert code == 0
    assert doc["jacobi_determinant"]["found"] is False
    assert "minimizing" in doc["jacobi_determinant"]["note"]


def test_frame_full_matrix_flat(capsys):
    code, out, _ = run(capsys, "frame", "--v", "0,1,0", "--T", "0.002", "--full-matrix")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 3
    assert np.trace(recs[-1]["rcc"]) == pytest.approx(recs[-1]["trace_rcc"], rel=1e-12)
    assert recs[-1]["trace_rcc"] == pytest.approx(4.0)


def test_validate_flat_passes(capsys):
    code, out, _ = run(capsys, "validate", "--count", "2", "--T", "0.5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# qcj validate kind=flat n=2 seed=0 extremals=2")
    assert lines[-1].startswith("# ") and "checks passed" in lines[-1]
    assert not any("FAIL" in line for line in lines)


def test_validate_custom_file(capsys, good_model_file):
    code, out, _ = run(capsys, "validate", "--file", str(good_model_file), "--count", "2",
                       "--T", "0.5")
    assert code == 0
    assert "curvature matrix unavailable" in out


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "report", "--model", "sasakian", "-o", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == (GOLDEN / "report_sasakian.json").read_text()


def test_renormalizes_u_with_warning(capsys, caplog):
    code, out, _ = run(capsys, "geodesic", "--u", "2,0,0,0,0,0,0,0", "--T", "0")
    assert code == 0
    assert "renormalized" in caplog.text
    assert out.splitlines()[1].startswith("0.0,1.0,")


EXIT_CASES = [
    (["geodesic", "--u", "1,2"], 2, "--u needs 8 components"),
    (["geodesic", "--v", "1,x,0"], 2, "comma-separated"),
    (["geodesic", "--u", "0,0,0,0,0,0,0,0"], 2, "non-zero"),
    (["geodesic", "--n", "1"], 2, "at least 2"),
    (["geodesic", "--dt", "0"], 2, "--dt"),
    (["report", "--model", "custom"], 2, "requires --file"),
    (["conjugate", "--model", "sasakian"], 2, "flat model"),
    (["frame", "--model", "sasakian", "--full-matrix", "--T", "0.01"], 1,
     "curvature matrix unavailable"),
    (["report", "--file", "/nonexistent/model.json"], 2, "cannot read model file"),
]


@pytest.mark.parametrize("argv,code,msg", EXIT_CASES, ids=[" ".join(c[0]) for c in EXIT_CASES])
def test_exit_codes(capsys, argv, code, msg):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert msg in err


def test_argparse_errors_exit_2(capsys):
    for argv in (["bogus"], ["report", "--frobnicate"], ["report", "--model", "torus"], []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_invalid_custom_model_exits_1(capsys, bad_model_file):
    code, _, err = run(capsys, "report", "--file", str(bad_model_file))
    assert code == 1
    assert "propt-line-1" in err


def test_malformed_model_file_exits_2(capsys, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert run(capsys, "report", "--file", str(p))[0] == 2
    p.write_text("[1, 2]")
    assert run(capsys, "report", "--file", str(p))[0] == 2
    p.write_text(json.dumps({"kind": "flat"}))
    assert run(capsys, "report", "--file", str(p))[0] == 2


def test_model_kind_mismatch(capsys, good_model_file):
    code, _, err = run(capsys, "report", "--model", "flat", "--file", str(good_model_file))
    assert code == 2 and "does not match" in err


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "qcjacobi", *argv], capture_output=True,
                          check=False)


def test_subprocess_output_is_byte_identical():
    argv = ("frame", "--v", "0.3,-0.2,0.1", "--u", "1,1,0,0,0,0,0,1", "--T", "0.05",
            "--full-matrix")
    a, b = _cli(*argv), _cli(*argv)
    assert a.returncode == 0
    assert a.stdout == b.stdout and len(a.stdout) > 0


def test_fmt_float():
    assert io.fmt_float(1.0) == "1.0"
    assert io.fmt_float(-0.0) == "0.0"
    assert io.fmt_float(0.1) == "0.10000000000000001"
    assert io.fmt_float(float("nan")) == "null"
    assert io.fmt_float(1e300) == "1.0000000000000001e+300"
    assert float(io.fmt_float(np.pi)) == np.pi


def test_dumps_roundtrip():
    doc = {"a": [1.5, 2, None], "b": {"c": True, "d": np.array([[1.0, 2.0]])}, "e": "x"}
    back = json.loads(io.dumps(doc))
    assert back == {"a": [1.5, 2, None], "b": {"c": True, "d": [[1.0, 2.0]]}, "e": "x"}
    with pytest.raises(TypeError):
        io.dumps(object())


def test_trajectory_header():
    assert io.trajectory_header(8) == "t,u1,u2,u3,u4,u5,u6,u7,u8,v1,v2,v3"
