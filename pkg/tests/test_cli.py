import json

import pytest

from ordsmith.cli import run
from common import DISC17_BASIS

RHO = [0, 1]
RHO_M = [[[2, 0], RHO], [[4, 0], RHO]]


def frac_json(v):
    return [[c.numerator, c.denominator] if hasattr(c, "numerator") else [c, 1] for c in v]


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return {
        "q6": write("qsqrt-6.json", {"kind": "quadratic", "d": -6}),
        "h17": write("h17.json", {"kind": "quaternion", "a": -17, "b": -3, "order_basis": [frac_json(v) for v in DISC17_BASIS]}),
        "rho": write("rho.json", {"n": 2, "entries": RHO_M}),
        "m2prof": write("m2.json", {"n": 2, "m": 12, "places": [{"place": {"p": 2, "kind": "split"}, "invariants": [[0, 1], [1, 1]]}]}),
        "rhoprof": write("rhoprof.json", {"n": 2, "m": 12, "places": [
            {"place": {"p": 2, "kind": "ramified"}, "invariants": [1, 2]},
            {"place": {"p": 3, "kind": "ramified"}, "invariants": [0, 1]},
        ]}),
        "coset": write("coset.json", {"n": 1, "m": 5, "places": []}),
        "bad_alg": write("bad_alg.json", {"kind": "quadratic"}),
        "bad_mat": write("bad_mat.json", {"n": 2, "entries": [[[1, 0], [0]], [[0, 0], [1, 0]]]}),
        "not_json": write("broken.json", "{"),
        "write": write,
    }


def run_json(capsys, argv):
    code = run(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


def test_ed_rho_matrix(files, capsys):
    code = run(["ed", "--algebra", files["q6"], "--matrix", files["rho"]])
    out = capsys.readouterr().out
    assert code == 0
    assert "(2, rho)" in out and "(6, 2*rho)" in out
    code, data = run_json(capsys, ["ed", "--algebra", files["q6"], "--matrix", files["rho"]])
    assert [I["hnf"] for I in data["ideals"]] == [[[2, 0], [0, 1]], [[6, 0], [0, 2]]]


def test_output_is_deterministic(files, capsys):
    argv = ["ed", "--algebra", files["q6"], "--matrix", files["rho"], "--json"]
    run(argv)
    first = capsys.readouterr().out
    run(argv)
    assert capsys.readouterr().out == first


def test_equiv_identical(files, capsys):
    code = run(["equiv", "--algebra", files["q6"], "--matrix", files["rho"], "--matrix2", files["rho"], "--witness"])
    assert code == 0
    assert "equivalent: yes" in capsys.readouterr().out


def test_equiv_no(files, capsys):
    other = files["write"]("d.json", {"n": 2, "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 2]]]})
    assert run(["equiv", "--algebra", files["q6"], "--matrix", files["rho"], "--matrix2", other]) == 1


def test_construct_witness_verifies(files, capsys):
    prof = files["write"]("p.json", {"n": 2, "places": [
        {"place": {"p": 2, "kind": "ramified"}, "invariants": [1, 2]},
        {"place": {"p": 3, "kind": "ramified"}, "invariants": [0, 1]},
    ]})
    code, data = run_json(capsys, ["construct", "--algebra", files["q6"], "--profile", prof])
    assert code == 0 and data["status"] == "yes"
    w = files["write"]("w.json", data["witness"])
    assert run(["equiv", "--algebra", files["q6"], "--matrix", w, "--matrix2", files["rho"]]) == 0


def test_modular_exists_and_ed(files, capsys):
    code, data = run_json(capsys, ["modular-exists", "--algebra", files["q6"], "--profile", files["rhoprof"], "--witness"])
    assert code == 0
    w = files["write"]("mw.json", data["witness"])
    code, ed = run_json(capsys, ["modular-ed", "--algebra", files["q6"], "--matrix", w])
    assert code == 0 and ed["m"] == 12
    assert ed["profile"] == [
        {"place": {"p": 2, "kind": "ramified"}, "invariants": [1, 2]},
        {"place": {"p": 3, "kind": "ramified"}, "invariants": [0, 1]},
    ]
    code, eq = run_json(capsys, ["modular-equiv", "--algebra", files["q6"], "--matrix", w, "--matrix2", w, "--witness"])
    assert code == 0 and eq["equivalent"]


def test_modular_exists_disc17_witness(files, capsys):
    # the library answers yes with a witness (see the ledger); the witness must verify
    code, data = run_json(capsys, ["modular-exists", "--algebra", files["h17"], "--profile", files["m2prof"], "--witness"])
    assert code == 0
    w = files["write"]("w17.json", data["witness"])
    code, ed = run_json(capsys, ["modular-ed", "--algebra", files["h17"], "--matrix", w])
    assert ed["profile"] == [{"place": {"p": 2, "kind": "split"}, "invariants": [[0, 1], [1, 1]]}]


def test_class_and_validate(files, capsys):
    code, data = run_json(capsys, ["class", "--algebra", files["q6"]])
    assert code == 0 and data["order"] == 2
    code, data = run_json(capsys, ["validate-order", "--algebra", files["h17"]])
    assert code == 0 and data["maximal"] and data["discriminant"] == 17


def test_snf_local(files, capsys):
    code, data = run_json(capsys, ["snf-local", "--algebra", files["q6"], "--matrix", files["rho"], "--prime", "2"])
    assert code == 0
    assert data["places"][0]["invariants"] == [1, 2]


def test_cosets(files, capsys):
    code, data = run_json(capsys, ["cosets", "--algebra", files["q6"], "--profile", files["coset"]])
    assert code == 0 and data["count"] == 6


@pytest.mark.parametrize("key,field", [("bad_alg", "'d'"), ("not_json", "invalid JSON")])
def test_bad_algebra(files, capsys, key, field):
    assert run(["class", "--algebra", files[key]]) == 3
    assert field in capsys.readouterr().err


def test_bad_matrix(files, capsys):
    assert run(["ed", "--algebra", files["q6"], "--matrix", files["bad_mat"]]) == 3
    assert "'entries'[0][1]" in capsys.readouterr().err


def test_missing_m(files, capsys):
    prof = files["write"]("nom.json", {"n": 2, "places": []})
    assert run(["modular-exists", "--algebra", files["q6"], "--profile", prof]) == 3
    assert "'m'" in capsys.readouterr().err


def test_not_similitude(files, capsys):
    assert run(["modular-ed", "--algebra", files["q6"], "--matrix", files["rho"]]) == 3


def test_unknown_command():
    assert run(["frobnicate"]) == 3
