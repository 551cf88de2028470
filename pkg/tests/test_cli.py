from __future__ import annotations

import json

import pytest

from tempered_spine.cli import main, parse_matrix, CLIError


def _run(argv, tmp_path, capsys):
    code = main(argv + ["--out", str(tmp_path)])
    return code, capsys.readouterr()


def test_parse_matrix():
    assert parse_matrix("1,2", 2) == ((1, 0), (0, 2))
    assert parse_matrix("1,0;0,2", 2) == ((1, 0), (0, 2))
    with pytest.raises(CLIError):
        parse_matrix("1,2,3", 2)
    with pytest.raises(CLIError):
        parse_matrix("x", 2)


def test_spine(tmp_path, capsys):
    code, out = _run(["spine", "--n", "2"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "spine_n2.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["summary"][0]["orbits"] == {"0": 1, "1": 1}


def test_spine_borel(tmp_path, capsys):
    code, _ = _run(["spine", "--n", "2", "--contexts", "borel"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "spine_n2.json").read_text())
    assert len(doc["summary"]) == 2


def test_spine_unsupported_n(tmp_path, capsys):
    code, out = _run(["spine", "--n", "9"], tmp_path, capsys)
    assert code == 2
    err = json.loads(out.err.strip().splitlines()[-1])
    assert "unsupported n" in err["message"]


def test_cohomology_sym10(tmp_path, capsys):
    code, out = _run(["cohomology", "--n", "2", "--coeff", "sym:10", "--field", "Q"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "cohomology_n2.json").read_text())
    assert doc["interior"]["dims"] == [0, 3]


def test_cohomology_boundary(tmp_path, capsys):
    code, _ = _run(["cohomology", "--n", "2", "--coeff", "trivial", "--target", "boundary"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "cohomology_n2.json").read_text())
    assert doc["boundary"]["dims"] == [1, 1]


def test_cohomology_bad_prime(tmp_path, capsys):
    code, out = _run(["cohomology", "--n", "2", "--coeff", "trivial", "--field", "Fp:2"], tmp_path, capsys)
    assert code == 3
    err = json.loads(out.err.strip().splitlines()[-1])
    assert err["error"] == "bad_prime" and err["p"] == 2


def test_bad_coefficient_spec(tmp_path, capsys):
    code, _ = _run(["cohomology", "--n", "2", "--coeff", "adjoint"], tmp_path, capsys)
    assert code == 2


def test_temper(tmp_path, capsys):
    code, out = _run(["temper", "--n", "2", "--a", "1,2"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "ladder_n2.json").read_text())
    assert doc["ladder"]["s_events"] == ["1", "2", "4", "5"]


def test_hecke_sym10(tmp_path, capsys):
    code, out = _run(["hecke", "--n", "2", "--a", "1,2", "--coeff", "sym:10"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "hecke_n2.json").read_text())
    assert doc["charpoly"]["interior"][1] == "(x - 2049)*(x + 24)**2"


def test_hecke_identity(tmp_path, capsys):
    code, _ = _run(["hecke", "--n", "2", "--a", "1,1"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "hecke_n2.json").read_text())
    assert doc["T_a"]["interior"][0] == [["1"]]


def test_hecke_verify_cubes(tmp_path, capsys):
    code, out = _run(["hecke", "--n", "2", "--a", "1,2", "--target", "boundary", "--verify-cubes"], tmp_path, capsys)
    assert code == 0
    doc = json.loads((tmp_path / "hecke_n2.json").read_text())
    assert all(v == 0 for c in doc["cubes"] for v in c["faces"].values())
    assert doc["restriction_residual"] == 0


def test_verify(tmp_path, capsys):
    code, out = _run(["verify", "--n", "2", "--coeff", "sym:10"], tmp_path, capsys)
    assert code == 0
    assert "FAIL" not in out.out


def test_determinism_and_cache(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("TEMPERED_SPINE_CACHE", raising=False)
    a, b, cache = tmp_path / "a", tmp_path / "b", tmp_path / "cache"
    argv = ["hecke", "--n", "2", "--a", "1,2", "--coeff", "sym:10"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--cache", str(cache)]) == 0
    first = (a / "hecke_n2.json").read_bytes()
    assert first == (b / "hecke_n2.json").read_bytes()
    assert len(list(cache.iterdir())) == 1
    assert main(argv + ["--out", str(a), "--cache", str(cache)]) == 0
    assert (a / "hecke_n2.json").read_bytes() == first


def test_fresh_processes_agree(tmp_path):
    import subprocess
    import sys

    outs = []
    for name in ("one", "two"):
        d = tmp_path / name
        subprocess.run(
            [sys.executable, "-m", "tempered_spine.cli", "temper", "--n", "2", "--a", "1,2", "--out", str(d)],
            check=True,
            capture_output=True,
        )
        outs.append((d / "ladder_n2.json").read_bytes())
    assert outs[0] == outs[1]
