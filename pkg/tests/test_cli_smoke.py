import json
import os
import subprocess
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


def solk(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("SOLK_PRECISION", None)
    full_env.update(env or {})
    return subprocess.run(
        ["python3", "-m", "solk", *args],
        cwd=ROOT,
        env=full_env,
        capture_output=True,
        text=True,
        timeout=600,
    )


def test_check_passes_on_fib():
    r = solk("check", str(CORPUS / "fib.sol"))
    assert r.returncode == 0, r.stderr
    assert "pass" in r.stdout


def test_check_reports_parity_conflict():
    r = solk("check", str(CORPUS / "nonorientable.sol"))
    assert r.returncode == 2
    assert "parity conflict" in r.stdout


def test_check_reports_folding():
    r = solk("check", str(CORPUS / "folding.sol"))
    assert r.returncode == 2
    assert "cancelling pairs" in r.stdout


def test_check_identity_is_not_expanding():
    r = solk("check", str(CORPUS / "identity.sol"))
    assert r.returncode == 2
    assert "not expanding" in r.stdout


def test_missing_file_is_a_usage_error(tmp_path):
    r = solk("check", str(tmp_path / "nope.sol"))
    assert r.returncode == 1
    assert "solk:" in r.stderr


def test_syntax_error_names_line(tmp_path):
    bad = tmp_path / "bad.sol"
    bad.write_text("edges: a\na a a\n", encoding="utf-8")
    r = solk("check", str(bad))
    assert r.returncode == 1
    assert "line 2" in r.stderr


def test_undecodable_file_is_a_usage_error(tmp_path):
    bad = tmp_path / "latin.sol"
    bad.write_bytes(b"edges: a\na -> a \xff\n")
    r = solk("check", str(bad))
    assert r.returncode == 1
    assert "solk:" in r.stderr
    assert "UTF-8" in r.stderr
    assert "Traceback" not in r.stderr


def test_ktheory_json_for_full_shifts():
    r = solk("ktheory", str(CORPUS / "power2.sol"), "--json")
    assert r.returncode == 0, r.stderr
    report = json.loads(r.stdout)
    assert report["Ru"]["K0"] == {"free_rank": 1, "torsion": []}
    assert report["Rs"]["K1"] == {"free_rank": 1, "torsion": []}

    r = solk("ktheory", str(CORPUS / "power3.sol"), "--json")
    report = json.loads(r.stdout)
    assert report["Ru"]["K0"] == {"free_rank": 1, "torsion": [2]}
    assert report["U"]["K0"]["display"] == "Z[1/3]"


def test_ktheory_fib_duality():
    r = solk("ktheory", str(CORPUS / "fib.sol"), "--json")
    assert r.returncode == 0, r.stderr
    report = json.loads(r.stdout)
    assert report["duality_check"] is True
    assert report["closed_form_check"] is True
    assert report["stable_filtration"][:2] == [5, 13]


def test_ktheory_identity_exits_on_axioms():
    r = solk("ktheory", str(CORPUS / "identity.sol"))
    assert r.returncode == 2
    assert "axioms: FAIL" in r.stdout


def test_ktheory_is_deterministic():
    a = solk("ktheory", str(CORPUS / "three_edge.sol"), "--json")
    b = solk("ktheory", str(CORPUS / "three_edge.sol"), "--json")
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout
    assert json.loads(a.stdout)["Ru"]["K0"] == {"free_rank": 1, "torsion": [3]}


def test_perron_text():
    r = solk("perron", str(CORPUS / "power5.sol"))
    assert r.returncode == 0, r.stderr
    assert "lambda = 5 (exact)" in r.stdout


def test_state_values():
    r = solk("state", str(CORPUS / "power2.sol"), "--element", "1", "--stage", "3")
    assert r.returncode == 0, r.stderr
    assert "state = 1/8 (exact)" in r.stdout
    assert "positivity: positive" in r.stdout

    r = solk("state", str(CORPUS / "fib.sol"), "--element", "1,0")
    assert r.returncode == 0, r.stderr
    assert "0.618033988" in r.stdout

    r = solk("state", str(CORPUS / "fib.sol"), "--element", "0,0")
    assert "state = 0 (exact)" in r.stdout
    assert "positivity: zero" in r.stdout


def test_state_json_carries_group_descriptor():
    r = solk("state", str(CORPUS / "fib.sol"), "--element", "1,0", "--json")
    assert r.returncode == 0, r.stderr
    payload = json.loads(r.stdout)
    assert payload["group"]["n"] == 2
    assert payload["group"]["primitive"] is True
    assert payload["group"]["perron"]["exact"] is False
    assert payload["positivity"] is not None


def test_bad_precision_from_environment():
    r = solk("perron", str(CORPUS / "fib.sol"), env={"SOLK_PRECISION": "-1"})
    assert r.returncode == 1
    assert "precision" in r.stderr


def test_precision_flag_controls_width():
    r = solk("perron", str(CORPUS / "fib.sol"), "--json", "--precision", "1/1000")
    assert r.returncode == 0, r.stderr
    payload = json.loads(r.stdout)
    assert payload["exact"] is False
    assert payload["lambda"]["decimal"].startswith("2.61")


def test_oracles():
    r = solk("oracle", "snf", "--trials", "50")
    assert r.returncode == 0, r.stderr
    assert "oracle snf: agree" in r.stdout

    r = solk("oracle", "cokernel", str(CORPUS / "three_edge.sol"), "--trials", "30")
    assert r.returncode == 0, r.stderr

    r = solk("oracle", "orientable", "--trials", "100", "--json")
    assert json.loads(r.stdout)["verdict"] == "agree"


def test_smale_on_fib(tmp_path):
    config = tmp_path / "solk.json"
    config.write_text(json.dumps({"smale_samples": 3}), encoding="utf-8")
    r = solk("smale", str(CORPUS / "fib.sol"), "--config", str(config), "--depth", "20", "--json")
    assert r.returncode == 0, r.stdout + r.stderr
    payload = json.loads(r.stdout)
    assert payload["identities"]["certified"] > 0
    assert payload["ok"] is True
    point = payload["sample_point"]
    assert point["depth"] == 20
    assert len(point["coords"]) == 21
    assert point["coords"][0]["edge"] in ("a", "b")
    float(point["coords"][0]["pos"])


def test_corpus_run():
    r = solk("corpus")
    assert r.returncode == 0, r.stderr
    assert "fib.sol:" in r.stdout
    assert "nonorientable.sol: skipped (not orientable)" in r.stdout
    assert "identity.sol: skipped (axioms fail)" in r.stdout
    assert "MISMATCH" not in r.stdout
