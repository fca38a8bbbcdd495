import json

import pytest

from entropydp.cli import main
from entropydp.core import load_dataset


def _err(capsys):
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)


@pytest.fixture
def data_csv(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["generate", "--size", "1000", "--seed", "42", "--out", str(path)]) == 0
    return path


def test_generate_and_profile(data_csv, tmp_path, capsys):
    assert load_dataset(data_csv).size == 1000
    out = tmp_path / "p.json"
    assert main(["profile", str(data_csv), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    diag = next(f for f in rep["fields"] if f["field"] == "DiagnosisCode")
    assert diag["entropy_bits"] == pytest.approx(4.38, abs=0.02)
    assert diag["level"] == "VeryHigh" and diag["risk"] == "Critical"
    assert sum(rep["allocation"]["per_field"].values()) == pytest.approx(1.0)


def test_profile_markdown_to_stdout(data_csv, capsys):
    assert main(["profile", "--in", str(data_csv), "--field", "TreatmentType", "--format", "markdown"]) == 0
    out = capsys.readouterr().out
    assert "| TreatmentType |" in out and "Severe" in out


def test_generate_json(tmp_path):
    path = tmp_path / "d.json"
    assert main(["generate", "--size", "20", "--out", str(path)]) == 0
    assert load_dataset(path, "json").size == 20


def test_protect_rr_reports_flip_fraction(data_csv, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["protect", str(data_csv), "--mechanism", "randomized-response", "--epsilon", "1", "--out", str(out)]) == 0
    rel = json.loads(out.read_text())["releases"][0]
    assert rel["mechanism"] == "RandomizedResponse"
    assert rel["metadata"]["flip_fraction"] == pytest.approx(0.269, abs=0.03)
    assert "flip_fraction=" in capsys.readouterr().err


def test_protect_all(data_csv, tmp_path):
    out = tmp_path / "all.json"
    assert main(["protect", str(data_csv), "--mechanism", "all", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert len(payload["releases"]) == 9
    assert payload["ledger"]["spent"] == pytest.approx(9.0)


def test_protect_is_byte_identical(data_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["protect", str(data_csv), "--mechanism", "all", "--seed", "9", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_and_flag_precedence(data_csv, tmp_path, monkeypatch):
    outs = {}
    monkeypatch.setenv("ENTROPYDP_SEED", "5")
    for name, extra in (("env", []), ("flag5", ["--seed", "5"]), ("flag6", ["--seed", "6"])):
        outs[name] = tmp_path / f"{name}.json"
        assert main(["protect", str(data_csv), "--mechanism", "laplace", "--out", str(outs[name]), *extra]) == 0
    assert outs["env"].read_bytes() == outs["flag5"].read_bytes()
    assert outs["env"].read_bytes() != outs["flag6"].read_bytes()


def test_protect_refuses_unmapped_field(data_csv, capsys):
    assert main(["protect", str(data_csv), "--mechanism", "laplace", "--field", "TreatmentType"]) == 2
    assert _err(capsys)["error"] == "UsageError"


def test_protect_force(data_csv, tmp_path):
    out = tmp_path / "f.json"
    args = ["protect", str(data_csv), "--mechanism", "laplace", "--field", "TreatmentType", "--force", "--out", str(out)]
    assert main(args) == 0
    assert len(json.loads(out.read_text())["releases"][0]["payload"]) == 26


def test_budget_exhaustion_exit_3(data_csv, capsys):
    assert main(["protect", str(data_csv), "--mechanism", "all", "--budget", "2"]) == 3
    assert _err(capsys)["error"] == "BudgetExhausted"


def test_evaluate_empty_input_path(capsys):
    code = main(["evaluate", "--epsilon", "1", "--delta", "1e-6", "--sizes", "1000", "--in", ""])
    assert code == 2
    assert _err(capsys)["exit_code"] == 2


def test_evaluate_and_report(tmp_path):
    rep = tmp_path / "rep.json"
    assert main(["evaluate", "--sizes", "1000", "--out", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["meta"]["sizes"] == [1000]
    md = tmp_path / "rep.md"
    assert main(["report", str(rep), "--out", str(md)]) == 0
    assert "## Mechanism summary" in md.read_text()
    bundle = tmp_path / "bundle"
    assert main(["report", "--in", str(rep), "--format", "csv", "--out", str(bundle)]) == 0
    assert len(list(bundle.glob("*.csv"))) == 4


def test_evaluate_on_input_file(data_csv, tmp_path):
    out = tmp_path / "r.json"
    assert main(["evaluate", str(data_csv), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["meta"]["sizes"] == [1000]


def test_evaluate_weak_delta_warns(tmp_path, caplog):
    assert main(["evaluate", "--size", "1000", "--delta", "0.01", "--out", str(tmp_path / "r.json")]) == 0
    assert any("not below 1/n" in r.message for r in caplog.records)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["protect", "--mechanism", "laplace"],
        ["protect", "missing.csv", "--mechanism", "laplace"],
        ["protect", "x.csv", "--mechanism", "nope"],
        ["evaluate", "--size", "1000", "--sizes", "1000"],
        ["evaluate", "--epsilon", "-1"],
        ["evaluate", "--size", "0"],
        ["evaluate", "--size", "1000", "--format", "csv"],
        ["report"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    err = _err(capsys)
    assert err["error"] == "UsageError" and err["message"]


def test_corrupt_input_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,Name\n1,x\n")
    assert main(["profile", str(bad)]) == 1
    assert _err(capsys)["error"] == "SchemaMismatch"
