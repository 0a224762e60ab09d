import json
import shutil

import pytest

from dagparser.cli import folds, main, resolve_model
from dagparser.conllu import parse_conllu, validate, write_conllu
from dagparser.convert import strip_and_drop
from dagparser.fixtures import data_path, synthetic_treebank


@pytest.fixture
def run(capsys):
    def go(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return go


@pytest.fixture
def gold_file(tmp_path):
    path = tmp_path / "gold.conllu"
    shutil.copy(data_path("fixtures.conllu"), path)
    return path


@pytest.fixture(scope="module")
def perceptron_model(tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    train_file = d / "train.conllu"
    train_file.write_text(write_conllu(synthetic_treebank(20, 0)), encoding="utf-8")
    model = d / "p.model"
    assert main(["train", str(train_file), "--dev", data_path("fixtures.conllu"), "-o", str(model),
                 "--model", "perceptron", "--perceptron-epochs", "2"]) == 0
    return model


def test_convert_round_trip(run, gold_file, tmp_path):
    dag = tmp_path / "out.dag"
    assert run("convert", gold_file, "-o", dag)[0] == 0
    assert dag.read_text().count("# dag v1") == 29
    code, out, _ = run("convert", dag, "--direction", "dag2ud", "-o", "-")
    assert code == 0
    expected = [strip_and_drop(s) for s in parse_conllu(gold_file.read_text())]
    assert write_conllu(parse_conllu(out)) == write_conllu(expected)


def test_empty_and_malformed_input(run, tmp_path):
    empty = tmp_path / "empty.conllu"
    empty.write_text("")
    assert run("convert", empty)[:2] == (0, "")
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\tword\n\n")
    code, _, err = run("convert", bad)
    assert code == 1 and "line 1" in err and err.startswith("dagparser: error:")
    assert run("evaluate", tmp_path / "missing.conllu", bad)[0] == 1


def test_usage_errors(run):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["parse", "model-only"])
    assert e.value.code == 2


def test_parse_with_oracle(run, gold_file):
    code, out, _ = run("parse", "--oracle", gold_file)
    assert code == 0
    expected = [strip_and_drop(s) for s in parse_conllu(gold_file.read_text())]
    assert write_conllu(parse_conllu(out)) == write_conllu(expected)


def test_parse_with_model(run, perceptron_model, gold_file, tmp_path):
    out = tmp_path / "sys.conllu"
    assert run("parse", perceptron_model, gold_file, "-o", out)[0] == 0
    system = parse_conllu(out.read_text())
    gold = parse_conllu(gold_file.read_text())
    assert len(system) == len(gold)
    for s, g in zip(system, gold):
        assert validate(s) == []
        assert [t.form for t in s.words] == [t.form for t in g.words]
        assert sum(t.head == 0 for t in s.words) == 1
    out2 = tmp_path / "sys2.conllu"
    assert run("parse", perceptron_model, gold_file, "-o", out2, "--workers", "2")[0] == 0
    assert out2.read_bytes() == out.read_bytes()


def test_trace(run, perceptron_model, tmp_path):
    one = tmp_path / "one.conllu"
    one.write_text(write_conllu(synthetic_treebank(1, 3)))
    code, _, err = run("parse", perceptron_model, one, "--trace")
    lines = [ln for ln in err.splitlines() if " | " in ln]
    assert code == 0 and lines
    assert all(ln.count(" | ") == 4 for ln in lines)
    assert "FINISH" in lines[-1]


def test_evaluate(run, gold_file, tmp_path):
    code, out, _ = run("evaluate", gold_file, gold_file, "--json")
    rep = json.loads(out)
    assert code == 0 and rep["las"]["f1"] == 1.0 and rep["enhanced_las"]["f1"] == 1.0
    assert rep["sentences"] == 29
    code, out, _ = run("evaluate", gold_file, gold_file)
    assert "F1=100.00" in out
    plain = tmp_path / "plain.conllu"
    plain.write_text("1\tHi\thi\tINTJ\tUH\t_\t0\troot\t0:root\t_\n\n")
    rep = json.loads(run("evaluate", plain, plain, "--json")[1])
    assert rep["enhanced_las"]["f1"] == 1.0
    assert (rep["enhanced_las"]["correct"], rep["enhanced_las"]["system"], rep["enhanced_las"]["gold"]) == (0, 0, 0)
    assert rep["enhanced_percentage"] == 0.0


def test_oracle_check(run, gold_file, tmp_path):
    code, out, _ = run("oracle-check", gold_file)
    assert code == 0
    assert out.strip().endswith("passed 29 failed 0")
    code, out, _ = run("oracle-check", gold_file, "--json", "--exhaustive-max", "0")
    assert code == 0 and all(r["exhaustive"] is None for r in json.loads(out)["sentences"])


def test_data_dir_lookup(run, gold_file, monkeypatch, tmp_path):
    monkeypatch.setenv("DAGPARSER_DATA", str(tmp_path))
    monkeypatch.chdir(tmp_path / "..")
    assert run("evaluate", "gold.conllu", "gold.conllu")[0] == 0


def write_manifest(path, rows):
    path.write_text("# language\ttreebank\tsize\tpath\n" + "".join("\t".join(r) + "\n" for r in rows))
    return str(path)


def test_resolve_model(run, tmp_path):
    m = write_manifest(tmp_path / "models.tsv", [
        ("en", "ewt", "12543", "en_ewt.model"),
        ("en", "lines", "2738", "/abs/en_lines.model"),
        ("fr", "gsd", "14450", "fr.model"),
        ("*", "multi", "0", "multi.model"),
    ])
    assert resolve_model(m, "en", "lines") == "/abs/en_lines.model"
    assert resolve_model(m, "en", "pud") == str(tmp_path / "en_ewt.model")
    assert resolve_model(m, "sv", "talbanken") == str(tmp_path / "multi.model")
    code, out, _ = run("resolve-model", m, "fr")
    assert code == 0 and out.strip() == str(tmp_path / "fr.model")
    empty = write_manifest(tmp_path / "empty.tsv", [])
    assert run("resolve-model", empty, "en")[0] == 1
    only = write_manifest(tmp_path / "only.tsv", [("en", "ewt", "1", "a.model")])
    assert run("resolve-model", only, "de")[0] == 1


def test_folds():
    fs = folds(50, 10, 0)
    assert len(fs) == 10
    for tr, dv, va in fs:
        assert len(va) == len(dv) == 5
        assert sorted(tr + dv + va) == list(range(50))
    assert sorted(i for _, _, va in fs for i in va) == list(range(50))
    assert fs == folds(50, 10, 0) and fs != folds(50, 10, 1)
    with pytest.raises(Exception):
        folds(5, 10, 0)


def test_cross_validate(run, tmp_path):
    data = tmp_path / "tb.conllu"
    data.write_text(write_conllu(synthetic_treebank(12, 0)))
    model = tmp_path / "cv.model"
    code, out, _ = run("cross-validate", data, "--folds", "3", "--model", "perceptron",
                       "--perceptron-epochs", "1", "-o", model, "--json")
    reports = json.loads(out)
    assert code == 0 and len(reports) == 3 and model.exists()
    assert all(0 <= r["validation_las"] <= 1 for r in reports)


def test_train_without_dev_uses_cross_validation(run, tmp_path):
    data = tmp_path / "tb.conllu"
    data.write_text(write_conllu(synthetic_treebank(9, 0)))
    model = tmp_path / "m.model"
    code, _, _ = run("train", data, "-o", model, "--folds", "3", "--model", "perceptron", "--perceptron-epochs", "1")
    assert code == 0 and model.exists()
    small = tmp_path / "small.conllu"
    small.write_text(write_conllu(synthetic_treebank(2, 0)))
    assert run("train", small, "-o", model, "--model", "perceptron")[0] == 1
