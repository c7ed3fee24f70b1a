"""CLI surface: artifacts, manifests, exit codes, determinism."""

import csv
import json

import numpy as np
import pytest

from hexstyle.cli import main
from hexstyle.features import FEATURE_NAMES

from conftest import SAMPLE_XML, GOLDEN_FEATURES, bernoulli_lines, separated_profiles


def write_feature_csv(path, X, source="synth"):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "name", *FEATURE_NAMES])
        for i, row in enumerate(X):
            writer.writerow([source, str(i + 1), *(int(v) for v in row)])


def data_section(path):
    """Artifact bytes with the manifest stripped (CSV comments or the
    JSON manifest key)."""
    text = path.read_text()
    if str(path).endswith(".json"):
        doc = json.loads(text)
        doc.pop("manifest", None)
        return json.dumps(doc, sort_keys=True)
    return "\n".join(l for l in text.splitlines() if not l.startswith("#"))


def manifest_of(path):
    text = path.read_text()
    if str(path).endswith(".json"):
        return json.loads(text)["manifest"]
    entries = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        entries[key] = json.loads(value)
    return entries


@pytest.fixture
def sample_xml_path(tmp_path):
    path = tmp_path / "sample.xml"
    path.write_text(SAMPLE_XML)
    return path


@pytest.fixture
def author_files(tmp_path):
    rng = np.random.default_rng(77)
    pa, pb = separated_profiles(0.25)
    a = tmp_path / "authA.csv"
    b = tmp_path / "authB.csv"
    write_feature_csv(a, bernoulli_lines(rng, 800, pa), "authA")
    write_feature_csv(b, bernoulli_lines(rng, 800, pb), "authB")
    return a, b


def test_features_reference_line(sample_xml_path, tmp_path, capsys):
    out = tmp_path / "feats.csv"
    assert main(["features", str(sample_xml_path), "--output", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "source_id,name," + ",".join(FEATURE_NAMES)
    assert rows[1] == "sample,952," + ",".join(str(v) for v in GOLDEN_FEATURES)
    summary = capsys.readouterr().out
    assert "1 hexameters" in summary
    assert "fourth-foot homodyne" in summary


def test_features_empty_corpus(tmp_path):
    empty = tmp_path / "empty.xml"
    empty.write_text("<lines></lines>")
    out = tmp_path / "feats.csv"
    assert main(["features", str(empty), "--output", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows == ["source_id,name," + ",".join(FEATURE_NAMES)]


def test_features_unreadable_input_exits_2(tmp_path, capsys):
    assert main(["features", str(tmp_path / "missing.xml"),
                 "--output", str(tmp_path / "x.csv")]) == 2
    assert "missing.xml" in capsys.readouterr().err


def test_features_manifest_present(sample_xml_path, tmp_path):
    out = tmp_path / "feats.csv"
    main(["features", str(sample_xml_path), "--output", str(out)])
    manifest = manifest_of(out)
    assert manifest["command"] == "features"
    assert "prng_id" in manifest and "toolkit_version" in manifest
    assert str(sample_xml_path) in manifest["input_digests"]


def test_features_jsonl(sample_xml_path, tmp_path):
    out = tmp_path / "feats.jsonl"
    main(["features", str(sample_xml_path), "--format", "jsonl",
          "--output", str(out)])
    lines = out.read_text().splitlines()
    assert "manifest" in json.loads(lines[0])
    row = json.loads(lines[1])
    assert row["source_id"] == "sample" and row["name"] == "952"
    assert [row[n] for n in FEATURE_NAMES] == GOLDEN_FEATURES


def test_classify_sweep_arity(author_files, tmp_path, capsys):
    a, b = author_files
    out = tmp_path / "report.json"
    code = main(["classify", str(a), str(b), "--sweep", "5,10",
                 "--model", "all", "--seed", "3", "--output", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["reports"]) == 8  # 2 sizes x 4 models
    sweep = tmp_path / "report.sweep.csv"
    rows = [l for l in sweep.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "chunk_size,model,accuracy"
    assert len(rows) == 9


def test_classify_report_fields(author_files, tmp_path):
    a, b = author_files
    out = tmp_path / "report.json"
    main(["classify", str(a), str(b), "--chunk", "20", "--model", "svm",
          "--seed", "5", "--output", str(out)])
    report = json.loads(out.read_text())["reports"][0]
    assert list(report) == ["pair", "chunk_size", "model", "accuracy",
                            "confusion", "importances", "seed", "prng_id"]
    assert report["pair"] == ["authA", "authB"]
    assert report["model"] == "svm"
    assert len(report["importances"]) == 16


def test_classify_feature_subset(author_files, tmp_path):
    a, b = author_files
    out = tmp_path / "report.json"
    code = main(["classify", str(a), str(b), "--chunk", "20",
                 "--model", "logreg", "--seed", "2",
                 "--features", "F1S,SYN,F3WC,F4S,F4SC,F3C",
                 "--output", str(out)])
    assert code == 0
    report = json.loads(out.read_text())["reports"][0]
    assert report["importances"] is None


def test_classify_unknown_feature_is_usage_error(author_files, tmp_path, capsys):
    a, b = author_files
    assert main(["classify", str(a), str(b), "--features", "QQQ"]) == 1


def test_novelty_range_and_df_header(author_files, tmp_path, capsys):
    a, _ = author_files
    out = tmp_path / "nov.json"
    code = main(["novelty", str(a), "--query-range", "100:180",
                 "--k", "40", "--n", "500", "--seed", "1",
                 "--output", str(out)])
    assert code == 0
    shown = capsys.readouterr().out
    assert "df = 15" in shown
    assert "Samp%" in shown and "Mean%" in shown
    doc = json.loads(out.read_text())["report"]
    assert doc["df"] == 15
    assert doc["query_id"] == "100-180"
    assert sum(v for _, v in doc["contributions"]) == pytest.approx(
        doc["M2"], rel=1e-9, abs=1e-12)


def test_novelty_query_file(author_files, tmp_path):
    a, b = author_files
    code = main(["novelty", str(a), "--query-file", str(b),
                 "--k", "40", "--n", "300", "--seed", "1"])
    assert code == 0


def test_novelty_range_outside_corpus(author_files):
    a, _ = author_files
    assert main(["novelty", str(a), "--query-range", "700:900",
                 "--k", "40", "--n", "100"]) == 2


def test_novelty_whole_corpus_query_fails(author_files):
    a, _ = author_files
    assert main(["novelty", str(a), "--query-range", "1:800",
                 "--k", "40", "--n", "100"]) == 2


def test_novelty_needs_exactly_one_query(author_files):
    a, b = author_files
    assert main(["novelty", str(a)]) == 1
    assert main(["novelty", str(a), "--query-range", "1:5",
                 "--query-file", str(b)]) == 1


def test_rolling_defaults_and_window_count(author_files, tmp_path):
    a, _ = author_files
    out = tmp_path / "roll.csv"
    code = main(["rolling", str(a), "--k", "40", "--n", "200",
                 "--seed", "2", "--output", str(out)])
    assert code == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "window_start_line,window_label,M2,p"
    assert len(rows) - 1 == (800 - 81) // 27 + 1  # default window 81, step 27


def test_rolling_threshold_from_query(author_files, tmp_path, capsys):
    a, _ = author_files
    out = tmp_path / "roll.csv"
    code = main(["rolling", str(a), "--exclude-range", "1:81",
                 "--threshold-from-query", "--window", "81", "--step", "200",
                 "--k", "40", "--n", "200", "--seed", "2",
                 "--output", str(out)])
    assert code == 0
    manifest = manifest_of(out)
    assert "reference_m2" in manifest
    assert "reference query" in capsys.readouterr().out


def test_rolling_window_larger_than_corpus(author_files, tmp_path):
    a, _ = author_files
    assert main(["rolling", str(a), "--window", "2000",
                 "--output", str(tmp_path / "r.csv")]) == 2


def test_correlations_sorted_descending(author_files, tmp_path):
    a, _ = author_files
    out = tmp_path / "corr.csv"
    assert main(["correlations", str(a), "--threshold", "0.0",
                 "--output", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    values = [abs(float(r.rsplit(",", 1)[1])) for r in rows]
    assert values == sorted(values, reverse=True)


def test_correlations_threshold_above_one(author_files, tmp_path):
    a, _ = author_files
    out = tmp_path / "corr.csv"
    main(["correlations", str(a), "--threshold", "1.1", "--output", str(out)])
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows == ["feature_a,feature_b,r"]


def test_fetch_uses_cache(tmp_path, sample_xml_path, capsys):
    url = sample_xml_path.as_uri()
    cache = tmp_path / "cache"
    assert main(["fetch", url, "--cache-dir", str(cache)]) == 0
    first = capsys.readouterr().out.strip()
    assert main(["fetch", url, "--cache-dir", str(cache)]) == 0
    second = capsys.readouterr().out.strip()
    assert first == second
    from pathlib import Path

    assert Path(first).read_text() == SAMPLE_XML


def test_unknown_command_is_usage_error():
    assert main(["frobnicate"]) == 1


def test_numerical_failure_exits_3(author_files, monkeypatch):
    from hexstyle import cli
    from hexstyle.errors import SingularMatrixError

    def boom(*args, **kwargs):
        raise SingularMatrixError("irreducibly collinear")

    monkeypatch.setattr(cli, "novelty_test", boom)
    a, _ = author_files
    assert main(["novelty", str(a), "--query-range", "1:40",
                 "--k", "20", "--n", "50"]) == 3


def test_classify_writes_importance_table(author_files, tmp_path):
    a, b = author_files
    out = tmp_path / "report.json"
    main(["classify", str(a), str(b), "--chunk", "20", "--model", "all",
          "--seed", "4", "--output", str(out)])
    imp = tmp_path / "report.importances.csv"
    rows = [l for l in imp.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "model,feature,score"
    body = [r.split(",") for r in rows[1:]]
    assert {r[0] for r in body} == {"extratrees", "svm"}  # only kinds with importances
    assert len(body) == 32
    et_scores = [float(r[2]) for r in body if r[0] == "extratrees"]
    assert et_scores == sorted(et_scores, reverse=True)
    assert sum(et_scores) == pytest.approx(100.0, abs=1e-4)


def test_rolling_outlier_table_shows_percent_columns(tmp_path, capsys):
    rng = np.random.default_rng(55)
    X = bernoulli_lines(rng, 400, np.full(16, 0.5))
    X[:81, :6] = 1.0  # first window is wildly atypical
    corpus = tmp_path / "weird.csv"
    write_feature_csv(corpus, X, "weird")
    out = tmp_path / "roll.csv"
    assert main(["rolling", str(corpus), "--window", "81", "--step", "319",
                 "--k", "40", "--n", "300", "--seed", "1",
                 "--output", str(out)]) == 0
    shown = capsys.readouterr().out
    assert "Samp%" in shown and "Mean%" in shown
    assert "1 with p < 0.01" in shown


def test_novelty_reads_jsonl_corpus(sample_xml_path, tmp_path):
    rng = np.random.default_rng(66)
    X = bernoulli_lines(rng, 300, np.full(16, 0.5))
    path = tmp_path / "corpus.jsonl"
    with open(path, "w") as fh:
        fh.write(json.dumps({"manifest": {"command": "features"}}) + "\n")
        for i, row in enumerate(X):
            obj = {"source_id": "s", "name": str(i + 1)}
            obj.update({n: int(v) for n, v in zip(FEATURE_NAMES, row)})
            fh.write(json.dumps(obj) + "\n")
    assert main(["novelty", str(path), "--query-range", "10:60",
                 "--k", "30", "--n", "200", "--seed", "2"]) == 0
