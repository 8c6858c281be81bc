import json

import numpy as np
from conftest import make_dataset

from src.qa_checker import (
    check_leakage,
    check_manifest,
    print_qa_report,
    run_qa_check,
    save_qa_report,
)
from src.types import RunManifest


def _codes(report):
    return {w.split(":")[0] for w in report.warnings}


def test_clean_split_only_flags_constant_features():
    data = make_dataset(n_pairs=10)
    report = run_qa_check(data, "train")
    assert report.total_records == 20
    assert report.topologies == 10
    assert report.pie_rate == 0.5
    # make_dataset fills only the first two columns
    assert _codes(report) == {"Q4"}
    assert len(report.constant_features) == 70


def test_empty_split():
    report = run_qa_check(make_dataset(n_pairs=10).subset([]), "held_out")
    assert report.total_records == 0
    assert report.warnings == ["No data found"]


def test_broken_pair_and_balance():
    data = make_dataset(n_pairs=5)
    report = run_qa_check(data.subset([0, 1, 2, 4, 5, 6, 7, 8, 9]), "train")
    assert {"Q1", "Q2"} <= _codes(report)


def test_nonfinite_rows():
    data = make_dataset(n_pairs=5)
    data.X[3, 10] = np.nan
    data.X[4, 0] = np.inf
    report = run_qa_check(data, "train")
    assert report.nonfinite_rows == 2
    assert "Q3" in _codes(report)


def test_leakage():
    data = make_dataset(n_pairs=6)
    assert check_leakage(data.subset(range(8)), data.subset(range(8, 12))) == []
    assert check_leakage(data.subset(range(7)), data.subset(range(7, 12)))[0].startswith("Q5")


def test_skip_rate():
    manifest = RunManifest(config_hash="x", seeds=list(range(100)))
    assert check_manifest(manifest) == []
    manifest.skipped = {i: "TopologyError" for i in range(6)}
    assert check_manifest(manifest)[0].startswith("Q6")


def test_print_and_save(tmp_path, capsys):
    reports = [run_qa_check(make_dataset(n_pairs=4), "train")]
    print_qa_report(reports[0])
    assert "QA Report: train" in capsys.readouterr().out
    path = save_qa_report(reports, tmp_path)
    doc = json.loads(path.read_text())
    assert doc[0]["split"] == "train"
    assert doc[0]["total_records"] == 8
